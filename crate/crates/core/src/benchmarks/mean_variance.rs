//! Monte-Carlo maximum-Sharpe portfolio.

use ndarray::ArrayView2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::backtest::{Strategy, Window, WindowInfo, WindowOutput};
use crate::features::Dataset;
use crate::{Error, Result};

use super::ucrp_weights;

const CHUNK: usize = 4096;
const MIN_VARIANCE: f64 = 1e-18;

#[derive(Debug, Clone, PartialEq)]
pub struct MvOutcome {
    pub weights: Vec<f64>,
    /// In-window Sharpe ratio of the chosen weights; `None` if nothing was
    /// evaluable and uniform weights were returned.
    pub sharpe: Option<f64>,
    pub warnings: Vec<String>,
}

/// Samples `n_samples` weight vectors uniformly on the simplex and keeps the
/// one whose portfolio return series over `returns` (periods x stocks) has
/// the highest mean / std. Sample `i` is drawn from stream `i / 4096` of a
/// ChaCha8 generator seeded with `seed`, so the result does not depend on
/// the thread count. Ties go to the lowest sample index.
pub fn mv_monte_carlo(returns: ArrayView2<f64>, n_samples: usize, seed: u64) -> Result<MvOutcome> {
    let (periods, m) = returns.dim();
    if periods < 2 || m == 0 {
        return Err(Error::invalid("MV needs at least 2 periods and 1 stock"));
    }
    if n_samples == 0 {
        return Err(Error::invalid("MV needs n_samples >= 1"));
    }
    if returns.iter().any(|r| !r.is_finite()) {
        return Err(Error::NonFinite("MV return window".into()));
    }
    let t = periods as f64;
    let mu: Vec<f64> = (0..m).map(|a| returns.column(a).sum() / t).collect();
    let mut cov = vec![vec![0.0; m]; m];
    for a in 0..m {
        for b in a..m {
            let c = returns
                .column(a)
                .iter()
                .zip(returns.column(b))
                .map(|(x, y)| (x - mu[a]) * (y - mu[b]))
                .sum::<f64>()
                / t;
            cov[a][b] = c;
            cov[b][a] = c;
        }
    }

    let chunks = n_samples.div_ceil(CHUNK);
    let best = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut w = vec![0.0; m];
            let mut best: Option<(f64, usize, Vec<f64>)> = None;
            for i in c * CHUNK..((c + 1) * CHUNK).min(n_samples) {
                for v in w.iter_mut() {
                    *v = rng.sample(Exp1);
                }
                let s: f64 = w.iter().sum();
                w.iter_mut().for_each(|v| *v /= s);
                let mean: f64 = w.iter().zip(&mu).map(|(x, y)| x * y).sum();
                let var: f64 = (0..m)
                    .map(|a| w[a] * (0..m).map(|b| cov[a][b] * w[b]).sum::<f64>())
                    .sum();
                if !(var > MIN_VARIANCE) {
                    continue;
                }
                let sharpe = mean / var.sqrt();
                if best.as_ref().is_none_or(|(bs, _, _)| sharpe > *bs) {
                    best = Some((sharpe, i, w.clone()));
                }
            }
            best
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (Some(x), Some(y)) => Some(if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x }),
                (x, None) => x,
                (None, y) => y,
            },
        );

    Ok(match best {
        Some((sharpe, _, weights)) => MvOutcome {
            weights,
            sharpe: Some(sharpe),
            warnings: Vec::new(),
        },
        None => {
            let msg = "every sampled portfolio had zero variance, using uniform weights".to_string();
            log::warn!("{msg}");
            MvOutcome {
                weights: ucrp_weights(m),
                sharpe: None,
                warnings: vec![msg],
            }
        }
    })
}

/// Re-selects the Monte-Carlo weights on each training window and holds them
/// over the following test window.
#[derive(Debug, Clone)]
pub struct MeanVariance {
    pub n_samples: usize,
    pub seed: u64,
}

impl MeanVariance {
    pub fn window_seed(&self, window: usize) -> u64 {
        self.seed ^ (window as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }
}

impl Strategy for MeanVariance {
    fn name(&self) -> String {
        "MV".into()
    }

    fn run_window(&self, ds: &Dataset, window: &Window) -> Result<WindowOutput> {
        let rets = ds.returns.slice(ndarray::s![window.train.clone(), ..]);
        let out = mv_monte_carlo(rets, self.n_samples, self.window_seed(window.index))?;
        Ok(WindowOutput {
            weights: vec![out.weights; window.test.len()],
            info: WindowInfo {
                window: window.index,
                train_sharpe: out.sharpe,
                notes: out.warnings,
                ..WindowInfo::default()
            },
        })
    }
}
