//! On-line moving average reversion (OLMAR-1).

use crate::backtest::{RollingPlan, Strategy, Window, WindowInfo, WindowOutput};
use crate::features::Dataset;
use crate::rrl::step_return;
use crate::{Error, Result};

use super::{simplex_project, ucrp_weights};

/// `x̃^a = MA(window^a) / last(window^a)` for each stock's last `w` closes.
pub fn predicted_relatives(price_windows: &[Vec<f64>]) -> Result<Vec<f64>> {
    price_windows
        .iter()
        .map(|p| {
            if p.len() < 2 {
                return Err(Error::invalid("OLMAR look-back must be >= 2"));
            }
            if p.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(Error::invalid("OLMAR needs positive prices"));
            }
            let ma = p.iter().sum::<f64>() / p.len() as f64;
            Ok(ma / p[p.len() - 1])
        })
        .collect()
}

/// One OLMAR update given predicted price relatives.
pub fn olmar_update(b: &[f64], x_tilde: &[f64], epsilon: f64) -> Vec<f64> {
    let m = x_tilde.len() as f64;
    let mean = x_tilde.iter().sum::<f64>() / m;
    let dev: Vec<f64> = x_tilde.iter().map(|x| x - mean).collect();
    let norm2: f64 = dev.iter().map(|d| d * d).sum();
    if norm2 == 0.0 {
        return b.to_vec();
    }
    let expected: f64 = b.iter().zip(x_tilde).map(|(w, x)| w * x).sum();
    let lambda = ((epsilon - expected) / norm2).max(0.0);
    if lambda == 0.0 {
        return b.to_vec();
    }
    let moved: Vec<f64> = b.iter().zip(&dev).map(|(w, d)| w + lambda * d).collect();
    simplex_project(&moved)
}

pub fn olmar_step(b: &[f64], price_windows: &[Vec<f64>], epsilon: f64) -> Result<Vec<f64>> {
    if price_windows.len() != b.len() {
        return Err(Error::shape("one price window per stock expected"));
    }
    Ok(olmar_update(b, &predicted_relatives(price_windows)?, epsilon))
}

/// OLMAR run online over the whole backtest. The threshold and look-back are
/// chosen on the first training window by gross final wealth, so the weights
/// do not depend on the transaction cost.
#[derive(Debug, Clone)]
pub struct Olmar {
    epsilons: Vec<f64>,
    lookbacks: Vec<usize>,
    chosen: Option<(f64, usize)>,
}

impl Olmar {
    pub fn new(epsilons: Vec<f64>, lookbacks: Vec<usize>) -> Self {
        Self {
            epsilons,
            lookbacks,
            chosen: None,
        }
    }

    /// Fixed parameters, no tuning.
    pub fn fixed(epsilon: f64, lookback: usize) -> Self {
        Self {
            epsilons: vec![epsilon],
            lookbacks: vec![lookback],
            chosen: Some((epsilon, lookback)),
        }
    }

    pub fn chosen(&self) -> Option<(f64, usize)> {
        self.chosen
    }

    fn relatives_at(ds: &Dataset, period: usize, lookback: usize) -> Result<Vec<f64>> {
        let bar = ds.bar(period);
        if bar + 1 < lookback {
            return Err(Error::invalid(format!("OLMAR look-back {lookback} reaches before the first bar")));
        }
        let windows: Vec<Vec<f64>> = (0..ds.num_stocks())
            .map(|a| ds.closes.column(a).slice(ndarray::s![bar + 1 - lookback..=bar]).to_vec())
            .collect();
        predicted_relatives(&windows)
    }

    /// Weights decided at each period of `periods`, starting from uniform.
    fn path(ds: &Dataset, periods: std::ops::Range<usize>, epsilon: f64, lookback: usize) -> Result<Vec<Vec<f64>>> {
        let mut b = ucrp_weights(ds.num_stocks());
        let mut out = Vec::with_capacity(periods.len());
        for t in periods {
            b = olmar_update(&b, &Self::relatives_at(ds, t, lookback)?, epsilon);
            out.push(b.clone());
        }
        Ok(out)
    }
}

impl Strategy for Olmar {
    fn name(&self) -> String {
        "OLMAR".into()
    }

    fn prepare(&mut self, ds: &Dataset, plan: &RollingPlan) -> Result<()> {
        if self.chosen.is_some() {
            return Ok(());
        }
        let train = plan.windows[0].train.clone();
        let mut best: Option<(f64, f64, usize)> = None;
        for &w in &self.lookbacks {
            for &eps in &self.epsilons {
                let path = Self::path(ds, train.clone(), eps, w)?;
                let mut prev = vec![0.0; ds.num_stocks()];
                let mut wealth = 1.0;
                for (t, b) in train.clone().zip(&path) {
                    wealth *= 1.0 + step_return(&prev, b, &ds.returns.row(t).to_vec(), 0.0);
                    prev.clone_from(b);
                }
                if best.is_none_or(|(bw, _, _)| wealth > bw) {
                    best = Some((wealth, eps, w));
                }
            }
        }
        let (_, eps, w) = best.ok_or_else(|| Error::invalid("OLMAR grid is empty"))?;
        log::info!("OLMAR tuned on the first training window: epsilon {eps}, look-back {w}");
        self.chosen = Some((eps, w));
        Ok(())
    }

    fn run_window(&self, ds: &Dataset, window: &Window) -> Result<WindowOutput> {
        // Stand-alone window: restart from uniform at the window start.
        let (eps, w) = self.chosen.ok_or_else(|| Error::invalid("OLMAR used before prepare"))?;
        Ok(WindowOutput {
            weights: Self::path(ds, window.test.clone(), eps, w)?,
            info: WindowInfo {
                window: window.index,
                ..WindowInfo::default()
            },
        })
    }

    fn run_all(&self, ds: &Dataset, plan: &RollingPlan) -> Result<Vec<WindowOutput>> {
        let (eps, w) = self.chosen.ok_or_else(|| Error::invalid("OLMAR used before prepare"))?;
        let mut all = Self::path(ds, plan.start()..plan.end(), eps, w)?.into_iter();
        Ok(plan
            .windows
            .iter()
            .map(|win| WindowOutput {
                weights: all.by_ref().take(win.test.len()).collect(),
                info: WindowInfo {
                    window: win.index,
                    notes: vec![format!("epsilon {eps}, look-back {w}")],
                    ..WindowInfo::default()
                },
            })
            .collect())
    }
}
