//! RRL traders over different feature sources.

use ndarray::{s, Array2};

use crate::backtest::{RollingPlan, Strategy, Window, WindowInfo, WindowOutput};
use crate::features::{Dataset, FeatureSource};
use crate::rrl::{evaluate, init_theta, sharpe, train, TrainConfig};
use crate::{Error, Result};

/// Trains on each training window and trades the following test window with
/// the frozen parameters.
#[derive(Debug, Clone)]
pub struct RrlStrategy {
    pub name: String,
    pub source: FeatureSource,
    pub config: TrainConfig,
    pub carry_over: bool,
    pub warm_start: bool,
    /// Lag lengths to tune over (lagged-return features only).
    pub lag_grid: Option<Vec<usize>>,
}

struct Trained {
    theta: Array2<f64>,
    output: WindowOutput,
}

impl RrlStrategy {
    fn window_with(&self, ds: &Dataset, window: &Window, theta0: Option<Array2<f64>>) -> Result<Trained> {
        let wf = self.source.window(ds, window.train.clone(), window.test.clone())?;
        let (_, m, n) = wf.train.dim();
        let mut notes = Vec::new();
        let theta0 = match theta0 {
            Some(t) if t.dim() == (m, n + 2) => t,
            Some(_) => {
                notes.push("feature width changed, parameters re-initialised".to_string());
                init_theta(m, n + 2, self.config.seed.wrapping_add(window.index as u64))
            }
            None => init_theta(m, n + 2, self.config.seed.wrapping_add(window.index as u64)),
        };
        let train_r = ds.returns.slice(s![window.train.clone(), ..]);
        let outcome = train(wf.train.view(), train_r, &self.config, theta0)?;
        let f_init = if self.carry_over {
            outcome.final_weights.clone()
        } else {
            vec![0.0; m]
        };
        let test_r = ds.returns.slice(s![window.test.clone(), ..]);
        let traj = evaluate(outcome.theta.view(), wf.test.view(), test_r, &f_init, self.config.cost)?;
        notes.extend(outcome.warnings.iter().cloned());
        Ok(Trained {
            output: WindowOutput {
                weights: traj.weights,
                info: WindowInfo {
                    window: window.index,
                    epochs: Some(outcome.epochs()),
                    train_sharpe: outcome.sharpe_log.last().copied(),
                    sharpe_log: outcome.sharpe_log.clone(),
                    notes,
                },
            },
            theta: outcome.theta,
        })
    }

    /// Out-of-sample Sharpe of training on the first half of `train` and
    /// trading the second half.
    fn half_split_score(&self, ds: &Dataset, lag: usize, train_range: std::ops::Range<usize>) -> Result<f64> {
        let mid = train_range.start + train_range.len() / 2;
        let probe = RrlStrategy {
            source: FeatureSource::Lagged(lag),
            lag_grid: None,
            warm_start: false,
            ..self.clone()
        };
        let window = Window {
            index: 0,
            train: train_range.start..mid,
            test: mid..train_range.end,
        };
        let trained = probe.window_with(ds, &window, None)?;
        // Same accounting as the backtest, from zero holdings at the split.
        let mut prev = vec![0.0; ds.num_stocks()];
        let mut rets = Vec::with_capacity(window.test.len());
        for (t, w) in window.test.clone().zip(&trained.output.weights) {
            rets.push(crate::rrl::step_return(&prev, w, &ds.returns.row(t).to_vec(), self.config.cost));
            prev.clone_from(w);
        }
        Ok(sharpe(&rets).value)
    }
}

impl Strategy for RrlStrategy {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn prepare(&mut self, ds: &Dataset, plan: &RollingPlan) -> Result<()> {
        let Some(grid) = self.lag_grid.clone() else {
            return Ok(());
        };
        if grid.len() > 1 {
            let train_range = plan.windows[0].train.clone();
            if train_range.len() < 4 {
                return Err(Error::invalid("lag tuning needs a training window of at least 4 periods"));
            }
            let mut best: Option<(f64, usize)> = None;
            for &lag in &grid {
                let score = self.half_split_score(ds, lag, train_range.clone())?;
                if !score.is_nan() && best.is_none_or(|(b, _)| score > b) {
                    best = Some((score, lag));
                }
            }
            let lag = best.map_or(grid[0], |(_, l)| l);
            log::info!("{}: lag {lag} chosen on the first training window", self.name);
            self.source = FeatureSource::Lagged(lag);
        }
        self.lag_grid = None;
        Ok(())
    }

    fn run_window(&self, ds: &Dataset, window: &Window) -> Result<WindowOutput> {
        Ok(self.window_with(ds, window, None)?.output)
    }

    fn run_all(&self, ds: &Dataset, plan: &RollingPlan) -> Result<Vec<WindowOutput>> {
        if !self.warm_start {
            use rayon::prelude::*;
            return plan.windows.par_iter().map(|w| self.run_window(ds, w)).collect();
        }
        let mut theta: Option<Array2<f64>> = None;
        let mut out = Vec::with_capacity(plan.windows.len());
        for w in &plan.windows {
            let trained = self.window_with(ds, w, theta.take())?;
            theta = Some(trained.theta);
            out.push(trained.output);
        }
        Ok(out)
    }
}

impl RrlStrategy {
    /// The lag in use, for lagged-return features.
    pub fn lag(&self) -> Option<usize> {
        match self.source {
            FeatureSource::Lagged(l) => Some(l),
            _ => None,
        }
    }
}
