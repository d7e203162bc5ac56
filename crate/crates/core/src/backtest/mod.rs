//! Rolling train/test orchestration and wealth accounting.

mod metrics;

use std::ops::Range;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Serialize;

use crate::features::Dataset;
use crate::rrl::step_return;
use crate::{Error, Result};

pub use metrics::{compute_metrics, max_drawdown, MetricsReport};

/// One train/test split, in horizon periods.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Window {
    pub index: usize,
    pub train: Range<usize>,
    pub test: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RollingPlan {
    pub train_len: usize,
    pub test_len: usize,
    pub windows: Vec<Window>,
}

impl RollingPlan {
    /// Test windows tile `[train_len, horizon)` in steps of `test_len`; each
    /// training window is the `train_len` periods right before its test
    /// window. The last test window may be short.
    pub fn new(horizon: usize, train_len: usize, test_len: usize) -> Result<Self> {
        if train_len < 2 || test_len == 0 {
            return Err(Error::invalid("train window must be >= 2 and test window >= 1"));
        }
        if horizon <= train_len {
            return Err(Error::invalid(format!(
                "horizon of {horizon} periods leaves nothing after a {train_len}-period training window"
            )));
        }
        let windows = (train_len..horizon)
            .step_by(test_len)
            .enumerate()
            .map(|(index, start)| Window {
                index,
                train: start - train_len..start,
                test: start..(start + test_len).min(horizon),
            })
            .collect();
        Ok(RollingPlan {
            train_len,
            test_len,
            windows,
        })
    }

    /// First test period.
    pub fn start(&self) -> usize {
        self.windows.first().map_or(0, |w| w.test.start)
    }

    pub fn end(&self) -> usize {
        self.windows.last().map_or(0, |w| w.test.end)
    }
}

/// Training details reported by a strategy for one window.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct WindowInfo {
    pub window: usize,
    pub epochs: Option<usize>,
    pub train_sharpe: Option<f64>,
    pub sharpe_log: Vec<f64>,
    pub notes: Vec<String>,
}

/// Weights a strategy holds over one test window, one row per period.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WindowOutput {
    pub weights: Vec<Vec<f64>>,
    pub info: WindowInfo,
}

/// A portfolio rule driven window by window.
pub trait Strategy: Send + Sync {
    fn name(&self) -> String;

    /// One-off tuning before the windows are run.
    fn prepare(&mut self, _ds: &Dataset, _plan: &RollingPlan) -> Result<()> {
        Ok(())
    }

    fn run_window(&self, ds: &Dataset, window: &Window) -> Result<WindowOutput>;

    /// All windows in order. Windows are independent by default and run in
    /// parallel; stateful strategies override this.
    fn run_all(&self, ds: &Dataset, plan: &RollingPlan) -> Result<Vec<WindowOutput>> {
        plan.windows.par_iter().map(|w| self.run_window(ds, w)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestResult {
    pub strategy: String,
    pub cost: f64,
    /// Horizon period of each row.
    pub periods: Vec<usize>,
    pub dates: Vec<NaiveDate>,
    pub weights: Vec<Vec<f64>>,
    pub returns: Vec<f64>,
    pub wealth: Vec<f64>,
    pub windows: Vec<WindowInfo>,
}

impl BacktestResult {
    pub fn final_wealth(&self) -> f64 {
        self.wealth.last().copied().unwrap_or(1.0)
    }
}

const SIMPLEX_TOL: f64 = 1e-12;

pub fn check_simplex(w: &[f64]) -> Result<()> {
    let sum: f64 = w.iter().sum();
    if w.iter().any(|v| !(*v >= 0.0)) || (sum - 1.0).abs() >= SIMPLEX_TOL {
        return Err(Error::invalid(format!("weights {w:?} are not on the simplex")));
    }
    Ok(())
}

/// Accounts a weight path over the plan's test periods. Holdings before the
/// first test period are zero (all cash), so the first period pays for
/// building the initial position.
pub fn account(ds: &Dataset, plan: &RollingPlan, strategy: String, outputs: Vec<WindowOutput>, cost: f64) -> Result<BacktestResult> {
    let m = ds.num_stocks();
    let mut prev = vec![0.0; m];
    let mut wealth = 1.0;
    let mut result = BacktestResult {
        strategy,
        cost,
        periods: Vec::new(),
        dates: Vec::new(),
        weights: Vec::new(),
        returns: Vec::new(),
        wealth: Vec::new(),
        windows: Vec::new(),
    };
    for (window, out) in plan.windows.iter().zip(outputs) {
        if out.weights.len() != window.test.len() {
            return Err(Error::shape(format!(
                "{}: window {} produced {} weight rows for {} periods",
                result.strategy,
                window.index,
                out.weights.len(),
                window.test.len()
            )));
        }
        for (t, w) in window.test.clone().zip(out.weights) {
            if w.len() != m {
                return Err(Error::shape(format!("{}: weight row of length {}", result.strategy, w.len())));
            }
            check_simplex(&w).map_err(|e| Error::invalid(format!("{} at period {t}: {e}", result.strategy)))?;
            let r = ds.returns.row(t).to_vec();
            let ret = step_return(&prev, &w, &r, cost);
            if !ret.is_finite() {
                return Err(Error::NonFinite(format!("{} return at period {t}", result.strategy)));
            }
            wealth *= 1.0 + ret;
            result.periods.push(t);
            result.dates.push(ds.dates[t]);
            result.returns.push(ret);
            result.wealth.push(wealth);
            prev.clone_from(&w);
            result.weights.push(w);
        }
        result.windows.push(out.info);
    }
    Ok(result)
}

/// Prepares and runs a strategy over every window of the plan.
pub fn run(ds: &Dataset, plan: &RollingPlan, strategy: &mut dyn Strategy, cost: f64) -> Result<BacktestResult> {
    strategy.prepare(ds, plan)?;
    let outputs = strategy.run_all(ds, plan)?;
    account(ds, plan, strategy.name(), outputs, cost)
}

/// Wealth curve of one strategy at one cost level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCurve {
    pub strategy: String,
    pub cost: f64,
    pub wealth: Vec<f64>,
}

/// Runs the strategies built by `build` for each cost in `costs`.
pub fn cost_sweep<F>(ds: &Dataset, plan: &RollingPlan, costs: &[f64], build: F) -> Result<Vec<SweepCurve>>
where
    F: Fn(f64) -> Result<Vec<Box<dyn Strategy>>>,
{
    let mut curves = Vec::new();
    for &cost in costs {
        for mut s in build(cost)? {
            let r = run(ds, plan, s.as_mut(), cost)?;
            curves.push(SweepCurve {
                strategy: r.strategy,
                cost,
                wealth: r.wealth,
            });
        }
    }
    Ok(curves)
}
