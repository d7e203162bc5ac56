use ndarray::{Array2, ArrayView2, ArrayView3, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{feature_matrix, forward, return_partials, sharpe, sharpe_sensitivities, step_return, update_params};
use super::{GradState, GradientMode};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Training window length T.
    pub window: usize,
    pub learning_rate: f64,
    pub l2: f64,
    /// Transaction cost per unit of turnover.
    pub cost: f64,
    pub max_epochs: usize,
    pub seed: u64,
    /// Stop once two consecutive epoch Sharpe ratios differ by at most this.
    pub tolerance: f64,
    pub gradient: GradientMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            window: 100,
            learning_rate: 0.1,
            l2: 0.01,
            cost: 0.001,
            max_epochs: 100,
            seed: 42,
            tolerance: 0.0,
            gradient: GradientMode::Collapsed,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(Error::invalid("training window must be at least 2 periods"));
        }
        if self.max_epochs == 0 {
            return Err(Error::invalid("max_epochs must be >= 1"));
        }
        for (name, v) in [("learning_rate", self.learning_rate), ("l2", self.l2), ("cost", self.cost)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::invalid("tolerance must be >= 0"));
        }
        Ok(())
    }
}

/// Per-period record of a forward sweep.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub y: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
    pub returns: Vec<f64>,
    /// Wealth after each period, starting from 1.
    pub wealth: Vec<f64>,
}

impl Trajectory {
    pub fn final_weights(&self) -> Option<&[f64]> {
        self.weights.last().map(Vec::as_slice)
    }
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub trajectory: Trajectory,
    /// `dR_t/dΘ` per period; empty unless a gradient mode was requested.
    pub return_grads: Vec<Array2<f64>>,
}

impl Sweep {
    /// `dS/dΘ = Σ_t dS/dR_t · dR_t/dΘ`.
    pub fn sharpe_gradient(&self) -> Result<Array2<f64>> {
        let first = self
            .return_grads
            .first()
            .ok_or_else(|| Error::invalid("sweep carries no gradient information"))?;
        let sens = sharpe_sensitivities(&self.trajectory.returns)?;
        let mut total = Array2::zeros(first.dim());
        for (s, g) in sens.iter().zip(&self.return_grads) {
            total.scaled_add(*s, g);
        }
        Ok(total)
    }
}

fn check_shapes(features: &ArrayView3<f64>, returns: &ArrayView2<f64>, theta: &ArrayView2<f64>) -> Result<()> {
    let (periods, m, n) = features.dim();
    if returns.dim() != (periods, m) {
        return Err(Error::shape(format!(
            "features cover {periods} periods x {m} stocks, returns are {:?}",
            returns.dim()
        )));
    }
    if theta.dim() != (m, n + 2) {
        return Err(Error::shape(format!(
            "parameters are {:?}, features need {m} x {}",
            theta.dim(),
            n + 2
        )));
    }
    Ok(())
}

/// Runs the trader over periods `start..` of the window. `features` is
/// periods x stocks x n, `returns[t]` is the return vector ending at period t.
/// The weights held before period `start` are `f_init`.
pub fn sweep(
    features: ArrayView3<f64>,
    returns: ArrayView2<f64>,
    theta: ArrayView2<f64>,
    f_init: &[f64],
    start: usize,
    cost: f64,
    gradient: Option<GradientMode>,
) -> Result<Sweep> {
    check_shapes(&features, &returns, &theta)?;
    let (periods, m, _) = features.dim();
    if f_init.len() != m {
        return Err(Error::shape("initial weights do not match the stock count"));
    }
    let mut traj = Trajectory::default();
    let mut return_grads = Vec::new();
    let mut prev = f_init.to_vec();
    let mut state = gradient.map(|mode| GradState::zeros(mode, m, theta.ncols()));
    let mut wealth = 1.0;
    for t in start..periods {
        let x = feature_matrix(features.index_axis(Axis(0), t), &prev);
        let out = forward(x.view(), theta)?;
        let r = returns.row(t);
        let r = r.as_slice().map(<[f64]>::to_vec).unwrap_or_else(|| r.to_vec());
        let ret = step_return(&prev, &out.weights, &r, cost);
        if let Some(g_prev) = state.take() {
            let g = g_prev.update(x.view(), theta, &out.f, &out.y)?;
            let (d_cur, d_prev) = return_partials(&prev, &out.weights, &r, cost);
            return_grads.push(g.return_gradient(&g_prev, &d_cur, &d_prev));
            state = Some(g);
        }
        wealth *= 1.0 + ret;
        traj.returns.push(ret);
        traj.wealth.push(wealth);
        prev.clone_from(&out.weights);
        traj.y.push(out.y);
        traj.f.push(out.f);
        traj.weights.push(out.weights);
    }
    Ok(Sweep {
        trajectory: traj,
        return_grads,
    })
}

/// Sharpe ratio of one training sweep (periods 1.. from zero weights).
pub fn sharpe_of_sweep(
    features: ArrayView3<f64>,
    returns: ArrayView2<f64>,
    theta: ArrayView2<f64>,
    cost: f64,
) -> Result<f64> {
    let m = returns.ncols();
    let s = sweep(features, returns, theta, &vec![0.0; m], 1, cost, None)?;
    Ok(sharpe(&s.trajectory.returns).value)
}

/// Standard normal initial parameters.
pub fn init_theta(m: usize, width: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_simple_fn((m, width), || StandardNormal.sample(&mut rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxEpochs,
    DegenerateSharpe,
    NonFinite,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub theta: Array2<f64>,
    /// Sharpe ratio of each epoch's sweep.
    pub sharpe_log: Vec<f64>,
    pub stop: StopReason,
    /// Weights at the last training period under the returned parameters.
    pub final_weights: Vec<f64>,
    pub warnings: Vec<String>,
}

impl TrainOutcome {
    pub fn epochs(&self) -> usize {
        self.sharpe_log.len()
    }
}

/// Gradient ascent on the training-window Sharpe ratio.
///
/// Epochs are counted from 1. Each epoch sweeps periods 1..T from zero
/// weights; training stops at epoch `n >= 2` when the Sharpe ratio moved by
/// at most `tolerance`, otherwise takes a regularised gradient step.
pub fn train(
    features: ArrayView3<f64>,
    returns: ArrayView2<f64>,
    config: &TrainConfig,
    theta0: Array2<f64>,
) -> Result<TrainOutcome> {
    config.validate()?;
    check_shapes(&features, &returns, &theta0.view())?;
    let (periods, m, _) = features.dim();
    if periods < 2 {
        return Err(Error::invalid("training needs at least 2 periods"));
    }
    let zeros = vec![0.0; m];
    let mut theta = theta0;
    let mut prev_theta = theta.clone();
    let mut log: Vec<f64> = Vec::new();
    let mut warnings = Vec::new();
    let mut stop = StopReason::MaxEpochs;

    for epoch in 1..=config.max_epochs {
        let sw = sweep(features, returns, theta.view(), &zeros, 1, config.cost, Some(config.gradient))?;
        let s = sharpe(&sw.trajectory.returns);
        if s.value.is_nan() {
            warnings.push(format!("epoch {epoch}: Sharpe ratio is not a number, keeping previous parameters"));
            theta = prev_theta;
            stop = StopReason::NonFinite;
            break;
        }
        log.push(s.value);
        if s.degenerate {
            if epoch == 1 {
                warnings.push("zero-variance returns in the first epoch, parameters left at their initial values".into());
            }
            stop = StopReason::DegenerateSharpe;
            break;
        }
        if epoch >= 2 && (s.value - log[log.len() - 2]).abs() <= config.tolerance {
            stop = StopReason::Converged;
            break;
        }
        let grad = sw.sharpe_gradient()?;
        let next = update_params(theta.view(), grad.view(), config.learning_rate, config.l2)?;
        if next.iter().any(|v| !v.is_finite()) {
            warnings.push(format!("epoch {epoch}: non-finite parameter update, stopping"));
            stop = StopReason::NonFinite;
            break;
        }
        prev_theta = std::mem::replace(&mut theta, next);
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let last = sweep(features, returns, theta.view(), &zeros, 1, config.cost, None)?;
    let final_weights = last.trajectory.final_weights().map(<[f64]>::to_vec).unwrap_or(zeros);
    Ok(TrainOutcome {
        theta,
        sharpe_log: log,
        stop,
        final_weights,
        warnings,
    })
}

/// Applies trained parameters over a test window without updating them.
/// Every period of the window is traded, starting from holdings `f_init`.
pub fn evaluate(
    theta: ArrayView2<f64>,
    features: ArrayView3<f64>,
    returns: ArrayView2<f64>,
    f_init: &[f64],
    cost: f64,
) -> Result<Trajectory> {
    Ok(sweep(features, returns, theta, f_init, 0, cost, None)?.trajectory)
}
