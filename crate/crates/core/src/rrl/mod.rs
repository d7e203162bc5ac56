//! Recurrent reinforcement learning portfolio trader.
//!
//! Each stock `a` gets a feature row `x_t^a = [1, features..., F_{t-1}^a]`
//! and a parameter row `θ^a`. Weights are `F_t = softmax(tanh(Y_t))` with
//! `Y_t^a = θ^a · x_t^a`, and the parameters are trained by gradient ascent
//! on the Sharpe ratio of the net one-period returns.

mod train;

use ndarray::{Array2, Array3, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use train::{
    evaluate, init_theta, sharpe_of_sweep, sweep, train, StopReason, Sweep, TrainConfig, TrainOutcome,
    Trajectory,
};

/// Which recursion is used for `∂F_t/∂Θ`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    /// The m x (n+2) matrix recursion
    /// `G_t = DF·Df·(X_t + diag(θ') G_{t-1})`, which drops the cross-stock
    /// terms `∂F^a/∂θ^b` for `a != b`.
    #[default]
    Collapsed,
    /// Full chain rule over the m x m x (n+2) tensor `J_t[a,b,:] = ∂F_t^a/∂θ^b`.
    Exact,
}

/// Outputs of one forward step.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub y: Vec<f64>,
    pub f: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Feature matrix `X_t` (m x (n+2)) from raw features (m x n) and the
/// previous weights.
pub fn feature_matrix(raw: ArrayView2<f64>, prev_weights: &[f64]) -> Array2<f64> {
    let (m, n) = raw.dim();
    Array2::from_shape_fn((m, n + 2), |(a, j)| {
        if j == 0 {
            1.0
        } else if j == n + 1 {
            prev_weights[a]
        } else {
            raw[[a, j - 1]]
        }
    })
}

pub fn softmax(f: &[f64]) -> Vec<f64> {
    let max = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = f.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn forward(x: ArrayView2<f64>, theta: ArrayView2<f64>) -> Result<Forward> {
    if x.dim() != theta.dim() {
        return Err(Error::shape(format!(
            "feature matrix {:?} vs parameters {:?}",
            x.dim(),
            theta.dim()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("feature matrix".into()));
    }
    let y: Vec<f64> = x
        .rows()
        .into_iter()
        .zip(theta.rows())
        .map(|(xa, ta)| xa.dot(&ta))
        .collect();
    let f: Vec<f64> = y.iter().map(|v| v.tanh()).collect();
    let weights = softmax(&f);
    Ok(Forward { y, f, weights })
}

/// Net one-period return `(1 + F_{t-1}·r_t)(1 - δ Σ|F_t - F_{t-1}|) - 1`.
pub fn step_return(prev: &[f64], cur: &[f64], r: &[f64], cost: f64) -> f64 {
    let gross: f64 = 1.0 + prev.iter().zip(r).map(|(w, r)| w * r).sum::<f64>();
    let turnover: f64 = cur.iter().zip(prev).map(|(c, p)| (c - p).abs()).sum();
    gross * (1.0 - cost * turnover) - 1.0
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `(∂R_t/∂F_t, ∂R_t/∂F_{t-1})`, with `sgn(0) = 0` at the turnover kink.
pub fn return_partials(prev: &[f64], cur: &[f64], r: &[f64], cost: f64) -> (Vec<f64>, Vec<f64>) {
    let gross: f64 = 1.0 + prev.iter().zip(r).map(|(w, r)| w * r).sum::<f64>();
    let turnover: f64 = cur.iter().zip(prev).map(|(c, p)| (c - p).abs()).sum();
    let signs: Vec<f64> = cur.iter().zip(prev).map(|(c, p)| sgn(c - p)).collect();
    let d_cur = signs.iter().map(|s| -cost * gross * s).collect();
    let d_prev = r
        .iter()
        .zip(&signs)
        .map(|(r, s)| (1.0 - cost * turnover) * r + cost * gross * s)
        .collect();
    (d_cur, d_prev)
}

/// `∂F^i/∂f^j` of the softmax.
pub fn softmax_jacobian(f: &[f64]) -> Array2<f64> {
    let s = softmax(f);
    let m = s.len();
    Array2::from_shape_fn((m, m), |(i, j)| {
        if i == j {
            s[i] * (1.0 - s[j])
        } else {
            -s[i] * s[j]
        }
    })
}

/// Diagonal Jacobian of the elementwise tanh.
pub fn tanh_jacobian(y: &[f64]) -> Array2<f64> {
    let d: Vec<f64> = y.iter().map(|v| 1.0 - v.tanh().powi(2)).collect();
    Array2::from_diag(&ndarray::Array1::from(d))
}

/// Sharpe ratio in moment form `A / sqrt(B - A²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sharpe {
    pub value: f64,
    /// Zero variance: `value` is a sentinel (`±∞`, or 0 when the mean is 0).
    pub degenerate: bool,
}

const VARIANCE_FLOOR: f64 = 1e-18;

fn moments(returns: &[f64]) -> (f64, f64) {
    let t = returns.len() as f64;
    let a = returns.iter().sum::<f64>() / t;
    let b = returns.iter().map(|r| r * r).sum::<f64>() / t;
    (a, b)
}

pub fn sharpe(returns: &[f64]) -> Sharpe {
    let (a, b) = moments(returns);
    let var = b - a * a;
    if var < VARIANCE_FLOOR {
        let value = if a == 0.0 { 0.0 } else { f64::INFINITY.copysign(a) };
        return Sharpe {
            value,
            degenerate: true,
        };
    }
    Sharpe {
        value: a / var.sqrt(),
        degenerate: false,
    }
}

/// `dS/dR_t` for every period.
pub fn sharpe_sensitivities(returns: &[f64]) -> Result<Vec<f64>> {
    let (a, b) = moments(returns);
    let var = b - a * a;
    if var < VARIANCE_FLOOR {
        return Err(Error::Degenerate("zero-variance returns have no Sharpe gradient".into()));
    }
    let t = returns.len() as f64;
    let denom = var.powf(1.5);
    let ds_da = b / denom;
    let ds_db = -a / (2.0 * denom);
    Ok(returns
        .iter()
        .map(|r| ds_da / t + ds_db * 2.0 * r / t)
        .collect())
}

/// Recurrent state `∂F_t/∂Θ`.
#[derive(Debug, Clone, PartialEq)]
pub enum GradState {
    Collapsed(Array2<f64>),
    Exact(Array3<f64>),
}

impl GradState {
    pub fn zeros(mode: GradientMode, m: usize, width: usize) -> Self {
        match mode {
            GradientMode::Collapsed => GradState::Collapsed(Array2::zeros((m, width))),
            GradientMode::Exact => GradState::Exact(Array3::zeros((m, m, width))),
        }
    }

    /// Advances the recursion one period given `X_t`, `Θ`, `f_t` and `Y_t`.
    pub fn update(&self, x: ArrayView2<f64>, theta: ArrayView2<f64>, f: &[f64], y: &[f64]) -> Result<Self> {
        let (m, width) = theta.dim();
        if x.dim() != (m, width) {
            return Err(Error::shape("gradient state update with mismatched X_t"));
        }
        let jac = softmax_jacobian(f).dot(&tanh_jacobian(y));
        let recur: ArrayView1<f64> = theta.column(width - 1);
        match self {
            GradState::Collapsed(g) => {
                if g.dim() != (m, width) {
                    return Err(Error::shape("collapsed gradient state has the wrong shape"));
                }
                let mut inner = x.to_owned();
                for a in 0..m {
                    for j in 0..width {
                        inner[[a, j]] += recur[a] * g[[a, j]];
                    }
                }
                Ok(GradState::Collapsed(jac.dot(&inner)))
            }
            GradState::Exact(prev) => {
                if prev.dim() != (m, m, width) {
                    return Err(Error::shape("exact gradient state has the wrong shape"));
                }
                let mut next = Array3::zeros((m, m, width));
                for a in 0..m {
                    for b in 0..m {
                        for k in 0..width {
                            let mut acc = jac[[a, b]] * x[[b, k]];
                            for c in 0..m {
                                acc += jac[[a, c]] * recur[c] * prev[[c, b, k]];
                            }
                            next[[a, b, k]] = acc;
                        }
                    }
                }
                Ok(GradState::Exact(next))
            }
        }
    }

    /// `dR_t/dΘ` from this state (period t), the previous state, and the
    /// return partials.
    pub fn return_gradient(&self, prev: &GradState, d_cur: &[f64], d_prev: &[f64]) -> Array2<f64> {
        match (self, prev) {
            (GradState::Collapsed(g), GradState::Collapsed(gp)) => {
                let mut out = g.clone();
                for (a, mut row) in out.rows_mut().into_iter().enumerate() {
                    row.zip_mut_with(&gp.row(a), |v, p| *v = d_cur[a] * *v + d_prev[a] * p);
                }
                out
            }
            (GradState::Exact(j), GradState::Exact(jp)) => {
                let (m, _, width) = j.dim();
                Array2::from_shape_fn((m, width), |(b, k)| {
                    (0..m).map(|a| d_cur[a] * j[[a, b, k]] + d_prev[a] * jp[[a, b, k]]).sum()
                })
            }
            _ => unreachable!("gradient states from one sweep share a mode"),
        }
    }
}

/// `Θ ← (1 - ρλ)Θ + ρ·grad`.
pub fn update_params(theta: ArrayView2<f64>, grad: ArrayView2<f64>, rate: f64, l2: f64) -> Result<Array2<f64>> {
    if theta.dim() != grad.dim() {
        return Err(Error::shape("gradient and parameters differ in shape"));
    }
    Ok(&theta * (1.0 - rate * l2) + &grad * rate)
}
