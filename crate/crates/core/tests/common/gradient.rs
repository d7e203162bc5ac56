//! Finite-difference gradient checks on random instances.

use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wavefolio_core::rrl::{sharpe_of_sweep, sweep, GradientMode};

pub struct Instance {
    pub features: Array3<f64>,
    pub returns: Array2<f64>,
    pub theta: Array2<f64>,
}

pub fn instance(seed: u64, m: usize, n: usize, t: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = Array3::from_shape_simple_fn((t, m, n), || rng.sample(StandardNormal));
    let returns = Array2::from_shape_simple_fn((t, m), || 0.02 * rng.sample::<f64, _>(StandardNormal));
    let theta = Array2::from_shape_simple_fn((m, n + 2), || rng.sample(StandardNormal));
    Instance {
        features,
        returns,
        theta,
    }
}

pub fn min_turnover_component(inst: &Instance, cost: f64) -> f64 {
    let m = inst.returns.ncols();
    let s = sweep(inst.features.view(), inst.returns.view(), inst.theta.view(), &vec![0.0; m], 1, cost, None).unwrap();
    let mut prev = vec![0.0; m];
    let mut min = f64::INFINITY;
    for w in &s.trajectory.weights {
        for (a, b) in w.iter().zip(&prev) {
            min = min.min((a - b).abs());
        }
        prev.clone_from(w);
    }
    min
}

pub fn fd_gradient(inst: &Instance, cost: f64, h: f64) -> Array2<f64> {
    let mut g = Array2::zeros(inst.theta.dim());
    for ((i, j), v) in g.indexed_iter_mut() {
        let mut plus = inst.theta.clone();
        plus[[i, j]] += h;
        let mut minus = inst.theta.clone();
        minus[[i, j]] -= h;
        let sp = sharpe_of_sweep(inst.features.view(), inst.returns.view(), plus.view(), cost).unwrap();
        let sm = sharpe_of_sweep(inst.features.view(), inst.returns.view(), minus.view(), cost).unwrap();
        *v = (sp - sm) / (2.0 * h);
    }
    g
}

pub fn analytic_gradient(inst: &Instance, cost: f64, mode: GradientMode) -> Array2<f64> {
    let m = inst.returns.ncols();
    sweep(inst.features.view(), inst.returns.view(), inst.theta.view(), &vec![0.0; m], 1, cost, Some(mode))
        .unwrap()
        .sharpe_gradient()
        .unwrap()
}

pub fn rel_err(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-12);
    diff / scale
}
