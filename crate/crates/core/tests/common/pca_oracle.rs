//! PCA reference: covariance by explicit loops, eigenpairs from nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wavefolio_core::pca::PcaModel;

/// 300x11 table with correlated columns: latent normals mixed by a random
/// matrix, plus a little independent noise.
pub fn correlated_table(seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mix: Vec<f64> = (0..121).map(|_| rng.sample(StandardNormal)).collect();
    let latent = Array2::from_shape_fn((300, 11), |(_, j)| {
        let z: f64 = rng.sample(StandardNormal);
        z * (1.0 + j as f64)
    });
    let mix = Array2::from_shape_vec((11, 11), mix).unwrap();
    let noise = Array2::from_shape_fn((300, 11), |_| 0.01 * rng.sample::<f64, _>(StandardNormal));
    latent.dot(&mix) + noise
}

/// Covariance by explicit double loop, then nalgebra's eigensolver.
pub fn oracle(t: &Array2<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (n, d) = t.dim();
    let means: Vec<f64> = (0..d).map(|j| (0..n).map(|i| t[[i, j]]).sum::<f64>() / n as f64).collect();
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let mut s = 0.0;
            for i in 0..n {
                s += (t[[i, a]] - means[a]) * (t[[i, b]] - means[b]);
            }
            cov[(a, b)] = s / n as f64;
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = idx
        .iter()
        .map(|&i| {
            let v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            let big = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            v.iter().map(|x| x * big.signum()).collect()
        })
        .collect();
    (values, vectors)
}

/// Panics unless the fit matches the oracle to 1e-8 and k95 is the
/// smallest count reaching 95% of the variance.
pub fn check_fixture(seed: u64) {
    let t = correlated_table(seed);
    let m = PcaModel::fit(t.view(), 0.95).unwrap();
    let (values, vectors) = oracle(&t);
    for (a, b) in m.eigenvalues.iter().zip(&values) {
        assert!((a - b).abs() < 1e-8, "seed {seed}: eigenvalue {a} vs {b}");
    }
    for (ca, cb) in m.components.iter().zip(&vectors) {
        for (a, b) in ca.iter().zip(cb) {
            assert!((a - b).abs() < 1e-8, "seed {seed}: component entry {a} vs {b}");
        }
    }
    let total: f64 = m.eigenvalues.iter().sum();
    let kept: f64 = m.eigenvalues[..m.k95].iter().sum();
    assert!(kept / total >= 0.95);
    if m.k95 > 1 {
        let fewer: f64 = m.eigenvalues[..m.k95 - 1].iter().sum();
        assert!(fewer / total < 0.95);
    }
}
