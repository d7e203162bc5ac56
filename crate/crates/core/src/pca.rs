//! Per-stock principal component analysis of the normalised indicator table.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How a common component count is chosen across stocks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Harmonize {
    /// Largest per-stock count, so every stock keeps at least the target
    /// variance ratio.
    #[default]
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Unit-norm principal directions, one per row, by descending eigenvalue.
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    /// Smallest count whose cumulative explained ratio reaches `ratio`.
    pub k95: usize,
    pub ratio: f64,
}

impl PcaModel {
    /// Fits on `table` (rows are periods). `ratio` is the target explained
    /// variance ratio used for `k95`.
    pub fn fit(table: ArrayView2<f64>, ratio: f64) -> Result<Self> {
        let (rows, cols) = table.dim();
        if cols == 0 || rows < cols {
            return Err(Error::shape(format!(
                "PCA needs at least as many rows as columns, got {rows}x{cols}"
            )));
        }
        if table.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("PCA input table".into()));
        }
        if !(0.0..=1.0).contains(&ratio) {
            return Err(Error::invalid(format!("explained variance ratio {ratio} outside [0, 1]")));
        }
        let mean = table.mean_axis(Axis(0)).expect("non-empty");
        let centered = &table - &mean;
        let cov = centered.t().dot(&centered) / rows as f64;
        let (values, vectors) = symmetric_eigen(&cov);

        let mut order: Vec<usize> = (0..cols).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| values[i].max(0.0)).collect();
        let components = order
            .iter()
            .map(|&i| {
                let mut v: Vec<f64> = vectors.column(i).to_vec();
                let pivot = v
                    .iter()
                    .enumerate()
                    .fold(0, |best, (j, x)| if x.abs() > v[best].abs() { j } else { best });
                if v[pivot] < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
                v
            })
            .collect();
        let k95 = components_for_ratio(&eigenvalues, ratio);
        Ok(PcaModel {
            mean: mean.to_vec(),
            components,
            eigenvalues,
            k95,
            ratio,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Cumulative explained variance ratio of the first `k` components.
    pub fn explained_ratio(&self, k: usize) -> f64 {
        let total: f64 = self.eigenvalues.iter().sum();
        if total == 0.0 {
            return 1.0;
        }
        self.eigenvalues[..k].iter().sum::<f64>() / total
    }

    /// Scores of `table` on the first `n` components: `(table - mean) Cᵀ`.
    pub fn transform(&self, table: ArrayView2<f64>, n: usize) -> Result<Array2<f64>> {
        if n > self.components.len() {
            return Err(Error::invalid(format!(
                "{n} components requested, model has {}",
                self.components.len()
            )));
        }
        if table.ncols() != self.dim() {
            return Err(Error::shape(format!(
                "table has {} columns, model expects {}",
                table.ncols(),
                self.dim()
            )));
        }
        let mut out = Array2::zeros((table.nrows(), n));
        for (r, row) in table.rows().into_iter().enumerate() {
            for (k, comp) in self.components[..n].iter().enumerate() {
                out[[r, k]] = row
                    .iter()
                    .zip(&self.mean)
                    .zip(comp)
                    .map(|((x, m), c)| (x - m) * c)
                    .sum();
            }
        }
        Ok(out)
    }
}

fn components_for_ratio(eigenvalues: &[f64], ratio: f64) -> usize {
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return 1;
    }
    let mut cum = 0.0;
    for (k, v) in eigenvalues.iter().enumerate() {
        cum += v;
        if cum / total >= ratio {
            return k + 1;
        }
    }
    eigenvalues.len()
}

/// Common component count across stocks.
pub fn harmonize(models: &[PcaModel], mode: Harmonize) -> Result<usize> {
    let ks = models.iter().map(|m| m.k95);
    match mode {
        Harmonize::Max => ks.max(),
        Harmonize::Min => ks.min(),
    }
    .ok_or_else(|| Error::invalid("no PCA models to harmonize"))
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues (unsorted) and eigenvectors as matrix columns.
pub fn symmetric_eigen(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = Array2::<f64>::eye(n);
    let scale = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return (vec![0.0; n], v);
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[[k, p]], m[[k, q]]);
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[[p, k]], m[[q, k]]);
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| m[[i, i]]).collect(), v)
}
