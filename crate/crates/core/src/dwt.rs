//! Multi-level Haar wavelet transform with periodization and per-level soft
//! thresholding.
//!
//! Odd-length stages are padded by repeating their last sample before the
//! pairwise step, which is what PyWavelets' `periodization` mode does for a
//! two-tap filter. Each stage's unpadded length is recorded so reconstruction
//! is exact for every input length.

use serde::Serialize;

use crate::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveletDecomposition {
    pub approx: Vec<f64>,
    /// Detail coefficients, coarsest level first (`d_L, ..., d_1`).
    pub details: Vec<Vec<f64>>,
    pub level: usize,
    /// Input length of each analysis stage, finest first; `stage_lens[0]` is
    /// the original signal length.
    pub stage_lens: Vec<usize>,
}

impl WaveletDecomposition {
    pub fn original_len(&self) -> usize {
        self.stage_lens[0]
    }

    /// Coefficient lengths in `[a_L, d_L, ..., d_1]` order.
    pub fn coeff_lens(&self) -> Vec<usize> {
        std::iter::once(self.approx.len())
            .chain(self.details.iter().map(Vec::len))
            .collect()
    }
}

fn analysis_step(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let half = x.len().div_ceil(2);
    let mut a = Vec::with_capacity(half);
    let mut d = Vec::with_capacity(half);
    for k in 0..half {
        let x0 = x[2 * k];
        let x1 = if 2 * k + 1 < x.len() { x[2 * k + 1] } else { x0 };
        a.push((x0 + x1) / SQRT_2);
        d.push((x0 - x1) / SQRT_2);
    }
    (a, d)
}

fn synthesis_step(a: &[f64], d: &[f64], len: usize) -> Vec<f64> {
    let mut x = Vec::with_capacity(2 * a.len());
    for (a, d) in a.iter().zip(d) {
        x.push((a + d) / SQRT_2);
        x.push((a - d) / SQRT_2);
    }
    x.truncate(len);
    x
}

pub fn haar_decompose(signal: &[f64], level: usize) -> Result<WaveletDecomposition> {
    if level == 0 {
        return Err(Error::invalid("wavelet level must be >= 1"));
    }
    if signal.len() < 2 {
        return Err(Error::invalid("wavelet input needs at least 2 samples"));
    }
    let mut approx = signal.to_vec();
    let mut details = Vec::with_capacity(level);
    let mut stage_lens = Vec::with_capacity(level);
    for j in 0..level {
        if approx.len() < 2 {
            return Err(Error::invalid(format!(
                "level {level} too deep for {} samples (stage {} has length {})",
                signal.len(),
                j + 1,
                approx.len()
            )));
        }
        stage_lens.push(approx.len());
        let (a, d) = analysis_step(&approx);
        details.push(d);
        approx = a;
    }
    details.reverse();
    Ok(WaveletDecomposition {
        approx,
        details,
        level,
        stage_lens,
    })
}

fn soft(c: f64, tau: f64) -> f64 {
    c.signum() * (c.abs() - tau).max(0.0)
}

fn population_std(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Shrinks each detail level towards zero by `factor` times that level's
/// population standard deviation. Approximation coefficients are kept.
pub fn soft_threshold(decomp: &WaveletDecomposition, factor: f64) -> Result<WaveletDecomposition> {
    if !(factor >= 0.0) {
        return Err(Error::invalid(format!("threshold factor {factor} must be >= 0")));
    }
    let details = decomp
        .details
        .iter()
        .map(|d| {
            let tau = factor * population_std(d);
            d.iter().map(|&c| soft(c, tau)).collect()
        })
        .collect();
    Ok(WaveletDecomposition {
        details,
        ..decomp.clone()
    })
}

pub fn reconstruct(decomp: &WaveletDecomposition) -> Result<Vec<f64>> {
    if decomp.details.len() != decomp.level || decomp.stage_lens.len() != decomp.level {
        return Err(Error::shape("decomposition level does not match its coefficient sets"));
    }
    let mut x = decomp.approx.clone();
    for (d, &len) in decomp.details.iter().zip(decomp.stage_lens.iter().rev()) {
        if d.len() != x.len() || len.div_ceil(2) != d.len() {
            return Err(Error::shape(format!(
                "detail set of length {} cannot rebuild a stage of length {len} from {} approximation coefficients",
                d.len(),
                x.len()
            )));
        }
        x = synthesis_step(&x, d, len);
    }
    Ok(x)
}

/// Decompose, soft-threshold the details, and reconstruct.
pub fn denoise(signal: &[f64], level: usize, factor: f64) -> Result<Vec<f64>> {
    let decomp = haar_decompose(signal, level)?;
    reconstruct(&soft_threshold(&decomp, factor)?)
}
