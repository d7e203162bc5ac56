use std::collections::BTreeMap;
use std::path::Path;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wavefolio_core::dwt::{denoise, haar_decompose, reconstruct, soft_threshold};

fn noise(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

#[test]
fn matches_pywavelets_reference() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/golden_denoise.csv");
    let mut cases: BTreeMap<u32, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for rec in csv::Reader::from_path(path).unwrap().records() {
        let rec = rec.unwrap();
        let case: u32 = rec[0].parse().unwrap();
        let entry = cases.entry(case).or_default();
        entry.0.push(rec[2].parse().unwrap());
        entry.1.push(rec[3].parse().unwrap());
    }
    assert_eq!(cases.len(), 5);
    for (case, (input, expected)) in cases {
        let ours = denoise(&input, 4, 2.0).unwrap();
        let err = max_abs_diff(&ours, &expected);
        assert!(err < 1e-10, "case {case} (n = {}): max error {err}", input.len());
    }
}

#[test]
fn perfect_reconstruction_all_lengths() {
    for n in 2..=512usize {
        let x = noise(n as u64, n);
        let max_level = (1..=9).take_while(|&l| n.div_ceil(1 << (l - 1)) >= 2).last().unwrap();
        for level in 1..=max_level.min(4) {
            let d = haar_decompose(&x, level).unwrap();
            let back = reconstruct(&d).unwrap();
            assert!(max_abs_diff(&x, &back) < 1e-10, "n = {n}, level {level}");
        }
    }
}

#[test]
fn output_length_is_preserved() {
    assert_eq!(denoise(&noise(1, 2013), 4, 2.0).unwrap().len(), 2013);
}

#[test]
fn alternating_noise_on_trend_is_pulled_towards_trend() {
    let trend: Vec<f64> = (0..256).map(|i| 0.05 * i as f64).collect();
    let x: Vec<f64> = trend
        .iter()
        .enumerate()
        .map(|(i, t)| t + if i % 2 == 0 { 0.3 } else { -0.3 })
        .collect();
    let y = denoise(&x, 4, 2.0).unwrap();
    assert!(rmse(&y, &trend) < rmse(&x, &trend));
}

#[test]
fn denoising_reduces_error_to_clean_signal() {
    let mut wins = 0;
    for seed in 0..100u64 {
        let n = 512;
        let clean: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / n as f64;
                (2.0 * std::f64::consts::PI * 3.0 * t).sin() + 0.5 * (2.0 * std::f64::consts::PI * 7.0 * t).cos()
            })
            .collect();
        let signal_std = (clean.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
        let noisy: Vec<f64> = clean
            .iter()
            .zip(noise(1000 + seed, n))
            .map(|(c, e)| c + signal_std * e)
            .collect();
        let out = denoise(&noisy, 4, 2.0).unwrap();
        if rmse(&out, &clean) <= rmse(&noisy, &clean) {
            wins += 1;
        }
    }
    assert!(wins >= 95, "denoising helped on only {wins}/100 seeds");
}

proptest! {
    #[test]
    fn analysis_preserves_energy_on_even_lengths(half in 1usize..200, seed in 0u64..1000) {
        let x = noise(seed, 2 * half);
        let d = haar_decompose(&x, 1).unwrap();
        let ex: f64 = x.iter().map(|v| v * v).sum();
        let ec: f64 = d.approx.iter().chain(&d.details[0]).map(|v| v * v).sum();
        prop_assert!((ex - ec).abs() < 1e-10 * ex.max(1.0));
    }

    #[test]
    fn thresholding_is_a_contraction(n in 16usize..300, seed in 0u64..1000, factor in 0.0f64..4.0) {
        let d = haar_decompose(&noise(seed, n), 4).unwrap();
        let t = soft_threshold(&d, factor).unwrap();
        prop_assert_eq!(&t.approx, &d.approx);
        for (a, b) in t.details.iter().flatten().zip(d.details.iter().flatten()) {
            prop_assert!(a.abs() <= b.abs());
            prop_assert!(*a == 0.0 || a.signum() == b.signum());
        }
    }
}
