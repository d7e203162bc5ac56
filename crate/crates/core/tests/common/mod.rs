#![allow(dead_code)]

pub mod gradient;
pub mod indicator_oracles;
pub mod pca_oracle;

use std::path::PathBuf;

use chrono::NaiveDate;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wavefolio_core::features::Dataset;
use wavefolio_core::market_data::{align, load_ohlcv, AlignMode, OhlcvPanel, OhlcvSeries, PriceField};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// The first `k` bundled sample files, in name order.
pub fn bundled_panel(k: usize) -> OhlcvPanel {
    let mut files: Vec<PathBuf> = std::fs::read_dir(data_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    let series = files[..k].iter().map(|p| load_ohlcv(p, PriceField::Close).unwrap()).collect();
    align(series, AlignMode::Trailing).unwrap()
}

/// Random-walk OHLCV with daily drift `drift` and Gaussian noise of std `vol`.
pub fn drift_series(rng: &mut ChaCha8Rng, symbol: &str, bars: usize, drift: f64, vol: f64) -> OhlcvSeries {
    let mut close = Vec::with_capacity(bars);
    let mut p = 50.0;
    for _ in 0..bars {
        let z: f64 = rng.sample(StandardNormal);
        p *= 1.0 + drift + vol * z;
        close.push(p);
    }
    let open: Vec<f64> = close.iter().map(|c| c * (1.0 + rng.gen_range(-0.005..0.005))).collect();
    let high = close.iter().zip(&open).map(|(c, o)| c.max(*o) * (1.0 + rng.gen_range(0.0..0.01))).collect();
    let low = close.iter().zip(&open).map(|(c, o)| c.min(*o) * (1.0 - rng.gen_range(0.0..0.01))).collect();
    let volume = (0..bars).map(|_| rng.gen_range(1e5..1e6f64).round()).collect();
    let start = NaiveDate::from_ymd_opt(2012, 1, 2).unwrap();
    OhlcvSeries {
        symbol: symbol.to_string(),
        dates: (0..bars).map(|i| start + chrono::Days::new(i as u64)).collect(),
        open,
        high,
        low,
        close,
        volume,
    }
}

pub fn random_panel(seed: u64, m: usize, bars: usize) -> OhlcvPanel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let series = (0..m).map(|a| drift_series(&mut rng, &format!("S{a}"), bars, 0.0003, 0.015)).collect();
    align(series, AlignMode::Trailing).unwrap()
}

/// A dataset with the given horizon returns (periods x stocks) and no
/// indicator tables; enough for strategies that only look at prices.
pub fn returns_dataset(returns: Array2<f64>) -> Dataset {
    let warmup = 63;
    let (h, m) = returns.dim();
    let mut closes = Array2::from_elem((warmup + h, m), 100.0);
    for i in 0..h {
        for a in 0..m {
            closes[[warmup + i, a]] = closes[[warmup + i - 1, a]] * (1.0 + returns[[i, a]]);
        }
    }
    let start = NaiveDate::from_ymd_opt(2012, 1, 2).unwrap();
    Dataset {
        symbols: (0..m).map(|a| format!("S{a}")).collect(),
        dates: (0..h).map(|i| start + chrono::Days::new((warmup + i) as u64)).collect(),
        warmup,
        closes,
        returns,
        tables: Vec::new(),
    }
}
