//! Indicator references: the checked-in golden table and brute-force
//! recomputations from closed forms.

use std::path::Path;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavefolio_core::indicators;
use wavefolio_core::market_data::OhlcvSeries;

pub struct Golden {
    pub cols: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Golden {
    pub fn load() -> Self {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/golden_indicators.csv");
        let mut rdr = csv::Reader::from_path(path).unwrap();
        let cols = rdr.headers().unwrap().iter().map(String::from).collect();
        let rows = rdr
            .records()
            .map(|r| {
                r.unwrap()
                    .iter()
                    .map(|s| if s.is_empty() { None } else { Some(s.parse().unwrap()) })
                    .collect()
            })
            .collect();
        Golden { cols, rows }
    }

    pub fn col(&self, name: &str) -> Vec<Option<f64>> {
        let i = self.cols.iter().position(|c| c == name).unwrap();
        self.rows.iter().map(|r| r[i]).collect()
    }

    pub fn prices(&self, name: &str) -> Vec<f64> {
        self.col(name).into_iter().map(Option::unwrap).collect()
    }
}

pub fn assert_matches(name: &str, ours: &[f64], golden: &[Option<f64>], tol: f64) {
    assert_eq!(ours.len(), golden.len());
    for (i, (o, g)) in ours.iter().zip(golden).enumerate() {
        match g {
            None => assert!(o.is_nan(), "{name}[{i}] should be undefined, got {o}"),
            Some(g) => {
                let scale = g.abs().max(1.0);
                assert!((o - g).abs() <= tol * scale, "{name}[{i}]: {o} vs golden {g}");
            }
        }
    }
}

pub fn random_series(seed: u64, n: usize) -> OhlcvSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut close = Vec::with_capacity(n);
    let mut p = 50.0;
    for _ in 0..n {
        p *= 1.0 + rng.gen_range(-0.03..0.03);
        close.push(p);
    }
    let open: Vec<f64> = close.iter().map(|c| c * (1.0 + rng.gen_range(-0.01..0.01))).collect();
    let high = close
        .iter()
        .zip(&open)
        .map(|(c, o)| c.max(*o) * (1.0 + rng.gen_range(0.0..0.02)))
        .collect();
    let low = close
        .iter()
        .zip(&open)
        .map(|(c, o)| c.min(*o) * (1.0 - rng.gen_range(0.0..0.02)))
        .collect();
    let volume = (0..n).map(|_| rng.gen_range(1e5..1e6f64).round()).collect();
    let start = NaiveDate::from_ymd_opt(2010, 1, 1).unwrap();
    OhlcvSeries {
        symbol: format!("R{seed}"),
        dates: (0..n).map(|i| start + chrono::Days::new(i as u64)).collect(),
        open,
        high,
        low,
        close,
        volume,
    }
}

// Brute-force oracles: every value recomputed from scratch with closed forms,
// no running state shared between bars.

fn oracle_mom(c: &[f64], p: usize, i: usize) -> f64 {
    c[i] - c[i - p]
}

/// EMA at `i` seeded at `s` by the SMA of the `p` values ending at `s`,
/// written as the explicit weighted sum of all inputs since the seed.
fn oracle_ema(x: &[f64], p: usize, s: usize, i: usize) -> f64 {
    let k = 2.0 / (p as f64 + 1.0);
    let seed: f64 = x[s + 1 - p..=s].iter().sum::<f64>() / p as f64;
    let mut acc = (1.0 - k).powi((i - s) as i32) * seed;
    for j in s + 1..=i {
        acc += k * (1.0 - k).powi((i - j) as i32) * x[j];
    }
    acc
}

fn oracle_macd(c: &[f64], i: usize) -> f64 {
    oracle_ema(c, 12, 25, i) - oracle_ema(c, 26, 25, i)
}

fn oracle_obv(c: &[f64], v: &[f64], i: usize) -> f64 {
    let mut total = v[0];
    for t in 1..=i {
        total += v[t] * (c[t] - c[t - 1]).signum() * if c[t] == c[t - 1] { 0.0 } else { 1.0 };
    }
    total
}

fn oracle_ad(s: &OhlcvSeries, i: usize) -> f64 {
    (0..=i)
        .map(|t| {
            let range = s.high[t] - s.low[t];
            if range > 0.0 {
                (2.0 * s.close[t] - s.low[t] - s.high[t]) / range * s.volume[t]
            } else {
                0.0
            }
        })
        .sum()
}

fn oracle_co(s: &OhlcvSeries, i: usize) -> f64 {
    let ema = |p: usize| {
        let k = 2.0 / (p as f64 + 1.0);
        let mut acc = (1.0 - k).powi(i as i32) * oracle_ad(s, 0);
        for j in 1..=i {
            acc += k * (1.0 - k).powi((i - j) as i32) * oracle_ad(s, j);
        }
        acc
    };
    ema(3) - ema(10)
}

fn oracle_atr(s: &OhlcvSeries, p: usize, i: usize) -> f64 {
    let tr = |t: usize| {
        let pc = s.close[t - 1];
        [s.high[t] - s.low[t], (s.high[t] - pc).abs(), (s.low[t] - pc).abs()]
            .into_iter()
            .fold(f64::MIN, f64::max)
    };
    let w = (p as f64 - 1.0) / p as f64;
    let seed: f64 = (1..=p).map(tr).sum::<f64>() / p as f64;
    let mut acc = w.powi((i - p) as i32) * seed;
    for j in p + 1..=i {
        acc += w.powi((i - j) as i32) * tr(j) / p as f64;
    }
    acc
}

/// Panics on the first value off its oracle by more than 1e-9 (relative
/// above magnitude 1).
pub fn check_random_fixture(seed: u64) {
    let s = random_series(seed, 300);
    let (h, l, c, v) = (&s.high, &s.low, &s.close, &s.volume);
    let mom = indicators::mom(c, 10);
    let macd = indicators::macd_line(c, 12, 26, 9);
    let obv = indicators::obv(c, v);
    let co = indicators::chaikin_oscillator(h, l, c, v, 3, 10);
    let atr = indicators::atr(h, l, c, 14);
    for i in 0..300 {
        let check = |name: &str, ours: f64, defined_from: usize, oracle: &dyn Fn() -> f64| {
            if i < defined_from {
                assert!(ours.is_nan(), "{name}[{i}] defined too early");
            } else {
                let o = oracle();
                assert!((ours - o).abs() < 1e-9 * o.abs().max(1.0), "{name}[{i}]: {ours} vs {o}");
            }
        };
        check("mom", mom[i], 10, &|| oracle_mom(c, 10, i));
        check("macd", macd[i], 33, &|| oracle_macd(c, i));
        check("obv", obv[i], 0, &|| oracle_obv(c, v, i));
        check("co", co[i], 9, &|| oracle_co(&s, i));
        check("atr", atr[i], 14, &|| oracle_atr(&s, 14, i));
    }
}
