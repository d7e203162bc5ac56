//! The eleven technical indicators used as raw features, and their z-score
//! normalisation.
//!
//! Every indicator follows the TA-Lib reference definitions and warmup
//! conventions. Each raw indicator function returns a series of the same
//! length as its input with `NaN` in the undefined leading entries.

pub mod hilbert;

use serde::{Deserialize, Serialize};

use crate::market_data::OhlcvSeries;
use crate::{Error, Result};

/// Indicator columns in their fixed table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Indicator {
    Mom,
    Macd,
    Mfi,
    Rsi,
    Atr,
    Natr,
    HtDcPhase,
    HtSine,
    HtTrendMode,
    ChaikinOsc,
    Obv,
}

impl Indicator {
    pub const ALL: [Indicator; 11] = [
        Indicator::Mom,
        Indicator::Macd,
        Indicator::Mfi,
        Indicator::Rsi,
        Indicator::Atr,
        Indicator::Natr,
        Indicator::HtDcPhase,
        Indicator::HtSine,
        Indicator::HtTrendMode,
        Indicator::ChaikinOsc,
        Indicator::Obv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Indicator::Mom => "MOM",
            Indicator::Macd => "MACD",
            Indicator::Mfi => "MFI",
            Indicator::Rsi => "RSI",
            Indicator::Atr => "ATR",
            Indicator::Natr => "NATR",
            Indicator::HtDcPhase => "HTDCP",
            Indicator::HtSine => "HTS",
            Indicator::HtTrendMode => "HTTMM",
            Indicator::ChaikinOsc => "CO",
            Indicator::Obv => "OBV",
        }
    }
}

/// Which of the two sine-wave outputs fills the HTS slot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SineOutput {
    #[default]
    Sine,
    LeadSine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndicatorParams {
    pub mom_period: usize,
    pub macd_fast: usize,
    pub macd_slow: usize,
    pub macd_signal: usize,
    pub mfi_period: usize,
    pub rsi_period: usize,
    pub atr_period: usize,
    pub natr_period: usize,
    pub co_fast: usize,
    pub co_slow: usize,
    pub sine_output: SineOutput,
}

impl Default for IndicatorParams {
    fn default() -> Self {
        Self {
            mom_period: 10,
            macd_fast: 12,
            macd_slow: 26,
            macd_signal: 9,
            mfi_period: 14,
            rsi_period: 14,
            atr_period: 14,
            natr_period: 14,
            co_fast: 3,
            co_slow: 10,
            sine_output: SineOutput::Sine,
        }
    }
}

impl IndicatorParams {
    pub fn validate(&self) -> Result<()> {
        let periods = [
            ("mom_period", self.mom_period),
            ("macd_fast", self.macd_fast),
            ("macd_slow", self.macd_slow),
            ("macd_signal", self.macd_signal),
            ("mfi_period", self.mfi_period),
            ("rsi_period", self.rsi_period),
            ("atr_period", self.atr_period),
            ("natr_period", self.natr_period),
            ("co_fast", self.co_fast),
            ("co_slow", self.co_slow),
        ];
        if let Some((name, _)) = periods.iter().find(|(_, p)| *p == 0) {
            return Err(Error::invalid(format!("indicator parameter {name} must be >= 1")));
        }
        if self.macd_fast >= self.macd_slow {
            return Err(Error::invalid("macd_fast must be shorter than macd_slow"));
        }
        Ok(())
    }

    /// Index of the first bar at which every indicator is defined.
    pub fn warmup(&self) -> usize {
        [
            self.mom_period,
            (self.macd_slow - 1) + (self.macd_signal - 1),
            self.mfi_period,
            self.rsi_period,
            self.atr_period,
            self.natr_period,
            self.co_fast.max(self.co_slow) - 1,
            hilbert::LOOKBACK,
        ]
        .into_iter()
        .max()
        .unwrap_or(0)
    }
}

/// Per-stock indicator columns after the uniform warmup trim.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorTable {
    pub symbol: String,
    /// One column per entry of [`Indicator::ALL`], all of equal length.
    pub columns: Vec<Vec<f64>>,
    /// Leading bars dropped; row `i` of the table is bar `warmup_len + i`.
    pub warmup_len: usize,
}

impl IndicatorTable {
    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column(&self, ind: Indicator) -> &[f64] {
        let i = Indicator::ALL.iter().position(|&x| x == ind).unwrap_or(0);
        &self.columns[i]
    }

    /// Row-major copy of rows `range` (periods x 11).
    pub fn rows(&self, range: std::ops::Range<usize>) -> ndarray::Array2<f64> {
        ndarray::Array2::from_shape_fn((range.len(), self.columns.len()), |(r, c)| {
            self.columns[c][range.start + r]
        })
    }

    /// Z-scores every column over its full length. Returns the normalised
    /// table and the names of columns that were constant.
    pub fn zscored(&self) -> (IndicatorTable, Vec<&'static str>) {
        let mut degenerate = Vec::new();
        let columns = self
            .columns
            .iter()
            .zip(Indicator::ALL)
            .map(|(col, ind)| {
                let z = zscore(col);
                if z.degenerate {
                    log::warn!("{}: {} is constant, z-scored to zeros", self.symbol, ind.name());
                    degenerate.push(ind.name());
                }
                z.values
            })
            .collect();
        (
            IndicatorTable {
                symbol: self.symbol.clone(),
                columns,
                warmup_len: self.warmup_len,
            },
            degenerate,
        )
    }
}

pub fn compute_indicators(series: &OhlcvSeries, params: &IndicatorParams) -> Result<IndicatorTable> {
    params.validate()?;
    let warmup = params.warmup();
    if series.len() <= warmup {
        return Err(Error::invalid(format!(
            "{}: {} bars is not longer than the indicator warmup of {warmup}",
            series.symbol,
            series.len()
        )));
    }
    if series.volume.iter().all(|&v| v == 0.0) {
        return Err(Error::invalid(format!(
            "{}: zero-volume series, MFI/CO/OBV are undefined",
            series.symbol
        )));
    }
    let (h, l, c, v) = (&series.high, &series.low, &series.close, &series.volume);
    let ht = hilbert::dominant_cycle(c);
    let sine = match params.sine_output {
        SineOutput::Sine => ht.sine,
        SineOutput::LeadSine => ht.lead_sine,
    };
    let raw = vec![
        mom(c, params.mom_period),
        macd_line(c, params.macd_fast, params.macd_slow, params.macd_signal),
        mfi(h, l, c, v, params.mfi_period),
        rsi(c, params.rsi_period),
        atr(h, l, c, params.atr_period),
        natr(h, l, c, params.natr_period),
        ht.dc_phase,
        sine,
        ht.trend_mode,
        chaikin_oscillator(h, l, c, v, params.co_fast, params.co_slow),
        obv(c, v),
    ];
    let columns: Vec<Vec<f64>> = raw.into_iter().map(|col| col[warmup..].to_vec()).collect();
    if let Some((ind, _)) = Indicator::ALL
        .iter()
        .zip(&columns)
        .find(|(_, col)| col.iter().any(|x| !x.is_finite()))
    {
        return Err(Error::NonFinite(format!(
            "{}: {} undefined after warmup",
            series.symbol,
            ind.name()
        )));
    }
    Ok(IndicatorTable {
        symbol: series.symbol.clone(),
        columns,
        warmup_len: warmup,
    })
}

/// Result of [`zscore`].
#[derive(Debug, Clone, PartialEq)]
pub struct ZScored {
    pub values: Vec<f64>,
    /// The input was constant; `values` are all zero.
    pub degenerate: bool,
}

/// Mean and population standard deviation of a column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZScoreFit {
    pub mean: f64,
    pub std: f64,
}

impl ZScoreFit {
    pub fn fit(column: &[f64]) -> Self {
        let n = column.len() as f64;
        let mean = column.iter().sum::<f64>() / n;
        let var = column.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        ZScoreFit {
            mean,
            std: var.sqrt(),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.std == 0.0 || self.std <= 1e-14 * self.mean.abs()
    }

    pub fn apply(&self, x: f64) -> f64 {
        if self.is_degenerate() {
            0.0
        } else {
            (x - self.mean) / self.std
        }
    }
}

/// `(x - mean) / std` with the population standard deviation; a constant
/// column maps to zeros.
pub fn zscore(column: &[f64]) -> ZScored {
    if column.is_empty() {
        return ZScored {
            values: Vec::new(),
            degenerate: true,
        };
    }
    let fit = ZScoreFit::fit(column);
    ZScored {
        values: column.iter().map(|&x| fit.apply(x)).collect(),
        degenerate: fit.is_degenerate(),
    }
}

/// `p_t - p_{t-period}`.
pub fn mom(close: &[f64], period: usize) -> Vec<f64> {
    let mut out = vec![f64::NAN; close.len()];
    for i in period..close.len() {
        out[i] = close[i] - close[i - period];
    }
    out
}

/// Exponential moving average seeded with the simple average of the
/// `period` values ending at `start`; defined from `start` on.
fn ema_from(x: &[f64], period: usize, k: f64, start: usize) -> Vec<f64> {
    let mut out = vec![f64::NAN; x.len()];
    if start >= x.len() || start + 1 < period {
        return out;
    }
    let mut prev = x[start + 1 - period..=start].iter().sum::<f64>() / period as f64;
    out[start] = prev;
    for i in start + 1..x.len() {
        prev = (x[i] - prev) * k + prev;
        out[i] = prev;
    }
    out
}

fn ema_k(period: usize) -> f64 {
    2.0 / (period as f64 + 1.0)
}

/// MACD line (fast EMA minus slow EMA). Both averages are seeded at bar
/// `slow - 1` and the line is reported from `slow + signal - 2`, where the
/// signal line would first exist.
pub fn macd_line(close: &[f64], fast: usize, slow: usize, signal: usize) -> Vec<f64> {
    let seed_at = slow - 1;
    let first = seed_at + signal - 1;
    let fast_ema = ema_from(close, fast, ema_k(fast), seed_at);
    let slow_ema = ema_from(close, slow, ema_k(slow), seed_at);
    let mut out = vec![f64::NAN; close.len()];
    for i in first..close.len() {
        out[i] = fast_ema[i] - slow_ema[i];
    }
    out
}

fn is_zero(x: f64) -> bool {
    -1e-8 < x && x < 1e-8
}

/// Wilder RSI.
pub fn rsi(close: &[f64], period: usize) -> Vec<f64> {
    let n = close.len();
    let mut out = vec![f64::NAN; n];
    if n <= period {
        return out;
    }
    let p = period as f64;
    let (mut gain, mut loss) = (0.0, 0.0);
    for i in 1..=period {
        let d = close[i] - close[i - 1];
        if d < 0.0 {
            loss -= d;
        } else {
            gain += d;
        }
    }
    gain /= p;
    loss /= p;
    let value = |gain: f64, loss: f64| {
        let total = gain + loss;
        if is_zero(total) {
            0.0
        } else {
            100.0 * (gain / total)
        }
    };
    out[period] = value(gain, loss);
    for i in period + 1..n {
        let d = close[i] - close[i - 1];
        gain *= p - 1.0;
        loss *= p - 1.0;
        if d < 0.0 {
            loss -= d;
        } else {
            gain += d;
        }
        gain /= p;
        loss /= p;
        out[i] = value(gain, loss);
    }
    out
}

/// Money flow index over a rolling `period`-bar sum of signed money flow.
pub fn mfi(high: &[f64], low: &[f64], close: &[f64], volume: &[f64], period: usize) -> Vec<f64> {
    let n = close.len();
    let mut out = vec![f64::NAN; n];
    if n <= period {
        return out;
    }
    let typical = |i: usize| (high[i] + low[i] + close[i]) / 3.0;
    // (positive, negative) flow per bar, bar 0 has none.
    let mut flows = vec![(0.0, 0.0); n];
    for i in 1..n {
        let (tp, prev) = (typical(i), typical(i - 1));
        let mf = tp * volume[i];
        flows[i] = if tp - prev < 0.0 {
            (0.0, mf)
        } else if tp - prev > 0.0 {
            (mf, 0.0)
        } else {
            (0.0, 0.0)
        };
    }
    let (mut pos, mut neg) = (0.0, 0.0);
    for f in &flows[1..=period] {
        pos += f.0;
        neg += f.1;
    }
    let value = |pos: f64, neg: f64| {
        let total = pos + neg;
        if total < 1.0 {
            0.0
        } else {
            100.0 * (pos / total)
        }
    };
    out[period] = value(pos, neg);
    for i in period + 1..n {
        pos -= flows[i - period].0;
        neg -= flows[i - period].1;
        pos += flows[i].0;
        neg += flows[i].1;
        out[i] = value(pos, neg);
    }
    out
}

/// True range, defined from bar 1.
pub fn true_range(high: &[f64], low: &[f64], close: &[f64]) -> Vec<f64> {
    let mut out = vec![f64::NAN; close.len()];
    for i in 1..close.len() {
        let prev = close[i - 1];
        out[i] = (high[i] - low[i])
            .max((prev - high[i]).abs())
            .max((prev - low[i]).abs());
    }
    out
}

/// Wilder-smoothed average true range, first value the mean of the first
/// `period` true ranges.
pub fn atr(high: &[f64], low: &[f64], close: &[f64], period: usize) -> Vec<f64> {
    let n = close.len();
    let mut out = vec![f64::NAN; n];
    if n <= period {
        return out;
    }
    let tr = true_range(high, low, close);
    if period == 1 {
        return tr;
    }
    let p = period as f64;
    let mut prev = tr[1..=period].iter().sum::<f64>() / p;
    out[period] = prev;
    for i in period + 1..n {
        prev = (prev * (p - 1.0) + tr[i]) / p;
        out[i] = prev;
    }
    out
}

/// ATR as a percentage of the close.
pub fn natr(high: &[f64], low: &[f64], close: &[f64], period: usize) -> Vec<f64> {
    atr(high, low, close, period)
        .into_iter()
        .zip(close)
        .map(|(a, &c)| {
            if a.is_nan() {
                f64::NAN
            } else if is_zero(c) {
                0.0
            } else {
                a / c * 100.0
            }
        })
        .collect()
}

/// Chaikin A/D oscillator: fast EMA minus slow EMA of the accumulation/
/// distribution line, both seeded with the first A/D value.
pub fn chaikin_oscillator(
    high: &[f64],
    low: &[f64],
    close: &[f64],
    volume: &[f64],
    fast: usize,
    slow: usize,
) -> Vec<f64> {
    let n = close.len();
    let mut out = vec![f64::NAN; n];
    if n == 0 {
        return out;
    }
    let first = fast.max(slow) - 1;
    let (kf, ks) = (ema_k(fast), ema_k(slow));
    let mut ad = 0.0;
    let mut add = |i: usize| {
        let range = high[i] - low[i];
        if range > 0.0 {
            ad += (((close[i] - low[i]) - (high[i] - close[i])) / range) * volume[i];
        }
        ad
    };
    let a0 = add(0);
    let (mut fast_ema, mut slow_ema) = (a0, a0);
    for i in 1..n {
        let a = add(i);
        fast_ema = kf * a + (1.0 - kf) * fast_ema;
        slow_ema = ks * a + (1.0 - ks) * slow_ema;
        if i >= first {
            out[i] = fast_ema - slow_ema;
        }
    }
    if first == 0 {
        out[0] = 0.0;
    }
    out
}

/// On-balance volume starting from the first bar's volume.
pub fn obv(close: &[f64], volume: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(close.len());
    let Some(&v0) = volume.first() else {
        return out;
    };
    let mut acc = v0;
    out.push(acc);
    for i in 1..close.len() {
        if close[i] > close[i - 1] {
            acc += volume[i];
        } else if close[i] < close[i - 1] {
            acc -= volume[i];
        }
        out.push(acc);
    }
    out
}
