//! Daily OHLCV ingestion, timeline alignment and simple returns.
//!
//! Input files follow the common vendor export layout
//! `Date,Open,High,Low,Close,Adj Close,Volume` with ISO-8601 dates. Rows with
//! a missing or non-numeric value in any used column are discarded.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which price column feeds the `close` series.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceField {
    #[default]
    Close,
    AdjClose,
}

/// How series of different lengths are brought onto one timeline.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignMode {
    /// Keep the trailing `min(len)` rows of every series, no date matching.
    #[default]
    Trailing,
    /// Keep only the dates present in every series.
    DateIntersection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OhlcvSeries {
    pub symbol: String,
    pub dates: Vec<NaiveDate>,
    pub open: Vec<f64>,
    pub high: Vec<f64>,
    pub low: Vec<f64>,
    pub close: Vec<f64>,
    pub volume: Vec<f64>,
}

impl OhlcvSeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Checks the structural invariants: equal lengths, strictly increasing
    /// dates, positive closes and non-negative volume. OHLC ordering is not
    /// checked since vendor data routinely violates it.
    pub fn validate(&self) -> Result<()> {
        let n = self.dates.len();
        let lens = [
            self.open.len(),
            self.high.len(),
            self.low.len(),
            self.close.len(),
            self.volume.len(),
        ];
        if lens.iter().any(|&l| l != n) {
            return Err(Error::shape(format!(
                "{}: column lengths {lens:?} differ from {n} dates",
                self.symbol
            )));
        }
        if let Some(w) = self.dates.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "{}: dates not strictly increasing at {} -> {}",
                self.symbol, w[0], w[1]
            )));
        }
        if let Some(c) = self.close.iter().find(|c| !(**c > 0.0)) {
            return Err(Error::invalid(format!(
                "{}: non-positive close price {c}",
                self.symbol
            )));
        }
        if let Some(v) = self.volume.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::invalid(format!(
                "{}: negative volume {v}",
                self.symbol
            )));
        }
        Ok(())
    }

    /// Keeps the trailing `len` rows.
    fn keep_last(&self, len: usize) -> OhlcvSeries {
        let start = self.len() - len;
        OhlcvSeries {
            symbol: self.symbol.clone(),
            dates: self.dates[start..].to_vec(),
            open: self.open[start..].to_vec(),
            high: self.high[start..].to_vec(),
            low: self.low[start..].to_vec(),
            close: self.close[start..].to_vec(),
            volume: self.volume[start..].to_vec(),
        }
    }

    fn keep_rows(&self, keep: impl Fn(usize) -> bool) -> OhlcvSeries {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
        OhlcvSeries {
            symbol: self.symbol.clone(),
            dates: idx.iter().map(|&i| self.dates[i]).collect(),
            open: pick(&self.open),
            high: pick(&self.high),
            low: pick(&self.low),
            close: pick(&self.close),
            volume: pick(&self.volume),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OhlcvPanel {
    series: Vec<OhlcvSeries>,
}

impl OhlcvPanel {
    pub fn series(&self) -> &[OhlcvSeries] {
        &self.series
    }

    pub fn len(&self) -> usize {
        self.series.first().map_or(0, OhlcvSeries::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_stocks(&self) -> usize {
        self.series.len()
    }

    pub fn symbols(&self) -> Vec<String> {
        self.series.iter().map(|s| s.symbol.clone()).collect()
    }

    /// The first `k` stocks in configured order.
    pub fn take(&self, k: usize) -> Result<OhlcvPanel> {
        if k == 0 || k > self.series.len() {
            return Err(Error::invalid(format!(
                "portfolio cardinality {k} outside 1..={}",
                self.series.len()
            )));
        }
        Ok(OhlcvPanel {
            series: self.series[..k].to_vec(),
        })
    }
}

/// Simple close-to-close returns, one row per period after the first.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsPanel {
    /// `returns[a][t]` is the return of stock `a` over the period ending at
    /// price index `t + 1`.
    pub returns: Vec<Vec<f64>>,
}

impl ReturnsPanel {
    pub fn len(&self) -> usize {
        self.returns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cross-section of all stocks at period `t`.
    pub fn at(&self, t: usize) -> Vec<f64> {
        self.returns.iter().map(|r| r[t]).collect()
    }
}

/// Table-2 style summary of a stock's close prices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CloseStats {
    pub symbol: String,
    pub mean: f64,
    /// Sample (n - 1) standard deviation.
    pub std: f64,
    pub max: f64,
    pub min: f64,
    pub range: f64,
}

const HEADER_DATE: &str = "Date";
const HEADER_OPEN: &str = "Open";
const HEADER_HIGH: &str = "High";
const HEADER_LOW: &str = "Low";
const HEADER_CLOSE: &str = "Close";
const HEADER_ADJ_CLOSE: &str = "Adj Close";
const HEADER_VOLUME: &str = "Volume";

/// Loads one ticker's CSV file. The symbol is taken from the file stem.
pub fn load_ohlcv(path: impl AsRef<Path>, field: PriceField) -> Result<OhlcvSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let symbol = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_ohlcv(file, &symbol, field).map_err(|e| match e {
        Error::Data { message, .. } => Error::data(path, message),
        other => other,
    })
}

/// Parses OHLCV rows from any reader.
pub fn read_ohlcv<R: Read>(reader: R, symbol: &str, field: PriceField) -> Result<OhlcvSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::data(symbol, format!("unreadable header: {e}")))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::data(symbol, format!("missing column `{name}`")))
    };
    let close_name = match field {
        PriceField::Close => HEADER_CLOSE,
        PriceField::AdjClose => HEADER_ADJ_CLOSE,
    };
    let (i_date, i_open, i_high, i_low, i_close, i_vol) = (
        col(HEADER_DATE)?,
        col(HEADER_OPEN)?,
        col(HEADER_HIGH)?,
        col(HEADER_LOW)?,
        col(close_name)?,
        col(HEADER_VOLUME)?,
    );

    let mut series = OhlcvSeries {
        symbol: symbol.to_string(),
        dates: Vec::new(),
        open: Vec::new(),
        high: Vec::new(),
        low: Vec::new(),
        close: Vec::new(),
        volume: Vec::new(),
    };
    for (line, record) in rdr.records().enumerate() {
        let record =
            record.map_err(|e| Error::data(symbol, format!("row {}: {e}", line + 2)))?;
        let num = |i: usize| record.get(i).and_then(parse_number);
        let date = record
            .get(i_date)
            .and_then(|d| NaiveDate::parse_from_str(d, "%Y-%m-%d").ok());
        let row = (
            date,
            num(i_open),
            num(i_high),
            num(i_low),
            num(i_close),
            num(i_vol),
        );
        // Any NA in a used column drops the whole row.
        if let (Some(d), Some(o), Some(h), Some(l), Some(c), Some(v)) = row {
            series.dates.push(d);
            series.open.push(o);
            series.high.push(h);
            series.low.push(l);
            series.close.push(c);
            series.volume.push(v);
        }
    }
    if series.is_empty() {
        return Err(Error::data(symbol, "zero usable rows after dropping NA rows"));
    }
    series
        .validate()
        .map_err(|e| Error::data(symbol, e.to_string()))?;
    Ok(series)
}

fn parse_number(raw: &str) -> Option<f64> {
    raw.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Brings all series onto one common-length timeline.
pub fn align(series: Vec<OhlcvSeries>, mode: AlignMode) -> Result<OhlcvPanel> {
    if series.is_empty() {
        return Err(Error::invalid("no series to align"));
    }
    if let Some(s) = series.iter().find(|s| s.is_empty()) {
        return Err(Error::invalid(format!("series {} is empty", s.symbol)));
    }
    let series = match mode {
        AlignMode::Trailing => {
            let len = series.iter().map(OhlcvSeries::len).min().unwrap_or(0);
            series.iter().map(|s| s.keep_last(len)).collect()
        }
        AlignMode::DateIntersection => {
            let mut common: BTreeSet<NaiveDate> = series[0].dates.iter().copied().collect();
            for s in &series[1..] {
                let dates: BTreeSet<NaiveDate> = s.dates.iter().copied().collect();
                common = common.intersection(&dates).copied().collect();
            }
            if common.is_empty() {
                return Err(Error::invalid("series share no common dates"));
            }
            series
                .iter()
                .map(|s| s.keep_rows(|i| common.contains(&s.dates[i])))
                .collect()
        }
    };
    Ok(OhlcvPanel { series })
}

/// `r_t = p_t / p_{t-1} - 1` on close prices.
pub fn simple_returns(panel: &OhlcvPanel) -> Result<ReturnsPanel> {
    if panel.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 periods for returns, got {}",
            panel.len()
        )));
    }
    let mut returns = Vec::with_capacity(panel.num_stocks());
    for s in panel.series() {
        if let Some(c) = s.close.iter().find(|c| !(**c > 0.0)) {
            return Err(Error::invalid(format!(
                "{}: non-positive close price {c}",
                s.symbol
            )));
        }
        returns.push(s.close.windows(2).map(|w| w[1] / w[0] - 1.0).collect());
    }
    Ok(ReturnsPanel { returns })
}

pub fn summary_stats(panel: &OhlcvPanel) -> Result<Vec<CloseStats>> {
    if panel.is_empty() {
        return Err(Error::invalid("empty panel"));
    }
    Ok(panel
        .series()
        .iter()
        .map(|s| {
            let n = s.close.len() as f64;
            let mean = s.close.iter().sum::<f64>() / n;
            let ss: f64 = s.close.iter().map(|c| (c - mean).powi(2)).sum();
            let std = if s.close.len() > 1 {
                (ss / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            let max = s.close.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = s.close.iter().copied().fold(f64::INFINITY, f64::min);
            CloseStats {
                symbol: s.symbol.clone(),
                mean,
                std,
                max,
                min,
                range: max - min,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "Date,Open,High,Low,Close,Adj Close,Volume\n";

    fn parse(body: &str) -> Result<OhlcvSeries> {
        read_ohlcv(format!("{HEADER}{body}").as_bytes(), "TEST", PriceField::Close)
    }

    fn series(symbol: &str, closes: &[f64]) -> OhlcvSeries {
        let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        OhlcvSeries {
            symbol: symbol.into(),
            dates: (0..closes.len())
                .map(|i| start + chrono::Days::new(i as u64))
                .collect(),
            open: closes.to_vec(),
            high: closes.to_vec(),
            low: closes.to_vec(),
            close: closes.to_vec(),
            volume: vec![100.0; closes.len()],
        }
    }

    #[test]
    fn null_close_row_is_dropped() {
        let s = parse(
            "2020-01-01,1,2,1,1.5,1.4,100\n\
             2020-01-02,1,2,1,1.6,1.5,100\n\
             2020-01-03,1,2,1,null,null,100\n\
             2020-01-06,1,2,1,1.7,1.6,100\n\
             2020-01-07,1,2,1,1.8,1.7,100\n",
        )
        .unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.close, vec![1.5, 1.6, 1.7, 1.8]);
    }

    #[test]
    fn clean_file_keeps_every_row() {
        let s = parse("2020-01-01,1,2,1,1.5,1.4,100\n2020-01-02,1,2,1,1.6,1.5,100\n").unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn all_na_rows_is_an_error() {
        let err = parse("2020-01-01,null,null,null,null,null,null\n2020-01-02,,,,,,\n").unwrap_err();
        assert!(err.to_string().contains("zero usable rows"), "{err}");
    }

    #[test]
    fn non_monotone_dates_rejected() {
        let err = parse("2020-01-02,1,2,1,1.5,1.4,100\n2020-01-01,1,2,1,1.6,1.5,100\n").unwrap_err();
        assert!(err.to_string().contains("strictly increasing"), "{err}");
    }

    #[test]
    fn adj_close_selectable() {
        let s = read_ohlcv(
            format!("{HEADER}2020-01-01,1,2,1,1.5,1.4,100\n").as_bytes(),
            "T",
            PriceField::AdjClose,
        )
        .unwrap();
        assert_eq!(s.close, vec![1.4]);
    }

    #[test]
    fn align_trailing_truncation() {
        let a = series("A", &(1..=2013).map(f64::from).collect::<Vec<_>>());
        let b = series("B", &(1..=2000).map(f64::from).collect::<Vec<_>>());
        let panel = align(vec![a.clone(), b.clone()], AlignMode::Trailing).unwrap();
        assert_eq!(panel.len(), 2000);
        assert_eq!(panel.series()[0].close.last(), a.close.last());
        assert_eq!(panel.series()[1].close.last(), b.close.last());
        assert_eq!(panel.series()[0].close[0], 14.0);
        assert_eq!(panel.symbols(), vec!["A", "B"]);
    }

    #[test]
    fn align_equal_and_single_unchanged() {
        let a = series("A", &[1.0, 2.0, 3.0]);
        let panel = align(vec![a.clone()], AlignMode::Trailing).unwrap();
        assert_eq!(panel.series()[0], a);
        let panel = align(vec![a.clone(), a.clone()], AlignMode::Trailing).unwrap();
        assert_eq!(panel.len(), 3);
        assert!(align(vec![], AlignMode::Trailing).is_err());
    }

    #[test]
    fn align_by_date_intersection() {
        let a = series("A", &[1.0, 2.0, 3.0, 4.0]);
        let mut b = series("B", &[5.0, 6.0, 7.0]);
        b.dates[0] = a.dates[1] - chrono::Days::new(10);
        let panel = align(vec![a, b], AlignMode::DateIntersection).unwrap();
        assert_eq!(panel.len(), 2);
        assert_eq!(panel.series()[0].close, vec![2.0, 3.0]);
        assert_eq!(panel.series()[1].close, vec![6.0, 7.0]);
    }

    #[test]
    fn simple_return_examples() {
        let r = |c: &[f64]| {
            simple_returns(&align(vec![series("A", c)], AlignMode::Trailing).unwrap())
                .unwrap()
                .returns[0]
                .clone()
        };
        assert_eq!(r(&[100.0, 110.0]).len(), 1);
        assert!((r(&[100.0, 110.0])[0] - 0.10).abs() < 1e-15);
        assert_eq!(r(&[5.0, 5.0, 5.0]), vec![0.0, 0.0]);
        assert_eq!(r(&[100.0, 50.0]), vec![-0.5]);
        let one = align(vec![series("A", &[1.0])], AlignMode::Trailing).unwrap();
        assert!(simple_returns(&one).is_err());
    }

    #[test]
    fn summary_stats_hand_values() {
        let panel = align(
            vec![series("A", &[1.0, 2.0, 3.0]), series("B", &[4.0, 4.0, 4.0])],
            AlignMode::Trailing,
        )
        .unwrap();
        let stats = summary_stats(&panel).unwrap();
        assert_eq!(stats[0].mean, 2.0);
        assert_eq!(stats[0].std, 1.0);
        assert_eq!((stats[0].max, stats[0].min, stats[0].range), (3.0, 1.0, 2.0));
        assert_eq!((stats[1].std, stats[1].range), (0.0, 0.0));
    }

    proptest! {
        #[test]
        fn returns_round_trip_prices(closes in prop::collection::vec(0.5f64..200.0, 2..80)) {
            let panel = align(vec![series("A", &closes)], AlignMode::Trailing).unwrap();
            let r = simple_returns(&panel).unwrap();
            let mut p = closes[0];
            for (t, rt) in r.returns[0].iter().enumerate() {
                p *= 1.0 + rt;
                prop_assert!(((p - closes[t + 1]) / closes[t + 1]).abs() < 1e-12);
            }
        }

        #[test]
        fn na_drop_preserves_order(mask in prop::collection::vec(any::<bool>(), 1..40)) {
            let mut body = String::new();
            let mut expect = Vec::new();
            let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
            for (i, keep) in mask.iter().enumerate() {
                let d = start + chrono::Days::new(i as u64);
                if *keep {
                    body.push_str(&format!("{d},1,2,1,{},1,10\n", i + 1));
                    expect.push((i + 1) as f64);
                } else {
                    body.push_str(&format!("{d},1,2,1,NA,1,10\n"));
                }
            }
            match parse(&body) {
                Ok(s) => prop_assert_eq!(s.close, expect),
                Err(_) => prop_assert!(expect.is_empty()),
            }
        }
    }
}
