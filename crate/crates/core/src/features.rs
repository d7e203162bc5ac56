//! Feature construction on the trading horizon.
//!
//! The horizon starts at the first bar where every indicator is defined.
//! Horizon period `i` is price bar `warmup + i`; its return is the close-to-
//! close return ending at that bar, and its features use bars up to and
//! including it.

use std::ops::Range;

use chrono::NaiveDate;
use ndarray::{s, Array2, Array3, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dwt;
use crate::indicators::{compute_indicators, IndicatorParams, IndicatorTable, ZScoreFit};
use crate::market_data::{simple_returns, OhlcvPanel};
use crate::pca::{harmonize, Harmonize, PcaModel};
use crate::{Error, Result};

/// Where preprocessing statistics are fitted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preprocessing {
    /// z-score, PCA and wavelet denoising over the whole horizon at once.
    /// Test-period features therefore see future data.
    #[default]
    Paper,
    /// Everything refitted on each training window; test features at period
    /// t only use data up to t.
    Causal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub mode: Preprocessing,
    pub pca_ratio: f64,
    pub harmonize: Harmonize,
    pub dwt_level: usize,
    pub threshold_factor: f64,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pca_ratio > 0.0 && self.pca_ratio <= 1.0) {
            return Err(Error::invalid(format!("pca_ratio must be in (0, 1], got {}", self.pca_ratio)));
        }
        if self.dwt_level == 0 {
            return Err(Error::invalid("dwt_level must be >= 1"));
        }
        if !(self.threshold_factor >= 0.0) || !self.threshold_factor.is_finite() {
            return Err(Error::invalid(format!("threshold_factor must be finite and >= 0, got {}", self.threshold_factor)));
        }
        Ok(())
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mode: Preprocessing::Paper,
            pca_ratio: 0.95,
            harmonize: Harmonize::Max,
            dwt_level: 4,
            threshold_factor: 2.0,
        }
    }
}

/// Aligned prices, returns and raw indicator tables for a portfolio.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub symbols: Vec<String>,
    /// Dates of the horizon periods.
    pub dates: Vec<NaiveDate>,
    pub warmup: usize,
    /// All closes, bars x stocks, including the warmup bars.
    pub closes: Array2<f64>,
    /// Horizon returns, periods x stocks.
    pub returns: Array2<f64>,
    /// Raw indicator tables trimmed to the horizon.
    pub tables: Vec<IndicatorTable>,
}

impl Dataset {
    pub fn build(panel: &OhlcvPanel, params: &IndicatorParams) -> Result<Self> {
        let tables: Vec<IndicatorTable> = panel
            .series()
            .par_iter()
            .map(|s| compute_indicators(s, params))
            .collect::<Result<_>>()?;
        let warmup = tables[0].warmup_len;
        if warmup == 0 {
            return Err(Error::invalid("indicator warmup of zero leaves no prior close for the first return"));
        }
        let bars = panel.len();
        let m = panel.num_stocks();
        let closes = Array2::from_shape_fn((bars, m), |(t, a)| panel.series()[a].close[t]);
        let all = simple_returns(panel)?;
        let horizon = bars - warmup;
        let returns = Array2::from_shape_fn((horizon, m), |(i, a)| all.returns[a][warmup + i - 1]);
        Ok(Dataset {
            symbols: panel.symbols(),
            dates: panel.series()[0].dates[warmup..].to_vec(),
            warmup,
            closes,
            returns,
            tables,
        })
    }

    /// Number of horizon periods.
    pub fn horizon(&self) -> usize {
        self.returns.nrows()
    }

    pub fn num_stocks(&self) -> usize {
        self.returns.ncols()
    }

    /// Price bar of horizon period `i`.
    pub fn bar(&self, i: usize) -> usize {
        self.warmup + i
    }

    /// Raw indicator rows of one stock over horizon `range` (periods x 11).
    pub fn raw_rows(&self, stock: usize, range: Range<usize>) -> Array2<f64> {
        self.tables[stock].rows(range)
    }
}

/// Features for one rolling window, periods x stocks x n.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowFeatures {
    pub train: Array3<f64>,
    pub test: Array3<f64>,
}

/// Output of the whole-horizon pipeline, kept for inspection dumps.
#[derive(Debug, Clone)]
pub struct PaperFeatures {
    pub n: usize,
    pub models: Vec<PcaModel>,
    /// Columns that were constant and z-scored to zeros, per stock.
    pub degenerate: Vec<Vec<&'static str>>,
    /// PCA scores before denoising, one periods x n matrix per stock.
    pub scores: Vec<Array2<f64>>,
    /// Denoised scores, periods x stocks x n.
    pub features: Array3<f64>,
}

fn zscore_table(table: &IndicatorTable) -> (Array2<f64>, Vec<&'static str>) {
    let (z, degenerate) = table.zscored();
    (z.rows(0..z.len()), degenerate)
}

fn denoise_columns(scores: ArrayView2<f64>, cfg: &PipelineConfig) -> Result<Array2<f64>> {
    let mut out = Array2::zeros(scores.dim());
    for (k, col) in scores.columns().into_iter().enumerate() {
        let clean = dwt::denoise(&col.to_vec(), cfg.dwt_level, cfg.threshold_factor)?;
        out.column_mut(k).assign(&ndarray::Array1::from(clean));
    }
    Ok(out)
}

fn stack(per_stock: &[Array2<f64>]) -> Array3<f64> {
    let (periods, n) = per_stock[0].dim();
    Array3::from_shape_fn((periods, per_stock.len(), n), |(t, a, k)| per_stock[a][[t, k]])
}

/// Indicators → z-score → per-stock PCA (common n) → wavelet denoising, each
/// fitted once over the full horizon.
pub fn paper_features(ds: &Dataset, cfg: &PipelineConfig) -> Result<PaperFeatures> {
    let zs: Vec<(Array2<f64>, Vec<&'static str>)> = ds.tables.iter().map(zscore_table).collect();
    let models: Vec<PcaModel> = zs
        .par_iter()
        .map(|(z, _)| PcaModel::fit(z.view(), cfg.pca_ratio))
        .collect::<Result<_>>()?;
    let n = harmonize(&models, cfg.harmonize)?;
    let scores: Vec<Array2<f64>> = zs
        .iter()
        .zip(&models)
        .map(|((z, _), m)| m.transform(z.view(), n))
        .collect::<Result<_>>()?;
    let denoised: Vec<Array2<f64>> = scores
        .par_iter()
        .map(|s| denoise_columns(s.view(), cfg))
        .collect::<Result<_>>()?;
    Ok(PaperFeatures {
        n,
        models,
        degenerate: zs.into_iter().map(|(_, d)| d).collect(),
        scores,
        features: stack(&denoised),
    })
}

/// The 11 indicators z-scored over the full horizon, periods x stocks x 11.
pub fn ta_features(ds: &Dataset) -> Array3<f64> {
    let zs: Vec<Array2<f64>> = ds.tables.iter().map(|t| zscore_table(t).0).collect();
    stack(&zs)
}

/// Lagged returns `[r_{t-1}, ..., r_{t-lag}]` for horizon periods `range`.
pub fn lag_features(ds: &Dataset, lag: usize, range: Range<usize>) -> Result<Array3<f64>> {
    if lag == 0 {
        return Err(Error::invalid("lag must be >= 1"));
    }
    if ds.bar(range.start) < lag + 1 {
        return Err(Error::invalid(format!(
            "lag {lag} reaches before the first price bar"
        )));
    }
    let m = ds.num_stocks();
    Ok(Array3::from_shape_fn((range.len(), m, lag), |(t, a, j)| {
        // Return ending at bar b is close[b]/close[b-1] - 1.
        let b = ds.bar(range.start + t) - 1 - j;
        ds.closes[[b, a]] / ds.closes[[b - 1, a]] - 1.0
    }))
}

/// z-score fits and PCA of one stock's training rows.
fn causal_stock(ds: &Dataset, stock: usize, train: &Range<usize>, ratio: f64) -> Result<(Vec<ZScoreFit>, Array2<f64>, PcaModel)> {
    let raw = ds.raw_rows(stock, train.clone());
    let fits: Vec<ZScoreFit> = raw.columns().into_iter().map(|c| ZScoreFit::fit(&c.to_vec())).collect();
    let z = apply_fits(&fits, raw.view());
    let model = PcaModel::fit(z.view(), ratio)?;
    Ok((fits, z, model))
}

fn apply_fits(fits: &[ZScoreFit], raw: ArrayView2<f64>) -> Array2<f64> {
    Array2::from_shape_fn(raw.dim(), |(r, c)| fits[c].apply(raw[[r, c]]))
}

/// Causal PCA&DWT features for one window. The z-score and PCA are fitted on
/// the training rows; test period t is the last value of the denoised series
/// running from the start of the training window to t.
pub fn causal_window(ds: &Dataset, cfg: &PipelineConfig, train: Range<usize>, test: Range<usize>) -> Result<WindowFeatures> {
    let fitted: Vec<_> = (0..ds.num_stocks())
        .into_par_iter()
        .map(|a| causal_stock(ds, a, &train, cfg.pca_ratio))
        .collect::<Result<_>>()?;
    let models: Vec<PcaModel> = fitted.iter().map(|(_, _, m)| m.clone()).collect();
    let n = harmonize(&models, cfg.harmonize)?;

    let per_stock: Vec<(Array2<f64>, Array2<f64>)> = fitted
        .par_iter()
        .enumerate()
        .map(|(a, (fits, z, model))| {
            let train_scores = model.transform(z.view(), n)?;
            let train_feat = denoise_columns(train_scores.view(), cfg)?;
            let mut test_feat = Array2::zeros((test.len(), n));
            let raw_all = ds.raw_rows(a, train.start..test.end);
            let scores_all = model.transform(apply_fits(fits, raw_all.view()).view(), n)?;
            for (i, t) in test.clone().enumerate() {
                let upto = scores_all.slice(s![..=t - train.start, ..]);
                for k in 0..n {
                    let clean = dwt::denoise(&upto.column(k).to_vec(), cfg.dwt_level, cfg.threshold_factor)?;
                    test_feat[[i, k]] = *clean.last().expect("non-empty");
                }
            }
            Ok((train_feat, test_feat))
        })
        .collect::<Result<_>>()?;
    let (train_parts, test_parts): (Vec<_>, Vec<_>) = per_stock.into_iter().unzip();
    Ok(WindowFeatures {
        train: stack(&train_parts),
        test: stack(&test_parts),
    })
}

/// TA features for one window with z-scores fitted on the training rows.
pub fn causal_ta_window(ds: &Dataset, train: Range<usize>, test: Range<usize>) -> WindowFeatures {
    let parts: Vec<(Array2<f64>, Array2<f64>)> = (0..ds.num_stocks())
        .map(|a| {
            let raw = ds.raw_rows(a, train.start..test.end);
            let t = train.len();
            let fits: Vec<ZScoreFit> = raw
                .slice(s![..t, ..])
                .columns()
                .into_iter()
                .map(|c| ZScoreFit::fit(&c.to_vec()))
                .collect();
            let z = apply_fits(&fits, raw.view());
            (z.slice(s![..t, ..]).to_owned(), z.slice(s![t.., ..]).to_owned())
        })
        .collect();
    let (train_parts, test_parts): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
    WindowFeatures {
        train: stack(&train_parts),
        test: stack(&test_parts),
    }
}

/// A way of producing per-window features for an RRL trader.
#[derive(Debug, Clone)]
pub enum FeatureSource {
    /// Precomputed over the whole horizon (periods x stocks x n).
    Horizon(Array3<f64>),
    CausalPcaDwt(PipelineConfig),
    CausalTa,
    Lagged(usize),
}

impl FeatureSource {
    pub fn window(&self, ds: &Dataset, train: Range<usize>, test: Range<usize>) -> Result<WindowFeatures> {
        match self {
            FeatureSource::Horizon(all) => {
                if test.end > all.len_of(Axis(0)) {
                    return Err(Error::shape("window extends past the precomputed features"));
                }
                Ok(WindowFeatures {
                    train: all.slice(s![train, .., ..]).to_owned(),
                    test: all.slice(s![test, .., ..]).to_owned(),
                })
            }
            FeatureSource::CausalPcaDwt(cfg) => causal_window(ds, cfg, train, test),
            FeatureSource::CausalTa => Ok(causal_ta_window(ds, train, test)),
            FeatureSource::Lagged(lag) => Ok(WindowFeatures {
                train: lag_features(ds, *lag, train)?,
                test: lag_features(ds, *lag, test)?,
            }),
        }
    }
}
