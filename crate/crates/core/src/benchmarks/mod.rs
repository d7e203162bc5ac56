//! Portfolio strategies behind the common [`Strategy`] interface.

mod mean_variance;
mod olmar;
mod rrl;

use std::sync::OnceLock;

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::backtest::{Strategy, Window, WindowInfo, WindowOutput};
use crate::features::{paper_features, ta_features, Dataset, FeatureSource, PipelineConfig, Preprocessing};
use crate::rrl::TrainConfig;
use crate::{Error, Result};

pub use mean_variance::{mv_monte_carlo, MeanVariance, MvOutcome};
pub use olmar::{olmar_step, olmar_update, predicted_relatives, Olmar};
pub use rrl::RrlStrategy;

/// Euclidean projection onto the probability simplex (sorted-threshold method).
pub fn simplex_project(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

pub fn ucrp_weights(m: usize) -> Vec<f64> {
    vec![1.0 / m as f64; m]
}

/// Equal weights every period.
#[derive(Debug, Clone, Default)]
pub struct Ucrp;

impl Strategy for Ucrp {
    fn name(&self) -> String {
        "UCRP".into()
    }

    fn run_window(&self, ds: &Dataset, window: &Window) -> Result<WindowOutput> {
        Ok(WindowOutput {
            weights: vec![ucrp_weights(ds.num_stocks()); window.test.len()],
            info: WindowInfo {
                window: window.index,
                ..WindowInfo::default()
            },
        })
    }
}

fn default_epsilons() -> Vec<f64> {
    vec![1.01, 1.05, 1.1, 2.0, 5.0, 10.0]
}

fn default_lookbacks() -> Vec<usize> {
    vec![3, 5, 10, 20, 30]
}

fn default_samples() -> usize {
    50_000
}

fn default_lags() -> Vec<usize> {
    (1..=10).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OlmarParams {
    /// Reversion thresholds to choose from.
    pub epsilons: Vec<f64>,
    /// Moving-average look-backs to choose from.
    pub lookbacks: Vec<usize>,
}

impl Default for OlmarParams {
    fn default() -> Self {
        Self {
            epsilons: default_epsilons(),
            lookbacks: default_lookbacks(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MvParams {
    pub n_samples: usize,
    /// Falls back to the run seed.
    pub seed: Option<u64>,
}

impl Default for MvParams {
    fn default() -> Self {
        Self {
            n_samples: default_samples(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LagParams {
    /// Candidate lag lengths; the best is picked on the first training window.
    pub lags: Vec<usize>,
}

impl Default for LagParams {
    fn default() -> Self {
        Self { lags: default_lags() }
    }
}

/// A strategy as named in a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StrategySpec {
    Ucrp,
    Olmar(#[serde(default)] OlmarParams),
    Mv(#[serde(default)] MvParams),
    LagRrl(#[serde(default)] LagParams),
    TaRrl,
    PcaDwtRrl,
}

impl StrategySpec {
    /// The six strategies with default parameters.
    pub fn all() -> Vec<StrategySpec> {
        vec![
            StrategySpec::Ucrp,
            StrategySpec::Olmar(OlmarParams::default()),
            StrategySpec::Mv(MvParams::default()),
            StrategySpec::LagRrl(LagParams::default()),
            StrategySpec::TaRrl,
            StrategySpec::PcaDwtRrl,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            StrategySpec::Ucrp => "UCRP",
            StrategySpec::Olmar(_) => "OLMAR",
            StrategySpec::Mv(_) => "MV",
            StrategySpec::LagRrl(_) => "LAG RRL",
            StrategySpec::TaRrl => "TA RRL",
            StrategySpec::PcaDwtRrl => "PCA&DWT RRL",
        }
    }

    /// Whether the emitted weights depend on the transaction cost.
    pub fn cost_aware(&self) -> bool {
        matches!(self, StrategySpec::LagRrl(_) | StrategySpec::TaRrl | StrategySpec::PcaDwtRrl)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            StrategySpec::Olmar(p) => {
                if p.epsilons.is_empty() || p.lookbacks.is_empty() {
                    return Err(Error::invalid("OLMAR grid must not be empty"));
                }
                if p.epsilons.iter().any(|e| !e.is_finite()) {
                    return Err(Error::invalid("OLMAR thresholds must be finite"));
                }
                if p.lookbacks.iter().any(|&w| w < 2) {
                    return Err(Error::invalid("OLMAR look-backs must be >= 2"));
                }
            }
            StrategySpec::Mv(p) if p.n_samples == 0 => {
                return Err(Error::invalid("MV needs n_samples >= 1"));
            }
            StrategySpec::LagRrl(p)
                if (p.lags.is_empty() || p.lags.contains(&0)) => {
                    return Err(Error::invalid("LAG RRL lags must be a non-empty list of values >= 1"));
                }
            _ => {}
        }
        Ok(())
    }
}

/// Settings shared by the strategies of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildSettings {
    pub trainer: TrainConfig,
    pub pipeline: PipelineConfig,
    /// Start each test window from the last training weights instead of zero.
    pub carry_over: bool,
    /// Start each window's training from the previous window's parameters.
    pub warm_start: bool,
}

impl Default for BuildSettings {
    fn default() -> Self {
        Self {
            trainer: TrainConfig::default(),
            pipeline: PipelineConfig::default(),
            carry_over: true,
            warm_start: false,
        }
    }
}

/// Builds strategies for one dataset, caching whole-horizon features.
pub struct StrategyFactory<'a> {
    ds: &'a Dataset,
    pub settings: BuildSettings,
    pca_dwt: OnceLock<Array3<f64>>,
    ta: OnceLock<Array3<f64>>,
}

impl<'a> StrategyFactory<'a> {
    pub fn new(ds: &'a Dataset, settings: BuildSettings) -> Self {
        Self {
            ds,
            settings,
            pca_dwt: OnceLock::new(),
            ta: OnceLock::new(),
        }
    }

    fn pca_dwt_source(&self) -> Result<FeatureSource> {
        match self.settings.pipeline.mode {
            Preprocessing::Causal => Ok(FeatureSource::CausalPcaDwt(self.settings.pipeline.clone())),
            Preprocessing::Paper => {
                if self.pca_dwt.get().is_none() {
                    let pf = paper_features(self.ds, &self.settings.pipeline)?;
                    let _ = self.pca_dwt.set(pf.features);
                }
                Ok(FeatureSource::Horizon(self.pca_dwt.get().expect("set above").clone()))
            }
        }
    }

    fn ta_source(&self) -> FeatureSource {
        match self.settings.pipeline.mode {
            Preprocessing::Causal => FeatureSource::CausalTa,
            Preprocessing::Paper => FeatureSource::Horizon(self.ta.get_or_init(|| ta_features(self.ds)).clone()),
        }
    }

    /// A strategy for `spec` trading at cost `cost`.
    pub fn build(&self, spec: &StrategySpec, cost: f64) -> Result<Box<dyn Strategy>> {
        spec.validate()?;
        let trainer = TrainConfig {
            cost,
            ..self.settings.trainer.clone()
        };
        let rrl = |source: FeatureSource, lags: Option<Vec<usize>>| RrlStrategy {
            name: spec.name().to_string(),
            source,
            config: trainer.clone(),
            carry_over: self.settings.carry_over,
            warm_start: self.settings.warm_start,
            lag_grid: lags,
        };
        Ok(match spec {
            StrategySpec::Ucrp => Box::new(Ucrp),
            StrategySpec::Olmar(p) => Box::new(Olmar::new(p.epsilons.clone(), p.lookbacks.clone())),
            StrategySpec::Mv(p) => Box::new(MeanVariance {
                n_samples: p.n_samples,
                seed: p.seed.unwrap_or(self.settings.trainer.seed),
            }),
            StrategySpec::LagRrl(p) => Box::new(rrl(FeatureSource::Lagged(p.lags[0]), Some(p.lags.clone()))),
            StrategySpec::TaRrl => Box::new(rrl(self.ta_source(), None)),
            StrategySpec::PcaDwtRrl => Box::new(rrl(self.pca_dwt_source()?, None)),
        })
    }
}
