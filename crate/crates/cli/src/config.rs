//! Run configuration (TOML).
//!
//! Everything except the data list has a default, so a minimal file is
//! just a list of `[[data]]` entries.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wavefolio_core::benchmarks::{BuildSettings, StrategySpec};
use wavefolio_core::features::PipelineConfig;
use wavefolio_core::indicators::IndicatorParams;
use wavefolio_core::market_data::{AlignMode, PriceField};
use wavefolio_core::rrl::TrainConfig;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataEntry {
    pub ticker: String,
    /// Relative paths are resolved against the config file's directory.
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanConfig {
    /// Test window M. The training window T is `trainer.window`.
    pub test: usize,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self { test: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RrlOptions {
    pub carry_over: bool,
    pub warm_start: bool,
}

impl Default for RrlOptions {
    fn default() -> Self {
        Self {
            carry_over: true,
            warm_start: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub risk_free: f64,
    pub periods_per_year: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            risk_free: 0.04,
            periods_per_year: 252.0,
        }
    }
}

fn default_costs() -> Vec<f64> {
    vec![0.0, 0.001, 0.005]
}

fn default_output() -> PathBuf {
    PathBuf::from("output")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: Vec<DataEntry>,
    /// Number of stocks traded (the first k data entries). Defaults to all.
    #[serde(default)]
    pub portfolio_cardinality: Option<usize>,
    /// Cardinalities covered by `compare`. Defaults to `[portfolio_cardinality]`.
    #[serde(default)]
    pub compare_cardinalities: Option<Vec<usize>>,
    #[serde(default)]
    pub price_field: PriceField,
    #[serde(default)]
    pub align: AlignMode,
    #[serde(default)]
    pub indicators: IndicatorParams,
    #[serde(default)]
    pub preprocessing: PipelineConfig,
    #[serde(default)]
    pub trainer: TrainConfig,
    #[serde(default)]
    pub rrl: RrlOptions,
    #[serde(default)]
    pub plan: PlanConfig,
    #[serde(default = "StrategySpec::all")]
    pub strategies: Vec<StrategySpec>,
    /// Transaction costs for the sweep.
    #[serde(default = "default_costs")]
    pub costs: Vec<f64>,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Directory of the config file; data paths are relative to it.
    #[serde(skip)]
    pub base_dir: PathBuf,
    #[serde(skip)]
    source: String,
    #[serde(skip)]
    source_name: String,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let source = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&source, &path.display().to_string())?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn parse(source: &str, name: &str) -> Result<Self, CliError> {
        let mut cfg: RunConfig = toml::from_str(source).map_err(|e| CliError::Config(format!("{name}: {e}")))?;
        cfg.source = source.to_string();
        cfg.source_name = name.to_string();
        Ok(cfg)
    }

    /// `name:line: message`, with the line of `key`'s first assignment when
    /// it appears in the file.
    fn error_at(&self, key: &str, message: String) -> CliError {
        let line = self.source.lines().position(|l| {
            let t = l.trim_start();
            t.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
        });
        match line {
            Some(i) => CliError::Config(format!("{}:{}: {message}", self.source_name, i + 1)),
            None => CliError::Config(format!("{}: {message}", self.source_name)),
        }
    }

    pub fn cardinality(&self) -> usize {
        self.portfolio_cardinality.unwrap_or(self.data.len())
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.compare_cardinalities.clone().unwrap_or_else(|| vec![self.cardinality()])
    }

    /// The trading cost of single runs and of the comparison table.
    pub fn cost(&self) -> f64 {
        self.trainer.cost
    }

    pub fn data_path(&self, entry: &DataEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.base_dir.join(&entry.path)
        }
    }

    pub fn settings(&self) -> BuildSettings {
        BuildSettings {
            trainer: self.trainer.clone(),
            pipeline: self.preprocessing.clone(),
            carry_over: self.rrl.carry_over,
            warm_start: self.rrl.warm_start,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.data.is_empty() {
            return Err(CliError::Config(format!("{}: no [[data]] entries", self.source_name)));
        }
        let mut seen = std::collections::BTreeSet::new();
        for d in &self.data {
            if !seen.insert(d.ticker.as_str()) {
                return Err(self.error_at("ticker", format!("duplicate ticker {}", d.ticker)));
            }
        }
        let n = self.data.len();
        for k in std::iter::once(self.cardinality()).chain(self.cardinalities()) {
            if k == 0 || k > n {
                let key = if Some(k) == self.portfolio_cardinality {
                    "portfolio_cardinality"
                } else {
                    "compare_cardinalities"
                };
                return Err(self.error_at(key, format!("cardinality {k} outside 1..={n} (number of data entries)")));
            }
        }
        if self.strategies.is_empty() {
            return Err(self.error_at("strategies", "empty strategy list".into()));
        }
        for s in &self.strategies {
            s.validate().map_err(|e| self.error_at("kind", format!("{}: {e}", s.name())))?;
        }
        if self.costs.is_empty() || self.costs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(self.error_at("costs", "costs must be a non-empty list of finite values >= 0".into()));
        }
        if self.plan.test == 0 {
            return Err(self.error_at("test", "test window must be >= 1".into()));
        }
        self.trainer.validate().map_err(|e| self.error_at("window", format!("[trainer] {e}")))?;
        self.preprocessing
            .validate()
            .map_err(|e| CliError::Config(format!("{}: [preprocessing] {e}", self.source_name)))?;
        self.indicators
            .validate()
            .map_err(|e| CliError::Config(format!("{}: [indicators] {e}", self.source_name)))?;
        if !(self.metrics.periods_per_year > 0.0) || !self.metrics.risk_free.is_finite() {
            return Err(CliError::Config(format!("{}: [metrics] invalid values", self.source_name)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = RunConfig::parse(
            "[[data]]\nticker = \"A\"\npath = \"a.csv\"\n[[data]]\nticker = \"B\"\npath = \"b.csv\"\n",
            "t.toml",
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.cardinality(), 2);
        assert_eq!(cfg.strategies.len(), 6);
        assert_eq!(cfg.trainer, TrainConfig::default());
        assert_eq!(cfg.costs, vec![0.0, 0.001, 0.005]);
    }

    #[test]
    fn errors_name_the_line() {
        let src = "portfolio_cardinality = 3\n[[data]]\nticker = \"A\"\npath = \"a.csv\"\n";
        let err = RunConfig::parse(src, "t.toml").unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("t.toml:1:"), "{err}");

        let err = RunConfig::parse("[[data]]\nticker = \"A\"\npath = \"a.csv\"\nbogus = 1\n", "t.toml").unwrap_err();
        assert!(err.to_string().contains("line 4"), "{err}");

        let src = "strategies = []\n[[data]]\nticker = \"A\"\npath = \"a.csv\"\n";
        assert!(RunConfig::parse(src, "t.toml").unwrap().validate().is_err());
    }
}
