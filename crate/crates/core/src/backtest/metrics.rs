use serde::{Serialize, Serializer};

use crate::{Error, Result};

fn finite_or_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

/// Performance summary of one run. Wealth starts at 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    /// Net profit `W_T - W_0`.
    pub np: f64,
    /// Annualised yield `W_T^(periods_per_year / T) - 1`.
    pub apy: f64,
    /// `(APY - rf) / (std(R) sqrt(periods_per_year))` with the sample std.
    pub asr: f64,
    /// Largest peak-to-trough loss as a fraction of the peak.
    pub mdd: f64,
    /// `APY / MDD`; infinite (written as null) when there is no drawdown.
    #[serde(serialize_with = "finite_or_null")]
    pub cr: f64,
    /// Degenerate cases hit while computing the report.
    pub flags: Vec<String>,
}

/// Maximum drawdown of a wealth curve.
pub fn max_drawdown(wealth: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut worst: f64 = 0.0;
    for &w in wealth {
        peak = peak.max(w);
        worst = worst.max((peak - w) / peak);
    }
    worst
}

/// Metrics of a run from its one-period returns and wealth curve
/// (`wealth[t]` is the wealth after period t, from `W_0 = 1`).
pub fn compute_metrics(returns: &[f64], wealth: &[f64], rf_annual: f64, periods_per_year: f64) -> Result<MetricsReport> {
    if returns.len() < 2 || returns.len() != wealth.len() {
        return Err(Error::invalid(format!(
            "metrics need at least 2 periods with matching wealth, got {} returns and {} wealth points",
            returns.len(),
            wealth.len()
        )));
    }
    let t = returns.len() as f64;
    let w_t = *wealth.last().expect("non-empty");
    let mut flags = Vec::new();
    let np = w_t - 1.0;
    let apy = w_t.powf(periods_per_year / t) - 1.0;

    let mean = returns.iter().sum::<f64>() / t;
    let std = (returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (t - 1.0)).sqrt();
    let asr = if std > 0.0 {
        (apy - rf_annual) / (std * periods_per_year.sqrt())
    } else {
        flags.push("asr_undefined_zero_std".to_string());
        0.0
    };

    let mut curve = Vec::with_capacity(wealth.len() + 1);
    curve.push(1.0);
    curve.extend_from_slice(wealth);
    let mdd = max_drawdown(&curve);
    let cr = if mdd > 0.0 {
        apy / mdd
    } else {
        flags.push("cr_infinite_zero_drawdown".to_string());
        f64::INFINITY
    };
    Ok(MetricsReport {
        np,
        apy,
        asr,
        mdd,
        cr,
        flags,
    })
}
