use std::collections::BTreeMap;

use serde_json::{json, Value};
use wavefolio_core::backtest::{compute_metrics, run, BacktestResult, MetricsReport, RollingPlan};
use wavefolio_core::benchmarks::StrategyFactory;
use wavefolio_core::features::{paper_features, Dataset, PaperFeatures, Preprocessing};
use wavefolio_core::indicators::Indicator;
use wavefolio_core::market_data::{align, read_ohlcv, summary_stats, OhlcvPanel};

use crate::config::RunConfig;
use crate::output::{cost_tag, num, sha256_hex, slug, wealth_svg, Artifacts};
use crate::CliError;

/// Optional inspection outputs.
#[derive(Debug, Clone, Copy, Default)]
pub struct Dumps {
    pub features: bool,
    pub pca: bool,
    pub denoised: bool,
    pub training: bool,
}

struct Inputs {
    panel: OhlcvPanel,
    records: Vec<Value>,
}

fn load_inputs(cfg: &RunConfig) -> Result<Inputs, CliError> {
    let mut series = Vec::with_capacity(cfg.data.len());
    let mut records = Vec::with_capacity(cfg.data.len());
    for entry in &cfg.data {
        let path = cfg.data_path(entry);
        let bytes = std::fs::read(&path)
            .map_err(|e| CliError::Data(format!("ticker {}: cannot read {}: {e}", entry.ticker, path.display())))?;
        let s = read_ohlcv(bytes.as_slice(), &entry.ticker, cfg.price_field)
            .map_err(|e| CliError::Data(format!("ticker {} ({}): {e}", entry.ticker, path.display())))?;
        records.push(json!({
            "ticker": entry.ticker,
            "path": entry.path,
            "sha256": sha256_hex(&bytes),
            "rows": s.len(),
        }));
        series.push(s);
    }
    let panel = align(series, cfg.align).map_err(CliError::data_stage)?;
    Ok(Inputs { panel, records })
}

fn dataset(cfg: &RunConfig, panel: &OhlcvPanel, k: usize) -> Result<Dataset, CliError> {
    let panel = panel.take(k).map_err(CliError::from)?;
    Dataset::build(&panel, &cfg.indicators).map_err(CliError::data_stage)
}

fn manifest(cfg: &RunConfig, command: &str, inputs: &Inputs) -> Result<BTreeMap<String, Value>, CliError> {
    let mut config = serde_json::to_value(cfg).map_err(|e| CliError::Other(e.to_string()))?;
    // The output location does not affect any artifact.
    if let Some(obj) = config.as_object_mut() {
        obj.remove("output_dir");
    }
    let config_hash = sha256_hex(&crate::output::json_bytes(&config)?);
    let mut m = BTreeMap::new();
    m.insert("command".into(), json!(command));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("config".into(), config);
    m.insert("config_sha256".into(), json!(config_hash));
    m.insert("inputs".into(), json!(inputs.records));
    m.insert("aligned_rows".into(), json!(inputs.panel.len()));
    Ok(m)
}

fn dates(ds: &Dataset) -> Vec<String> {
    ds.dates.iter().map(|d| d.to_string()).collect()
}

fn write_features(art: &mut Artifacts, ds: &Dataset, pf: &PaperFeatures) -> Result<(), CliError> {
    let dates = dates(ds);
    let mut header = vec!["date".to_string()];
    header.extend((1..=pf.n).map(|k| format!("pc{k}")));
    for (a, sym) in ds.symbols.iter().enumerate() {
        let rows: Vec<Vec<String>> = (0..ds.horizon())
            .map(|t| {
                let mut r = vec![dates[t].clone()];
                r.extend((0..pf.n).map(|k| num(pf.features[[t, a, k]])));
                r
            })
            .collect();
        art.csv(&format!("features/{sym}.csv"), &header, &rows)?;
    }
    Ok(())
}

fn write_pca(art: &mut Artifacts, ds: &Dataset, pf: &PaperFeatures, ratio: f64) -> Result<(), CliError> {
    let models: BTreeMap<&str, _> = ds.symbols.iter().map(String::as_str).zip(&pf.models).collect();
    let degenerate: BTreeMap<&str, _> = ds.symbols.iter().map(String::as_str).zip(&pf.degenerate).collect();
    let columns: Vec<&str> = Indicator::ALL.iter().map(|i| i.name()).collect();
    art.json(
        "pca.json",
        &json!({
            "n": pf.n,
            "ratio": ratio,
            "columns": columns,
            "models": models,
            "constant_columns": degenerate,
        }),
    )
}

fn write_indicators(art: &mut Artifacts, ds: &Dataset) -> Result<(), CliError> {
    let dates = dates(ds);
    let mut header = vec!["date".to_string()];
    header.extend(Indicator::ALL.iter().map(|i| i.name().to_string()));
    for table in &ds.tables {
        let rows: Vec<Vec<String>> = (0..table.len())
            .map(|t| {
                let mut r = vec![dates[t].clone()];
                r.extend(table.columns.iter().map(|c| num(c[t])));
                r
            })
            .collect();
        art.csv(&format!("indicators/{}.csv", table.symbol), &header, &rows)?;
    }
    Ok(())
}

fn write_denoised(art: &mut Artifacts, ds: &Dataset, pf: &PaperFeatures) -> Result<(), CliError> {
    let dates = dates(ds);
    let mut header = vec!["date".to_string()];
    for k in 1..=pf.n {
        header.push(format!("pc{k}_raw"));
        header.push(format!("pc{k}_denoised"));
    }
    for (a, sym) in ds.symbols.iter().enumerate() {
        let rows: Vec<Vec<String>> = (0..ds.horizon())
            .map(|t| {
                let mut r = vec![dates[t].clone()];
                for k in 0..pf.n {
                    r.push(num(pf.scores[a][[t, k]]));
                    r.push(num(pf.features[[t, a, k]]));
                }
                r
            })
            .collect();
        art.csv(&format!("denoised/{sym}.csv"), &header, &rows)?;
    }
    Ok(())
}

fn write_dumps(art: &mut Artifacts, cfg: &RunConfig, ds: &Dataset, dumps: Dumps) -> Result<(), CliError> {
    if dumps.features {
        write_indicators(art, ds)?;
    }
    if dumps.pca || dumps.denoised {
        let pf = paper_features(ds, &cfg.preprocessing).map_err(CliError::from)?;
        if dumps.pca {
            write_pca(art, ds, &pf, cfg.preprocessing.pca_ratio)?;
        }
        if dumps.denoised {
            write_denoised(art, ds, &pf)?;
        }
    }
    Ok(())
}

fn write_training(art: &mut Artifacts, rel: &str, res: &BacktestResult) -> Result<(), CliError> {
    if res.windows.iter().all(|w| w.epochs.is_none()) {
        return Ok(());
    }
    let header: Vec<String> = ["window", "epoch", "sharpe"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = res
        .windows
        .iter()
        .flat_map(|w| {
            w.sharpe_log
                .iter()
                .enumerate()
                .map(move |(e, s)| vec![w.window.to_string(), (e + 1).to_string(), num(*s)])
        })
        .collect();
    art.csv(rel, &header, &rows)
}

fn run_strategies(cfg: &RunConfig, ds: &Dataset, plan: &RollingPlan, cost: f64) -> Result<Vec<BacktestResult>, CliError> {
    let factory = StrategyFactory::new(ds, cfg.settings());
    cfg.strategies
        .iter()
        .map(|spec| {
            let ctx = |e| CliError::from(e).context(&format!("{} (cost {cost})", spec.name()));
            let mut s = factory.build(spec, cost).map_err(ctx)?;
            log::info!("running {} on {} stocks at cost {cost}", spec.name(), ds.num_stocks());
            run(ds, plan, s.as_mut(), cost).map_err(ctx)
        })
        .collect()
}

fn plan_for(cfg: &RunConfig, ds: &Dataset) -> Result<RollingPlan, CliError> {
    RollingPlan::new(ds.horizon(), cfg.trainer.window, cfg.plan.test).map_err(CliError::from)
}

fn metrics(cfg: &RunConfig, res: &BacktestResult) -> Result<MetricsReport, CliError> {
    compute_metrics(&res.returns, &res.wealth, cfg.metrics.risk_free, cfg.metrics.periods_per_year)
        .map_err(|e| CliError::from(e).context(&res.strategy))
}

pub fn features(cfg: &RunConfig, dumps: Dumps) -> Result<(), CliError> {
    let inputs = load_inputs(cfg)?;
    let ds = dataset(cfg, &inputs.panel, cfg.cardinality())?;
    if cfg.preprocessing.mode == Preprocessing::Causal {
        log::warn!("causal mode refits per window; the feature files show the whole-horizon fit for inspection");
    }
    let pf = paper_features(&ds, &cfg.preprocessing).map_err(CliError::from)?;
    let mut art = Artifacts::new(&cfg.output_dir)?;
    write_features(&mut art, &ds, &pf)?;
    write_pca(&mut art, &ds, &pf, cfg.preprocessing.pca_ratio)?;
    if dumps.features {
        write_indicators(&mut art, &ds)?;
    }
    if dumps.denoised {
        write_denoised(&mut art, &ds, &pf)?;
    }
    let m = manifest(cfg, "features", &inputs)?;
    art.finish(m)
}

pub fn backtest(cfg: &RunConfig, dumps: Dumps) -> Result<(), CliError> {
    let inputs = load_inputs(cfg)?;
    let ds = dataset(cfg, &inputs.panel, cfg.cardinality())?;
    let plan = plan_for(cfg, &ds)?;
    let results = run_strategies(cfg, &ds, &plan, cfg.cost())?;

    let mut art = Artifacts::new(&cfg.output_dir)?;
    let mut header: Vec<String> = ["strategy", "period", "date"].map(String::from).to_vec();
    header.extend(ds.symbols.iter().map(|s| format!("w_{s}")));
    header.extend(["R".to_string(), "W".to_string()]);
    let mut rows = Vec::new();
    let mut reports = BTreeMap::new();
    for res in &results {
        for i in 0..res.periods.len() {
            let mut r = vec![res.strategy.clone(), res.periods[i].to_string(), res.dates[i].to_string()];
            r.extend(res.weights[i].iter().map(|w| num(*w)));
            r.push(num(res.returns[i]));
            r.push(num(res.wealth[i]));
            rows.push(r);
        }
        reports.insert(res.strategy.clone(), metrics(cfg, res)?);
        write_training(&mut art, &format!("training/{}.csv", slug(&res.strategy)), res)?;
    }
    art.csv("result.csv", &header, &rows)?;
    art.json("metrics.json", &reports)?;
    write_dumps(&mut art, cfg, &ds, dumps)?;
    let mut m = manifest(cfg, "backtest", &inputs)?;
    m.insert("cost".into(), json!(cfg.cost()));
    art.finish(m)
}

const METRICS: [&str; 5] = ["NP", "APY", "ASR", "MDD", "CR"];

fn metric_values(r: &MetricsReport) -> [f64; 5] {
    [r.np, r.apy, r.asr, r.mdd, r.cr]
}

pub fn compare(cfg: &RunConfig, dumps: Dumps) -> Result<(), CliError> {
    if cfg.strategies.len() < 2 {
        return Err(CliError::Config("compare needs at least 2 strategies".into()));
    }
    let inputs = load_inputs(cfg)?;
    let primary = cfg.cardinality();
    let mut ks = cfg.cardinalities();
    if !ks.contains(&primary) {
        ks.push(primary);
    }
    let mut art = Artifacts::new(&cfg.output_dir)?;
    let mut comparison = Vec::new();
    let mut sweeps: Vec<(f64, Vec<BacktestResult>)> = Vec::new();
    let mut sweep_dates = Vec::new();

    for &k in &ks {
        let ds = dataset(cfg, &inputs.panel, k)?;
        let plan = plan_for(cfg, &ds)?;
        let mut costs = vec![cfg.cost()];
        if k == primary {
            costs.extend(cfg.costs.iter().copied().filter(|c| *c != cfg.cost()));
        }
        for cost in costs {
            let results = run_strategies(cfg, &ds, &plan, cost)?;
            if cost == cfg.cost() && cfg.cardinalities().contains(&k) {
                for res in &results {
                    let values = metric_values(&metrics(cfg, res)?);
                    for (name, v) in METRICS.iter().zip(values) {
                        comparison.push((k, *name, res.strategy.clone(), v));
                    }
                    if dumps.training {
                        write_training(&mut art, &format!("training/k{k}_{}.csv", slug(&res.strategy)), res)?;
                    }
                }
            }
            if k == primary && cfg.costs.contains(&cost) {
                sweep_dates = results[0].dates.iter().map(|d| d.to_string()).collect();
                sweeps.push((cost, results));
            }
        }
        if k == primary {
            write_dumps(&mut art, cfg, &ds, dumps)?;
        }
    }

    // Rows grouped by cardinality, then metric, strategies in config order.
    let metric_rank = |m: &str| METRICS.iter().position(|x| *x == m).unwrap_or(0);
    comparison.sort_by_key(|(k, m, _, _)| (*k, metric_rank(m)));
    let header: Vec<String> = ["metric", "k", "strategy", "value"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = comparison
        .iter()
        .map(|(k, m, s, v)| vec![m.to_string(), k.to_string(), s.clone(), num(*v)])
        .collect();
    art.csv("comparison.csv", &header, &rows)?;

    sweeps.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (cost, results) in &sweeps {
        let mut header: Vec<String> = ["period", "date"].map(String::from).to_vec();
        header.extend(results.iter().map(|r| r.strategy.clone()));
        let rows: Vec<Vec<String>> = (0..sweep_dates.len())
            .map(|i| {
                let mut r = vec![results[0].periods[i].to_string(), sweep_dates[i].clone()];
                r.extend(results.iter().map(|res| num(res.wealth[i])));
                r
            })
            .collect();
        let tag = cost_tag(*cost);
        art.csv(&format!("sweep_{tag}.csv"), &header, &rows)?;
        let curves: Vec<(String, Vec<f64>)> = results.iter().map(|r| (r.strategy.clone(), r.wealth.clone())).collect();
        let title = format!("Wealth, k = {primary}, cost = {cost}");
        art.write(&format!("wealth_{tag}.svg"), wealth_svg(&title, &curves).as_bytes())?;
    }

    let mut m = manifest(cfg, "compare", &inputs)?;
    m.insert("cardinalities".into(), json!(cfg.cardinalities()));
    m.insert("cost".into(), json!(cfg.cost()));
    art.finish(m)
}

pub fn stats(cfg: &RunConfig) -> Result<(), CliError> {
    let inputs = load_inputs(cfg)?;
    let stats = summary_stats(&inputs.panel).map_err(CliError::data_stage)?;
    let header: Vec<String> = ["symbol", "mean", "std", "max", "min", "range"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = stats
        .iter()
        .map(|s| vec![s.symbol.clone(), num(s.mean), num(s.std), num(s.max), num(s.min), num(s.range)])
        .collect();
    println!("{:<10} {:>12} {:>12} {:>12} {:>12} {:>12}", "symbol", "mean", "std", "max", "min", "range");
    for s in &stats {
        println!(
            "{:<10} {:>12.2} {:>12.2} {:>12.2} {:>12.2} {:>12.2}",
            s.symbol, s.mean, s.std, s.max, s.min, s.range
        );
    }
    let mut art = Artifacts::new(&cfg.output_dir)?;
    art.csv("stats.csv", &header, &rows)?;
    let m = manifest(cfg, "stats", &inputs)?;
    art.finish(m)
}
