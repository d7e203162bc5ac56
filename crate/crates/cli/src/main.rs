mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wavefolio_core::features::Preprocessing;
use wavefolio_core::rrl::GradientMode;

use commands::Dumps;
use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Other(_) => 1,
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Other(format!("cannot write {}: {e}", path.display()))
    }

    /// Errors while reading and preparing market data are data errors.
    pub fn data_stage(e: wavefolio_core::Error) -> Self {
        match CliError::from(e) {
            CliError::Config(m) => CliError::Data(m),
            other => other,
        }
    }

    pub fn context(self, ctx: &str) -> Self {
        match self {
            CliError::Config(m) => CliError::Config(format!("{ctx}: {m}")),
            CliError::Data(m) => CliError::Data(format!("{ctx}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{ctx}: {m}")),
            CliError::Other(m) => CliError::Other(format!("{ctx}: {m}")),
        }
    }
}

impl From<wavefolio_core::Error> for CliError {
    fn from(e: wavefolio_core::Error) -> Self {
        use wavefolio_core::Error as E;
        let msg = e.to_string();
        match e {
            E::Io { .. } | E::Data { .. } => CliError::Data(msg),
            E::InvalidInput(_) => CliError::Config(msg),
            E::Shape(_) | E::NonFinite(_) | E::Degenerate(_) => CliError::Numerical(msg),
        }
    }
}

/// Walk-forward RRL portfolio trading experiments.
#[derive(Debug, Parser)]
#[command(name = "wavefolio", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build indicator, PCA and wavelet features and write them out.
    Features(Common),
    /// Run every configured strategy once at the configured trading cost.
    Backtest(Common),
    /// Metric table over portfolio sizes plus wealth curves per cost level.
    Compare(Common),
    /// Summary statistics of close prices (sample standard deviation).
    Stats(Common),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Paper,
    Causal,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GradientArg {
    Collapsed,
    Exact,
}

#[derive(Debug, Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `trainer.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `preprocessing.mode`.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Overrides `trainer.gradient`.
    #[arg(long, value_enum)]
    gradient: Option<GradientArg>,
    /// Overrides `output_dir`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write the raw indicator tables.
    #[arg(long)]
    dump_features: bool,
    /// Write the PCA models.
    #[arg(long)]
    dump_pca: bool,
    /// Write principal-component scores before and after denoising.
    #[arg(long)]
    dump_denoised: bool,
    /// Write per-window training logs (always on for `backtest`).
    #[arg(long)]
    dump_training: bool,
    /// More log output (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.trainer.seed = seed;
        }
        if let Some(mode) = self.mode {
            cfg.preprocessing.mode = match mode {
                ModeArg::Paper => Preprocessing::Paper,
                ModeArg::Causal => Preprocessing::Causal,
            };
        }
        if let Some(g) = self.gradient {
            cfg.trainer.gradient = match g {
                GradientArg::Collapsed => GradientMode::Collapsed,
                GradientArg::Exact => GradientMode::Exact,
            };
        }
        if let Some(out) = &self.output {
            cfg.output_dir = out.clone();
        } else if cfg.output_dir.is_relative() {
            cfg.output_dir = cfg.base_dir.join(&cfg.output_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn dumps(&self) -> Dumps {
        Dumps {
            features: self.dump_features,
            pca: self.dump_pca,
            denoised: self.dump_denoised,
            training: self.dump_training,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Features(c) | Command::Backtest(c) | Command::Compare(c) | Command::Stats(c) => c,
    };
    let level = match common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = common.load().and_then(|cfg| match &cli.command {
        Command::Features(c) => commands::features(&cfg, c.dumps()),
        Command::Backtest(c) => commands::backtest(&cfg, c.dumps()),
        Command::Compare(c) => commands::compare(&cfg, c.dumps()),
        Command::Stats(_) => commands::stats(&cfg),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wavefolio: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
