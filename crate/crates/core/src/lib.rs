//! Walk-forward portfolio trading research engine.
//!
//! The pipeline turns per-stock OHLCV files into technical-indicator
//! features, reduces them with per-stock PCA, denoises every retained
//! component with a level-4 Haar wavelet transform, and feeds the result to
//! a recurrent reinforcement learning trader that emits long-only softmax
//! portfolio weights and is trained by gradient ascent on the Sharpe ratio.
//! Benchmark strategies and the rolling train/test harness live alongside.

pub mod backtest;
pub mod benchmarks;
pub mod dwt;
mod error;
pub mod features;
pub mod indicators;
pub mod market_data;
pub mod pca;
pub mod rrl;

pub use error::{Error, Result};
