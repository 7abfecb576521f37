//! Multi-factor recurrent short-term load forecasting for distribution networks.
//!
//! The crate covers the whole pipeline:
//!
//! - [`ingest`]: half-hourly load and temperature parsing, temporal and
//!   bilinear spatial interpolation of gridded temperature, series alignment.
//! - [`features`]: the `(1 + m + k) × n` input matrix (load history, one-hot
//!   day labels, leading-temperature rows), wildfire seasons, min-max scaling.
//! - [`stats`]: Pearson correlation, polynomial r², lead sweeps, group
//!   classification, percentile profiles, CQV and Gaussian KDE.
//! - [`neural`]: GRU and LSTM stacks with a dense head, hand-derived BPTT,
//!   Adam with global-norm clipping, seeded training.
//! - [`experiments`]: metrics, the synthetic generator, the four study steps,
//!   train/test rotation and the cost-benefit arithmetic.
//! - [`cli`]: configuration loading and the `loadcast` command front end.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod features;
pub mod ingest;
pub mod neural;
pub mod stats;
pub mod time;

pub use error::{Error, Result};
pub use time::Instant;
