//! File formats, parallel drivers and the command-line pipeline around
//! [`mibag_core`].
//!
//! Datasets are a JSON manifest naming one binary file per bag
//! ([`store`]). Each pipeline stage writes a CSV or JSON file ([`export`])
//! that the next stage can read back, so a run can be resumed or inspected
//! at any point.

pub mod cli;
pub mod config;
pub mod error;
pub mod export;
pub mod parallel;
pub mod pipeline;
pub mod store;
pub mod synth;

pub use config::{MeasureSpec, RunConfig, ScoreSource, WeightMode};
pub use error::{Error, Result};
pub use mibag_core as core;
