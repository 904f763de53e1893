//! Stage-based pipeline around `ibe-core`: dataset loading, explanation
//! generation, formalization, proving, feature extraction, model fitting,
//! evaluation and reporting, each reading and writing a run directory.

pub mod artifacts;
pub mod backend;
pub mod config;
pub mod data;
pub mod error;
pub mod evaluate;
pub mod report;
pub mod stages;

pub use config::PipelineConfig;
pub use error::{CliError, Result};
pub use stages::{Outcome, Pipeline, RunOptions, Stage};
