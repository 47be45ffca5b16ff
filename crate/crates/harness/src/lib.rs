//! Seeded batch experiments over `dln-core`: JSON configurations, named
//! presets, parallel runs, CSV/JSON artifacts and the `dln` command line.

pub mod batch;
pub mod cli;
pub mod config;
pub mod emit;
pub mod error;
pub mod heatmap;
pub mod outcomes;
pub mod presets;
pub mod verify;
pub mod volume;

pub use batch::{run_batch, BatchResult};
pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
