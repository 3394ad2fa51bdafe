//! Experiment harness for `compadmm-core`: TOML configs, CSV traces,
//! SVG convergence plots and the `compadmm` command line tool.

pub mod config;
pub mod error;
pub mod experiment;
pub mod plot;
pub mod trace_io;

pub use config::{Algorithm, ExperimentConfig, ProblemConfig, RunConfig};
pub use error::{BenchError, Result};
pub use experiment::{prepare, run_experiment, run_one, Outcome, Prepared, Summary};
