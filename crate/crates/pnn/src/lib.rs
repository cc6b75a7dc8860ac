//! Harness for the plasticity neural network: config files, CSV/JSON outputs,
//! standard suites, sweeps and the oracle checks. The numerical work lives in
//! `pnn-core`.

pub mod check;
pub mod config;
pub mod error;
pub mod output;
pub mod suite;

pub use config::ConfigFile;
pub use error::{HarnessError, Result};
pub use suite::{execute, named_suite, ExperimentSuite, RunOutcome, RunSpec, SummaryRow, SweepSpec};
