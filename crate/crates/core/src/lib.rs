//! Plasticity neural network (PNN) core.
//!
//! A sequence predictor whose synapses carry a shared connection weight and a
//! trainable time-range weight. Each input variable's window is partitioned into
//! contiguous synaptic ranges whose lengths always sum to the window length;
//! training moves the partition boundaries alongside the weights.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! machinery. IO, config files and the command line live in the `pnn` crate.
//!
//! - [`signal`]: cosine-filter series and supervised windows
//! - [`topology`]: range weights to integer ranges and boundary positions
//! - [`network`]: forward pass, loss, correlation, connection-weight gradient
//! - [`plasticity`]: range-weight gradient, memory and phagocytic factors, archive
//! - [`trainer`]: the training loop, variant matrix and checkpoints
//! - [`oracle`]: brute-force and finite-difference validators

#![no_std]

extern crate alloc;

pub mod error;
pub mod network;
pub mod oracle;
pub mod plasticity;
pub mod rng;
pub mod signal;
pub mod stats;
pub mod topology;
pub mod trainer;

pub use error::{Error, Result};
pub use network::{ConnectionWeights, ForwardMode, LearningSchedule, Trajectory};
pub use plasticity::{FactorParams, MemoryArchive, MemoryMode, PlasticityMode, Snapshot};
pub use signal::{Dataset, SignalKind, SignalSpec};
pub use topology::{LayoutParams, RangeRow, SynapticLayout};
pub use trainer::{RangeMode, RunReport, Scenario, SimpleMode, TrainingConfig};
