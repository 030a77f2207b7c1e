//! Experiment driver around the [`sketchbeam`] library.
//!
//! A JSON config names a scenario (error-vs-sketch-size comparison, rate
//! sweep over SNR, convergence traces with bound columns, or wall-clock
//! benchmarks), a channel, and a master seed; the runners execute seeded
//! Monte-Carlo trials and emit deterministic CSV. The `sketchbeam` binary
//! in this crate puts a subcommand in front of each scenario.

pub mod config;
pub mod runner;
pub mod stats;

pub use config::{ExperimentConfig, Scenario};
pub use runner::{execute, CsvDocument};
