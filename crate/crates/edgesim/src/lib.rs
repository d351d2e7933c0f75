//! Experiment harness around [`edgesim_core`]: configuration files, training
//! and evaluation drivers, checkpoint persistence, and delimited metric
//! outputs suitable for plotting.
//!
//! The simulator itself lives in `edgesim-core` and is completely
//! IO-agnostic; everything here is the filesystem- and process-facing shell:
//!
//! * [`config`] — the TOML experiment document and its mapping onto core
//!   scenario configs;
//! * [`tensor_io`] — a plain-text network checkpoint format plus a metadata
//!   sidecar;
//! * [`report`] — per-cell metric rows, aggregation, and the CSV emitters;
//! * [`train`] — the episode loop producing checkpoints and a training log;
//! * [`eval`] — the (orchestrator x density x seed) sweep, optionally
//!   parallel across cells.

pub mod config;
pub mod eval;
pub mod report;
pub mod tensor_io;
pub mod train;

pub use config::ExperimentConfig;
pub use report::ReportRow;
