//! Robust classifier training under label noise.
//!
//! Training starts with a few warm-up epochs of conventional mini-batch SGD.
//! After that, every mini-batch is split three ways:
//!
//! - **easy** samples have a loss below the batch mean and keep their labels;
//! - **reusable** samples have a high loss but a confident prediction, and are
//!   relabeled from the probability they accumulated over the last few epochs;
//! - **dropped** samples have a high loss and an uncertain prediction, and do
//!   not contribute to the update.
//!
//! The crate is organised bottom-up:
//!
//! - [`classifier`]: a small feed-forward softmax network with exact gradients
//!   and SGD with momentum.
//! - [`loss`]: label-smoothed targets.
//! - [`selection`]: the loss-based drop rule and the certainty-based reuse rule.
//! - [`history`]: per-sample prediction history and label correction.
//! - [`trainer`]: warm-up and selective epochs, and the full training loop.
//! - [`metrics`]: diagnostics measured against known sample provenance.
//! - [`noisegen`]: synthetic Gaussian-cluster datasets with injected label noise
//!   and out-of-distribution samples.

pub mod classifier;
pub mod error;
pub mod history;
pub mod loss;
pub mod metrics;
pub mod noisegen;
pub mod selection;
pub mod trainer;

pub use classifier::{GradientSet, ModelState, Prediction};
pub use error::{Error, Result};
pub use history::{HistoryRecord, PredictionHistory};
pub use loss::SmoothedTarget;
pub use metrics::EpochDiagnostics;
pub use noisegen::{Dataset, NoiseConfig, NoisyDataset, Provenance, ProvenancedSample};
pub use selection::BatchPartition;
pub use trainer::{EpochLog, Group, TrainConfig, TrainOutcome};

/// Identifier of a training sample, unique within a dataset.
pub type SampleId = u64;
