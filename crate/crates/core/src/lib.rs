//! Margin-history instance filtering and reweighting for training
//! classifiers on noisily labelled data.
//!
//! Training starts with plain cross entropy for a warm-up period. After
//! that, every instance's classification margin is tracked epoch by epoch;
//! an instance whose margins stay negative for `wait` consecutive epochs is
//! dropped from the loss for good (MARVEL). MARVEL+ additionally reweights
//! the surviving instances by where their margin falls relative to the
//! batch median.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: dense classifiers, weighted cross entropy, analytic
//!   gradients, SGD with momentum;
//! - [`margin`]: binary and multi-class margins, predictions;
//! - [`ledger`]: the per-instance weight and margin history;
//! - [`scheduler`]: the per-batch weight policy;
//! - [`noise`]: seeded label corruption;
//! - [`metrics`]: oracle metrics that need ground truth;
//! - [`data`]: datasets, generators, folds and batches;
//! - [`runner`]: configuration, the training loop, warm-up detection,
//!   wait-period cross validation and CSV output.

mod error;
pub mod data;
pub mod ledger;
pub mod margin;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod noise;
pub mod rng;
pub mod runner;
pub mod scheduler;

pub use error::{Error, Result};

pub use data::{Dataset, FoldPlan, Generator};
pub use ledger::HistoryLedger;
pub use matrix::Matrix;
pub use metrics::EpochReport;
pub use model::{Logits, Model, OptimizerConfig, Sgd};
pub use noise::NoiseSpec;
pub use runner::{ExperimentConfig, RunResult};
pub use scheduler::{BatchDecision, EpochMarginStats, Method, SchedulerConfig, StatsScope};
