//! Experiment orchestration: config, the training loop, warm-up detection,
//! wait-period cross validation and CSV output.

mod config;
mod emit;
mod train;
mod tune;
mod warmup;

pub use config::{schedule_preset, BinaryOutput, DataSource, ExperimentConfig, ModelSpec};
pub use emit::emit;
pub use train::{prepare, run_experiment, train_on, Prepared, RunResult};
pub use tune::{tune_wait, CvRow, WaitSelection};
pub use warmup::{detect_warmup, DEFAULT_SLOPE, DEFAULT_WINDOW};
