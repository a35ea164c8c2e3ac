//! Episode metrics and the expert-normalized performance index
//! `P = (1/10)·Σ w_k·X_k(subject)/X_k(expert)` over k ∈ {D, A, F, T, M, C}.
//!
//! Under this ratio convention `P = 1` is expert parity and lower is better.
//! [`PerformanceScore::score`] reports `1/P` for higher-is-better plots.

mod baseline;
mod index;
mod metrics;

use thiserror::Error;

pub use baseline::{Baseline, BaselineSet};
pub use index::{performance_index, EpsilonPolicy, PerformanceScore, ScoreWeights, METRIC_NAMES};
pub use metrics::{aggregate, MetricVector};

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("weights row {row:?} sums to {sum}, expected 10")]
    WeightSum { row: [u32; 6], sum: u32 },
    #[error("episode never started")]
    NotStarted,
    #[error("episode has no in-bounds frames")]
    NoFrames,
    #[error("expert metric {metric} is zero with weight {weight} and epsilon policy disabled")]
    ZeroExpert { metric: &'static str, weight: u32 },
    #[error("baseline {task}: metric {metric} must be finite and non-negative, got {value}")]
    BadMetric { task: String, metric: &'static str, value: f64 },
    #[error("baseline {task}: C fraction must not exceed 1, got {value}")]
    BadFraction { task: String, value: f64 },
    #[error("baseline entry is missing a task id")]
    MissingTaskId,
    #[error("no baseline for task {0}")]
    UnknownTask(String),
    #[error("unsupported baseline schema version {0}")]
    Schema(u32),
    #[error("baseline document: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("baseline serialization: {0}")]
    Serialize(#[from] toml::ser::Error),
}
