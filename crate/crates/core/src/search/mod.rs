//! Hyperparameter search harness and evaluation metrics.

mod harness;
mod metrics;
mod space;

pub use harness::{
    random_search, sample_configs, successive_halving, HalvingSchedule, SearchResult, TrialRecord,
};
pub use metrics::{evaluate, ConfusionMatrix, EvaluationReport};
pub use space::{Config, Dimension, DimensionKind, SearchSpace};
