//! Profile classification and catalog size matching.

mod catalog;
mod class;
mod knn;
mod training;

pub use catalog::{CatalogEntry, MatchOutcome, ModelCatalog, DEFAULT_MATCH_TOLERANCE, STANDARD_SIZES};
pub use class::{InvalidLabel, ProfileClass};
pub use knn::{Classification, KnnClassifier, LeaveOneOut, Neighbor, Standardization, TrainingSample};
pub use training::TrainingSet;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("classifier has {samples} samples, needs at least k = {k}")]
    Untrained { samples: usize, k: usize },
    #[error("k must be odd and positive, got {0}")]
    InvalidK(usize),
    #[error("features must be finite and non-negative, got {0:?}")]
    InvalidFeatures([f64; 2]),
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("training record {index}: {reason}")]
    BadRecord { index: usize, reason: String },
    #[error("catalog: {0}")]
    InvalidCatalog(String),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}
