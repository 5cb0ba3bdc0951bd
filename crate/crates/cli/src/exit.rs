//! Process exit codes.
//!
//! | code | status            | meaning                                              |
//! |------|-------------------|------------------------------------------------------|
//! | 0    | `ok`              | classified with confidence 1.0, model matched, plan written |
//! | 1    | `failure`         | any other error (I/O, empty reconstruction, ...)     |
//! | 2    | `usage`           | bad arguments, bad config, missing or empty scan dir |
//! | 3    | `calibration`     | calibration file missing or invalid                  |
//! | 4    | `untrained`       | no training set, or too few samples for `k`          |
//! | 5    | `no_match`        | no catalog model within tolerance                    |
//! | 6    | `implausible_fit` | plane-fit residual above the planner limit           |
//! | 7    | `uncertain`       | split neighbor vote and `--allow-uncertain` not set  |

use std::fmt;

use serde::{Deserialize, Serialize};
use spraycell_core::classifier::ClassifierError;
use spraycell_core::geometry::CalibrationError;
use spraycell_core::planner::PlanError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Ok,
    Failure,
    Usage,
    Calibration,
    Untrained,
    NoMatch,
    ImplausibleFit,
    Uncertain,
}

impl ExitStatus {
    pub const ALL: [ExitStatus; 8] = [
        Self::Ok,
        Self::Failure,
        Self::Usage,
        Self::Calibration,
        Self::Untrained,
        Self::NoMatch,
        Self::ImplausibleFit,
        Self::Uncertain,
    ];

    pub fn code(self) -> i32 {
        match self {
            Self::Ok => 0,
            Self::Failure => 1,
            Self::Usage => 2,
            Self::Calibration => 3,
            Self::Untrained => 4,
            Self::NoMatch => 5,
            Self::ImplausibleFit => 6,
            Self::Uncertain => 7,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::Failure => "failure",
            Self::Usage => "usage",
            Self::Calibration => "calibration",
            Self::Untrained => "untrained",
            Self::NoMatch => "no_match",
            Self::ImplausibleFit => "implausible_fit",
            Self::Uncertain => "uncertain",
        }
    }
}

impl fmt::Display for ExitStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An error tagged with the exit status it should produce.
#[derive(Debug)]
pub struct Failure {
    pub status: ExitStatus,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

pub fn fail(status: ExitStatus, message: impl Into<String>) -> anyhow::Error {
    Failure {
        status,
        message: message.into(),
    }
    .into()
}

/// Attaches an exit status to any error.
pub trait WithStatus<T> {
    fn status(self, status: ExitStatus) -> anyhow::Result<T>;
}

impl<T, E: fmt::Display> WithStatus<T> for Result<T, E> {
    fn status(self, status: ExitStatus) -> anyhow::Result<T> {
        self.map_err(|e| fail(status, e.to_string()))
    }
}

/// Exit status for an error: an explicit tag wins, then known library
/// errors anywhere in the chain, then `Failure`.
pub fn status_of(error: &anyhow::Error) -> ExitStatus {
    for cause in error.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return f.status;
        }
        if cause.downcast_ref::<CalibrationError>().is_some() {
            return ExitStatus::Calibration;
        }
        if let Some(e) = cause.downcast_ref::<ClassifierError>() {
            match e {
                ClassifierError::Untrained { .. } | ClassifierError::TooFewSamples { .. } => {
                    return ExitStatus::Untrained
                }
                ClassifierError::BadRecord { .. } | ClassifierError::InvalidK(_) => return ExitStatus::Usage,
                _ => {}
            }
        }
        if let Some(PlanError::ImplausibleFit { .. }) = cause.downcast_ref::<PlanError>() {
            return ExitStatus::ImplausibleFit;
        }
    }
    ExitStatus::Failure
}
