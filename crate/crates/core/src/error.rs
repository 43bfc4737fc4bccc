use std::path::PathBuf;

use thiserror::Error;

/// A value violated a documented invariant.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{0}")]
pub struct InvalidInput(pub String);

impl InvalidInput {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackError {
    #[error("frame {got} presented after frame {previous}; frames must strictly increase")]
    OutOfOrderFrame { previous: u64, got: u64 },
    #[error("no IMU sample for frame {frame}")]
    MissingImu { frame: u64 },
    #[error("invalid tracker input: {0}")]
    Invalid(#[from] InvalidInput),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommError {
    #[error("communication model configuration: {0}")]
    Config(String),
    #[error("no ground-truth label for frame {frame}, detection {detection}")]
    MissingLabel { frame: u64, detection: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("outside the model domain: {0}")]
    Domain(String),
    #[error("UAVs {a} and {b} occupy the same position")]
    DegenerateGeometry { a: usize, b: usize },
    #[error("planner configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("convolution spec: {0}")]
    Spec(String),
}

/// Errors surfaced by file-level operations and CLI commands.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Invalid(#[from] InvalidInput),
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error(transparent)]
    Comm(#[from] CommError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Cost(#[from] CostError),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by bad configuration or input files rather than
    /// failures during a run.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Config(_)
                | Error::Invalid(_)
                | Error::Comm(CommError::Config(_))
                | Error::Plan(PlanError::Config(_))
                | Error::Cost(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
