//! Error type shared by every module of the crate.

use thiserror::Error;

use crate::svm::DualSolution;

/// Everything that can go wrong while loading, transforming, training or
/// selecting.
///
/// Variants fall into four families, see [`Error::category`]: structural and
/// configuration problems, data problems, solver convergence, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value at position {position}")]
    NonFinite { position: usize },

    #[error("degenerate function{}: {reason}", index.map(|i| format!(" at index {i}")).unwrap_or_default())]
    DegenerateFunction { index: Option<usize>, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate training set: {0}")]
    DegenerateTraining(String),

    #[error("gram matrix is not positive semidefinite: minimum eigenvalue {min_eigenvalue:e} below -{slack:e}")]
    NotPsd { min_eigenvalue: f64, slack: f64 },

    #[error("solver did not converge after {iterations} pair updates (KKT violation {violation:e})")]
    Convergence {
        iterations: u64,
        violation: f64,
        best: Box<DualSolution>,
    },

    #[error("every candidate failed to train: {}", causes.join("; "))]
    AllCandidatesFailed {
        causes: Vec<String>,
        /// Every cause was a solver convergence failure.
        convergence: bool,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u8),

    #[error("serialization error: {0}")]
    Serialization(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Coarse classification of an [`Error`], used for CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Data,
    Convergence,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) | Error::InvalidGrid(_) => ErrorCategory::Usage,
            Error::Convergence { .. } => ErrorCategory::Convergence,
            Error::AllCandidatesFailed {
                convergence: true, ..
            } => ErrorCategory::Convergence,
            _ => ErrorCategory::Data,
        }
    }

    /// Short machine-parsable code, one per variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::GridMismatch(_) => "E_GRID_MISMATCH",
            Error::InvalidGrid(_) => "E_INVALID_GRID",
            Error::NonFinite { .. } => "E_NON_FINITE",
            Error::DegenerateFunction { .. } => "E_DEGENERATE_FUNCTION",
            Error::Config(_) => "E_CONFIG",
            Error::DegenerateTraining(_) => "E_DEGENERATE_TRAINING",
            Error::NotPsd { .. } => "E_NOT_PSD",
            Error::Convergence { .. } => "E_CONVERGENCE",
            Error::AllCandidatesFailed { .. } => "E_ALL_CANDIDATES_FAILED",
            Error::Parse { .. } => "E_PARSE",
            Error::Integrity(_) => "E_INTEGRITY",
            Error::UnsupportedVersion(_) => "E_VERSION",
            Error::Serialization(_) => "E_SERIALIZATION",
            Error::Io(_) => "E_IO",
        }
    }

    /// Attaches an input index to a degenerate-function error.
    pub(crate) fn at_index(self, idx: usize) -> Error {
        match self {
            Error::DegenerateFunction { reason, .. } => Error::DegenerateFunction {
                index: Some(idx),
                reason,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
