//! Crate error type.

use thiserror::Error;

/// Direction of complete separation in a probit fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparationDirection {
    /// Observed responses sit entirely above the missing ones.
    ObservedHigh,
    /// Observed responses sit entirely below the missing ones.
    ObservedLow,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("ingestion failed: {0}")]
    Ingest(String),

    #[error("malformed header: expected `{expected}`, found `{found}`")]
    MalformedHeader { expected: String, found: String },

    #[error("duplicate (protein, peptide) key: ({protein_id}, {peptide_id})")]
    DuplicateKey {
        protein_id: String,
        peptide_id: String,
    },

    #[error("no usable rows in input")]
    EmptyInput,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("covariance is not positive definite")]
    NotPositiveDefinite,

    #[error("complete separation in probit fit ({0:?})")]
    Separation(SeparationDirection),

    #[error("singular information matrix in probit fit")]
    SingularInformation,

    #[error("probit fit needs both observed and missing responses")]
    DegenerateResponses,

    #[error("calibration target {target} unreachable; achievable range [{lo}, {hi}]")]
    Calibration { target: f64, lo: f64, hi: f64 },

    #[error("chain aborted at iteration {iteration}: {reason}")]
    ChainAborted { iteration: usize, reason: String },

    #[error("rank statistic undefined: posterior sd is zero")]
    ZeroPosteriorSd,

    #[error("no scores to aggregate: {0}")]
    EmptyScores(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
