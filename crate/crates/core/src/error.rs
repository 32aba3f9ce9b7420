use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Kraus operators are not trace preserving (max |sum K^dag K - 1| = {defect:.3e})")]
    KrausNotTracePreserving { defect: f64 },

    #[error("generator does not annihilate the trace (trace-row defect {defect:.3e})")]
    NotTracePreservingGenerator { defect: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigenbasis is ill conditioned (condition estimate {condition:.3e})")]
    IllConditionedEigenbasis { condition: f64 },

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("Laplace argument {re}{im:+}i hits a pole")]
    PoleAtU { re: f64, im: f64 },

    #[error("shifted Laplace argument {re}{im:+}i hits a pole of the matrix function")]
    PoleAtShiftedU { re: f64, im: f64 },

    #[error("survival transform vanishes at {re}{im:+}i")]
    ZeroSurvival { re: f64, im: f64 },

    #[error("renewal pole: transform of the waiting time equals one at {re}{im:+}i")]
    RenewalPole { re: f64, im: f64 },

    #[error("resolvent is singular: {0}")]
    SingularResolvent(String),

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("truncation bound {bound:.3e} exceeds requested tolerance {tolerance:.3e}")]
    TruncationTooLoose { bound: f64, tolerance: f64 },

    #[error("Talbot inversion did not converge at t = {t}: node counts disagree by {discrepancy:.3e}")]
    ContourNonconvergence { t: f64, discrepancy: f64 },

    #[error("column {column} of the jump matrix is not stochastic (sum {sum})")]
    NotStochastic { column: usize, sum: f64 },

    #[error("unsupported combination: {0}")]
    Unsupported(String),
}
