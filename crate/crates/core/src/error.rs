use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,

    #[error("support too short for degree {k}: {points} point(s)")]
    SupportTooShort { k: usize, points: usize },

    #[error("invalid probability vector: {0}")]
    InvalidPmf(String),

    #[error("degenerate null variance at index {0}")]
    DegenerateNullVariance(u64),

    #[error("Method 3 defined for k in {{1,2}}, got k={0}")]
    UnsupportedDegree(usize),

    #[error("unknown method: {0}")]
    UnknownMethod(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty index set")]
    EmptyIndexSet,

    #[error("inconsistent block partition: {0}")]
    InvalidPartition(String),

    #[error("invalid distribution spec: {0}")]
    InvalidDistribution(String),

    #[error("covariance is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("covariance factor does not reproduce the matrix (max error {0:e})")]
    FactorMismatch(f64),

    #[error("support reduction did not converge after {0} iterations")]
    SupportReductionDiverged(usize),

    #[error("active set iteration did not converge after {0} iterations")]
    ActiveSetDiverged(usize),
}

impl Error {
    /// Failures of the numerical machinery, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveSemidefinite(_)
                | Error::FactorMismatch(_)
                | Error::SupportReductionDiverged(_)
                | Error::ActiveSetDiverged(_)
        )
    }
}
