//! Library half of the `kmono` command: input parsing, report and table
//! output, and the error type that maps onto exit codes.

pub mod ingest;
pub mod output;
pub mod report;

use std::fmt;

pub use ingest::{ingest, Format, IngestError};
pub use report::Report;

/// A failed command, classified by exit code.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Numerical(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for Failure {}

impl From<kmono_core::Error> for Failure {
    fn from(e: kmono_core::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use kmono_core::Error;

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::from(Error::ActiveSetDiverged(10)).exit_code(), 3);
        assert_eq!(Failure::from(Error::NotPositiveSemidefinite(-1.0)).exit_code(), 3);
        assert_eq!(Failure::from(Error::EmptySample).exit_code(), 2);
        assert_eq!(Failure::from(Error::UnsupportedDegree(4)).exit_code(), 2);
        let e = IngestError { line: Some(3), message: "bad".into() };
        assert_eq!(Failure::from(e).exit_code(), 2);
    }
}
