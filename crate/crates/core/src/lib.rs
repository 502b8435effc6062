//! Tests of k-monotonicity (monotonicity, convexity) for probability mass
//! functions of count data.

pub mod covariance;
pub mod distributions;
pub mod error;
pub mod harness;
pub mod knots;
pub mod limit;
pub mod pmf;
pub mod projection;
pub mod rng;
pub mod shape_test;

pub use covariance::CovMatrix;
pub use distributions::DistributionSpec;
pub use error::{Error, Result};
pub use harness::{Scenario, StudyConfig, StudyRow};
pub use knots::{Method, SelectionOutcome, SelectionOverrides};
pub use limit::{DrawSet, LimitLaw, Tail};
pub use pmf::{CountSample, EmpiricalPmf, IndexSet};
pub use shape_test::{run_test, NullHypothesis, TestConfig, TestMethod, TestResult};
