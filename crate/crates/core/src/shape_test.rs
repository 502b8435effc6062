//! End-to-end tests of k-monotonicity: minimum-difference tests calibrated by
//! `min_{j ∈ Î} Z_j` (knot selection Methods 1–3) and projection-distance
//! tests for monotonicity and convexity.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::covariance::{difference_covariance, limit_cov_multinomial};
use crate::error::{Error, Result};
use crate::knots::{method3_candidates, select, Method, SelectionOutcome, SelectionOverrides};
use crate::limit::{
    critical_value, p_value, sample_convex_limit, sample_grenander_limit, sample_min_statistic,
    DrawSet, Tail, DEFAULT_DRAWS,
};
use crate::pmf::{CountSample, EmpiricalPmf, IndexSet};
use crate::projection::{convex_lse, grenander};

/// A projection statistic above this counts as a violation when the
/// calibration law is degenerate at 0.
pub const DEGENERATE_TOL: f64 = 1e-9;

/// Which test to run. The Roman numerals follow the usual numbering of the
/// four families: (i)–(iii) minimum-difference tests, (iv) projection test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestMethod {
    #[serde(alias = "i")]
    M1,
    #[serde(alias = "ii")]
    M2,
    #[serde(alias = "iii")]
    M3,
    #[serde(alias = "iv")]
    Proj,
}

impl TestMethod {
    pub const ALL: [TestMethod; 4] = [TestMethod::M1, TestMethod::M2, TestMethod::M3, TestMethod::Proj];

    pub fn selection_method(self) -> Option<Method> {
        match self {
            TestMethod::M1 => Some(Method::M1),
            TestMethod::M2 => Some(Method::M2),
            TestMethod::M3 => Some(Method::M3),
            TestMethod::Proj => None,
        }
    }

    pub fn roman(self) -> &'static str {
        match self {
            TestMethod::M1 => "i",
            TestMethod::M2 => "ii",
            TestMethod::M3 => "iii",
            TestMethod::Proj => "iv",
        }
    }
}

impl fmt::Display for TestMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestMethod::M1 => "m1",
            TestMethod::M2 => "m2",
            TestMethod::M3 => "m3",
            TestMethod::Proj => "proj",
        })
    }
}

impl FromStr for TestMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m1" | "i" => Ok(TestMethod::M1),
            "m2" | "ii" => Ok(TestMethod::M2),
            "m3" | "iii" => Ok(TestMethod::M3),
            "proj" | "iv" => Ok(TestMethod::Proj),
            _ => Err(Error::UnknownMethod(s.to_string())),
        }
    }
}

/// Null hypothesis actually targeted by a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullHypothesis {
    /// `ρ_k ≥ 0` against `ρ_k < 0`.
    RhoNonNegative,
    /// The boundary problem `ρ_k = 0`.
    RhoZero,
    Monotone,
    Convex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub k: usize,
    pub method: TestMethod,
    pub alpha: f64,
    pub draws: usize,
    pub seed: u64,
    #[serde(default)]
    pub overrides: SelectionOverrides,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            k: 1,
            method: TestMethod::M3,
            alpha: 0.05,
            draws: DEFAULT_DRAWS,
            seed: 0,
            overrides: SelectionOverrides::default(),
        }
    }
}

impl TestConfig {
    pub fn new(k: usize, method: TestMethod) -> Self {
        Self { k, method, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if self.draws == 0 {
            return Err(Error::InvalidParameter("draws must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if self.method == TestMethod::Proj && self.k > 2 {
            return Err(Error::UnsupportedDegree(self.k));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub k: usize,
    pub method: TestMethod,
    pub null: NullHypothesis,
    pub tail: Tail,
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
    pub selection: Option<SelectionOutcome>,
    /// Estimated knots, as values in the difference support.
    pub knot_estimate: IndexSet,
    /// The calibration law collapsed to a point mass at 0.
    pub degenerate_calibration: bool,
    pub alpha: f64,
    pub draws: usize,
    pub n: u64,
    pub support_min: u64,
    pub support_max: u64,
    pub seed: u64,
}

fn sqrt_n(p_hat: &EmpiricalPmf) -> f64 {
    (p_hat.n().expect("built from a sample") as f64).sqrt()
}

/// The reference law a test compares its statistic against.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// `None` when the law is a point mass at 0.
    pub draws: Option<DrawSet>,
    pub selection: Option<SelectionOutcome>,
    pub knot_estimate: IndexSet,
    pub tail: Tail,
}

impl Calibration {
    pub fn is_degenerate(&self) -> bool {
        self.draws.is_none()
    }
}

fn projection_degree(cfg: &TestConfig) -> Result<usize> {
    match cfg.k {
        1 | 2 => Ok(cfg.k),
        k => Err(Error::UnsupportedDegree(k)),
    }
}

/// Builds the calibration law for `cfg` from the empirical p.m.f.
///
/// Minimum-difference tests draw `min_{j ∈ Î} Z_j` with `Z ~ N(0, Σ̂)`.
/// Projection tests take as knots the complement of Method 3's pre-fallback
/// set (`γ = 1/n` unless overridden); when that set is empty every point is a
/// knot and the law is a point mass at 0.
pub fn calibrate(p_hat: &EmpiricalPmf, cfg: &TestConfig) -> Result<Calibration> {
    cfg.validate()?;
    if p_hat.n().is_none() {
        return Err(Error::InvalidParameter("calibration needs a sample size".into()));
    }
    match cfg.method.selection_method() {
        Some(method) => {
            let support = p_hat.diff_support(cfg.k)?;
            let selection = select(p_hat, cfg.k, method, &cfg.overrides)?;
            let sigma = difference_covariance(p_hat, cfg.k)?;
            let draws = sample_min_statistic(&sigma, &selection.selected, cfg.draws, cfg.seed)?;
            Ok(Calibration {
                draws: Some(draws),
                knot_estimate: selection.selected.complement_in(&support),
                selection: Some(selection),
                tail: Tail::Lower,
            })
        }
        None => {
            let k = projection_degree(cfg)?;
            let support = p_hat.diff_support(k)?;
            let gamma = cfg.overrides.gamma.unwrap_or(1.0 / p_hat.n().unwrap() as f64);
            let non_knots = method3_candidates(p_hat, k, gamma)?;
            let knots = non_knots.complement_in(&support);
            let draws = if non_knots.is_empty() {
                None
            } else {
                // Knot offsets from the IndexSet origin coincide with point offsets.
                let cov = limit_cov_multinomial(p_hat)?;
                Some(if k == 1 {
                    sample_grenander_limit(&cov, &knots, cfg.draws, cfg.seed)?
                } else {
                    sample_convex_limit(&cov, &knots, cfg.draws, cfg.seed)?
                })
            };
            Ok(Calibration { draws, selection: None, knot_estimate: knots, tail: Tail::Upper })
        }
    }
}

/// Calibration draws for `cfg` on a sample, as used by [`run_test`].
pub fn calibration_draws(sample: &CountSample, cfg: &TestConfig) -> Result<Calibration> {
    calibrate(&EmpiricalPmf::from_sample(sample), cfg)
}

/// The test statistic alone: `√n · ρ̂_k` for minimum-difference tests,
/// `√n · ‖p̂ᴹ - p̂‖₂` or `√n · ‖p̂ᶜ - p̂‖₂` for projection tests.
pub fn statistic(p_hat: &EmpiricalPmf, cfg: &TestConfig) -> Result<f64> {
    if cfg.method.selection_method().is_some() {
        return Ok(sqrt_n(p_hat) * p_hat.rho(cfg.k)?);
    }
    let k = projection_degree(cfg)?;
    p_hat.diff_support(k)?;
    let fit = if k == 1 { grenander(p_hat.probs()) } else { convex_lse(p_hat.probs())? };
    Ok(sqrt_n(p_hat) * fit.objective)
}

fn decide(sample: &CountSample, cfg: &TestConfig) -> Result<TestResult> {
    cfg.validate()?;
    let p_hat = EmpiricalPmf::from_sample(sample);
    let statistic = statistic(&p_hat, cfg)?;
    let cal = calibrate(&p_hat, cfg)?;
    let (crit, p, reject) = match &cal.draws {
        Some(draws) => {
            let crit = critical_value(draws, cfg.alpha, cal.tail)?;
            let reject = match cal.tail {
                Tail::Lower => statistic < crit,
                Tail::Upper => statistic > crit,
            };
            (crit, p_value(draws, statistic, cal.tail), reject)
        }
        None => {
            let reject = statistic > DEGENERATE_TOL;
            (0.0, if reject { 0.0 } else { 1.0 }, reject)
        }
    };
    let null = match (cfg.method, cfg.k) {
        (TestMethod::M3, _) => NullHypothesis::RhoZero,
        (TestMethod::Proj, 1) => NullHypothesis::Monotone,
        (TestMethod::Proj, _) => NullHypothesis::Convex,
        _ => NullHypothesis::RhoNonNegative,
    };
    Ok(TestResult {
        k: cfg.k,
        method: cfg.method,
        null,
        tail: cal.tail,
        statistic,
        critical_value: crit,
        p_value: p,
        reject,
        degenerate_calibration: cal.is_degenerate(),
        selection: cal.selection,
        knot_estimate: cal.knot_estimate,
        alpha: cfg.alpha,
        draws: cfg.draws,
        n: sample.n(),
        support_min: sample.support_min(),
        support_max: sample.support_max(),
        seed: cfg.seed,
    })
}

/// Minimum-difference test `T̂ = √n · min_j ∇^k p̂(j)`, rejecting for small values.
pub fn test_k_monotone_min(sample: &CountSample, cfg: &TestConfig) -> Result<TestResult> {
    if cfg.method == TestMethod::Proj {
        return Err(Error::InvalidParameter("projection test requested from the min-statistic route".into()));
    }
    decide(sample, cfg)
}

/// `T̂ᴹ = √n ‖p̂ᴹ - p̂‖₂` with the Grenander estimator, rejecting for large values.
pub fn test_monotone_projection(sample: &CountSample, cfg: &TestConfig) -> Result<TestResult> {
    decide(sample, &TestConfig { k: 1, method: TestMethod::Proj, ..cfg.clone() })
}

/// `T̂ᶜ = √n ‖p̂ᶜ - p̂‖₂` with the convex least-squares estimator.
pub fn test_convex_projection(sample: &CountSample, cfg: &TestConfig) -> Result<TestResult> {
    decide(sample, &TestConfig { k: 2, method: TestMethod::Proj, ..cfg.clone() })
}

/// Dispatches on `cfg.method`; projection tests use `cfg.k` to pick the shape.
pub fn run_test(sample: &CountSample, cfg: &TestConfig) -> Result<TestResult> {
    decide(sample, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DistributionSpec;

    fn sample(values: &[u64]) -> CountSample {
        CountSample::from_values(values).unwrap()
    }

    #[test]
    fn statistic_of_small_sample() {
        let s = sample(&[0, 1, 1, 2]);
        let r = test_k_monotone_min(&s, &TestConfig::new(1, TestMethod::M1)).unwrap();
        assert!((r.statistic + 0.5).abs() < 1e-15);
        assert_eq!(r.tail, Tail::Lower);
        assert_eq!(r.null, NullHypothesis::RhoNonNegative);
    }

    #[test]
    fn decreasing_sample_projection_is_zero() {
        let s = CountSample::from_frequencies([(0, 40), (1, 30), (2, 20), (3, 10)]).unwrap();
        for alpha in [0.01, 0.5, 0.99] {
            let cfg = TestConfig { alpha, ..TestConfig::new(1, TestMethod::Proj) };
            let r = run_test(&s, &cfg).unwrap();
            assert_eq!(r.statistic, 0.0);
            assert!(!r.reject);
        }
    }

    #[test]
    fn convex_sample_projection_is_zero() {
        let s = CountSample::from_frequencies([(0, 50), (1, 30), (2, 15), (3, 5)]).unwrap();
        let r = run_test(&s, &TestConfig::new(2, TestMethod::Proj)).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(!r.reject);
        assert_eq!(r.null, NullHypothesis::Convex);
    }

    #[test]
    fn degenerate_calibration_flag() {
        // Strongly decreasing with large n: every step is a clear knot.
        let s = CountSample::from_frequencies([(0, 6000), (1, 3000), (2, 1000)]).unwrap();
        let r = test_monotone_projection(&s, &TestConfig::default()).unwrap();
        assert!(r.degenerate_calibration);
        assert_eq!(r.statistic, 0.0);
        assert!(!r.reject);
        assert_eq!(r.knot_estimate.values(), vec![0, 1]);
    }

    #[test]
    fn decisions_and_p_values_agree() {
        let specs = ["tpois:0:4:2", "tpois:0:4:1", "tpois:0:4:0.5857864376269049", "tbinom:0:4:4:0.5"];
        for (i, s) in specs.iter().enumerate() {
            let spec: DistributionSpec = s.parse().unwrap();
            for n in [100, 1000] {
                let data = spec.sample_iid(n, i as u64).unwrap();
                for k in [1, 2] {
                    for method in TestMethod::ALL {
                        let cfg = TestConfig { seed: 3, draws: 400, ..TestConfig::new(k, method) };
                        let r = run_test(&data, &cfg).unwrap();
                        assert_eq!(r.reject, r.p_value < cfg.alpha, "{s} n={n} k={k} {method}");
                        assert!((0.0..=1.0).contains(&r.p_value));
                    }
                }
            }
        }
    }

    #[test]
    fn method_one_is_more_conservative() {
        let spec: DistributionSpec = "tpois:0:4:1".parse().unwrap();
        for seed in 0..20 {
            let data = spec.sample_iid(1000, seed).unwrap();
            let m1 = run_test(&data, &TestConfig { seed, ..TestConfig::new(1, TestMethod::M1) }).unwrap();
            let m3 = run_test(&data, &TestConfig { seed, ..TestConfig::new(1, TestMethod::M3) }).unwrap();
            assert!(m1.critical_value <= m3.critical_value);
            assert!(!m1.reject || m3.reject);
        }
    }

    #[test]
    fn deterministic() {
        let data: CountSample = "tpois:0:4:1".parse::<DistributionSpec>().unwrap().sample_iid(500, 1).unwrap();
        for method in TestMethod::ALL {
            let cfg = TestConfig { seed: 9, ..TestConfig::new(2, method) };
            assert_eq!(run_test(&data, &cfg).unwrap(), run_test(&data, &cfg).unwrap());
        }
    }

    #[test]
    fn errors() {
        let one = sample(&[3, 3, 3]);
        assert!(matches!(run_test(&one, &TestConfig::default()), Err(Error::SupportTooShort { .. })));
        let two = sample(&[0, 1]);
        assert!(matches!(run_test(&two, &TestConfig::new(2, TestMethod::Proj)), Err(Error::SupportTooShort { .. })));
        let data = sample(&[0, 1, 2, 3, 4, 4]);
        assert_eq!(run_test(&data, &TestConfig::new(3, TestMethod::Proj)), Err(Error::UnsupportedDegree(3)));
        assert_eq!(run_test(&data, &TestConfig::new(3, TestMethod::M3)), Err(Error::UnsupportedDegree(3)));
        assert!(run_test(&data, &TestConfig::new(3, TestMethod::M1)).is_ok());
        assert!(run_test(&data, &TestConfig { alpha: 1.0, ..TestConfig::default() }).is_err());
        assert_eq!("iv".parse::<TestMethod>().unwrap(), TestMethod::Proj);
    }
}
