//! Parametric count distributions used in simulation studies: truncated
//! Poisson, truncated Binomial, mixtures of triangular p.m.f.s, and explicit
//! weight vectors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::pmf::{CountSample, EmpiricalPmf};
use crate::rng::{rng_for, DATA_STREAM};

/// Tolerance on `ρ_k` when classifying exact p.m.f.s. Boundary cases such as
/// the Poisson with `λ = 2 - √2`, whose second difference at 0 is exactly 0,
/// evaluate to rounding noise.
pub const CLASSIFY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DistributionSpec {
    /// Poisson(λ) conditioned on `{m, ..., M}`.
    TruncPoisson { m: u64, max: u64, lambda: f64 },
    /// Binomial(r, q) conditioned on `{m, ..., M}`.
    TruncBinomial { m: u64, max: u64, r: u64, q: f64 },
    /// `Σ_r π_r T_r` with `T_r(i) = 2 (r - i)_+ / (r (r + 1))`, `r = 1, ..., len`.
    TriangularMixture { weights: Vec<f64> },
    /// Normalized non-negative weights on `{m, m + 1, ...}`.
    Explicit { m: u64, weights: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeClass {
    pub rho1: f64,
    pub rho2: Option<f64>,
    pub monotone: bool,
    pub convex: bool,
}

fn normalize_log(log_w: &[f64]) -> Vec<f64> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

fn ln_choose(r: u64, j: u64) -> f64 {
    ln_gamma(r as f64 + 1.0) - ln_gamma(j as f64 + 1.0) - ln_gamma((r - j) as f64 + 1.0)
}

/// Single triangular p.m.f. `T_r` on `{0, ..., r - 1}`.
pub fn triangular(r: u64) -> Vec<f64> {
    let denom = (r * (r + 1)) as f64;
    (0..r).map(|i| 2.0 * (r - i) as f64 / denom).collect()
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDistribution(msg));
        match self {
            DistributionSpec::TruncPoisson { m, max, lambda } => {
                if m > max {
                    return bad(format!("m = {m} exceeds M = {max}"));
                }
                if !(lambda.is_finite() && *lambda > 0.0) {
                    return bad(format!("lambda must be positive, got {lambda}"));
                }
            }
            DistributionSpec::TruncBinomial { m, max, r, q } => {
                if m > max {
                    return bad(format!("m = {m} exceeds M = {max}"));
                }
                if *r < 1 {
                    return bad("r must be at least 1".into());
                }
                if m > r {
                    return bad(format!("m = {m} exceeds r = {r}, no mass left"));
                }
                if !(*q > 0.0 && *q < 1.0) {
                    return bad(format!("q must lie in (0, 1), got {q}"));
                }
            }
            DistributionSpec::TriangularMixture { weights } => {
                if weights.is_empty() {
                    return bad("empty mixture".into());
                }
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return bad("mixture weights must be non-negative".into());
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return bad(format!("mixture weights sum to {total}"));
                }
            }
            DistributionSpec::Explicit { weights, .. } => {
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return bad("weights must be non-negative".into());
                }
                if !weights.iter().any(|w| *w > 0.0) {
                    return bad("weights have no positive entry".into());
                }
            }
        }
        Ok(())
    }

    /// First point of the nominal support.
    pub fn support_min(&self) -> u64 {
        match self {
            DistributionSpec::TruncPoisson { m, .. }
            | DistributionSpec::TruncBinomial { m, .. }
            | DistributionSpec::Explicit { m, .. } => *m,
            DistributionSpec::TriangularMixture { .. } => 0,
        }
    }

    /// Probabilities on the nominal support `{m, ..., M}`, exact up to
    /// rounding. Truncated Binomials with `r < M` carry zeros beyond `r`.
    pub fn probabilities(&self) -> Result<Vec<f64>> {
        self.validate()?;
        Ok(match self {
            DistributionSpec::TruncPoisson { m, max, lambda } => {
                let ll = lambda.ln();
                let log_w: Vec<f64> =
                    (*m..=*max).map(|j| j as f64 * ll - ln_gamma(j as f64 + 1.0)).collect();
                normalize_log(&log_w)
            }
            DistributionSpec::TruncBinomial { m, max, r, q } => {
                let top = (*max).min(*r);
                let (lq, lp) = (q.ln(), (1.0 - q).ln());
                let log_w: Vec<f64> = (*m..=top)
                    .map(|j| ln_choose(*r, j) + j as f64 * lq + (r - j) as f64 * lp)
                    .collect();
                let mut out = normalize_log(&log_w);
                out.resize((max - m + 1) as usize, 0.0);
                out
            }
            DistributionSpec::TriangularMixture { weights } => {
                let total: f64 = weights.iter().sum();
                let mut out = vec![0.0; weights.len()];
                for (idx, &w) in weights.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    for (i, t) in triangular(idx as u64 + 1).into_iter().enumerate() {
                        out[i] += w / total * t;
                    }
                }
                out
            }
            DistributionSpec::Explicit { weights, .. } => {
                let total: f64 = weights.iter().sum();
                weights.iter().map(|w| w / total).collect()
            }
        })
    }

    /// The exact p.m.f., with zero tails trimmed.
    pub fn pmf(&self) -> Result<EmpiricalPmf> {
        let probs = self.probabilities()?;
        let total: f64 = probs.iter().sum();
        // Renormalizing absorbs the last bits of rounding before validation.
        let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
        EmpiricalPmf::from_probs(self.support_min(), &probs)
    }

    pub fn classify(&self) -> Result<ShapeClass> {
        let p = self.pmf()?;
        let rho1 = if p.len() >= 2 { p.rho(1)? } else { 0.0 };
        let rho2 = if p.len() >= 3 { Some(p.rho(2)?) } else { None };
        Ok(ShapeClass {
            rho1,
            rho2,
            monotone: rho1 >= -CLASSIFY_TOL,
            convex: rho2.is_none_or(|r| r >= -CLASSIFY_TOL),
        })
    }

    /// `n` i.i.d. draws by inverse-CDF sampling, seeded from `(seed, DATA_STREAM)`.
    pub fn sample_iid(&self, n: u64, seed: u64) -> Result<CountSample> {
        let sampler = Sampler::new(self)?;
        sampler.sample(n, &mut rng_for(seed, DATA_STREAM))
    }
}

/// Precomputed cumulative weights for repeated sampling.
#[derive(Debug, Clone)]
pub struct Sampler {
    support_min: u64,
    cumulative: Vec<f64>,
}

impl Sampler {
    pub fn new(spec: &DistributionSpec) -> Result<Self> {
        Ok(Self::from_pmf(&spec.pmf()?))
    }

    pub fn from_pmf(p: &EmpiricalPmf) -> Self {
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = p
            .probs()
            .iter()
            .map(|x| {
                acc += x;
                acc
            })
            .collect();
        *cumulative.last_mut().unwrap() = f64::INFINITY;
        Self { support_min: p.support_min(), cumulative }
    }

    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        // The first index whose cumulative weight exceeds u; zero-probability
        // points share a cumulative value with their predecessor and are skipped.
        self.support_min + self.cumulative.partition_point(|&c| c <= u) as u64
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, n: u64, rng: &mut R) -> Result<CountSample> {
        let mut counts = vec![0u64; self.cumulative.len()];
        for _ in 0..n {
            counts[(self.draw(rng) - self.support_min) as usize] += 1;
        }
        CountSample::from_frequencies(
            counts.into_iter().enumerate().map(|(i, c)| (self.support_min + i as u64, c)),
        )
    }
}

fn fmt_list(weights: &[f64]) -> String {
    weights.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionSpec::TruncPoisson { m, max, lambda } => write!(f, "tpois:{m}:{max}:{lambda}"),
            DistributionSpec::TruncBinomial { m, max, r, q } => write!(f, "tbinom:{m}:{max}:{r}:{q}"),
            DistributionSpec::TriangularMixture { weights } => write!(f, "tmix:{}", fmt_list(weights)),
            DistributionSpec::Explicit { m, weights } => write!(f, "pmf:{m}:{}", fmt_list(weights)),
        }
    }
}

fn parse_num<T: FromStr>(field: &str, what: &str) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::InvalidDistribution(format!("cannot parse {what} from {field:?}")))
}

/// Parses `"0.1x10"`-style repeats and plain comma lists, or a mix of both.
fn parse_weights(s: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in s.split(',') {
        match item.split_once('x') {
            Some((w, times)) => {
                let w: f64 = parse_num(w, "weight")?;
                let times: usize = parse_num(times, "repeat count")?;
                out.extend(std::iter::repeat_n(w, times));
            }
            None => out.push(parse_num(item, "weight")?),
        }
    }
    Ok(out)
}

impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let fields: Vec<&str> = s.trim().split(':').collect();
        let spec = match fields.as_slice() {
            ["tpois", m, max, lambda] => DistributionSpec::TruncPoisson {
                m: parse_num(m, "m")?,
                max: parse_num(max, "M")?,
                lambda: parse_num(lambda, "lambda")?,
            },
            ["tbinom", m, max, r, q] => DistributionSpec::TruncBinomial {
                m: parse_num(m, "m")?,
                max: parse_num(max, "M")?,
                r: parse_num(r, "r")?,
                q: parse_num(q, "q")?,
            },
            ["tmix", weights] => DistributionSpec::TriangularMixture { weights: parse_weights(weights)? },
            ["pmf", m, weights] => DistributionSpec::Explicit {
                m: parse_num(m, "m")?,
                weights: parse_weights(weights)?,
            },
            _ => {
                return Err(Error::InvalidDistribution(format!(
                    "unrecognized distribution {s:?}; expected tpois:m:M:lambda, \
                     tbinom:m:M:r:q, tmix:w1,w2,... or pmf:m:w0,w1,..."
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl TryFrom<String> for DistributionSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DistributionSpec> for String {
    fn from(spec: DistributionSpec) -> String {
        spec.to_string()
    }
}
