//! Benchmark inputs shared by the criterion suites.

use kmono_core::{CountSample, DistributionSpec, EmpiricalPmf};

/// A seeded sample from `spec`.
pub fn sample(spec: &str, n: u64, seed: u64) -> CountSample {
    spec.parse::<DistributionSpec>()
        .expect("valid spec")
        .sample_iid(n, seed)
        .expect("sample draws")
}

/// Noisy decreasing vector of length `len`: the empirical p.m.f. of a
/// truncated Poisson sample.
pub fn noisy_pmf(len: usize, n: u64, seed: u64) -> Vec<f64> {
    let spec = format!("tpois:0:{}:{}", len - 1, len as f64 / 8.0);
    let p = EmpiricalPmf::from_sample(&sample(&spec, n, seed));
    let mut v = p.probs().to_vec();
    v.resize(len, 0.0);
    v
}
