//! Monte Carlo studies: rejection rates over seeded replications, knot
//! recovery curves, finite-sample statistic draws, and bootstrap draws of the
//! centered minimum statistic.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, Sampler};
use crate::error::{Error, Result};
use crate::knots::{select, Method, SelectionOverrides};
use crate::limit::{DrawSet, LimitLaw};
use crate::pmf::{forward_difference, CountSample, EmpiricalPmf, ARGMIN_TOL};
use crate::rng::{rng_for, BOOTSTRAP_STREAM, DATA_STREAM};
use crate::shape_test::{run_test, statistic, TestConfig, TestMethod};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub dist: DistributionSpec,
    pub n: u64,
    pub k: usize,
    pub test: TestMethod,
}

fn default_replications() -> usize {
    1000
}
fn default_draws() -> usize {
    crate::limit::DEFAULT_DRAWS
}
fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub scenarios: Vec<Scenario>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub overrides: SelectionOverrides,
}

impl StudyConfig {
    pub fn new(scenarios: Vec<Scenario>) -> Self {
        Self {
            scenarios,
            replications: default_replications(),
            draws: default_draws(),
            alpha: default_alpha(),
            seed: 0,
            workers: None,
            overrides: SelectionOverrides::default(),
        }
    }

    /// Smaller budget for continuous integration: 200 replications, 500 draws.
    pub fn quick(scenarios: Vec<Scenario>) -> Self {
        Self { replications: 200, draws: 500, ..Self::new(scenarios) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(Error::InvalidParameter("study has no scenarios".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidParameter("workers must be at least 1".into()));
        }
        for s in &self.scenarios {
            s.dist.validate()?;
            self.test_config(s, 0).validate()?;
        }
        Ok(())
    }

    fn test_config(&self, s: &Scenario, seed: u64) -> TestConfig {
        TestConfig {
            k: s.k,
            method: s.test,
            alpha: self.alpha,
            draws: self.draws,
            seed,
            overrides: self.overrides,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub dist: String,
    pub n: u64,
    pub k: usize,
    pub test: TestMethod,
    pub replications: usize,
    pub rejections: usize,
    /// Replications that raised an error; excluded from the percentage.
    pub failures: usize,
    pub percentage: f64,
    /// Binomial Monte Carlo standard error, in percentage points.
    pub std_error: f64,
    pub wall_time_secs: f64,
    /// First error message, if any replication failed.
    pub first_error: Option<String>,
}

/// Seed of replication `r`: data come from its data stream and calibration
/// draws from its calibration stream.
pub fn replication_seed(base: u64, r: usize) -> u64 {
    base.wrapping_add(r as u64)
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Draws `n` observations for replication seed `seed`.
pub fn replicate_sample(sampler: &Sampler, n: u64, seed: u64) -> Result<CountSample> {
    sampler.sample(n, &mut rng_for(seed, DATA_STREAM))
}

fn run_scenario(cfg: &StudyConfig, s: &Scenario) -> Result<StudyRow> {
    let start = Instant::now();
    let sampler = Sampler::new(&s.dist)?;
    let outcomes: Vec<Result<bool>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let seed = replication_seed(cfg.seed, r);
            let data = replicate_sample(&sampler, s.n, seed)?;
            Ok(run_test(&data, &cfg.test_config(s, seed))?.reject)
        })
        .collect();
    let rejections = outcomes.iter().filter(|o| matches!(o, Ok(true))).count();
    let first_error = outcomes.iter().find_map(|o| o.as_ref().err().map(|e| e.to_string()));
    let failures = outcomes.iter().filter(|o| o.is_err()).count();
    let done = cfg.replications - failures;
    let frac = if done == 0 { 0.0 } else { rejections as f64 / done as f64 };
    let se = if done == 0 { 0.0 } else { (frac * (1.0 - frac) / done as f64).sqrt() };
    Ok(StudyRow {
        dist: s.dist.to_string(),
        n: s.n,
        k: s.k,
        test: s.test,
        replications: cfg.replications,
        rejections,
        failures,
        percentage: 100.0 * frac,
        std_error: 100.0 * se,
        wall_time_secs: start.elapsed().as_secs_f64(),
        first_error,
    })
}

/// Rejection percentages for every scenario. Replications run in parallel;
/// the table does not depend on the number of workers except for wall times.
pub fn run_study(cfg: &StudyConfig) -> Result<Vec<StudyRow>> {
    cfg.validate()?;
    with_workers(cfg.workers, || cfg.scenarios.iter().map(|s| run_scenario(cfg, s)).collect())?
}

/// Draws of the finite-sample statistic of `cfg` over `replications`
/// samples of size `n` (calibration is skipped).
pub fn statistic_draws(
    dist: &DistributionSpec,
    n: u64,
    cfg: &TestConfig,
    replications: usize,
    seed: u64,
) -> Result<DrawSet> {
    cfg.validate()?;
    let sampler = Sampler::new(dist)?;
    let draws: Result<Vec<f64>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let data = replicate_sample(&sampler, n, replication_seed(seed, r))?;
            statistic(&EmpiricalPmf::from_sample(&data), cfg)
        })
        .collect();
    DrawSet::new(draws?, seed, LimitLaw::Empirical)
}

/// Bootstrap draws of `√n (min_j ∇^k p̂*(j) - min_j ∇^k p̂(j))`, with `p̂*` the
/// empirical p.m.f. of an i.i.d. resample of size `n` from `p̂`, evaluated on
/// the support of the original sample.
pub fn bootstrap_min_distribution(sample: &CountSample, k: usize, b_boot: usize, seed: u64) -> Result<DrawSet> {
    if b_boot == 0 {
        return Err(Error::InvalidParameter("bootstrap needs at least one draw".into()));
    }
    let p_hat = EmpiricalPmf::from_sample(sample);
    p_hat.diff_support(k)?;
    let rho = p_hat.rho(k)?;
    let n = sample.n();
    let sampler = Sampler::from_pmf(&p_hat);
    let mut rng = rng_for(seed, BOOTSTRAP_STREAM);
    let mut draws = Vec::with_capacity(b_boot);
    let mut counts = vec![0u64; p_hat.len()];
    for _ in 0..b_boot {
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..n {
            counts[(sampler.draw(&mut rng) - p_hat.support_min()) as usize] += 1;
        }
        let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        let rho_star = forward_difference(&probs, k)?.into_iter().fold(f64::INFINITY, f64::min);
        draws.push((n as f64).sqrt() * (rho_star - rho));
    }
    DrawSet::new(draws, seed, LimitLaw::Bootstrap)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryPoint {
    pub n: u64,
    pub replications: usize,
    pub recovered: usize,
    pub frequency: f64,
    pub std_error: f64,
}

/// Frequency with which Method 3 (defaults, with its fallback chain) returns
/// exactly the true set `I = argmin_j ∇^k p(j)`, for each sample size.
pub fn knot_consistency_curve(
    dist: &DistributionSpec,
    k: usize,
    n_grid: &[u64],
    replications: usize,
    seed: u64,
) -> Result<Vec<RecoveryPoint>> {
    if replications == 0 {
        return Err(Error::InvalidParameter("replications must be at least 1".into()));
    }
    let truth = dist.pmf()?.argmin_set(k, ARGMIN_TOL)?.values();
    let sampler = Sampler::new(dist)?;
    n_grid
        .iter()
        .map(|&n| {
            let hits: Result<Vec<bool>> = (0..replications)
                .into_par_iter()
                .map(|r| {
                    let data = replicate_sample(&sampler, n, replication_seed(seed, r))?;
                    let p_hat = EmpiricalPmf::from_sample(&data);
                    if p_hat.diff_support(k).is_err() {
                        return Ok(false);
                    }
                    let out = select(&p_hat, k, Method::M3, &SelectionOverrides::default())?;
                    Ok(out.selected.values() == truth)
                })
                .collect();
            let recovered = hits?.into_iter().filter(|h| *h).count();
            let frequency = recovered as f64 / replications as f64;
            Ok(RecoveryPoint {
                n,
                replications,
                recovered,
                frequency,
                std_error: (frequency * (1.0 - frequency) / replications as f64).sqrt(),
            })
        })
        .collect()
}
