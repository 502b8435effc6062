//! Monte Carlo draws from the limit laws used for calibration:
//! `W = min_{j ∈ I} Z_j` with `Z ~ N(0, Σ)`, and the projection distances
//! `‖Gᴹ - G‖₂`, `‖Gᶜ - G‖₂` with `G ~ N(0, Γ)`.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::covariance::CovMatrix;
use crate::error::{Error, Result};
use crate::pmf::IndexSet;
use crate::projection::{project_convex_partial, project_monotone_block};
use crate::rng::{rng_for, Rng, CALIBRATION_STREAM};

/// Calibration draws per test unless configured otherwise.
pub const DEFAULT_DRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitLaw {
    MinStatistic,
    Grenander,
    Convex,
    Bootstrap,
    /// Draws of a finite-sample statistic collected by simulation.
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawSet {
    pub draws: Vec<f64>,
    pub seed: u64,
    pub law: LimitLaw,
}

impl DrawSet {
    pub fn new(draws: Vec<f64>, seed: u64, law: LimitLaw) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::InvalidParameter("a draw set needs at least one draw".into()));
        }
        if draws.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidParameter("non-finite draw".into()));
        }
        Ok(Self { draws, seed, law })
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut s = self.draws.clone();
        s.sort_by(f64::total_cmp);
        s
    }

    /// Single-column CSV with a `draw` header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "draw")?;
        for d in &self.draws {
            writeln!(out, "{d}")?;
        }
        Ok(())
    }
}

fn check_draw_count(b: usize) -> Result<()> {
    if b == 0 {
        return Err(Error::InvalidParameter("number of draws must be at least 1".into()));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} outside (0, 1)")));
    }
    Ok(())
}

/// Rank `⌈αB⌉`, clamped to `1..=B`. The small slack keeps products such as
/// `0.05 · 1000` from rounding up past an integer.
fn ceil_rank(alpha: f64, b: usize) -> usize {
    ((alpha * b as f64 - 1e-9).ceil() as usize).clamp(1, b)
}

/// Lower empirical quantile: the `⌈αB⌉`-th order statistic.
pub fn empirical_quantile(d: &DrawSet, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let sorted = d.sorted();
    Ok(sorted[ceil_rank(alpha, sorted.len()) - 1])
}

/// Critical value for a test at level `alpha` rejecting in the given tail.
///
/// Lower tail: the `⌈αB⌉`-th order statistic. Upper tail: the
/// `(B + 1 - ⌈αB⌉)`-th order statistic. With these ranks, the strict
/// comparison of the statistic against the critical value and `p < α` with
/// the [`p_value`] convention always agree.
pub fn critical_value(d: &DrawSet, alpha: f64, tail: Tail) -> Result<f64> {
    check_alpha(alpha)?;
    let sorted = d.sorted();
    let c = ceil_rank(alpha, sorted.len());
    Ok(match tail {
        Tail::Lower => sorted[c - 1],
        Tail::Upper => sorted[sorted.len() - c],
    })
}

/// Lower tail: `#(draws ≤ t) / B`; upper tail: `#(draws ≥ t) / B`.
pub fn p_value(d: &DrawSet, t: f64, tail: Tail) -> f64 {
    let hits = match tail {
        Tail::Lower => d.draws.iter().filter(|&&x| x <= t).count(),
        Tail::Upper => d.draws.iter().filter(|&&x| x >= t).count(),
    };
    hits as f64 / d.len() as f64
}

fn standard_normal_vector(dim: usize, rng: &mut Rng) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| StandardNormal.sample(rng))
}

/// `B` draws of `N(0, cov)` as the rows of a `B × d` matrix.
pub fn sample_gaussian(cov: &CovMatrix, b: usize, seed: u64) -> Result<DMatrix<f64>> {
    check_draw_count(b)?;
    let mut rng = rng_for(seed, CALIBRATION_STREAM);
    let l = cov.factor();
    let mut out = DMatrix::zeros(b, cov.dim());
    for r in 0..b {
        let z = l * standard_normal_vector(cov.dim(), &mut rng);
        out.row_mut(r).copy_from(&z.transpose());
    }
    Ok(out)
}

/// Runs `f` on `B` Gaussian vectors drawn from `cov`.
fn map_gaussian<F>(cov: &CovMatrix, b: usize, seed: u64, mut f: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    check_draw_count(b)?;
    let mut rng = rng_for(seed, CALIBRATION_STREAM);
    let l = cov.factor();
    let mut out = Vec::with_capacity(b);
    for _ in 0..b {
        let g = l * standard_normal_vector(cov.dim(), &mut rng);
        out.push(f(g.as_slice())?);
    }
    Ok(out)
}

/// Draws of `min_{j ∈ I} Z_j`. Offsets of `selected` index the rows of `cov`.
pub fn sample_min_statistic(cov: &CovMatrix, selected: &IndexSet, b: usize, seed: u64) -> Result<DrawSet> {
    if selected.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    if selected.offsets().iter().any(|&j| j >= cov.dim()) {
        return Err(Error::InvalidParameter(format!(
            "index set exceeds covariance dimension {}",
            cov.dim()
        )));
    }
    let draws = map_gaussian(cov, b, seed, |z| {
        Ok(selected.offsets().iter().map(|&j| z[j]).fold(f64::INFINITY, f64::min))
    })?;
    DrawSet::new(draws, seed, LimitLaw::MinStatistic)
}

/// Constancy blocks of a monotone p.m.f. on `len` points with knots at the
/// given offsets: each knot `j` ends a block at `j`.
pub fn monotone_blocks(len: usize, knots: &IndexSet) -> Result<Vec<std::ops::Range<usize>>> {
    if knots.offsets().iter().any(|&j| j + 1 >= len) {
        return Err(Error::InvalidPartition(format!("knot outside the first-difference range of {len} points")));
    }
    let mut blocks = Vec::with_capacity(knots.len() + 1);
    let mut start = 0;
    for &j in knots.offsets() {
        blocks.push(start..j + 1);
        start = j + 1;
    }
    blocks.push(start..len);
    Ok(blocks)
}

/// `‖Gᴹ - G‖₂` where `Gᴹ` is the blockwise monotone projection of `g`.
pub fn grenander_limit_distance(g: &[f64], blocks: &[std::ops::Range<usize>]) -> f64 {
    let mut sq = 0.0;
    for block in blocks {
        if block.len() < 2 {
            continue;
        }
        let part = &g[block.clone()];
        let proj = project_monotone_block(part);
        sq += proj.iter().zip(part).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    sq.sqrt()
}

/// Draws of `‖Gᴹ - G‖₂` with `G ~ N(0, Γ)` and `Gᴹ` projected on each
/// constancy block delimited by `knots` (offsets into the first-difference range).
pub fn sample_grenander_limit(gamma: &CovMatrix, knots: &IndexSet, b: usize, seed: u64) -> Result<DrawSet> {
    let blocks = monotone_blocks(gamma.dim(), knots)?;
    let draws = map_gaussian(gamma, b, seed, |g| Ok(grenander_limit_distance(g, &blocks)))?;
    DrawSet::new(draws, seed, LimitLaw::Grenander)
}

/// Second-difference offsets that are not knots: the curvature constraints
/// active in the convex limit.
pub fn convex_constraints(len: usize, knots: &IndexSet) -> Result<Vec<usize>> {
    if knots.offsets().iter().any(|&j| j + 2 >= len) {
        return Err(Error::InvalidPartition(format!("knot outside the second-difference range of {len} points")));
    }
    Ok((0..len.saturating_sub(2)).filter(|&j| !knots.contains_offset(j)).collect())
}

/// `‖Gᶜ - G‖₂` where `Gᶜ` projects `g` onto `{q : ∇²q(j) ≥ 0 for j ∈ constraints}`.
pub fn convex_limit_distance(g: &[f64], constraints: &[usize]) -> Result<f64> {
    if constraints.is_empty() {
        return Ok(0.0);
    }
    let proj = project_convex_partial(g, constraints)?;
    Ok(proj.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

/// Draws of `‖Gᶜ - G‖₂` with `G ~ N(0, Γ)`. `Gᶜ` is the projection onto the
/// cone of vectors convex on every linear region of the true p.m.f., i.e.
/// with `∇²q(j) ≥ 0` at each second-difference offset that is not a knot.
/// Linear regions sharing an end point are projected jointly.
pub fn sample_convex_limit(gamma: &CovMatrix, knots: &IndexSet, b: usize, seed: u64) -> Result<DrawSet> {
    let constraints = convex_constraints(gamma.dim(), knots)?;
    let draws = map_gaussian(gamma, b, seed, |g| convex_limit_distance(g, &constraints))?;
    DrawSet::new(draws, seed, LimitLaw::Convex)
}

/// Two-sample Kolmogorov–Smirnov distance `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut best: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}

/// Empirical CDF of `draws` evaluated at `x`.
pub fn ecdf(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&d| d <= x) as f64 / sorted.len() as f64
}
