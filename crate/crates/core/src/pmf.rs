//! Empirical probability mass functions on a contiguous integer support and
//! the signed forward-difference operator `∇^k p(j) = (-1)^k Δ^k p(j)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when collecting the indices that attain `ρ_k`.
pub const ARGMIN_TOL: f64 = 1e-12;

const SUM_TOL: f64 = 1e-12;

/// Raw count data, stored as a frequency table over the tight support
/// `{min, ..., max}` of the observations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountSample {
    support_min: u64,
    counts: Vec<u64>,
    n: u64,
}

impl CountSample {
    pub fn from_values(values: &[u64]) -> Result<Self> {
        Self::from_frequencies(values.iter().map(|&v| (v, 1)))
    }

    /// Builds a sample from `(value, count)` pairs. Repeated values accumulate
    /// and zero counts are allowed as long as some count is positive.
    pub fn from_frequencies<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, u64)>,
    {
        let pairs: Vec<(u64, u64)> = pairs.into_iter().filter(|&(_, c)| c > 0).collect();
        let lo = pairs.iter().map(|&(v, _)| v).min().ok_or(Error::EmptySample)?;
        let hi = pairs.iter().map(|&(v, _)| v).max().ok_or(Error::EmptySample)?;
        let len = usize::try_from(hi - lo + 1)
            .map_err(|_| Error::InvalidParameter("support too wide".into()))?;
        let mut counts = vec![0u64; len];
        let mut n = 0u64;
        for (v, c) in pairs {
            counts[(v - lo) as usize] += c;
            n += c;
        }
        Ok(Self { support_min: lo, counts, n })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn support_min(&self) -> u64 {
        self.support_min
    }

    pub fn support_max(&self) -> u64 {
        self.support_min + self.counts.len() as u64 - 1
    }

    /// Counts for `support_min..=support_max`; interior zeros included.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, value: u64) -> u64 {
        value
            .checked_sub(self.support_min)
            .and_then(|i| self.counts.get(i as usize))
            .copied()
            .unwrap_or(0)
    }

    /// Expands the frequency table back into sorted observations.
    pub fn values(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.n as usize);
        for (i, &c) in self.counts.iter().enumerate() {
            out.extend(std::iter::repeat_n(self.support_min + i as u64, c as usize));
        }
        out
    }
}

/// A probability vector on `{m, ..., M}` with strictly positive end points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalPmf {
    support_min: u64,
    probs: Vec<f64>,
    /// Sample size when built from data.
    n: Option<u64>,
}

pub fn build_empirical_pmf(sample: &CountSample) -> EmpiricalPmf {
    EmpiricalPmf::from_sample(sample)
}

impl EmpiricalPmf {
    pub fn from_sample(sample: &CountSample) -> Self {
        let n = sample.n() as f64;
        Self {
            support_min: sample.support_min(),
            probs: sample.counts().iter().map(|&c| c as f64 / n).collect(),
            n: Some(sample.n()),
        }
    }

    /// Wraps an exact probability vector starting at `support_min`. Leading and
    /// trailing zeros are trimmed so the support is tight.
    pub fn from_probs(support_min: u64, probs: &[f64]) -> Result<Self> {
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0) {
            return Err(Error::InvalidPmf(format!("entry {bad} outside [0, 1]")));
        }
        let first = probs
            .iter()
            .position(|&p| p > 0.0)
            .ok_or_else(|| Error::InvalidPmf("no positive mass".into()))?;
        let last = probs.iter().rposition(|&p| p > 0.0).unwrap();
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidPmf(format!("entries sum to {total}")));
        }
        Ok(Self {
            support_min: support_min + first as u64,
            probs: probs[first..=last].to_vec(),
            n: None,
        })
    }

    pub fn support_min(&self) -> u64 {
        self.support_min
    }

    pub fn support_max(&self) -> u64 {
        self.support_min + self.probs.len() as u64 - 1
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n(&self) -> Option<u64> {
        self.n
    }

    /// `p(j)` at an absolute support value; zero outside the support.
    pub fn prob(&self, j: u64) -> f64 {
        j.checked_sub(self.support_min)
            .and_then(|i| self.probs.get(i as usize))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn diff_support(&self, k: usize) -> Result<DiffSupport> {
        DiffSupport::new(self.support_min, self.probs.len(), k)
    }

    pub fn forward_difference(&self, k: usize) -> Result<Vec<f64>> {
        forward_difference(&self.probs, k)
    }

    pub fn rho(&self, k: usize) -> Result<f64> {
        rho_k(self, k)
    }

    pub fn argmin_set(&self, k: usize, tol: f64) -> Result<IndexSet> {
        argmin_set(self, k, tol)
    }
}

/// `S_k = {m, ..., M - k}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffSupport {
    pub k: usize,
    pub start: u64,
    len: usize,
}

impl DiffSupport {
    pub fn new(support_min: u64, support_len: usize, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("degree k must be positive".into()));
        }
        if support_len <= k {
            return Err(Error::SupportTooShort { k, points: support_len });
        }
        Ok(Self { k, start: support_min, len: support_len - k })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn end(&self) -> u64 {
        self.start + self.len as u64 - 1
    }

    pub fn full(&self) -> IndexSet {
        IndexSet::from_offsets(self.start, 0..self.len)
    }
}

/// A subset of a difference support, stored as sorted offsets from the
/// support minimum `origin`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSet {
    origin: u64,
    offsets: Vec<usize>,
}

impl IndexSet {
    pub fn empty(origin: u64) -> Self {
        Self { origin, offsets: Vec::new() }
    }

    pub fn from_offsets<I: IntoIterator<Item = usize>>(origin: u64, offsets: I) -> Self {
        let mut offsets: Vec<usize> = offsets.into_iter().collect();
        offsets.sort_unstable();
        offsets.dedup();
        Self { origin, offsets }
    }

    /// Absolute support values; values below `origin` are ignored.
    pub fn from_values<I: IntoIterator<Item = u64>>(origin: u64, values: I) -> Self {
        Self::from_offsets(
            origin,
            values.into_iter().filter(|&v| v >= origin).map(|v| (v - origin) as usize),
        )
    }

    pub fn origin(&self) -> u64 {
        self.origin
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn values(&self) -> Vec<u64> {
        self.offsets.iter().map(|&o| self.origin + o as u64).collect()
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn contains_offset(&self, offset: usize) -> bool {
        self.offsets.binary_search(&offset).is_ok()
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.origin == other.origin && self.offsets.iter().all(|&o| other.contains_offset(o))
    }

    /// `support \ self`.
    pub fn complement_in(&self, support: &DiffSupport) -> IndexSet {
        IndexSet::from_offsets(
            self.origin,
            (0..support.len()).filter(|&o| !self.contains_offset(o)),
        )
    }
}

/// `C(n, r)` as a float; exact for the small degrees used here.
pub(crate) fn binomial(n: usize, r: usize) -> f64 {
    if r > n {
        return 0.0;
    }
    let r = r.min(n - r);
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Signed `k`-th forward differences
/// `∇^k v(j) = Σ_{i=0}^{k} (-1)^i C(k,i) v(j+i)` for every `j` with `j + k`
/// inside the vector.
pub fn forward_difference(values: &[f64], k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidParameter("degree k must be positive".into()));
    }
    if values.len() <= k {
        return Err(Error::SupportTooShort { k, points: values.len() });
    }
    let coeffs: Vec<f64> = (0..=k)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(k, i)
        })
        .collect();
    Ok(values
        .windows(k + 1)
        .map(|w| w.iter().zip(&coeffs).map(|(v, c)| v * c).sum())
        .collect())
}

/// `ρ_k = min_{j ∈ S_k} ∇^k p(j)`.
pub fn rho_k(p: &EmpiricalPmf, k: usize) -> Result<f64> {
    let d = p.forward_difference(k)?;
    Ok(d.into_iter().fold(f64::INFINITY, f64::min))
}

/// Indices of `S_k` whose difference is within `tol` of `ρ_k`.
pub fn argmin_set(p: &EmpiricalPmf, k: usize, tol: f64) -> Result<IndexSet> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} must be >= 0")));
    }
    let d = p.forward_difference(k)?;
    let rho = d.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(IndexSet::from_offsets(
        p.support_min(),
        d.iter().enumerate().filter(|(_, &v)| (v - rho).abs() <= tol).map(|(i, _)| i),
    ))
}
