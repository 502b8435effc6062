//! Data-driven selection of the non-knot set `I` (the indices where `ρ_k` is
//! attained), with the fallback chain Method 3 → Method 2 → Method 1.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::covariance::null_diag_variance;
use crate::error::{Error, Result};
use crate::pmf::{EmpiricalPmf, IndexSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Whole empirical difference support (conservative).
    M1,
    /// Relative threshold `a_n / c · max ∇^k p̂`.
    M2,
    /// Gaussian multiple testing of `∇^k p(j) = 0`.
    M3,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::M1 => "m1",
            Method::M2 => "m2",
            Method::M3 => "m3",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m1" | "1" => Ok(Method::M1),
            "m2" | "2" => Ok(Method::M2),
            "m3" | "3" => Ok(Method::M3),
            _ => Err(Error::UnknownMethod(s.to_string())),
        }
    }
}

/// Optional replacements for the default tuning constants.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SelectionOverrides {
    pub gamma: Option<f64>,
    pub a_n: Option<f64>,
    pub c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    pub selected: IndexSet,
    pub requested: Method,
    /// Method whose set was finally used.
    pub method_used: Method,
    pub fell_back_m3_to_m2: bool,
    pub fell_back_m2_to_m1: bool,
}

impl SelectionOutcome {
    fn direct(selected: IndexSet, method: Method) -> Self {
        Self {
            selected,
            requested: method,
            method_used: method,
            fell_back_m3_to_m2: false,
            fell_back_m2_to_m1: false,
        }
    }

    pub fn fell_back(&self) -> bool {
        self.fell_back_m3_to_m2 || self.fell_back_m2_to_m1
    }
}

/// Standard Gaussian quantile `z_β`.
pub fn normal_quantile(beta: f64) -> f64 {
    Normal::standard().inverse_cdf(beta)
}

fn sample_size(p_hat: &EmpiricalPmf) -> Result<u64> {
    p_hat
        .n()
        .ok_or_else(|| Error::InvalidParameter("sample size unknown for this p.m.f.".into()))
}

/// `a_n = n^{-1/|Ŝ_{k,n}|}`.
pub fn default_a_n(n: u64, support_len: usize) -> f64 {
    (n as f64).powf(-1.0 / support_len as f64)
}

pub fn select_method1(p_hat: &EmpiricalPmf, k: usize) -> Result<SelectionOutcome> {
    let support = p_hat.diff_support(k)?;
    Ok(SelectionOutcome::direct(support.full(), Method::M1))
}

/// Indices with `∇^k p̂(j) ≤ (a_n / c) · max_i ∇^k p̂(i)`, before any fallback.
pub fn method2_candidates(p_hat: &EmpiricalPmf, k: usize, a_n: f64, c: f64) -> Result<IndexSet> {
    if !(a_n > 0.0) || !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("need a_n > 0 and c > 0, got {a_n}, {c}")));
    }
    let d = p_hat.forward_difference(k)?;
    let max = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = a_n / c * max;
    Ok(IndexSet::from_offsets(
        p_hat.support_min(),
        d.iter().enumerate().filter(|(_, &x)| x <= threshold).map(|(i, _)| i),
    ))
}

pub fn select_method2(p_hat: &EmpiricalPmf, k: usize, a_n: f64, c: f64) -> Result<SelectionOutcome> {
    let set = method2_candidates(p_hat, k, a_n, c)?;
    if !set.is_empty() {
        return Ok(SelectionOutcome::direct(set, Method::M2));
    }
    let mut out = select_method1(p_hat, k)?;
    out.requested = Method::M2;
    out.fell_back_m2_to_m1 = true;
    Ok(out)
}

/// `Î_γ = { j : √n ∇^k p̂(j) / √(Σ̂⁰_{jj}) ≤ z_{1-γ} }` before any fallback.
/// Indices whose null variance vanishes cannot be standardized and are left out.
pub fn method3_candidates(p_hat: &EmpiricalPmf, k: usize, gamma: f64) -> Result<IndexSet> {
    if !(k == 1 || k == 2) {
        return Err(Error::UnsupportedDegree(k));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!("gamma {gamma} outside (0, 1)")));
    }
    let n = sample_size(p_hat)? as f64;
    let support = p_hat.diff_support(k)?;
    let d = p_hat.forward_difference(k)?;
    let z = normal_quantile(1.0 - gamma);
    let mut keep = Vec::new();
    for (offset, &diff) in d.iter().enumerate() {
        let j = support.start + offset as u64;
        match null_diag_variance(p_hat, j, k) {
            Ok(var) => {
                if n.sqrt() * diff / var.sqrt() <= z {
                    keep.push(offset);
                }
            }
            Err(Error::DegenerateNullVariance(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(IndexSet::from_offsets(p_hat.support_min(), keep))
}

pub fn select_method3(p_hat: &EmpiricalPmf, k: usize, gamma: f64) -> Result<SelectionOutcome> {
    let set = method3_candidates(p_hat, k, gamma)?;
    if !set.is_empty() {
        return Ok(SelectionOutcome::direct(set, Method::M3));
    }
    let n = sample_size(p_hat)?;
    let a_n = default_a_n(n, p_hat.diff_support(k)?.len());
    let mut out = select_method2(p_hat, k, a_n, 1.0)?;
    out.requested = Method::M3;
    out.fell_back_m3_to_m2 = true;
    Ok(out)
}

/// Dispatches to a method with the default tuning (`γ = 1/n`,
/// `a_n = n^{-1/|Ŝ|}`, `c = 1`) unless overridden.
pub fn select(
    p_hat: &EmpiricalPmf,
    k: usize,
    method: Method,
    overrides: &SelectionOverrides,
) -> Result<SelectionOutcome> {
    match method {
        Method::M1 => select_method1(p_hat, k),
        Method::M2 => {
            let a_n = match overrides.a_n {
                Some(a) => a,
                None => default_a_n(sample_size(p_hat)?, p_hat.diff_support(k)?.len()),
            };
            select_method2(p_hat, k, a_n, overrides.c.unwrap_or(1.0))
        }
        Method::M3 => {
            if !(k == 1 || k == 2) {
                return Err(Error::UnsupportedDegree(k));
            }
            let gamma = match overrides.gamma {
                Some(g) => g,
                None => 1.0 / sample_size(p_hat)? as f64,
            };
            select_method3(p_hat, k, gamma)
        }
    }
}
