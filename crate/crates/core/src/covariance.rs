//! Asymptotic covariance matrices of the difference vector `√n(∇^k p̂_n - ∇^k p)`
//! and of the multinomial limit `√n(p̂_n - p)`, with a positive-semidefinite
//! repaired factor for Gaussian sampling.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::pmf::{binomial, EmpiricalPmf};

const SYMMETRY_TOL: f64 = 1e-12;
/// Eigenvalues below this are a formula bug rather than roundoff.
const HARD_NEGATIVE_EIGEN: f64 = -1e-6;
const FACTOR_TOL: f64 = 1e-8;

/// Symmetric PSD matrix together with a lower-triangular `L`, `L Lᵀ ≈ entries`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    entries: DMatrix<f64>,
    factor: DMatrix<f64>,
    min_eigenvalue: f64,
}

impl CovMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let dim = entries.nrows();
        if entries.ncols() != dim {
            return Err(Error::InvalidParameter("covariance must be square".into()));
        }
        let asym = (&entries - entries.transpose()).amax();
        if asym > SYMMETRY_TOL {
            return Err(Error::InvalidParameter(format!("covariance asymmetric by {asym:e}")));
        }
        if dim == 0 {
            return Ok(Self { factor: entries.clone(), entries, min_eigenvalue: 0.0 });
        }

        let eigen = SymmetricEigen::new(entries.clone());
        let min_eigenvalue = eigen.eigenvalues.min();
        if min_eigenvalue < HARD_NEGATIVE_EIGEN {
            return Err(Error::NotPositiveSemidefinite(min_eigenvalue));
        }
        let repaired = if min_eigenvalue < 0.0 {
            let clamped = eigen.eigenvalues.map(|l| l.max(0.0));
            let v = &eigen.eigenvectors;
            v * DMatrix::from_diagonal(&clamped) * v.transpose()
        } else {
            entries.clone()
        };

        let factor = semidefinite_cholesky(&repaired);
        let err = (&factor * factor.transpose() - &entries).amax();
        if err > FACTOR_TOL {
            return Err(Error::FactorMismatch(err));
        }
        Ok(Self { entries, factor, min_eigenvalue })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// Smallest eigenvalue of the matrix before repair.
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn get(&self, r: usize, s: usize) -> f64 {
        self.entries[(r, s)]
    }
}

/// Cholesky that tolerates zero pivots: a column whose pivot vanishes is set
/// to zero, which is exact for PSD input since its sub-column then vanishes too.
fn semidefinite_cholesky(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let scale = (0..n).map(|i| a[(i, i)]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let d = a[(j, j)] - (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
        if d <= tol {
            continue;
        }
        let root = d.sqrt();
        l[(j, j)] = root;
        for i in j + 1..n {
            let s = a[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
            l[(i, j)] = s / root;
        }
    }
    l
}

fn signed_coefficients(k: usize) -> Vec<f64> {
    (0..=k)
        .map(|i| if i % 2 == 0 { binomial(k, i) } else { -binomial(k, i) })
        .collect()
}

/// Covariance of `(∇^k 1{X = j})_{j ∈ S_k}` for any degree `k`.
///
/// Products of indicators only survive where the shifted supports coincide, so
/// `E[a_r a_s] = Σ_i p(r + i) c_i c_{r+i-s}` over the overlapping taps.
pub fn covariance_general(p: &EmpiricalPmf, k: usize) -> Result<CovMatrix> {
    CovMatrix::new(general_entries(p, k)?)
}

pub(crate) fn general_entries(p: &EmpiricalPmf, k: usize) -> Result<DMatrix<f64>> {
    let support = p.diff_support(k)?;
    let probs = p.probs();
    let diffs = p.forward_difference(k)?;
    let c = signed_coefficients(k);
    let dim = support.len();
    let mut out = DMatrix::zeros(dim, dim);
    for r in 0..dim {
        for s in r..dim {
            let mut moment = 0.0;
            if s - r <= k {
                for i in (s - r)..=k {
                    moment += probs[r + i] * c[i] * c[r + i - s];
                }
            }
            let v = moment - diffs[r] * diffs[s];
            out[(r, s)] = v;
            out[(s, r)] = v;
        }
    }
    Ok(out)
}

/// Three-band closed form for `k = 1`.
pub fn covariance_monotone(p: &EmpiricalPmf) -> Result<CovMatrix> {
    let slope = p.forward_difference(1)?;
    let q = p.probs();
    let dim = slope.len();
    let mut out = DMatrix::zeros(dim, dim);
    for r in 0..dim {
        for s in r..dim {
            let v = match s - r {
                0 => q[r + 1] + q[r] - slope[r] * slope[r],
                1 => -q[r + 1] - slope[r] * slope[s],
                _ => -slope[r] * slope[s],
            };
            out[(r, s)] = v;
            out[(s, r)] = v;
        }
    }
    CovMatrix::new(out)
}

/// Five-band closed form for `k = 2`.
pub fn covariance_convex(p: &EmpiricalPmf) -> Result<CovMatrix> {
    let curv = p.forward_difference(2)?;
    let q = p.probs();
    let dim = curv.len();
    let mut out = DMatrix::zeros(dim, dim);
    for r in 0..dim {
        for s in r..dim {
            let v = match s - r {
                0 => q[r + 2] + 4.0 * q[r + 1] + q[r] - curv[r] * curv[r],
                1 => -2.0 * (q[r + 2] + q[r + 1]) - curv[r] * curv[s],
                2 => q[r + 2] - curv[r] * curv[s],
                _ => -curv[r] * curv[s],
            };
            out[(r, s)] = v;
            out[(s, r)] = v;
        }
    }
    CovMatrix::new(out)
}

/// Difference covariance for the min-statistic tests: the closed forms for
/// `k ∈ {1, 2}`, the indicator expansion otherwise.
pub fn difference_covariance(p: &EmpiricalPmf, k: usize) -> Result<CovMatrix> {
    match k {
        1 => covariance_monotone(p),
        2 => covariance_convex(p),
        _ => covariance_general(p, k),
    }
}

/// Diagonal entry at `j` evaluated under `∇^k p(j) = 0`: `2 p(j+1)` for
/// `k = 1` and `6 p(j+1)` for `k = 2`.
pub fn null_diag_variance(p_hat: &EmpiricalPmf, j: u64, k: usize) -> Result<f64> {
    let factor = match k {
        1 => 2.0,
        2 => 6.0,
        _ => return Err(Error::UnsupportedDegree(k)),
    };
    let support = p_hat.diff_support(k)?;
    if j < support.start || j > support.end() {
        return Err(Error::InvalidParameter(format!("index {j} outside S_{k}")));
    }
    let v = factor * p_hat.prob(j + 1);
    if v <= 0.0 {
        return Err(Error::DegenerateNullVariance(j));
    }
    Ok(v)
}

/// Plug-in diagonal `Σ̂_{j,j}` without the null constraint; the only
/// standardization available for `k ≥ 3`.
pub fn unconstrained_diag_variance(p_hat: &EmpiricalPmf, j: u64, k: usize) -> Result<f64> {
    let support = p_hat.diff_support(k)?;
    if j < support.start || j > support.end() {
        return Err(Error::InvalidParameter(format!("index {j} outside S_{k}")));
    }
    let r = (j - support.start) as usize;
    let c = signed_coefficients(k);
    let q = &p_hat.probs()[r..=r + k];
    let moment: f64 = q.iter().zip(&c).map(|(p, c)| p * c * c).sum();
    let d: f64 = q.iter().zip(&c).map(|(p, c)| p * c).sum();
    Ok(moment - d * d)
}

/// `Γ_{r,s} = 1{r=s} p_r - p_r p_s` on the full support.
pub fn limit_cov_multinomial(p: &EmpiricalPmf) -> Result<CovMatrix> {
    let q = p.probs();
    let dim = q.len();
    let mut out = DMatrix::from_fn(dim, dim, |r, s| -q[r] * q[s]);
    for r in 0..dim {
        out[(r, r)] += q[r];
    }
    CovMatrix::new(out)
}
