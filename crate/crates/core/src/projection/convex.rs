use nalgebra::{DMatrix, DVector};

use super::{knots_of, l2_distance, ProjectionResult, KNOT_TOL};
use crate::error::{Error, Result};
use crate::pmf::forward_difference;

const CHAR_TOL: f64 = 1e-10;
const STOP_TOL: f64 = 1e-13;
const PMF_SUM_TOL: f64 = 1e-9;

/// `H_q(j) = Σ_{i < j} F_q(i)` with `F_q(i) = Σ_{l ≤ i} q_l`, for `j = 0..len`.
pub fn h_transform(q: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(q.len());
    let (mut f, mut h) = (0.0, 0.0);
    for &x in q {
        out.push(h);
        f += x;
        h += f;
    }
    out
}

fn is_convex(v: &[f64], tol: f64) -> bool {
    v.len() < 3 || forward_difference(v, 2).unwrap().iter().all(|&d| d >= -tol)
}

/// Checks that `q` is convex and that `H_q ≥ H_v` everywhere, with equality
/// at the kinks of `q` and at both end points.
pub fn check_convex_lse_characterization(q: &[f64], v: &[f64]) -> bool {
    if q.len() != v.len() {
        return false;
    }
    if q.is_empty() || !is_convex(q, CHAR_TOL) {
        return false;
    }
    let hq = h_transform(q);
    let hv = h_transform(v);
    let last = q.len() - 1;
    if hq.iter().zip(&hv).any(|(a, b)| a < &(b - CHAR_TOL)) {
        return false;
    }
    if (hq[last] - hv[last]).abs() > CHAR_TOL {
        return false;
    }
    if q.len() >= 3 {
        let curv = forward_difference(q, 2).unwrap();
        for (i, &c) in curv.iter().enumerate() {
            // ∇²q(j-1) > 0 makes j a kink of q.
            let j = i + 1;
            if c > KNOT_TOL && (hq[j] - hv[j]).abs() > CHAR_TOL {
                return false;
            }
        }
    }
    true
}

/// Least squares fit of `v` on `{1, l} ∪ {(j - l)_+ : j ∈ support}`.
/// Returns the coefficients in that column order.
fn hinge_fit(v: &[f64], support: &[usize]) -> DVector<f64> {
    let len = v.len();
    let cols = 2 + support.len();
    let x = DMatrix::from_fn(len, cols, |l, c| match c {
        0 => 1.0,
        1 => l as f64,
        _ => (support[c - 2] as f64 - l as f64).max(0.0),
    });
    let b = DVector::from_column_slice(v);
    // Hinges at distinct interior points are linearly independent of {1, l}.
    let xtx = x.transpose() * &x;
    let xtb = x.transpose() * b;
    match xtx.clone().cholesky() {
        Some(ch) => ch.solve(&xtb),
        None => xtx.svd(true, true).solve(&xtb, 1e-14).expect("svd solve"),
    }
}

fn hinge_eval(len: usize, support: &[usize], beta: &DVector<f64>) -> Vec<f64> {
    (0..len)
        .map(|l| {
            let mut y = beta[0] + beta[1] * l as f64;
            for (s, &j) in support.iter().enumerate() {
                y += beta[2 + s] * (j as f64 - l as f64).max(0.0);
            }
            y
        })
        .collect()
}

/// Convex least squares estimator of a probability vector.
///
/// Support reduction over left hinges `(j - l)_+`: start from the straight
/// line fit, repeatedly add the hinge with the most negative directional
/// derivative `H_q(j) - H_v(j)`, and whenever the unconstrained refit gives a
/// hinge a negative weight, step back along the segment to the first zero
/// crossing and drop that hinge. Stops once the characterization holds.
pub fn convex_lse(v: &[f64]) -> Result<ProjectionResult> {
    if v.len() < 3 {
        return Err(Error::SupportTooShort { k: 2, points: v.len() });
    }
    if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidPmf("negative or non-finite entry".into()));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > PMF_SUM_TOL {
        return Err(Error::InvalidPmf(format!("entries sum to {total}")));
    }
    if is_convex(v, 0.0) {
        return Ok(ProjectionResult { fitted: v.to_vec(), objective: 0.0, knots: knots_of(v, 2) });
    }

    let len = v.len();
    let last = len - 1;
    let hv = h_transform(v);
    let max_iter = 10 * last;

    let mut support: Vec<usize> = Vec::new();
    let mut beta = hinge_fit(v, &support);
    let mut q = hinge_eval(len, &support, &beta);

    for _ in 0..max_iter {
        let hq = h_transform(&q);
        let candidate = (1..last)
            .filter(|j| !support.contains(j))
            .map(|j| (j, hq[j] - hv[j]))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let Some((new_j, deriv)) = candidate else { return Ok(finish(v, q)) };
        if deriv >= -STOP_TOL {
            return Ok(finish(v, q));
        }

        support.push(new_j);
        support.sort_unstable();
        let mut current = DVector::zeros(2 + support.len());
        for (s, &j) in support.iter().enumerate() {
            let old = support_position(&support, j, new_j);
            current[2 + s] = old.map_or(0.0, |o| beta[2 + o]);
        }
        current[0] = beta[0];
        current[1] = beta[1];

        loop {
            let proposal = hinge_fit(v, &support);
            let negative: Vec<usize> =
                (0..support.len()).filter(|&s| proposal[2 + s] < 0.0).collect();
            if negative.is_empty() {
                beta = proposal;
                break;
            }
            // Largest step from `current` toward `proposal` keeping weights >= 0.
            let mut t = 1.0;
            let mut hit = negative[0];
            for &s in &negative {
                let (a, b) = (current[2 + s], proposal[2 + s]);
                let ts = a / (a - b);
                if ts < t {
                    t = ts;
                    hit = s;
                }
            }
            let moved = &current + (&proposal - &current) * t;
            let keep: Vec<usize> = (0..support.len())
                .filter(|&s| s != hit && moved[2 + s] > 1e-15)
                .collect();
            let mut next = DVector::zeros(2 + keep.len());
            next[0] = moved[0];
            next[1] = moved[1];
            for (i, &s) in keep.iter().enumerate() {
                next[2 + i] = moved[2 + s];
            }
            support = keep.iter().map(|&s| support[s]).collect();
            current = next;
        }
        q = hinge_eval(len, &support, &beta);
    }
    Err(Error::SupportReductionDiverged(max_iter))
}

/// Position of `j` in the support before `new_j` was inserted.
fn support_position(support: &[usize], j: usize, new_j: usize) -> Option<usize> {
    if j == new_j {
        return None;
    }
    let idx = support.iter().position(|&x| x == j).unwrap();
    let new_idx = support.iter().position(|&x| x == new_j).unwrap();
    Some(if idx > new_idx { idx - 1 } else { idx })
}

fn finish(v: &[f64], fitted: Vec<f64>) -> ProjectionResult {
    let objective = l2_distance(&fitted, v);
    let knots = knots_of(&fitted, 2);
    ProjectionResult { fitted, objective, knots }
}

/// ℓ₂ projection onto convex sequences (no sum constraint).
pub fn project_convex_block(v: &[f64]) -> Result<Vec<f64>> {
    let all: Vec<usize> = (0..v.len().saturating_sub(2)).collect();
    project_convex_partial(v, &all)
}

/// ℓ₂ projection onto `{q : ∇²q(i) ≥ 0 for i ∈ constraints}` by a primal
/// active-set method started from the feasible point `q = 0`.
///
/// Points not touched by any constraint are returned unchanged.
pub fn project_convex_partial(v: &[f64], constraints: &[usize]) -> Result<Vec<f64>> {
    let n = v.len();
    if constraints.iter().any(|&i| i + 2 >= n) {
        return Err(Error::InvalidPartition(format!(
            "curvature constraint outside a vector of length {n}"
        )));
    }
    if constraints.is_empty() || is_convex_at(v, constraints, 0.0) {
        return Ok(v.to_vec());
    }
    let m = constraints.len();
    let row = |c: usize, x: &[f64]| {
        let i = constraints[c];
        x[i] - 2.0 * x[i + 1] + x[i + 2]
    };

    let mut q = vec![0.0; n];
    let mut working: Vec<usize> = (0..m).collect();
    let max_iter = 50 * (m + 1);
    for _ in 0..max_iter {
        let (target, lambda) = equality_projection(v, constraints, &working);
        let step: Vec<f64> = target.iter().zip(&q).map(|(t, x)| t - x).collect();
        let step_norm = step.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let scale = v.iter().map(|x| x.abs()).fold(1e-300, f64::max);
        if step_norm <= 1e-14 * scale {
            q = target;
            match lambda
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .filter(|(_, &l)| l < -1e-14 * scale)
            {
                None => return Ok(q),
                Some((w, _)) => {
                    working.remove(w);
                }
            }
            continue;
        }
        let mut alpha = 1.0;
        let mut blocking = None;
        for c in (0..m).filter(|c| !working.contains(c)) {
            let ap = row(c, &step);
            if ap < 0.0 {
                let a = -row(c, &q) / ap;
                if a < alpha {
                    alpha = a.max(0.0);
                    blocking = Some(c);
                }
            }
        }
        for (x, s) in q.iter_mut().zip(&step) {
            *x += alpha * s;
        }
        if let Some(c) = blocking {
            working.push(c);
            working.sort_unstable();
        }
    }
    Err(Error::ActiveSetDiverged(max_iter))
}

fn is_convex_at(v: &[f64], constraints: &[usize], tol: f64) -> bool {
    constraints.iter().all(|&i| v[i] - 2.0 * v[i + 1] + v[i + 2] >= -tol)
}

/// Solves `min ‖q - v‖²` subject to `∇²q(i) = 0` for the working constraints.
/// Returns `q` and the multipliers `λ` with `q - v = A_Wᵀ λ`.
fn equality_projection(v: &[f64], constraints: &[usize], working: &[usize]) -> (Vec<f64>, Vec<f64>) {
    if working.is_empty() {
        return (v.to_vec(), Vec::new());
    }
    let n = v.len();
    let w = working.len();
    let a = DMatrix::from_fn(w, n, |r, c| {
        let i = constraints[working[r]];
        match c.checked_sub(i) {
            Some(0) | Some(2) => 1.0,
            Some(1) => -2.0,
            _ => 0.0,
        }
    });
    let vv = DVector::from_column_slice(v);
    let rhs = -(&a * &vv);
    let gram = &a * a.transpose();
    let lambda = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram.svd(true, true).solve(&rhs, 1e-14).expect("svd solve"),
    };
    let q = vv + a.transpose() * &lambda;
    (q.iter().copied().collect(), lambda.iter().copied().collect())
}
