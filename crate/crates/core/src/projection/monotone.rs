use super::{knots_of, l2_distance, ProjectionResult};

/// Points `(j, Σ_{i ≤ j} v_i)` for `j = -1, 0, ..., len - 1`, anchored at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CumSumDiagram {
    pub points: Vec<(f64, f64)>,
}

impl CumSumDiagram {
    pub fn new(v: &[f64]) -> Self {
        let mut points = Vec::with_capacity(v.len() + 1);
        points.push((-1.0, 0.0));
        let mut acc = 0.0;
        for (j, x) in v.iter().enumerate() {
            acc += x;
            points.push((j as f64, acc));
        }
        Self { points }
    }

    /// Vertices of the least concave majorant (upper hull), left to right.
    pub fn least_concave_majorant(&self) -> Vec<(f64, f64)> {
        let mut hull: Vec<(f64, f64)> = Vec::with_capacity(self.points.len());
        for &p in &self.points {
            while hull.len() >= 2 {
                let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                // Drop b unless it lies strictly above the chord a-p.
                let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
                if cross >= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull
    }
}

/// Left slopes of the least concave majorant of the cumulative sum diagram.
pub fn lcm_left_slopes(v: &[f64]) -> Vec<f64> {
    let hull = CumSumDiagram::new(v).least_concave_majorant();
    let mut out = Vec::with_capacity(v.len());
    for seg in hull.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let slope = (b.1 - a.1) / (b.0 - a.0);
        let width = (b.0 - a.0).round() as usize;
        out.extend(std::iter::repeat_n(slope, width));
    }
    out
}

/// ℓ₂ projection onto non-increasing sequences by pooling adjacent violators,
/// scanning left to right and merging backwards.
pub fn project_monotone_block(v: &[f64]) -> Vec<f64> {
    // (sum, count) per pooled block
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(v.len());
    for &x in v {
        blocks.push((x, 1));
        while blocks.len() >= 2 {
            let (s1, c1) = blocks[blocks.len() - 1];
            let (s0, c0) = blocks[blocks.len() - 2];
            if s1 / c1 as f64 > s0 / c0 as f64 {
                blocks.pop();
                let last = blocks.last_mut().unwrap();
                *last = (s0 + s1, c0 + c1);
            } else {
                break;
            }
        }
    }
    if blocks.len() == v.len() {
        return v.to_vec();
    }
    let mut out = Vec::with_capacity(v.len());
    for (s, c) in blocks {
        out.extend(std::iter::repeat_n(s / c as f64, c));
    }
    out
}

/// Grenander estimator: monotone projection with objective and knots.
pub fn grenander(v: &[f64]) -> ProjectionResult {
    let fitted = project_monotone_block(v);
    let objective = l2_distance(&fitted, v);
    let knots = knots_of(&fitted, 1);
    ProjectionResult { fitted, objective, knots }
}
