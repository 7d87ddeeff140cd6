//! Geometric 1-median by Weiszfeld iteration with the Vardi-Zhang
//! correction at data points.

use crate::dataset::{euclidean, PointSet};
use crate::error::{invalid, Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct MedianResult {
    pub point: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    /// Cost of every iterate, starting with the coordinate-wise mean.
    pub cost_history: Vec<f64>,
}

/// `sum_p ||c - p||`.
pub fn median_cost(ps: &PointSet, c: &[f64]) -> Result<f64> {
    if c.len() != ps.dim() {
        return Err(Error::DimensionMismatch {
            expected: ps.dim(),
            got: c.len(),
        });
    }
    if c.iter().any(|x| !x.is_finite()) {
        return Err(invalid("candidate center must be finite"));
    }
    Ok(cost(ps, c))
}

fn cost(ps: &PointSet, c: &[f64]) -> f64 {
    ps.rows().map(|p| euclidean(p, c)).sum()
}

/// Sum of unit vectors from `y` towards every point farther than `tol`,
/// plus the number of points within `tol` of `y`.
fn pull(ps: &PointSet, y: &[f64], tol: f64) -> (Vec<f64>, usize) {
    let mut r = vec![0.0; y.len()];
    let mut coincident = 0;
    for p in ps.rows() {
        let d = euclidean(p, y);
        if d <= tol {
            coincident += 1;
            continue;
        }
        for (ri, (pi, yi)) in r.iter_mut().zip(p.iter().zip(y)) {
            *ri += (pi - yi) / d;
        }
    }
    (r, coincident)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Weiszfeld iteration from the coordinate-wise mean.
///
/// A data point `x` with multiplicity `m` is optimal iff the pull of the
/// other points satisfies `||R(x)|| <= m`; that test runs on every data
/// point first, so optima at data points are returned exactly. Iterates
/// that land within `tol` of a data point take the Vardi-Zhang step
/// `(1 - g) T(y) + g y` with `g = min(1, m / ||R(y)||)`.
pub fn geometric_median(ps: &PointSet, tol: f64, max_iter: usize) -> Result<MedianResult> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let d = ps.dim();
    let n = ps.n() as f64;

    for i in 0..ps.n() {
        let x = ps.row(i);
        let (r, m) = pull(ps, x, 0.0);
        if norm(&r) <= m as f64 {
            let c = cost(ps, x);
            return Ok(MedianResult {
                point: x.to_vec(),
                cost: c,
                iterations: 0,
                cost_history: vec![c],
            });
        }
    }

    let mut y = vec![0.0; d];
    for p in ps.rows() {
        for (yi, pi) in y.iter_mut().zip(p) {
            *yi += pi / n;
        }
    }
    let mut history = vec![cost(ps, &y)];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut num = vec![0.0; d];
        let mut den = 0.0;
        let mut coincident = 0usize;
        for p in ps.rows() {
            let dist = euclidean(p, &y);
            if dist <= tol {
                coincident += 1;
                continue;
            }
            den += 1.0 / dist;
            for (ni, pi) in num.iter_mut().zip(p) {
                *ni += pi / dist;
            }
        }
        if den == 0.0 {
            break;
        }
        let target: Vec<f64> = num.iter().map(|v| v / den).collect();
        let next = if coincident == 0 {
            target
        } else {
            let (r, _) = pull(ps, &y, tol);
            let rn = norm(&r);
            if rn <= coincident as f64 {
                break;
            }
            let g = coincident as f64 / rn;
            target
                .iter()
                .zip(&y)
                .map(|(t, yi)| (1.0 - g) * t + g * yi)
                .collect()
        };
        let step = euclidean(&next, &y);
        y = next;
        history.push(cost(ps, &y));
        if step < tol {
            break;
        }
    }
    Ok(MedianResult {
        cost: *history.last().unwrap(),
        point: y,
        iterations,
        cost_history: history,
    })
}
