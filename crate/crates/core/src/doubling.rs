//! Greedy r-nets and a covering-count estimate of the doubling dimension.

use serde::{Deserialize, Serialize};

use crate::dataset::{Distances, PointSet};
use crate::error::{invalid, Result};
use crate::spanning::Selection;

pub const MAX_SCALES: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleCount {
    pub radius: f64,
    /// Largest number of `r/2`-net points inside one `r`-ball centred at an
    /// `r`-net point.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdimEstimate {
    /// `max log2(count)` over all scales.
    pub lambda_hat: f64,
    pub per_scale: Vec<ScaleCount>,
}

fn net_with(n: usize, dist: impl Fn(usize, usize) -> f64, r: f64) -> Vec<usize> {
    let mut net: Vec<usize> = Vec::new();
    for p in 0..n {
        if net.iter().all(|&q| dist(p, q) > r) {
            net.push(p);
        }
    }
    net
}

/// Scans points in index order and keeps each one farther than `r` from
/// every point kept so far. The result is an `r`-packing and an
/// `r`-covering.
pub fn greedy_net(ps: &PointSet, r: f64) -> Result<Selection> {
    if r.is_nan() || r <= 0.0 {
        return Err(invalid(format!("net radius must be positive, got {r}")));
    }
    Ok(Selection::new(net_with(ps.n(), |a, b| ps.dist(a, b), r)))
}

/// Estimates the doubling dimension on a dyadic grid of radii anchored at
/// the diameter, down to the smallest positive pairwise distance (at most
/// [`MAX_SCALES`] scales). At each radius `r` it builds the `r`- and
/// `r/2`-nets and records the largest count of `r/2`-net points within
/// distance `r` of any `r`-net point.
pub fn estimate_ddim(ps: &PointSet) -> Result<DdimEstimate> {
    let n = ps.n();
    let dist = Distances::new(ps);
    let mut diameter = 0.0f64;
    let mut min_positive = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            let d = dist.get(i, j);
            diameter = diameter.max(d);
            if d > 0.0 {
                min_positive = min_positive.min(d);
            }
        }
    }
    if diameter == 0.0 {
        return Err(invalid(
            "doubling dimension needs at least one positive distance",
        ));
    }
    let d = |a: usize, b: usize| dist.get(a, b);
    let mut per_scale = Vec::new();
    let mut r = diameter;
    while r >= min_positive && per_scale.len() < MAX_SCALES {
        let coarse = net_with(n, d, r);
        let fine = net_with(n, d, r / 2.0);
        let count = coarse
            .iter()
            .map(|&c| fine.iter().filter(|&&f| d(c, f) <= r).count())
            .max()
            .unwrap_or(1);
        per_scale.push(ScaleCount { radius: r, count });
        r /= 2.0;
    }
    let lambda_hat = per_scale
        .iter()
        .map(|s| (s.count as f64).log2())
        .fold(0.0, f64::max);
    Ok(DdimEstimate {
        lambda_hat,
        per_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{basis, cumsum, gaussian_blob};

    #[test]
    fn net_examples() {
        let ps = gaussian_blob(20, 3, 1.0, 1).unwrap();
        assert_eq!(greedy_net(&ps, ps.diameter()).unwrap().indices(), &[0]);
        assert_eq!(greedy_net(&basis(4).unwrap(), 1.0).unwrap().len(), 4);
        let line = PointSet::from_values(&[0.0, 0.4, 1.0]).unwrap();
        assert_eq!(greedy_net(&line, 0.5).unwrap().indices(), &[0, 2]);
        assert!(greedy_net(&line, 0.0).is_err());
        assert!(greedy_net(&line, f64::NAN).is_err());
    }

    #[test]
    fn nets_pack_and_cover() {
        for seed in 0..6 {
            let ps = gaussian_blob(64 + 80 * seed as usize, 3, 1.0, seed).unwrap();
            let mut last = 0;
            for r in [0.125, 0.25, 0.5, 1.0, 2.0] {
                let net = greedy_net(&ps, r).unwrap();
                let idx = net.indices();
                for (a, &p) in idx.iter().enumerate() {
                    for &q in &idx[a + 1..] {
                        assert!(ps.dist(p, q) > r);
                    }
                }
                for p in 0..ps.n() {
                    assert!(idx.iter().any(|&q| ps.dist(p, q) <= r));
                }
                if r > 0.125 {
                    assert!(idx.len() <= last);
                }
                last = idx.len();
            }
        }
    }

    #[test]
    fn degenerate_input_is_rejected() {
        let ps = PointSet::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(estimate_ddim(&ps).is_err());
        assert!(estimate_ddim(&PointSet::from_values(&[2.0]).unwrap()).is_err());
    }

    #[test]
    fn basis_of_eight_has_lambda_three() {
        let e = estimate_ddim(&basis(8).unwrap()).unwrap();
        assert!((e.lambda_hat - 3.0).abs() < 1e-12);
    }

    #[test]
    fn invariants_hold() {
        for seed in 0..5 {
            let ps = gaussian_blob(50 + 30 * seed as usize, 2 + seed as usize, 1.0, seed).unwrap();
            let e = estimate_ddim(&ps).unwrap();
            assert!(e.per_scale.iter().all(|s| s.count >= 1));
            assert!(e.lambda_hat <= (ps.n() as f64).log2() + 1.0);
            assert!(e.per_scale.len() <= MAX_SCALES);
            let max = e
                .per_scale
                .iter()
                .map(|s| (s.count as f64).log2())
                .fold(0.0, f64::max);
            assert_eq!(max, e.lambda_hat);
        }
    }

    #[test]
    fn basis_and_cumsum_oracle_runs() {
        let hi = estimate_ddim(&basis(1024).unwrap()).unwrap().lambda_hat;
        let lo = estimate_ddim(&cumsum(1024).unwrap()).unwrap().lambda_hat;
        assert!(hi >= 7.0, "basis lambda {hi}");
        assert!(lo <= 4.0, "cumsum lambda {lo}");
    }
}
