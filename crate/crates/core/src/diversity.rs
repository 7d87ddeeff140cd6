//! Remote-subgraph diversity measures, subset selection under them, and
//! k-center machinery (farthest-point traversal and an exact oracle).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Distances, PointSet};
use crate::error::{invalid, Error, Result};
use crate::matching::{subset_dp_matching, EXACT_MATCHING_MAX_N};
use crate::spanning::{check_subset_budget, for_each_combination, prim, Selection};
use crate::tours::{held_karp, min_tour_heuristic, EXACT_TSP_MAX_N};
use crate::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RemoteMeasure {
    /// Smallest pairwise distance.
    Edge,
    /// Sum of all pairwise distances, each unordered pair once.
    Clique,
    /// Minimum spanning tree weight.
    Tree,
    /// Smallest distance sum from one member to all others.
    Star,
    /// Minimum TSP tour length.
    Cycle,
    /// Minimum perfect matching weight.
    Matching,
    /// Sum of each member's distance to its nearest other member.
    Pseudoforest,
}

impl RemoteMeasure {
    pub const ALL: [RemoteMeasure; 7] = [
        RemoteMeasure::Edge,
        RemoteMeasure::Clique,
        RemoteMeasure::Tree,
        RemoteMeasure::Star,
        RemoteMeasure::Cycle,
        RemoteMeasure::Matching,
        RemoteMeasure::Pseudoforest,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RemoteMeasure::Edge => "edge",
            RemoteMeasure::Clique => "clique",
            RemoteMeasure::Tree => "tree",
            RemoteMeasure::Star => "star",
            RemoteMeasure::Cycle => "cycle",
            RemoteMeasure::Matching => "matching",
            RemoteMeasure::Pseudoforest => "pseudoforest",
        }
    }

    pub fn check_arity(&self, k: usize) -> Result<()> {
        let ok = match self {
            RemoteMeasure::Cycle => k >= 3,
            RemoteMeasure::Matching => k >= 2 && k.is_multiple_of(2),
            _ => k >= 2,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!(
                "remote-{} is undefined on {k} points",
                self.name()
            )))
        }
    }

    /// Number of edges in the measure's witness subgraph on `k` points.
    pub fn edge_count(&self, k: usize) -> usize {
        match self {
            RemoteMeasure::Edge => 1,
            RemoteMeasure::Clique => k * (k - 1) / 2,
            RemoteMeasure::Tree | RemoteMeasure::Star => k - 1,
            RemoteMeasure::Cycle | RemoteMeasure::Pseudoforest => k,
            RemoteMeasure::Matching => k / 2,
        }
    }
}

impl fmt::Display for RemoteMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RemoteMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.strip_prefix("remote-").unwrap_or(s);
        RemoteMeasure::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid(format!("unknown remote measure {s:?}")))
    }
}

/// Value of a diversity measure together with the subgraph realizing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteEval {
    pub value: f64,
    /// Witness edges as point-index pairs; pseudoforest edges are directed
    /// (member, nearest other member).
    pub edges: Vec<(usize, usize)>,
    /// Set when a cycle or matching exceeded the exact cap and a heuristic
    /// minimum was used instead.
    pub approximate: bool,
}

pub fn remote_value(ps: &PointSet, s: &Selection, m: RemoteMeasure) -> Result<RemoteEval> {
    s.validate(ps.n())?;
    m.check_arity(s.len())?;
    Ok(evaluate(&|a, b| ps.dist(a, b), s.indices(), m, false))
}

/// Evaluates `m` on the points `idx`. With `relaxed`, two-point cycles
/// count the out-and-back length and odd matchings leave one point out;
/// greedy growth needs these intermediate values.
fn evaluate(
    dist: &impl Fn(usize, usize) -> f64,
    idx: &[usize],
    m: RemoteMeasure,
    relaxed: bool,
) -> RemoteEval {
    let k = idx.len();
    let w = |a: usize, b: usize| dist(idx[a], idx[b]);
    let lift =
        |edges: Vec<(usize, usize)>| edges.into_iter().map(|(a, b)| (idx[a], idx[b])).collect();
    let mut approximate = false;
    let (value, local): (f64, Vec<(usize, usize)>) = match m {
        RemoteMeasure::Edge => {
            let mut best = (f64::INFINITY, (0, 1));
            for a in 0..k {
                for b in a + 1..k {
                    if w(a, b) < best.0 {
                        best = (w(a, b), (a, b));
                    }
                }
            }
            (best.0, vec![best.1])
        }
        RemoteMeasure::Clique => {
            let mut edges = Vec::with_capacity(k * (k - 1) / 2);
            let mut total = 0.0;
            for a in 0..k {
                for b in a + 1..k {
                    total += w(a, b);
                    edges.push((a, b));
                }
            }
            (total, edges)
        }
        RemoteMeasure::Tree => {
            let (t, v) = prim(k, w, Objective::Minimize);
            (v, t.edges().to_vec())
        }
        RemoteMeasure::Star => {
            let mut best = (f64::INFINITY, 0);
            for c in 0..k {
                let s: f64 = (0..k).filter(|&q| q != c).map(|q| w(c, q)).sum();
                if s < best.0 {
                    best = (s, c);
                }
            }
            let c = best.1;
            (best.0, (0..k).filter(|&q| q != c).map(|q| (c, q)).collect())
        }
        RemoteMeasure::Cycle => {
            if k < 3 {
                debug_assert!(relaxed);
                let v = if k == 2 { 2.0 * w(0, 1) } else { 0.0 };
                (v, if k == 2 { vec![(0, 1), (1, 0)] } else { vec![] })
            } else {
                let (t, v) = if k <= EXACT_TSP_MAX_N {
                    held_karp(k, w, Objective::Minimize)
                } else {
                    approximate = true;
                    min_tour_heuristic(k, w)
                };
                (v, t.edges().collect())
            }
        }
        RemoteMeasure::Matching => {
            let odd = k % 2 == 1;
            debug_assert!(!odd || relaxed);
            if k <= EXACT_MATCHING_MAX_N {
                let (mm, v) = subset_dp_matching(k, w, Objective::Minimize, odd);
                (v, mm.pairs().to_vec())
            } else {
                approximate = true;
                greedy_min_matching(k, w)
            }
        }
        RemoteMeasure::Pseudoforest => {
            let mut total = 0.0;
            let mut edges = Vec::with_capacity(k);
            for a in 0..k {
                let mut best = (f64::INFINITY, a);
                for b in (0..k).filter(|&b| b != a) {
                    if w(a, b) < best.0 {
                        best = (w(a, b), b);
                    }
                }
                total += best.0;
                edges.push((a, best.1));
            }
            (total, edges)
        }
    };
    RemoteEval {
        value,
        edges: lift(local),
        approximate,
    }
}

/// Lightest-pair-first matching; leaves one vertex out when `k` is odd.
fn greedy_min_matching(k: usize, w: impl Fn(usize, usize) -> f64) -> (f64, Vec<(usize, usize)>) {
    let mut all = Vec::with_capacity(k * k / 2);
    for a in 0..k {
        for b in a + 1..k {
            all.push((w(a, b), a, b));
        }
    }
    all.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let mut used = vec![false; k];
    let mut edges = Vec::with_capacity(k / 2);
    let mut total = 0.0;
    for (d, a, b) in all {
        if !used[a] && !used[b] {
            used[a] = true;
            used[b] = true;
            edges.push((a, b));
            total += d;
        }
    }
    (total, edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RemoteMode {
    Exact,
    Greedy,
    Gmm,
}

/// Chooses `k` points to maximize a diversity measure.
///
/// * `Exact` enumerates all `k`-subsets; ties go to the lexicographically
///   smallest subset.
/// * `Greedy` starts from the smaller-index endpoint of the diameter pair
///   and repeatedly adds the point that maximizes the measure of the grown
///   set, smallest index on ties. The farthest-point traversal set is
///   scored too and returned instead when strictly better, so greedy never
///   trails `Gmm`.
/// * `Gmm` returns the first `k` farthest-point traversal picks from index 0,
///   whatever the measure.
pub fn remote_select(
    ps: &PointSet,
    k: usize,
    m: RemoteMeasure,
    mode: RemoteMode,
) -> Result<(Selection, f64)> {
    let n = ps.n();
    if k > n {
        return Err(invalid(format!("cannot select {k} of {n} points")));
    }
    m.check_arity(k)?;
    let table = Distances::new(ps);
    let dist = |a: usize, b: usize| table.get(a, b);
    match mode {
        RemoteMode::Exact => {
            check_subset_budget(n, k)?;
            let cap = match m {
                RemoteMeasure::Cycle => EXACT_TSP_MAX_N,
                RemoteMeasure::Matching => EXACT_MATCHING_MAX_N,
                _ => usize::MAX,
            };
            if k > cap {
                return Err(Error::BudgetExceeded(format!(
                    "exact remote-{m} evaluation supports at most {cap} points, got {k}"
                )));
            }
            let mut best: Option<(Vec<usize>, f64)> = None;
            for_each_combination(n, k, |c| {
                let v = evaluate(&dist, c, m, false).value;
                if best.as_ref().is_none_or(|(_, b)| v > *b) {
                    best = Some((c.to_vec(), v));
                }
            });
            let (idx, v) = best.expect("k <= n");
            Ok((Selection::new(idx), v))
        }
        RemoteMode::Greedy => {
            let (seed, _, _) = ps.diameter_pair();
            let mut chosen = vec![seed];
            let mut taken = vec![false; n];
            taken[seed] = true;
            // running distance sums make clique growth O(n) per step
            let mut sums: Vec<f64> = (0..n).map(|p| dist(seed, p)).collect();
            let mut value = 0.0;
            while chosen.len() < k {
                let mut pick = None::<(usize, f64)>;
                for c in (0..n).filter(|&c| !taken[c]) {
                    let v = if m == RemoteMeasure::Clique {
                        value + sums[c]
                    } else {
                        chosen.push(c);
                        let v = evaluate(&dist, &chosen, m, true).value;
                        chosen.pop();
                        v
                    };
                    if pick.is_none_or(|(_, b)| v > b) {
                        pick = Some((c, v));
                    }
                }
                let (c, v) = pick.expect("k <= n leaves candidates");
                taken[c] = true;
                chosen.push(c);
                value = v;
                if m == RemoteMeasure::Clique {
                    for (p, s) in sums.iter_mut().enumerate() {
                        *s += dist(c, p);
                    }
                }
            }
            let v = evaluate(&dist, &chosen, m, false).value;
            let traversal = gonzalez(ps, k)?.centers;
            let tv = evaluate(&dist, traversal.indices(), m, false).value;
            if tv > v {
                return Ok((traversal, tv));
            }
            Ok((Selection::new(chosen), v))
        }
        RemoteMode::Gmm => {
            let kc = gonzalez(ps, k)?;
            let v = evaluate(&dist, kc.centers.indices(), m, false).value;
            Ok((kc.centers, v))
        }
    }
}

/// A discrete k-center solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KCenterResult {
    pub centers: Selection,
    pub radius: f64,
    /// For each point, the index of its nearest center (smallest center
    /// index on ties).
    pub assignment: Vec<usize>,
}

fn assign(n: usize, dist: impl Fn(usize, usize) -> f64, centers: &[usize]) -> (Vec<usize>, f64) {
    let mut assignment = vec![0; n];
    let mut radius = 0.0f64;
    for (p, slot) in assignment.iter_mut().enumerate() {
        let mut best = (f64::INFINITY, usize::MAX);
        for &c in centers {
            let d = dist(p, c);
            if d < best.0 || (d == best.0 && c < best.1) {
                best = (d, c);
            }
        }
        *slot = best.1;
        radius = radius.max(best.0);
    }
    (assignment, radius)
}

/// Farthest-point traversal from index 0 (a 2-approximate k-center).
/// The radius is the largest point-to-nearest-center distance after the
/// `k`-th pick.
pub fn gonzalez(ps: &PointSet, k: usize) -> Result<KCenterResult> {
    let n = ps.n();
    if k == 0 || k > n {
        return Err(invalid(format!("k must be in 1..={n}, got {k}")));
    }
    let mut centers = vec![0];
    let mut is_center = vec![false; n];
    is_center[0] = true;
    let mut near: Vec<f64> = (0..n).map(|p| ps.dist(0, p)).collect();
    while centers.len() < k {
        let mut pick = None::<usize>;
        for p in (0..n).filter(|&p| !is_center[p]) {
            if pick.is_none_or(|q| near[p] > near[q]) {
                pick = Some(p);
            }
        }
        let c = pick.expect("k <= n");
        is_center[c] = true;
        centers.push(c);
        for (p, d) in near.iter_mut().enumerate() {
            *d = d.min(ps.dist(c, p));
        }
    }
    let (assignment, radius) = assign(n, |a, b| ps.dist(a, b), &centers);
    Ok(KCenterResult {
        centers: Selection::new(centers),
        radius,
        assignment,
    })
}

/// Exact discrete k-center by subset enumeration (`C(n, k) <= 10^6`).
pub fn k_center_exact(ps: &PointSet, k: usize) -> Result<KCenterResult> {
    let n = ps.n();
    if k == 0 || k > n {
        return Err(invalid(format!("k must be in 1..={n}, got {k}")));
    }
    check_subset_budget(n, k)?;
    let dist = Distances::new(ps);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for_each_combination(n, k, |c| {
        let bound = best.as_ref().map_or(f64::INFINITY, |b| b.1);
        let mut radius = 0.0f64;
        for p in 0..n {
            let near = c
                .iter()
                .map(|&s| dist.get(p, s))
                .fold(f64::INFINITY, f64::min);
            radius = radius.max(near);
            if radius >= bound {
                return;
            }
        }
        best = Some((c.to_vec(), radius));
    });
    let (centers, radius) = best.expect("k <= n");
    let (assignment, _) = assign(n, |a, b| dist.get(a, b), &centers);
    Ok(KCenterResult {
        centers: Selection::new(centers),
        radius,
        assignment,
    })
}
