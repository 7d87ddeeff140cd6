//! Maximum-weight matchings and k-hypermatchings on the complete Euclidean
//! graph: exact subset-DP and enumeration oracles, exact special cases (1-D
//! and bipartite) and greedy heuristics.

use serde::{Deserialize, Serialize};

use crate::assignment;
use crate::dataset::{Distances, PointSet};
use crate::error::{invalid, Error, Result};
use crate::Objective;

/// Largest instance the subset-DP matching oracle accepts.
pub const EXACT_MATCHING_MAX_N: usize = 20;
/// Largest instance the hypermatching enumeration accepts.
pub const EXACT_HYPERMATCHING_MAX_N: usize = 12;

/// A set of disjoint index pairs, each stored as `(min, max)`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Matching {
    pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self {
            pairs: pairs
                .into_iter()
                .map(|(a, b)| (a.min(b), a.max(b)))
                .collect(),
        }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn push(&mut self, a: usize, b: usize) {
        self.pairs.push((a.min(b), a.max(b)));
    }

    /// Checks disjointness and index range against `n` points.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for &(a, b) in &self.pairs {
            for x in [a, b] {
                if x >= n {
                    return Err(Error::IndexOutOfRange { index: x, n });
                }
            }
            if a == b || seen[a] || seen[b] {
                return Err(Error::InvalidSolution(format!(
                    "index collision in pair ({a}, {b})"
                )));
            }
            seen[a] = true;
            seen[b] = true;
        }
        Ok(())
    }

    pub fn is_perfect(&self, n: usize) -> bool {
        self.pairs.len() == n / 2 && self.validate(n).is_ok()
    }

    /// Sum of pair distances without validation.
    pub fn value_unchecked(&self, ps: &PointSet) -> f64 {
        self.pairs.iter().map(|&(a, b)| ps.dist(a, b)).sum()
    }
}

/// Disjoint groups of equal size `k` covering all indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperMatching {
    groups: Vec<Vec<usize>>,
}

impl HyperMatching {
    /// Sorts each group and orders groups by their smallest member.
    pub fn new(mut groups: Vec<Vec<usize>>) -> Self {
        for g in &mut groups {
            g.sort_unstable();
        }
        groups.sort();
        Self { groups }
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let k = self.groups.first().map(Vec::len).unwrap_or(0);
        let mut seen = vec![false; n];
        for g in &self.groups {
            if g.len() != k {
                return Err(Error::InvalidSolution("groups differ in size".into()));
            }
            for &x in g {
                if x >= n {
                    return Err(Error::IndexOutOfRange { index: x, n });
                }
                if std::mem::replace(&mut seen[x], true) {
                    return Err(Error::InvalidSolution(format!("index {x} in two groups")));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidSolution(
                "groups do not cover all points".into(),
            ));
        }
        Ok(())
    }

    /// Sum over groups of all intra-group pairwise distances.
    pub fn value_unchecked(&self, ps: &PointSet) -> f64 {
        self.groups.iter().map(|g| clique_sum(ps, g)).sum()
    }
}

fn clique_sum(ps: &PointSet, idx: &[usize]) -> f64 {
    let mut s = 0.0;
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            s += ps.dist(i, j);
        }
    }
    s
}

pub fn matching_value(ps: &PointSet, m: &Matching) -> Result<f64> {
    m.validate(ps.n())?;
    Ok(m.value_unchecked(ps))
}

pub fn hypermatching_value(ps: &PointSet, h: &HyperMatching) -> Result<f64> {
    h.validate(ps.n())?;
    Ok(h.value_unchecked(ps))
}

fn require_even(n: usize) -> Result<()> {
    if n % 2 == 1 {
        Err(invalid(format!(
            "perfect matching needs an even number of points, got {n}"
        )))
    } else {
        Ok(())
    }
}

/// Optimal matching over `n <= 20` vertices by DP over vertex subsets.
///
/// For even `n` the result is perfect. For odd `n` with `leave_one_out`,
/// exactly one vertex stays unmatched. The lowest vertex of each subset is
/// always resolved first and partners are scanned in increasing order, so
/// ties resolve to the lexicographically smallest pair sequence.
pub(crate) fn subset_dp_matching(
    n: usize,
    weight: impl Fn(usize, usize) -> f64,
    objective: Objective,
    leave_one_out: bool,
) -> (Matching, f64) {
    assert!(n <= EXACT_MATCHING_MAX_N);
    assert!(n.is_multiple_of(2) || leave_one_out);
    const SKIP: u8 = u8::MAX;
    let size = 1usize << n;
    let mut best = vec![f64::NAN; size];
    let mut choice = vec![0u8; size];
    best[0] = 0.0;
    for mask in 1..size {
        let odd = mask.count_ones() % 2 == 1;
        if odd && !leave_one_out {
            continue;
        }
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut cur = f64::NAN;
        let mut pick = SKIP;
        if odd {
            cur = best[rest];
        }
        let mut bits = rest;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let cand = weight(i, j) + best[rest & !(1 << j)];
            if cur.is_nan() || objective.improves(cand, cur) {
                cur = cand;
                pick = j as u8;
            }
        }
        best[mask] = cur;
        choice[mask] = pick;
    }
    let mut mask = size - 1;
    let mut m = Matching::default();
    while mask != 0 {
        let i = mask.trailing_zeros() as usize;
        let pick = choice[mask];
        mask &= !(1 << i);
        if pick != SKIP {
            m.push(i, pick as usize);
            mask &= !(1 << pick);
        }
    }
    (m, best[size - 1])
}

/// Exact maximum-weight perfect matching for even `n <= 20`.
pub fn max_matching_exact(ps: &PointSet) -> Result<Matching> {
    let n = ps.n();
    require_even(n)?;
    if n > EXACT_MATCHING_MAX_N {
        return Err(Error::BudgetExceeded(format!(
            "exact matching supports n <= {EXACT_MATCHING_MAX_N}, got {n}"
        )));
    }
    let dist = Distances::new(ps);
    Ok(subset_dp_matching(n, |i, j| dist.get(i, j), Objective::Maximize, false).0)
}

/// Exact maximum matching of points on a line: the lower half of the
/// sorted values is paired, in order, with the upper half.
pub fn max_matching_line(ps: &PointSet) -> Result<Matching> {
    if ps.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: ps.dim(),
        });
    }
    let n = ps.n();
    require_even(n)?;
    let vals = ps.coords();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
    let half = n / 2;
    Ok(Matching::new(
        (0..half).map(|i| (order[i], order[half + i])),
    ))
}

/// Exact maximum-weight perfect bipartite matching between `[0, split)` and
/// `[split, n)`.
pub fn max_matching_bipartite(ps: &PointSet, split: usize) -> Result<Matching> {
    let n = ps.n();
    if split == 0 || split * 2 != n {
        return Err(invalid(format!(
            "bipartite sides must be nonempty and equal: split {split} of {n} points"
        )));
    }
    let m = split;
    let mut weight = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..m {
            weight[a * m + b] = ps.dist(a, m + b);
        }
    }
    let col = assignment::solve_max(&weight, m);
    Ok(Matching::new(
        col.iter().enumerate().map(|(a, &b)| (a, m + b)),
    ))
}

/// Greedy matching: repeatedly takes the heaviest pair among unmatched
/// points, ties broken by lexicographic pair order.
pub fn max_matching_greedy(ps: &PointSet) -> Result<Matching> {
    let n = ps.n();
    require_even(n)?;
    let mut edges = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
    for i in 0..n {
        for j in i + 1..n {
            edges.push((ps.dist(i, j), i as u32, j as u32));
        }
    }
    edges.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut used = vec![false; n];
    let mut m = Matching::default();
    for (_, i, j) in edges {
        let (i, j) = (i as usize, j as usize);
        if !used[i] && !used[j] {
            used[i] = true;
            used[j] = true;
            m.push(i, j);
            if m.len() == n / 2 {
                break;
            }
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HyperMode {
    Exact,
    Greedy,
}

/// Maximum k-hypermatching, exactly (`n <= 12`) or greedily.
///
/// The greedy variant builds one group at a time: it seeds the group with
/// the smallest unused index, then adds the unused point with the largest
/// distance sum to the current group members (smallest index on ties).
pub fn max_hypermatching(ps: &PointSet, k: usize, mode: HyperMode) -> Result<(HyperMatching, f64)> {
    let n = ps.n();
    if k == 0 || !n.is_multiple_of(k) {
        return Err(invalid(format!("group size {k} does not divide n = {n}")));
    }
    let dist = Distances::new(ps);
    let groups = match mode {
        HyperMode::Exact => {
            if n > EXACT_HYPERMATCHING_MAX_N {
                return Err(Error::BudgetExceeded(format!(
                    "exact hypermatching supports n <= {EXACT_HYPERMATCHING_MAX_N}, got {n}"
                )));
            }
            let mut search = PartitionSearch {
                dist: &dist,
                k,
                used: vec![false; n],
                current: Vec::new(),
                best: None,
            };
            search.run(0.0);
            search.best.map(|(g, _)| g).unwrap_or_default()
        }
        HyperMode::Greedy => {
            let mut used = vec![false; n];
            let mut groups = Vec::with_capacity(n / k);
            let mut gain = vec![0.0; n];
            while let Some(seed) = used.iter().position(|u| !u) {
                let mut group = vec![seed];
                used[seed] = true;
                for (p, g) in gain.iter_mut().enumerate() {
                    *g = dist.get(seed, p);
                }
                while group.len() < k {
                    let mut pick = None::<(usize, f64)>;
                    for p in (0..n).filter(|&p| !used[p]) {
                        if pick.is_none_or(|(_, g)| gain[p] > g) {
                            pick = Some((p, gain[p]));
                        }
                    }
                    let (p, _) = pick.expect("n divisible by k leaves enough points");
                    used[p] = true;
                    group.push(p);
                    for (q, g) in gain.iter_mut().enumerate() {
                        *g += dist.get(p, q);
                    }
                }
                groups.push(group);
            }
            groups
        }
    };
    let hm = HyperMatching::new(groups);
    let value = hm.value_unchecked(ps);
    Ok((hm, value))
}

struct PartitionSearch<'a, 'b> {
    dist: &'a Distances<'b>,
    k: usize,
    used: Vec<bool>,
    current: Vec<Vec<usize>>,
    best: Option<(Vec<Vec<usize>>, f64)>,
}

impl PartitionSearch<'_, '_> {
    fn run(&mut self, acc: f64) {
        let Some(first) = self.used.iter().position(|u| !u) else {
            if self.best.as_ref().is_none_or(|(_, v)| acc > *v) {
                self.best = Some((self.current.clone(), acc));
            }
            return;
        };
        self.used[first] = true;
        let mut group = vec![first];
        self.extend(&mut group, first + 1, acc);
        self.used[first] = false;
    }

    fn extend(&mut self, group: &mut Vec<usize>, from: usize, acc: f64) {
        if group.len() == self.k {
            self.current.push(group.clone());
            self.run(acc);
            self.current.pop();
            return;
        }
        let n = self.used.len();
        for p in from..n {
            if self.used[p] {
                continue;
            }
            let add: f64 = group.iter().map(|&q| self.dist.get(p, q)).sum();
            self.used[p] = true;
            group.push(p);
            self.extend(group, p + 1, acc + add);
            group.pop();
            self.used[p] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{basis, gaussian_blob};
    use proptest::prelude::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn square() -> PointSet {
        PointSet::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ])
        .unwrap()
    }

    /// All perfect matchings of `idx`, by recursion on the first element.
    fn all_perfect_matchings(idx: &[usize]) -> Vec<Vec<(usize, usize)>> {
        if idx.is_empty() {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for j in 1..idx.len() {
            let rest: Vec<usize> = idx[1..].iter().copied().filter(|&x| x != idx[j]).collect();
            for mut m in all_perfect_matchings(&rest) {
                m.insert(0, (idx[0], idx[j]));
                out.push(m);
            }
        }
        out
    }

    fn brute_max_matching(ps: &PointSet) -> f64 {
        let idx: Vec<usize> = (0..ps.n()).collect();
        all_perfect_matchings(&idx)
            .into_iter()
            .map(|m| Matching::new(m).value_unchecked(ps))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn exact_examples() {
        let m = max_matching_exact(&square()).unwrap();
        assert_eq!(m.pairs(), &[(0, 2), (1, 3)]);
        assert!((m.value_unchecked(&square()) - 2.0 * SQRT2).abs() < 1e-12);

        let b = basis(4).unwrap();
        let v = matching_value(&b, &max_matching_exact(&b).unwrap()).unwrap();
        assert!((v - 2.0 * SQRT2).abs() < 1e-12);

        let line = PointSet::from_values(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        let v = matching_value(&line, &max_matching_exact(&line).unwrap()).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        assert_eq!(brute_max_matching(&line), 4.0);
    }

    #[test]
    fn exact_errors() {
        assert!(max_matching_exact(&PointSet::from_values(&[0.0, 1.0, 2.0]).unwrap()).is_err());
        let big = gaussian_blob(22, 2, 1.0, 1).unwrap();
        assert!(matches!(
            max_matching_exact(&big),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn exact_matches_enumeration() {
        for seed in 0..30 {
            let n = 2 * (1 + seed as usize % 5);
            let ps = gaussian_blob(n, 3, 1.0, seed).unwrap();
            let m = max_matching_exact(&ps).unwrap();
            assert!(m.is_perfect(n));
            assert!((m.value_unchecked(&ps) - brute_max_matching(&ps)).abs() < 1e-9);
        }
    }

    #[test]
    fn line_examples() {
        let v = |xs: &[f64]| {
            let ps = PointSet::from_values(xs).unwrap();
            matching_value(&ps, &max_matching_line(&ps).unwrap()).unwrap()
        };
        assert_eq!(v(&[0.0, 1.0, 2.0, 3.0]), 4.0);
        assert_eq!(v(&[0.0, 0.0, 0.0, 0.0]), 0.0);
        assert_eq!(v(&[-1.0, 1.0]), 2.0);
        assert!(max_matching_line(&square()).is_err());
        assert!(max_matching_line(&PointSet::from_values(&[1.0, 2.0, 3.0]).unwrap()).is_err());
    }

    #[test]
    fn bipartite_examples() {
        let ps = PointSet::from_values(&[0.0, 5.0]).unwrap();
        assert_eq!(
            matching_value(&ps, &max_matching_bipartite(&ps, 1).unwrap()).unwrap(),
            5.0
        );

        let b = basis(4).unwrap();
        let v = matching_value(&b, &max_matching_bipartite(&b, 2).unwrap()).unwrap();
        assert!((v - 2.0 * SQRT2).abs() < 1e-12);

        let ps = PointSet::from_values(&[0.0, 10.0, 1.0, 11.0]).unwrap();
        let m = max_matching_bipartite(&ps, 2).unwrap();
        assert_eq!(m.pairs(), &[(0, 3), (1, 2)]);
        assert_eq!(m.value_unchecked(&ps), 20.0);

        assert!(max_matching_bipartite(&ps, 1).is_err());
        assert!(max_matching_bipartite(&ps, 0).is_err());
    }

    #[test]
    fn greedy_examples() {
        let line = PointSet::from_values(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        let g = max_matching_greedy(&line).unwrap();
        assert_eq!(g.pairs(), &[(0, 3), (1, 2)]);
        assert_eq!(g.value_unchecked(&line), 4.0);

        // two coincident pairs and one far pair
        let ps = PointSet::from_values(&[0.0, 0.0, 5.0, 5.0, -40.0, 40.0]).unwrap();
        let greedy = max_matching_greedy(&ps).unwrap().value_unchecked(&ps);
        assert!((greedy - brute_max_matching(&ps)).abs() < 1e-12);

        assert!(max_matching_greedy(&PointSet::from_values(&[0.0]).unwrap()).is_err());
    }

    #[test]
    fn greedy_is_half_approximate() {
        for seed in 0..20 {
            let ps = gaussian_blob(12, 3, 1.0, 100 + seed).unwrap();
            let g = max_matching_greedy(&ps).unwrap();
            assert!(g.is_perfect(12));
            let exact = max_matching_exact(&ps).unwrap().value_unchecked(&ps);
            assert!(g.value_unchecked(&ps) >= 0.5 * exact - 1e-12);
        }
    }

    #[test]
    fn matching_value_examples() {
        let b = basis(3).unwrap();
        assert_eq!(matching_value(&b, &Matching::default()).unwrap(), 0.0);
        assert!((matching_value(&b, &Matching::new([(0, 1)])).unwrap() - SQRT2).abs() < 1e-15);
        let sq = square();
        let diag = Matching::new([(0, 2), (1, 3)]);
        assert!((matching_value(&sq, &diag).unwrap() - 2.0 * SQRT2).abs() < 1e-15);
        assert!(matching_value(&sq, &Matching::new([(0, 1), (1, 2)])).is_err());
        assert!(matching_value(&sq, &Matching::new([(0, 4)])).is_err());
    }

    #[test]
    fn hypermatching_examples() {
        for seed in 0..5 {
            let ps = gaussian_blob(8, 2, 1.0, seed).unwrap();
            let (_, hv) = max_hypermatching(&ps, 2, HyperMode::Exact).unwrap();
            let mv = max_matching_exact(&ps).unwrap().value_unchecked(&ps);
            assert!((hv - mv).abs() < 1e-9);
        }

        let tri = gaussian_blob(3, 2, 1.0, 9).unwrap();
        let all = tri.dist(0, 1) + tri.dist(0, 2) + tri.dist(1, 2);
        for mode in [HyperMode::Exact, HyperMode::Greedy] {
            let (h, v) = max_hypermatching(&tri, 3, mode).unwrap();
            assert_eq!(h.groups(), &[vec![0, 1, 2]]);
            assert!((v - all).abs() < 1e-12);
        }

        // k = 3, n = 6: enumerate the 10 partitions by hand
        let ps = gaussian_blob(6, 3, 1.0, 21).unwrap();
        let mut best = f64::NEG_INFINITY;
        for a in 1..6 {
            for b in a + 1..6 {
                let g1 = [0, a, b];
                let g2: Vec<usize> = (1..6).filter(|x| *x != a && *x != b).collect();
                best = best.max(clique_sum(&ps, &g1) + clique_sum(&ps, &g2));
            }
        }
        let (h, v) = max_hypermatching(&ps, 3, HyperMode::Exact).unwrap();
        h.validate(6).unwrap();
        assert!((v - best).abs() < 1e-12);
        let (g, gv) = max_hypermatching(&ps, 3, HyperMode::Greedy).unwrap();
        g.validate(6).unwrap();
        assert!(gv <= v + 1e-12);
    }

    #[test]
    fn hypermatching_errors() {
        let ps = gaussian_blob(7, 2, 1.0, 1).unwrap();
        assert!(max_hypermatching(&ps, 2, HyperMode::Greedy).is_err());
        assert!(max_hypermatching(&ps, 0, HyperMode::Greedy).is_err());
        let big = gaussian_blob(14, 2, 1.0, 1).unwrap();
        assert!(matches!(
            max_hypermatching(&big, 2, HyperMode::Exact),
            Err(Error::BudgetExceeded(_))
        ));
        assert!(max_hypermatching(&big, 7, HyperMode::Greedy).is_ok());
    }

    #[test]
    fn leave_one_out_dp_skips_one_vertex() {
        let ps = PointSet::from_values(&[0.0, 1.0, 10.0]).unwrap();
        let (m, v) = subset_dp_matching(3, |i, j| ps.dist(i, j), Objective::Minimize, true);
        assert_eq!(m.pairs(), &[(0, 1)]);
        assert_eq!(v, 1.0);
    }

    #[test]
    fn switching_property_on_max_matchings() {
        let mut violations = 0;
        for seed in 0..100u64 {
            let n = 2 * (2 + seed as usize % 5);
            let d = 1 + seed as usize % 4;
            let ps = gaussian_blob(n, d, 1.0, 1000 + seed).unwrap();
            let m = max_matching_exact(&ps).unwrap();
            let (_, r) = ps.discrete_center();
            let short: Vec<_> = m
                .pairs()
                .iter()
                .filter(|&&(p, q)| ps.dist(p, q) <= r / 4.0)
                .collect();
            for &&(p, q) in &short {
                for anchor in [p, q] {
                    for &&(x, y) in &short {
                        for e in [x, y] {
                            if ps.dist(anchor, e) > r / 2.0 + 1e-9 {
                                violations += 1;
                            }
                        }
                    }
                }
            }
        }
        assert_eq!(violations, 0);
    }

    #[test]
    fn adding_pairs_never_decreases_value() {
        let ps = gaussian_blob(10, 3, 1.0, 4).unwrap();
        let mut m = Matching::default();
        let mut last = 0.0;
        for (a, b) in [(0, 5), (1, 9), (2, 3), (4, 8), (6, 7)] {
            m.push(a, b);
            let v = matching_value(&ps, &m).unwrap();
            assert!(v >= last);
            last = v;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn line_solver_equals_exact(vals in prop::collection::vec(-50.0f64..50.0, 1..=6)) {
            let mut xs = vals.clone();
            xs.extend(vals.iter().map(|v| v * 0.5 + 1.0));
            let ps = PointSet::from_values(&xs).unwrap();
            let line = max_matching_line(&ps).unwrap().value_unchecked(&ps);
            let exact = max_matching_exact(&ps).unwrap().value_unchecked(&ps);
            prop_assert!((line - exact).abs() < 1e-9);
        }

        #[test]
        fn solvers_are_deterministic(seed in 0u64..1000) {
            let ps = gaussian_blob(10, 2, 1.0, seed).unwrap();
            prop_assert_eq!(max_matching_exact(&ps).unwrap(), max_matching_exact(&ps).unwrap());
            prop_assert_eq!(max_matching_greedy(&ps).unwrap(), max_matching_greedy(&ps).unwrap());
            prop_assert_eq!(max_matching_bipartite(&ps, 5).unwrap(), max_matching_bipartite(&ps, 5).unwrap());
        }
    }
}
