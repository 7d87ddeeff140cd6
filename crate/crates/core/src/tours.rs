//! Maximum TSP: Held-Karp oracle, greedy edge insertion, best-of-random
//! tours, and the split of a tour into three matchings.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Distances, PointSet};
use crate::error::{invalid, Error, Result};
use crate::matching::Matching;
use crate::Objective;

pub const EXACT_TSP_MAX_N: usize = 14;

/// A cyclic visiting order over all point indices.
///
/// One- and two-point tours are degenerate: their values are `0` and twice
/// the pair distance (out and back).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tour {
    order: Vec<usize>,
}

impl Tour {
    pub fn new(order: Vec<usize>) -> Self {
        Self { order }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.order.len() != n {
            return Err(Error::InvalidSolution(format!(
                "tour visits {} points, expected {n}",
                self.order.len()
            )));
        }
        let mut seen = vec![false; n];
        for &i in &self.order {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidSolution(format!("index {i} visited twice")));
            }
        }
        Ok(())
    }

    /// Consecutive pairs including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.order.len();
        (0..n).map(move |i| (self.order[i], self.order[(i + 1) % n]))
    }

    pub fn value_unchecked(&self, ps: &PointSet) -> f64 {
        if self.order.len() < 2 {
            return 0.0;
        }
        self.edges().map(|(a, b)| ps.dist(a, b)).sum()
    }
}

pub fn tour_value(ps: &PointSet, t: &Tour) -> Result<f64> {
    t.validate(ps.n())?;
    Ok(t.value_unchecked(ps))
}

/// Held-Karp over `3 <= n <= 14` vertices.
///
/// `rest[S][j]` is the best path that starts at `j`, visits every vertex of
/// `S` and ends at vertex 0. The tour is rebuilt forward from vertex 0,
/// taking the smallest next vertex among equally good ones, which yields
/// the lexicographically smallest optimal order.
pub(crate) fn held_karp(
    n: usize,
    weight: impl Fn(usize, usize) -> f64,
    objective: Objective,
) -> (Tour, f64) {
    assert!((3..=EXACT_TSP_MAX_N).contains(&n));
    // vertex v in 1..n is bit v - 1
    let m = n - 1;
    let full = (1usize << m) - 1;
    let mut rest = vec![f64::NAN; (full + 1) * m];
    let mut next = vec![0u8; (full + 1) * m];
    for (j, r) in rest.iter_mut().enumerate().take(m) {
        *r = weight(j + 1, 0);
    }
    for s in 1..=full {
        for j in 0..m {
            if s & (1 << j) != 0 {
                continue;
            }
            let mut best = objective.worst();
            let mut pick = 0u8;
            let mut bits = s;
            while bits != 0 {
                let k = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let cand = weight(j + 1, k + 1) + rest[(s & !(1 << k)) * m + k];
                if objective.improves(cand, best) {
                    best = cand;
                    pick = k as u8;
                }
            }
            rest[s * m + j] = best;
            next[s * m + j] = pick;
        }
    }
    let mut best = objective.worst();
    let mut first = 0;
    for j in 0..m {
        let cand = weight(0, j + 1) + rest[(full & !(1 << j)) * m + j];
        if objective.improves(cand, best) {
            best = cand;
            first = j;
        }
    }
    let mut order = Vec::with_capacity(n);
    order.push(0);
    let mut s = full & !(1 << first);
    let mut cur = first;
    order.push(cur + 1);
    while s != 0 {
        let k = next[s * m + cur] as usize;
        order.push(k + 1);
        s &= !(1 << k);
        cur = k;
    }
    (Tour::new(order), best)
}

/// Exact maximum-weight Hamiltonian cycle for `3 <= n <= 14`.
pub fn max_tsp_exact(ps: &PointSet) -> Result<(Tour, f64)> {
    let n = ps.n();
    if !(3..=EXACT_TSP_MAX_N).contains(&n) {
        return Err(Error::BudgetExceeded(format!(
            "exact max-TSP supports 3 <= n <= {EXACT_TSP_MAX_N}, got {n}"
        )));
    }
    let dist = Distances::new(ps);
    let (tour, _) = held_karp(n, |i, j| dist.get(i, j), Objective::Maximize);
    let value = tour.value_unchecked(ps);
    Ok((tour, value))
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Greedy edge insertion: heaviest edges first (lexicographic on ties),
/// skipping any edge that would give a vertex degree 3 or close a cycle
/// early; the final Hamiltonian path is closed between its two ends.
pub fn max_tsp_greedy(ps: &PointSet) -> Result<(Tour, f64)> {
    let n = ps.n();
    if n < 3 {
        return Err(invalid(format!("max-TSP needs at least 3 points, got {n}")));
    }
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            edges.push((ps.dist(i, j), i as u32, j as u32));
        }
    }
    edges.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut degree = vec![0u8; n];
    let mut adj = vec![Vec::with_capacity(2); n];
    let mut dsu = Dsu::new(n);
    let mut taken = 0;
    for (_, i, j) in edges {
        let (i, j) = (i as usize, j as usize);
        if degree[i] < 2 && degree[j] < 2 && dsu.union(i, j) {
            degree[i] += 1;
            degree[j] += 1;
            adj[i].push(j);
            adj[j].push(i);
            taken += 1;
            if taken == n - 1 {
                break;
            }
        }
    }
    // walk the Hamiltonian path from its smaller endpoint, then rotate to 0
    let start = (0..n).find(|&v| degree[v] == 1).expect("path has two ends");
    let mut order = Vec::with_capacity(n);
    let (mut prev, mut cur) = (usize::MAX, start);
    loop {
        order.push(cur);
        let nxt = adj[cur].iter().copied().find(|&x| x != prev);
        match nxt {
            Some(x) => {
                prev = cur;
                cur = x;
            }
            None => break,
        }
    }
    let tour = canonical(order);
    let value = tour.value_unchecked(ps);
    Ok((tour, value))
}

/// Rotates a cyclic order to start at 0 and picks the direction whose
/// second element is smaller.
fn canonical(mut order: Vec<usize>) -> Tour {
    if let Some(pos) = order.iter().position(|&v| v == 0) {
        order.rotate_left(pos);
    }
    if order.len() > 2 && order[order.len() - 1] < order[1] {
        order[1..].reverse();
    }
    Tour::new(order)
}

/// Best of `samples` uniformly random tours (Fisher-Yates shuffles from a
/// `ChaCha8Rng` seeded with `seed`).
pub fn random_tour_best(ps: &PointSet, samples: usize, seed: u64) -> Result<(Tour, f64)> {
    let n = ps.n();
    if n < 3 {
        return Err(invalid(format!("max-TSP needs at least 3 points, got {n}")));
    }
    if samples == 0 {
        return Err(invalid("need at least one random tour"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut best: Option<(Tour, f64)> = None;
    for _ in 0..samples {
        order.shuffle(&mut rng);
        let t = Tour::new(order.clone());
        let v = t.value_unchecked(ps);
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((t, v));
        }
    }
    Ok(best.expect("samples >= 1"))
}

/// Splits the tour's edges into three matchings: edges at even positions,
/// edges at odd positions, and (for odd `n`) the closing edge alone.
pub fn decompose_tour(t: &Tour) -> Result<[Matching; 3]> {
    let n = t.len();
    t.validate(n)?;
    if n < 3 {
        return Err(invalid(format!(
            "decomposition needs a proper cycle, got {n} points"
        )));
    }
    let mut out = [
        Matching::default(),
        Matching::default(),
        Matching::default(),
    ];
    for (pos, (a, b)) in t.edges().enumerate() {
        let slot = if n % 2 == 1 && pos == n - 1 {
            2
        } else {
            pos % 2
        };
        out[slot].push(a, b);
    }
    Ok(out)
}

/// Nearest-neighbour tour from vertex 0 improved by 2-opt until no move
/// helps; used for minimum tours beyond the exact cap.
pub(crate) fn min_tour_heuristic(n: usize, weight: impl Fn(usize, usize) -> f64) -> (Tour, f64) {
    if n < 2 {
        return (Tour::new((0..n).collect()), 0.0);
    }
    let mut visited = vec![false; n];
    let mut order = vec![0];
    visited[0] = true;
    for _ in 1..n {
        let cur = *order.last().unwrap();
        let nxt = (0..n)
            .filter(|&v| !visited[v])
            .min_by(|&a, &b| weight(cur, a).total_cmp(&weight(cur, b)))
            .unwrap();
        visited[nxt] = true;
        order.push(nxt);
    }
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..n - 1 {
            for j in i + 2..n {
                let (a, b) = (order[i], order[i + 1]);
                let (c, d) = (order[j], order[(j + 1) % n]);
                if a == d {
                    continue;
                }
                let delta = weight(a, c) + weight(b, d) - weight(a, b) - weight(c, d);
                if delta < -1e-12 {
                    order[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
    }
    let tour = Tour::new(order);
    let value = tour.edges().map(|(a, b)| weight(a, b)).sum();
    (tour, value)
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

    fn triangle() -> PointSet {
        PointSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]])
            .unwrap()
    }

    fn permutations(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if k == items.len() {
            out.push(items.clone());
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            permutations(items, k + 1, out);
            items.swap(k, i);
        }
    }

    fn brute_max_tsp(ps: &PointSet) -> f64 {
        let mut rest: Vec<usize> = (1..ps.n()).collect();
        let mut perms = Vec::new();
        permutations(&mut rest, 0, &mut perms);
        perms
            .into_iter()
            .map(|p| {
                let mut order = vec![0];
                order.extend(p);
                Tour::new(order).value_unchecked(ps)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn exact_examples() {
        let (_, v) = max_tsp_exact(&triangle()).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
        let (t, v) = max_tsp_exact(&square()).unwrap();
        assert!((v - (2.0 + 2.0 * SQRT2)).abs() < 1e-12);
        assert_eq!(t.order(), &[0, 1, 3, 2]);
        let b = basis(6).unwrap();
        let (_, v) = max_tsp_exact(&b).unwrap();
        assert!((v - 6.0 * SQRT2).abs() < 1e-12);
        assert!(max_tsp_exact(&PointSet::from_values(&[0.0, 1.0]).unwrap()).is_err());
        assert!(max_tsp_exact(&gaussian_blob(15, 2, 1.0, 1).unwrap()).is_err());
    }

    #[test]
    fn exact_matches_permutation_enumeration() {
        for seed in 0..25 {
            let n = 3 + seed as usize % 6;
            let ps = gaussian_blob(n, 2, 1.0, seed).unwrap();
            let (t, v) = max_tsp_exact(&ps).unwrap();
            t.validate(n).unwrap();
            assert!((v - brute_max_tsp(&ps)).abs() < 1e-9);
        }
    }

    #[test]
    fn min_held_karp_on_square_is_perimeter() {
        let sq = square();
        let (t, v) = held_karp(4, |i, j| sq.dist(i, j), Objective::Minimize);
        assert!((v - 4.0).abs() < 1e-12);
        assert_eq!(t.order(), &[0, 1, 2, 3]);
    }

    #[test]
    fn greedy_examples() {
        let (_, v) = max_tsp_greedy(&triangle()).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
        let (t, v) = max_tsp_greedy(&square()).unwrap();
        t.validate(4).unwrap();
        assert!((v - (2.0 + 2.0 * SQRT2)).abs() < 1e-12);
        assert!(max_tsp_greedy(&PointSet::from_values(&[0.0, 1.0]).unwrap()).is_err());
    }

    #[test]
    fn greedy_sanity_floor() {
        for seed in 0..20 {
            let ps = gaussian_blob(10, 3, 1.0, 50 + seed).unwrap();
            let (t, g) = max_tsp_greedy(&ps).unwrap();
            t.validate(10).unwrap();
            let (_, e) = max_tsp_exact(&ps).unwrap();
            assert!(g >= 0.4 * e, "greedy {g} exact {e}");
            assert!(g <= e + 1e-9);
        }
    }

    #[test]
    fn random_tour_examples() {
        for seed in 0..5 {
            let (_, v) = random_tour_best(&triangle(), 1, seed).unwrap();
            assert!((v - 3.0).abs() < 1e-12);
        }
        let (_, v) = random_tour_best(&square(), 10_000, 3).unwrap();
        assert!((v - (2.0 + 2.0 * SQRT2)).abs() < 1e-12);
        assert!(random_tour_best(&square(), 0, 3).is_err());
        assert_eq!(
            random_tour_best(&square(), 5, 8).unwrap(),
            random_tour_best(&square(), 5, 8).unwrap()
        );
    }

    #[test]
    fn tour_value_examples() {
        assert!((tour_value(&triangle(), &Tour::new(vec![0, 1, 2])).unwrap() - 3.0).abs() < 1e-12);
        let line = PointSet::from_values(&[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(tour_value(&line, &Tour::new(vec![0, 1, 2])).unwrap(), 4.0);
        let two = PointSet::from_values(&[0.0, 3.0]).unwrap();
        assert_eq!(tour_value(&two, &Tour::new(vec![1, 0])).unwrap(), 6.0);
        let one = PointSet::from_values(&[3.0]).unwrap();
        assert_eq!(tour_value(&one, &Tour::new(vec![0])).unwrap(), 0.0);
        assert!(tour_value(&line, &Tour::new(vec![0, 0, 1])).is_err());
        assert!(tour_value(&line, &Tour::new(vec![0, 1])).is_err());
    }

    #[test]
    fn decomposition_examples() {
        let [m1, m2, m3] = decompose_tour(&Tour::new(vec![0, 1, 2, 3])).unwrap();
        assert_eq!(m1.pairs(), &[(0, 1), (2, 3)]);
        assert_eq!(m2.pairs(), &[(1, 2), (0, 3)]);
        assert!(m3.is_empty());
        let [m1, m2, m3] = decompose_tour(&Tour::new(vec![4, 2, 0, 1, 3])).unwrap();
        assert_eq!((m1.len(), m2.len(), m3.len()), (2, 2, 1));
        assert!(decompose_tour(&Tour::new(vec![0, 1])).is_err());
        assert!(decompose_tour(&Tour::new(vec![0, 1, 1])).is_err());
    }

    #[test]
    fn min_tour_heuristic_is_a_tour() {
        let ps = gaussian_blob(20, 2, 1.0, 3).unwrap();
        let (t, v) = min_tour_heuristic(20, |i, j| ps.dist(i, j));
        t.validate(20).unwrap();
        assert!((t.value_unchecked(&ps) - v).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn decomposition_partitions_edges(n in 3usize..=50, seed in any::<u64>()) {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let t = Tour::new(order);
            let parts = decompose_tour(&t).unwrap();
            let mut from_parts: Vec<(usize, usize)> = Vec::new();
            for m in &parts {
                m.validate(n).unwrap();
                from_parts.extend_from_slice(m.pairs());
            }
            let mut from_tour: Vec<(usize, usize)> = t.edges().map(|(a, b)| (a.min(b), a.max(b))).collect();
            from_parts.sort();
            from_tour.sort();
            prop_assert_eq!(from_parts, from_tour);
            prop_assert!(parts[2].len() <= 1);
            prop_assert_eq!(parts[2].is_empty(), n % 2 == 0);

            let ps = gaussian_blob(n, 2, 1.0, seed).unwrap();
            let sum: f64 = parts.iter().map(|m| m.value_unchecked(&ps)).sum();
            prop_assert!((sum - t.value_unchecked(&ps)).abs() < 1e-9);
        }

        #[test]
        fn value_invariant_under_rotation_and_reversal(n in 3usize..20, shift in 0usize..20, seed in any::<u64>()) {
            let ps = gaussian_blob(n, 3, 1.0, seed).unwrap();
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let base = Tour::new(order.clone()).value_unchecked(&ps);
            order.rotate_left(shift % n);
            prop_assert!((Tour::new(order.clone()).value_unchecked(&ps) - base).abs() < 1e-9);
            order.reverse();
            prop_assert!((Tour::new(order).value_unchecked(&ps) - base).abs() < 1e-9);
        }
    }
}
