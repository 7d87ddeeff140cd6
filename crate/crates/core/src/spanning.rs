//! Maximum spanning tree, maximum k-coverage and the general selection
//! objective `sum_p f(v_p)`, where `v_p` lists the distances from `p` to
//! the selected points in selection order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Distances, PointSet};
use crate::error::{invalid, Error, Result};
use crate::Objective;

/// Exact subset enumeration stops above this many candidate subsets.
pub const EXACT_SUBSET_BUDGET: u128 = 1_000_000;

/// Edges over point indices; a spanning tree has exactly `n - 1` of them.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EdgeSet {
    edges: Vec<(usize, usize)>,
}

impl EdgeSet {
    pub fn new(edges: Vec<(usize, usize)>) -> Self {
        Self { edges }
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn value_unchecked(&self, ps: &PointSet) -> f64 {
        self.edges.iter().map(|&(a, b)| ps.dist(a, b)).sum()
    }

    /// Checks that the edges form a spanning tree of `0..n`.
    pub fn validate_spanning_tree(&self, n: usize) -> Result<()> {
        if self.edges.len() + 1 != n {
            return Err(Error::InvalidSolution(format!(
                "spanning tree on {n} points needs {} edges, got {}",
                n.saturating_sub(1),
                self.edges.len()
            )));
        }
        let mut dsu = UnionFind::new(n);
        for &(a, b) in &self.edges {
            if a >= n || b >= n {
                return Err(Error::IndexOutOfRange { index: a.max(b), n });
            }
            if !dsu.union(a, b) {
                return Err(Error::InvalidSolution(format!(
                    "edge ({a}, {b}) closes a cycle"
                )));
            }
        }
        Ok(())
    }
}

/// An ordered sequence of distinct point indices.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Selection {
    indices: Vec<usize>,
}

impl Selection {
    pub fn new(indices: Vec<usize>) -> Self {
        Self { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for &i in &self.indices {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidSolution(format!("index {i} selected twice")));
            }
        }
        Ok(())
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Dense Prim from vertex 0. Each new vertex attaches through its best
/// known tree neighbour; ties keep the earliest candidate in index order.
pub(crate) fn prim(
    n: usize,
    weight: impl Fn(usize, usize) -> f64,
    objective: Objective,
) -> (EdgeSet, f64) {
    if n < 2 {
        return (EdgeSet::default(), 0.0);
    }
    let mut in_tree = vec![false; n];
    let mut key = vec![objective.worst(); n];
    let mut link = vec![0usize; n];
    in_tree[0] = true;
    for (v, k) in key.iter_mut().enumerate().skip(1) {
        *k = weight(0, v);
    }
    let mut edges = Vec::with_capacity(n - 1);
    let mut total = 0.0;
    for _ in 1..n {
        let mut pick = None::<usize>;
        for v in (0..n).filter(|&v| !in_tree[v]) {
            if pick.is_none_or(|p| objective.improves(key[v], key[p])) {
                pick = Some(v);
            }
        }
        let v = pick.expect("vertices remain");
        in_tree[v] = true;
        edges.push((link[v].min(v), link[v].max(v)));
        total += key[v];
        for u in (0..n).filter(|&u| !in_tree[u]) {
            let w = weight(v, u);
            if objective.improves(w, key[u]) {
                key[u] = w;
                link[u] = v;
            }
        }
    }
    (EdgeSet::new(edges), total)
}

/// Kruskal over all `n(n-1)/2` edges; an independent route to the same
/// optimum as [`prim`].
pub fn kruskal(
    n: usize,
    weight: impl Fn(usize, usize) -> f64,
    objective: Objective,
) -> (EdgeSet, f64) {
    let mut all = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            all.push((weight(i, j), i, j));
        }
    }
    all.sort_by(|a, b| {
        let ord = a.0.total_cmp(&b.0);
        let ord = if objective == Objective::Maximize {
            ord.reverse()
        } else {
            ord
        };
        ord.then((a.1, a.2).cmp(&(b.1, b.2)))
    });
    let mut dsu = UnionFind::new(n);
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut total = 0.0;
    for (w, i, j) in all {
        if dsu.union(i, j) {
            edges.push((i, j));
            total += w;
        }
    }
    (EdgeSet::new(edges), total)
}

/// Maximum-weight spanning tree of the complete distance graph.
pub fn max_spanning_tree(ps: &PointSet) -> Result<(EdgeSet, f64)> {
    let n = ps.n();
    if n < 2 {
        return Err(invalid(format!(
            "spanning tree needs at least 2 points, got {n}"
        )));
    }
    let dist = Distances::new(ps);
    Ok(prim(n, |i, j| dist.get(i, j), Objective::Maximize))
}

/// The aggregation `f` applied to each point's distance vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "p", rename_all = "snake_case")]
pub enum FSpec {
    /// `l_p` norm, `p >= 1`; `p = inf` is written as [`FSpec::Linf`].
    Lp(f64),
    Linf,
    Sum,
    /// Median; an even-length vector takes the mean of its two middle values.
    Median,
}

impl FSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            FSpec::Lp(p) if !(p.is_finite() && *p >= 1.0) => Err(invalid(format!(
                "l_p aggregation needs finite p >= 1, got {p}"
            ))),
            _ => Ok(()),
        }
    }

    /// Lipschitz constant of `f` on `R^k` with respect to the max norm.
    pub fn lipschitz(&self, k: usize) -> f64 {
        match self {
            FSpec::Lp(p) => (k as f64).powf(1.0 / p),
            FSpec::Linf | FSpec::Median => 1.0,
            FSpec::Sum => k as f64,
        }
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        match self {
            FSpec::Lp(p) => v
                .iter()
                .map(|x| x.abs().powf(*p))
                .sum::<f64>()
                .powf(1.0 / p),
            FSpec::Linf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            FSpec::Sum => v.iter().sum(),
            FSpec::Median => median_of(v),
        }
    }
}

fn median_of(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

impl fmt::Display for FSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FSpec::Lp(p) => write!(f, "lp:{p}"),
            FSpec::Linf => f.write_str("linf"),
            FSpec::Sum => f.write_str("sum"),
            FSpec::Median => f.write_str("median"),
        }
    }
}

impl FromStr for FSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let spec = match s {
            "linf" | "lp:inf" => FSpec::Linf,
            "sum" => FSpec::Sum,
            "median" => FSpec::Median,
            _ => match s.strip_prefix("lp:") {
                Some(p) => FSpec::Lp(
                    p.parse()
                        .map_err(|_| invalid(format!("bad exponent in {s:?}")))?,
                ),
                None => return Err(invalid(format!("unknown aggregation {s:?}"))),
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectMode {
    Exact,
    Greedy,
}

/// `sum_p max_{s in S} ||p - s||` over all points, members of `S` included.
pub fn k_coverage_value(ps: &PointSet, s: &Selection) -> Result<f64> {
    large_opt_value(ps, s, FSpec::Linf)
}

pub fn k_coverage_select(ps: &PointSet, k: usize, mode: SelectMode) -> Result<(Selection, f64)> {
    large_opt_select(ps, k, FSpec::Linf, mode)
}

/// `sum_p f(v_p)` with `(v_p)_i = ||p - s_i||`.
pub fn large_opt_value(ps: &PointSet, s: &Selection, f: FSpec) -> Result<f64> {
    if s.is_empty() {
        return Err(invalid("selection must be nonempty"));
    }
    s.validate(ps.n())?;
    f.validate()?;
    let mut v = vec![0.0; s.len()];
    let mut total = 0.0;
    for p in 0..ps.n() {
        for (slot, &c) in v.iter_mut().zip(s.indices()) {
            *slot = ps.dist(p, c);
        }
        total += f.eval(&v);
    }
    Ok(total)
}

/// Number of `k`-subsets of `n`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

pub(crate) fn check_subset_budget(n: usize, k: usize) -> Result<()> {
    let count = binomial(n, k);
    if count > EXACT_SUBSET_BUDGET {
        Err(Error::BudgetExceeded(format!(
            "C({n}, {k}) = {count} subsets exceeds the exact budget of {EXACT_SUBSET_BUDGET}"
        )))
    } else {
        Ok(())
    }
}

/// Calls `visit` on every `k`-subset of `0..n` in lexicographic order.
pub(crate) fn for_each_combination(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        visit(&c);
        let Some(i) = (0..k).rev().find(|&i| c[i] != i + n - k) else {
            return;
        };
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// Picks `k` points maximizing [`large_opt_value`].
///
/// Exact mode enumerates all subsets (lexicographically smallest wins
/// ties). Greedy mode appends, one at a time, the point whose addition
/// gives the largest objective, smallest index on ties; per-point running
/// aggregates make each step `O(n^2)` except for the median, which is
/// recomputed from the stored distance vectors.
pub fn large_opt_select(
    ps: &PointSet,
    k: usize,
    f: FSpec,
    mode: SelectMode,
) -> Result<(Selection, f64)> {
    let n = ps.n();
    if k == 0 || k > n {
        return Err(invalid(format!("k must be in 1..={n}, got {k}")));
    }
    f.validate()?;
    let dist = Distances::new(ps);
    match mode {
        SelectMode::Exact => {
            check_subset_budget(n, k)?;
            let mut best: Option<(Vec<usize>, f64)> = None;
            let mut v = vec![0.0; k];
            for_each_combination(n, k, |c| {
                let mut total = 0.0;
                for p in 0..n {
                    for (slot, &s) in v.iter_mut().zip(c) {
                        *slot = dist.get(p, s);
                    }
                    total += f.eval(&v);
                }
                if best.as_ref().is_none_or(|(_, b)| total > *b) {
                    best = Some((c.to_vec(), total));
                }
            });
            let (idx, value) = best.expect("at least one subset");
            Ok((Selection::new(idx), value))
        }
        SelectMode::Greedy => {
            let mut chosen = Vec::with_capacity(k);
            let mut taken = vec![false; n];
            // running aggregate per point: max, sum, or sum of p-th powers
            let mut agg = vec![0.0f64; n];
            let mut vectors: Vec<Vec<f64>> = vec![Vec::with_capacity(k); n];
            let mut value = 0.0;
            for _ in 0..k {
                let mut pick = None::<(usize, f64)>;
                for c in (0..n).filter(|&c| !taken[c]) {
                    let mut total = 0.0;
                    for p in 0..n {
                        let d = dist.get(p, c);
                        total += match f {
                            FSpec::Linf => agg[p].max(d),
                            FSpec::Sum => agg[p] + d,
                            FSpec::Lp(e) => (agg[p] + d.powf(e)).powf(1.0 / e),
                            FSpec::Median => {
                                let v = &mut vectors[p];
                                v.push(d);
                                let m = median_of(v);
                                v.pop();
                                m
                            }
                        };
                    }
                    if pick.is_none_or(|(_, b)| total > b) {
                        pick = Some((c, total));
                    }
                }
                let (c, total) = pick.expect("k <= n leaves candidates");
                taken[c] = true;
                chosen.push(c);
                value = total;
                for p in 0..n {
                    let d = dist.get(p, c);
                    match f {
                        FSpec::Linf => agg[p] = agg[p].max(d),
                        FSpec::Sum => agg[p] += d,
                        FSpec::Lp(e) => agg[p] += d.powf(e),
                        FSpec::Median => vectors[p].push(d),
                    }
                }
            }
            Ok((Selection::new(chosen), value))
        }
    }
}
