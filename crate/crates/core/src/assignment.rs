//! Dense square assignment problem: successive shortest augmenting paths
//! with dual potentials, `O(m^3)`.

const NONE: usize = usize::MAX;

/// Minimizes `sum_r cost[r * m + col[r]]` over permutations `col`.
///
/// Returns `col`, the column assigned to each row. Rows are inserted in
/// index order; each insertion runs Dijkstra over reduced costs and updates
/// the potentials once the augmenting path is found. Ties between equally
/// distant columns go to an unassigned column, then to scan order, so the
/// result is a deterministic function of `cost`.
pub fn solve_min(cost: &[f64], m: usize) -> Vec<usize> {
    assert_eq!(cost.len(), m * m, "cost matrix must be m x m");
    let mut u = vec![0.0f64; m];
    let mut v = vec![0.0f64; m];
    let mut col4row = vec![NONE; m];
    let mut row4col = vec![NONE; m];
    let mut path = vec![NONE; m];
    let mut dist = vec![f64::INFINITY; m];
    let mut remaining: Vec<usize> = Vec::with_capacity(m);
    let mut scanned_cols: Vec<usize> = Vec::with_capacity(m);
    let mut visited_rows: Vec<usize> = Vec::with_capacity(m);

    for cur in 0..m {
        remaining.clear();
        remaining.extend((0..m).rev());
        dist.fill(f64::INFINITY);
        scanned_cols.clear();
        visited_rows.clear();

        let mut min_val = 0.0;
        let mut i = cur;
        let sink = loop {
            visited_rows.push(i);
            let row = &cost[i * m..(i + 1) * m];
            let ui = u[i];
            let mut lowest = f64::INFINITY;
            let mut index = NONE;
            for (it, &j) in remaining.iter().enumerate() {
                let r = min_val + row[j] - ui - v[j];
                if r < dist[j] {
                    path[j] = i;
                    dist[j] = r;
                }
                if dist[j] < lowest || (dist[j] == lowest && row4col[j] == NONE) {
                    lowest = dist[j];
                    index = it;
                }
            }
            min_val = lowest;
            let j = remaining.swap_remove(index);
            scanned_cols.push(j);
            if row4col[j] == NONE {
                break j;
            }
            i = row4col[j];
        };

        u[cur] += min_val;
        for &r in &visited_rows[1..] {
            u[r] += min_val - dist[col4row[r]];
        }
        for &j in &scanned_cols {
            v[j] -= min_val - dist[j];
        }

        let mut j = sink;
        loop {
            let i = path[j];
            row4col[j] = i;
            let prev = std::mem::replace(&mut col4row[i], j);
            if i == cur {
                break;
            }
            j = prev;
        }
    }
    col4row
}

/// Maximizes `sum_r weight[r * m + col[r]]`.
pub fn solve_max(weight: &[f64], m: usize) -> Vec<usize> {
    let negated: Vec<f64> = weight.iter().map(|w| -w).collect();
    solve_min(&negated, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_min(cost: &[f64], m: usize) -> f64 {
        fn rec(cost: &[f64], m: usize, row: usize, used: &mut [bool]) -> f64 {
            if row == m {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for c in 0..m {
                if !used[c] {
                    used[c] = true;
                    best = best.min(cost[row * m + c] + rec(cost, m, row + 1, used));
                    used[c] = false;
                }
            }
            best
        }
        rec(cost, m, 0, &mut vec![false; m])
    }

    #[test]
    fn small_known_instance() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let col = solve_min(&cost, 3);
        let total: f64 = col.iter().enumerate().map(|(r, &c)| cost[r * 3 + c]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn agrees_with_enumeration() {
        let mut state = 12345u64;
        let mut next = || {
            state = crate::projection::splitmix64(state);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for m in 1..=7 {
            for _ in 0..30 {
                let cost: Vec<f64> = (0..m * m).map(|_| next() * 10.0 - 3.0).collect();
                let col = solve_min(&cost, m);
                let mut seen = vec![false; m];
                for &c in &col {
                    assert!(!seen[c]);
                    seen[c] = true;
                }
                let total: f64 = col.iter().enumerate().map(|(r, &c)| cost[r * m + c]).sum();
                assert!((total - brute_force_min(&cost, m)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ties_and_degenerate_costs() {
        for m in 1..=6 {
            let zeros = vec![0.0; m * m];
            let col = solve_min(&zeros, m);
            let mut sorted = col.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..m).collect::<Vec<_>>());
            let ints: Vec<f64> = (0..m * m).map(|k| ((k * 7) % 3) as f64).collect();
            let col = solve_min(&ints, m);
            let total: f64 = col.iter().enumerate().map(|(r, &c)| ints[r * m + c]).sum();
            assert_eq!(total, brute_force_min(&ints, m));
            assert_eq!(solve_min(&ints, m), col);
        }
    }

    #[test]
    fn empty() {
        assert!(solve_min(&[], 0).is_empty());
    }
}
