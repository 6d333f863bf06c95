//! Minimum-cost bipartite assignment (Kuhn-Munkres with potentials,
//! O(k^3)), plus a lexicographic determinization pass so tied optima always
//! resolve the same way.

/// Result of matching `n` rows (predictions) to `m` columns (ground truth).
#[derive(Debug, Clone)]
pub struct Assignment {
    /// Matched (row, col) pairs, exactly `min(n, m)` of them, sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
    pub row_to_col: Vec<Option<usize>>,
    pub col_to_row: Vec<Option<usize>>,
}

/// Optimal assignment cost of a (possibly rectangular) matrix: the matrix
/// is padded square with zeros, which leaves the optimum over real pairs
/// unchanged.
fn optimal_cost(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    let m = cost.first().map_or(0, |r| r.len());
    if n == 0 || m == 0 {
        return 0.0;
    }
    let k = n.max(m);
    let a = |i: usize, j: usize| -> f64 {
        if i < n && j < m {
            cost[i][j]
        } else {
            0.0
        }
    };

    // Potentials + shortest augmenting path; rows and columns 1-based.
    let mut u = vec![0.0f64; k + 1];
    let mut v = vec![0.0f64; k + 1];
    let mut p = vec![0usize; k + 1]; // p[j]: row matched to column j
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=k {
                if !used[j] {
                    let cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=k)
        .filter(|&j| p[j] >= 1)
        .map(|j| a(p[j] - 1, j - 1))
        .sum()
}

/// Minimum-cost assignment of `min(n, m)` pairs, deterministic among ties:
/// rows are fixed in order, each to the smallest column index consistent
/// with global optimality (a row stays unassigned only when every optimal
/// assignment leaves it out).
pub fn hungarian(cost: &[Vec<f64>]) -> Assignment {
    let n = cost.len();
    let m = cost.first().map_or(0, |r| r.len());
    let opt = optimal_cost(cost);
    let tol = 1e-9 * (1.0 + opt.abs());

    let mut remaining_cols: Vec<usize> = (0..m).collect();
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(n.min(m));
    let mut target = opt;
    for i in 0..n {
        let rows_after: Vec<usize> = (i + 1..n).collect();
        let mut chosen: Option<usize> = None;
        for (pos, &j) in remaining_cols.iter().enumerate() {
            let sub: Vec<Vec<f64>> = rows_after
                .iter()
                .map(|&r| {
                    remaining_cols
                        .iter()
                        .filter(|&&c| c != j)
                        .map(|&c| cost[r][c])
                        .collect()
                })
                .collect();
            let rest = optimal_cost(&sub);
            if (cost[i][j] + rest - target).abs() <= tol {
                chosen = Some(pos);
                break;
            }
        }
        if let Some(pos) = chosen {
            let j = remaining_cols.remove(pos);
            target -= cost[i][j];
            pairs.push((i, j));
        }
    }
    debug_assert_eq!(pairs.len(), n.min(m));

    let mut row_to_col = vec![None; n];
    let mut col_to_row = vec![None; m];
    for &(r, c) in &pairs {
        row_to_col[r] = Some(c);
        col_to_row[c] = Some(r);
    }
    Assignment { pairs, total_cost: opt, row_to_col, col_to_row }
}
