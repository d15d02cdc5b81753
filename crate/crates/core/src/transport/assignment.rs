//! Square assignment by shortest augmenting paths with potentials.
//!
//! Rows are added one at a time; each insertion runs a Dijkstra-like search
//! on reduced costs `c[i][j] - u[i] - v[j] >= 0`. The final `(u, v)` is a
//! dual certificate: `u[i] + v[j] <= c[i][j]` with equality on the matching.

/// Optimal assignment of an `n x n` row-major cost matrix.
pub struct Assignment {
    /// `col_of[i]` is the column matched to row `i`.
    pub col_of: Vec<usize>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub cost: f64,
}

pub fn solve(cost: &[f64], n: usize) -> Assignment {
    assert_eq!(cost.len(), n * n);
    let inf = f64::INFINITY;
    // 1-based arrays with a virtual column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![inf; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = inf);
        used.iter_mut().for_each(|b| *b = false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let row = &cost[(i0 - 1) * n..i0 * n];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = row[j - 1] - u[i0] - v[j];
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
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0usize; n];
    for j in 1..=n {
        col_of[row_of[j] - 1] = j - 1;
    }
    let total = (0..n).map(|i| cost[i * n + col_of[i]]).sum();
    Assignment {
        col_of,
        u: u[1..].to_vec(),
        v: v[1..].to_vec(),
        cost: total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_known_instance() {
        let c = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let a = solve(&c, 3);
        assert_eq!(a.cost, 5.0);
        for i in 0..3 {
            for j in 0..3 {
                assert!(a.u[i] + a.v[j] <= c[i * 3 + j] + 1e-12);
            }
            assert!((a.u[i] + a.v[a.col_of[i]] - c[i * 3 + a.col_of[i]]).abs() < 1e-12);
        }
    }
}
