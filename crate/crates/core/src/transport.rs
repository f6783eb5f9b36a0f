//! Exact solver for balanced transportation problems.
//!
//! Primal network simplex on the bipartite supply/demand graph: a basis is a
//! spanning tree of `m + n - 1` cells, potentials come from the tree, the
//! entering cell is the most negative reduced cost (Dantzig), and the leaving
//! cell is the first blocking cell around the pivot cycle.

use std::collections::VecDeque;

use crate::error::{invalid, Error, Result};

/// A basis (spanning tree of cells) that can seed a later solve with the same
/// supplies and demands but different costs.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    cells: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub cost: f64,
    /// Nonzero flows as `(source, sink, amount)`.
    pub flows: Vec<(usize, usize, f64)>,
    /// Dual potentials `u` (sources) and `v` (sinks) with `u_i + v_j <= c_ij`,
    /// equality on basic cells.
    pub row_potentials: Vec<f64>,
    pub col_potentials: Vec<f64>,
    pub basis: Basis,
    pub pivots: usize,
}

/// Solves `min sum c_ij x_ij` subject to row sums `supply`, column sums
/// `demand`, `x >= 0`. `cost` is row-major `m x n`. Totals must agree to a
/// relative `1e-9`.
pub fn solve_transport(supply: &[f64], demand: &[f64], cost: &[f64], warm: Option<&Basis>) -> Result<TransportSolution> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 {
        return Err(invalid("transport problem needs at least one source and one sink"));
    }
    if cost.len() != m * n {
        return Err(invalid(format!("cost matrix has {} entries, expected {}", cost.len(), m * n)));
    }
    if supply.iter().chain(demand).any(|&a| !(a >= 0.0) || !a.is_finite()) {
        return Err(invalid("supplies and demands must be finite and nonnegative"));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(invalid("costs must be finite"));
    }
    let (ts, td): (f64, f64) = (supply.iter().sum(), demand.iter().sum());
    if (ts - td).abs() > 1e-9 * ts.max(td).max(1.0) {
        return Err(Error::MassMismatch { left: ts, right: td });
    }

    let mut tree = Tree::new(m, n);
    let warm_ok = match warm {
        Some(b) if b.cells.len() == m + n - 1 && b.cells.iter().all(|&(i, j)| i < m && j < n) => {
            tree.cells = b.cells.clone();
            tree.flows_from_balances(supply, demand)
        }
        _ => false,
    };
    if !warm_ok {
        tree.northwest_corner(supply, demand);
    }

    let scale = cost.iter().fold(0.0f64, |a, c| a.max(c.abs())).max(1e-300);
    let tol = 1e-12 * scale * ((m + n) as f64).sqrt().max(1.0);
    let max_pivots = 50 * (m + n) * (m + n) + 1000;
    let mut pivots = 0;
    loop {
        tree.index()?;
        tree.potentials(cost);
        let mut best = (usize::MAX, usize::MAX, -tol);
        for i in 0..m {
            let ui = tree.pot[i];
            let row = &cost[i * n..(i + 1) * n];
            for (j, &c) in row.iter().enumerate() {
                let rc = c - ui - tree.pot[m + j];
                if rc < best.2 {
                    best = (i, j, rc);
                }
            }
        }
        if best.0 == usize::MAX {
            break;
        }
        if pivots >= max_pivots {
            return Err(Error::Solver(format!("no convergence after {pivots} pivots")));
        }
        tree.pivot(best.0, best.1);
        pivots += 1;
    }

    let mut flows = Vec::new();
    let mut total = 0.0;
    for (e, &(i, j)) in tree.cells.iter().enumerate() {
        let f = tree.flow[e];
        if f > 0.0 {
            flows.push((i, j, f));
            total += f * cost[i * n + j];
        }
    }
    flows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    Ok(TransportSolution {
        cost: total,
        flows,
        row_potentials: tree.pot[..m].to_vec(),
        col_potentials: tree.pot[m..].to_vec(),
        basis: Basis { cells: tree.cells },
        pivots,
    })
}

// Nodes 0..m are sources, m..m+n sinks.
struct Tree {
    m: usize,
    n: usize,
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
    adj: Vec<Vec<(usize, usize)>>,
    parent: Vec<(usize, usize)>,
    depth: Vec<usize>,
    order: Vec<usize>,
    pot: Vec<f64>,
}

impl Tree {
    fn new(m: usize, n: usize) -> Self {
        Tree {
            m,
            n,
            cells: Vec::with_capacity(m + n - 1),
            flow: Vec::with_capacity(m + n - 1),
            adj: vec![Vec::new(); m + n],
            parent: vec![(usize::MAX, usize::MAX); m + n],
            depth: vec![0; m + n],
            order: Vec::with_capacity(m + n),
            pot: vec![0.0; m + n],
        }
    }

    fn northwest_corner(&mut self, supply: &[f64], demand: &[f64]) {
        let (m, n) = (self.m, self.n);
        let mut rs = supply.to_vec();
        let mut rd = demand.to_vec();
        self.cells.clear();
        self.flow.clear();
        let (mut i, mut j) = (0, 0);
        loop {
            let last = i == m - 1 && j == n - 1;
            let x = if last { rs[i].max(rd[j]) } else { rs[i].min(rd[j]) };
            self.cells.push((i, j));
            self.flow.push(x);
            if last {
                break;
            }
            rs[i] -= x;
            rd[j] -= x;
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 || rs[i] <= rd[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    /// Flows implied by the current tree; false if the tree does not span or
    /// the flows are infeasible.
    fn flows_from_balances(&mut self, supply: &[f64], demand: &[f64]) -> bool {
        let (m, n) = (self.m, self.n);
        let mut bal: Vec<f64> = supply.iter().copied().chain(demand.iter().map(|d| -d)).collect();
        let mut deg = vec![0usize; m + n];
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); m + n];
        for (e, &(i, j)) in self.cells.iter().enumerate() {
            deg[i] += 1;
            deg[m + j] += 1;
            incident[i].push(e);
            incident[m + j].push(e);
        }
        self.flow = vec![f64::NAN; self.cells.len()];
        let mut queue: VecDeque<usize> = (0..m + n).filter(|&v| deg[v] == 1).collect();
        let mut done = 0;
        while let Some(v) = queue.pop_front() {
            if deg[v] != 1 {
                continue;
            }
            let Some(&e) = incident[v].iter().find(|&&e| self.flow[e].is_nan()) else { continue };
            let (i, j) = self.cells[e];
            let other = if v == i { m + j } else { i };
            // Source leaves push their balance out; sink leaves pull theirs in.
            let f = if v < m { bal[v] } else { -bal[v] };
            self.flow[e] = f;
            bal[v] = 0.0;
            if other < m {
                bal[other] -= f;
            } else {
                bal[other] += f;
            }
            deg[v] = 0;
            deg[other] -= 1;
            if deg[other] == 1 {
                queue.push_back(other);
            }
            done += 1;
        }
        let scale = supply.iter().sum::<f64>().max(1.0);
        if done != self.cells.len() || self.flow.iter().any(|&f| !(f >= -1e-12 * scale)) {
            return false;
        }
        self.flow.iter_mut().for_each(|f| *f = f.max(0.0));
        true
    }

    fn index(&mut self) -> Result<()> {
        let m = self.m;
        self.adj.iter_mut().for_each(Vec::clear);
        for (e, &(i, j)) in self.cells.iter().enumerate() {
            self.adj[i].push((m + j, e));
            self.adj[m + j].push((i, e));
        }
        self.parent.iter_mut().for_each(|p| *p = (usize::MAX, usize::MAX));
        self.order.clear();
        self.order.push(0);
        self.parent[0] = (0, usize::MAX);
        self.depth[0] = 0;
        let mut head = 0;
        while head < self.order.len() {
            let v = self.order[head];
            head += 1;
            for k in 0..self.adj[v].len() {
                let (w, e) = self.adj[v][k];
                if self.parent[w].0 == usize::MAX {
                    self.parent[w] = (v, e);
                    self.depth[w] = self.depth[v] + 1;
                    self.order.push(w);
                }
            }
        }
        if self.order.len() != self.m + self.n {
            return Err(Error::Solver("basis does not span all nodes".into()));
        }
        Ok(())
    }

    fn potentials(&mut self, cost: &[f64]) {
        let (m, n) = (self.m, self.n);
        self.pot[0] = 0.0;
        for k in 1..self.order.len() {
            let w = self.order[k];
            let (v, e) = self.parent[w];
            let (i, j) = self.cells[e];
            let c = cost[i * n + j];
            self.pot[w] = c - self.pot[v];
        }
        debug_assert_eq!(self.pot.len(), m + n);
    }

    fn pivot(&mut self, i: usize, j: usize) {
        let m = self.m;
        // Path from sink j to source i through the tree, as edge ids.
        let (mut a, mut b) = (m + j, i);
        let mut from_a = Vec::new();
        let mut from_b = Vec::new();
        while self.depth[a] > self.depth[b] {
            from_a.push(self.parent[a].1);
            a = self.parent[a].0;
        }
        while self.depth[b] > self.depth[a] {
            from_b.push(self.parent[b].1);
            b = self.parent[b].0;
        }
        while a != b {
            from_a.push(self.parent[a].1);
            a = self.parent[a].0;
            from_b.push(self.parent[b].1);
            b = self.parent[b].0;
        }
        from_b.reverse();
        from_a.extend(from_b);
        let path = from_a;

        // Entering cell gains theta; path edges alternate -, +, -, ...
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (k, &e) in path.iter().enumerate().step_by(2) {
            if self.flow[e] < theta {
                theta = self.flow[e];
                leave = k;
            }
        }
        for (k, &e) in path.iter().enumerate() {
            if k % 2 == 0 {
                self.flow[e] -= theta;
            } else {
                self.flow[e] += theta;
            }
        }
        let slot = path[leave];
        self.cells[slot] = (i, j);
        self.flow[slot] = theta;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_assignment(cost: &[f64], n: usize) -> f64 {
        fn rec(cost: &[f64], n: usize, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if row == n {
                *best = best.min(acc);
                return;
            }
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    rec(cost, n, row + 1, used, acc + cost[row * n + j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(cost, n, 0, &mut vec![false; n], 0.0, &mut best);
        best
    }

    fn check_optimality(s: &[f64], d: &[f64], c: &[f64], sol: &TransportSolution) {
        let n = d.len();
        let mut rows = vec![0.0; s.len()];
        let mut cols = vec![0.0; n];
        for &(i, j, f) in &sol.flows {
            assert!(f >= 0.0);
            rows[i] += f;
            cols[j] += f;
        }
        for (a, b) in rows.iter().zip(s).chain(cols.iter().zip(d)) {
            assert!((a - b).abs() < 1e-9);
        }
        let mut dual = 0.0;
        for (i, &u) in sol.row_potentials.iter().enumerate() {
            dual += u * s[i];
            for (j, &v) in sol.col_potentials.iter().enumerate() {
                assert!(u + v <= c[i * n + j] + 1e-9);
            }
        }
        dual += sol.col_potentials.iter().zip(d).map(|(v, b)| v * b).sum::<f64>();
        assert!((dual - sol.cost).abs() < 1e-9, "dual {dual} vs primal {}", sol.cost);
    }

    #[test]
    fn uniform_assignment_matches_permutations() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=6 {
            for _ in 0..40 {
                let c: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
                let s = vec![1.0 / n as f64; n];
                let sol = solve_transport(&s, &s, &c, None).unwrap();
                assert!((sol.cost - brute_assignment(&c, n) / n as f64).abs() < 1e-12);
                check_optimality(&s, &s, &c, &sol);
            }
        }
    }

    #[test]
    fn rectangular_with_warm_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let (m, n) = (rng.random_range(1..25), rng.random_range(1..25));
            let mut s: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let d: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let k = d.iter().sum::<f64>() / s.iter().sum::<f64>();
            s.iter_mut().for_each(|x| *x *= k);
            let c: Vec<f64> = (0..m * n).map(|_| rng.random::<f64>()).collect();
            let cold = solve_transport(&s, &d, &c, None).unwrap();
            check_optimality(&s, &d, &c, &cold);
            let c2: Vec<f64> = c.iter().map(|x| x + 0.3 * rng.random::<f64>()).collect();
            let warm = solve_transport(&s, &d, &c2, Some(&cold.basis)).unwrap();
            let fresh = solve_transport(&s, &d, &c2, None).unwrap();
            assert!((warm.cost - fresh.cost).abs() < 1e-10, "warm {} fresh {} m {m} n {n}", warm.cost, fresh.cost);
            check_optimality(&s, &d, &c2, &warm);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(solve_transport(&[1.0], &[2.0], &[0.0], None), Err(Error::MassMismatch { .. })));
        assert!(solve_transport(&[1.0], &[1.0], &[0.0, 1.0], None).is_err());
        assert!(solve_transport(&[-1.0, 2.0], &[1.0], &[0.0, 1.0], None).is_err());
    }
}
