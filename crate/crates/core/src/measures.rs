//! Finitely supported measures, piecewise-uniform planar measures, and the
//! bounded-Lipschitz and Wasserstein-1 distances between discrete measures.
//!
//! Both distances are computed exactly through [`solve_transport`].
//!
//! * `w1_distance` is the optimal transport cost with Euclidean ground cost.
//! * `bl_distance` is the bounded-Lipschitz distance
//!   `sup { ∫f d(μ-ν) : Lip f + ‖f‖∞ <= 1 }`. On finite supports this is the
//!   linear program over the values `f_i` and the split `L + C <= 1`. Its dual
//!   is `min_π max(T(π), D(π))` over partial transports, where `T` is the
//!   transported cost and `D` the mass created or deleted. For a fixed weight
//!   `t`, `min t·T + (1-t)·D` is a transportation problem with a dummy
//!   source/sink priced at `1-t`. That weighted minimum is concave and
//!   piecewise linear in `t`, and its maximum, which is the distance, is
//!   located exactly by intersecting supporting lines.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geom::{check_dim, squared_distance};
use crate::polygon::{clip_box, is_convex_ccw, signed_area};
use crate::transport::{solve_transport, Basis, TransportSolution};

/// A finitely supported measure with pairwise distinct atom locations.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    locations: Vec<f64>,
    weights: Vec<f64>,
    signed: bool,
}

fn location_key(p: &[f64]) -> Vec<u64> {
    // +0.0 and -0.0 are the same location.
    p.iter().map(|&c| if c == 0.0 { 0 } else { c.to_bits() }).collect()
}

impl DiscreteMeasure {
    /// Nonnegative measure from a flat location buffer. Atoms sharing a
    /// location are merged by summing their weights.
    pub fn new(dim: usize, locations: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        DiscreteMeasure::build(dim, locations, weights, false)
    }

    /// Signed measure; weights may be negative.
    pub fn new_signed(dim: usize, locations: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        DiscreteMeasure::build(dim, locations, weights, true)
    }

    pub fn dirac(point: &[f64]) -> Result<Self> {
        DiscreteMeasure::new(point.len(), point.to_vec(), vec![1.0])
    }

    pub fn zero(dim: usize) -> Self {
        DiscreteMeasure { dim, locations: Vec::new(), weights: Vec::new(), signed: false }
    }

    fn build(dim: usize, locations: Vec<f64>, weights: Vec<f64>, signed: bool) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if locations.len() != weights.len() * dim {
            return Err(invalid(format!("{} coordinates do not match {} atoms in dimension {dim}", locations.len(), weights.len())));
        }
        if let Some(pos) = locations.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index: pos / dim });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(invalid("atom weights must be finite"));
        }
        if !signed && weights.iter().any(|&w| w < 0.0) {
            return Err(Error::SignedInput);
        }
        let mut slot: HashMap<Vec<u64>, usize> = HashMap::with_capacity(weights.len());
        let mut locs = Vec::with_capacity(locations.len());
        let mut ws: Vec<f64> = Vec::with_capacity(weights.len());
        for (p, &w) in locations.chunks_exact(dim).zip(&weights) {
            match slot.get(&location_key(p)) {
                Some(&k) => ws[k] += w,
                None => {
                    slot.insert(location_key(p), ws.len());
                    locs.extend(p.iter().map(|&c| if c == 0.0 { 0.0 } else { c }));
                    ws.push(w);
                }
            }
        }
        Ok(DiscreteMeasure { dim, locations: locs, weights: ws, signed })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn location(&self, i: usize) -> &[f64] {
        &self.locations[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.locations.chunks_exact(self.dim).zip(self.weights.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.weights.iter_mut().for_each(|w| *w *= factor);
        if factor < 0.0 {
            out.signed = true;
        }
        out
    }

    /// `∫ f dμ`.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.atoms().map(|(x, w)| w * f(x)).sum()
    }
}

/// A segment carrying uniform linear density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentPart {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub density: f64,
}

/// A convex planar polygon carrying uniform area density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPart {
    pub vertices: Vec<[f64; 2]>,
    pub density: f64,
}

/// Atoms plus uniform densities on segments and (planar) convex polygons.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseMeasure {
    atoms: DiscreteMeasure,
    segments: Vec<SegmentPart>,
    regions: Vec<RegionPart>,
}

impl PiecewiseMeasure {
    pub fn new(atoms: DiscreteMeasure, segments: Vec<SegmentPart>, regions: Vec<RegionPart>) -> Result<Self> {
        let dim = atoms.dim();
        if atoms.is_signed() {
            return Err(Error::SignedInput);
        }
        for s in &segments {
            check_dim(dim, s.a.len())?;
            check_dim(dim, s.b.len())?;
            if !(s.density >= 0.0) {
                return Err(invalid("segment density must be nonnegative"));
            }
        }
        if !regions.is_empty() && dim != 2 {
            return Err(invalid("polygon regions are only supported in the plane"));
        }
        for reg in &regions {
            if !(reg.density >= 0.0) {
                return Err(invalid("region density must be nonnegative"));
            }
            if !is_convex_ccw(&reg.vertices) {
                return Err(invalid("region must be a convex counter-clockwise polygon"));
            }
        }
        Ok(PiecewiseMeasure { atoms, segments, regions })
    }

    pub fn dim(&self) -> usize {
        self.atoms.dim()
    }

    pub fn atoms(&self) -> &DiscreteMeasure {
        &self.atoms
    }

    pub fn segments(&self) -> &[SegmentPart] {
        &self.segments
    }

    pub fn regions(&self) -> &[RegionPart] {
        &self.regions
    }

    pub fn total_mass(&self) -> f64 {
        let seg: f64 = self.segments.iter().map(|s| s.density * squared_distance(&s.a, &s.b).sqrt()).sum();
        let reg: f64 = self.regions.iter().map(|r| r.density * signed_area(&r.vertices)).sum();
        self.atoms.total_mass() + seg + reg
    }

    /// Replaces the continuous parts by atoms. Each segment is cut into
    /// `bins` equal pieces with their mass at the midpoints; each polygon is
    /// rasterized on a `bins x bins` grid over its bounding box, each cell's
    /// exact clipped mass placed at the cell center.
    pub fn discretize(&self, bins: usize) -> Result<DiscreteMeasure> {
        if bins == 0 {
            return Err(invalid("discretize needs at least one bin"));
        }
        let dim = self.dim();
        let mut locs = self.atoms.locations().to_vec();
        let mut ws = self.atoms.weights().to_vec();
        for s in &self.segments {
            let mass = s.density * squared_distance(&s.a, &s.b).sqrt() / bins as f64;
            for k in 0..bins {
                let t = (k as f64 + 0.5) / bins as f64;
                locs.extend(s.a.iter().zip(&s.b).map(|(a, b)| a + t * (b - a)));
                ws.push(mass);
            }
        }
        for reg in &self.regions {
            let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for v in &reg.vertices {
                for k in 0..2 {
                    lo[k] = lo[k].min(v[k]);
                    hi[k] = hi[k].max(v[k]);
                }
            }
            let (wx, wy) = ((hi[0] - lo[0]) / bins as f64, (hi[1] - lo[1]) / bins as f64);
            for i in 0..bins {
                for j in 0..bins {
                    let clo = [lo[0] + i as f64 * wx, lo[1] + j as f64 * wy];
                    let chi = [clo[0] + wx, clo[1] + wy];
                    let piece = clip_box(&reg.vertices, clo, chi);
                    if piece.len() < 3 {
                        continue;
                    }
                    let area = signed_area(&piece);
                    if area > 0.0 {
                        locs.extend([clo[0] + wx / 2.0, clo[1] + wy / 2.0]);
                        ws.push(reg.density * area);
                    }
                }
            }
        }
        DiscreteMeasure::new(dim, locs, ws)
    }
}

// Union of supports and the signed difference μ - ν on it.
fn signed_difference(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> (Vec<f64>, Vec<f64>) {
    let dim = mu.dim();
    let mut slot: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut locs = Vec::new();
    let mut g = Vec::new();
    for (m, sign) in [(mu, 1.0), (nu, -1.0)] {
        for (x, w) in m.atoms() {
            let key = location_key(x);
            let k = *slot.entry(key).or_insert_with(|| {
                locs.extend_from_slice(x);
                g.push(0.0);
                g.len() - 1
            });
            g[k] += sign * w;
        }
    }
    debug_assert_eq!(locs.len(), g.len() * dim);
    (locs, g)
}

/// Bounded-Lipschitz distance between two (possibly signed) discrete measures.
pub fn bl_distance(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    check_dim(mu.dim(), nu.dim())?;
    let dim = mu.dim();
    let (locs, g) = signed_difference(mu, nu);
    let pos: Vec<usize> = (0..g.len()).filter(|&i| g[i] > 0.0).collect();
    let neg: Vec<usize> = (0..g.len()).filter(|&i| g[i] < 0.0).collect();
    if pos.is_empty() && neg.is_empty() {
        return Ok(0.0);
    }
    let at = |i: usize| &locs[i * dim..(i + 1) * dim];
    let total_pos: f64 = pos.iter().map(|&i| g[i]).sum();
    let total_neg: f64 = neg.iter().map(|&i| -g[i]).sum();

    // Sources: positive atoms, then a dummy that can create mass.
    // Sinks: negative atoms, then a dummy that can absorb mass.
    let supply: Vec<f64> = pos.iter().map(|&i| g[i]).chain([total_neg]).collect();
    let demand: Vec<f64> = neg.iter().map(|&i| -g[i]).chain([total_pos]).collect();
    let (m, n) = (supply.len(), demand.len());
    let mut dist = vec![0.0; m * n];
    for (a, &i) in pos.iter().enumerate() {
        for (b, &j) in neg.iter().enumerate() {
            dist[a * n + b] = squared_distance(at(i), at(j)).sqrt();
        }
    }

    let mut basis: Option<Basis> = None;
    let mut cost = vec![0.0; m * n];
    let mut solve = |t: f64| -> Result<(f64, f64)> {
        for a in 0..m {
            for b in 0..n {
                let (real_src, real_dst) = (a + 1 < m, b + 1 < n);
                cost[a * n + b] = match (real_src, real_dst) {
                    (true, true) => t * dist[a * n + b],
                    (false, false) => 0.0,
                    _ => 1.0 - t,
                };
            }
        }
        let sol = solve_transport(&supply, &demand, &cost, basis.as_ref())?;
        let (mut transported, mut deleted) = (0.0, 0.0);
        for &(a, b, f) in &sol.flows {
            match (a + 1 < m, b + 1 < n) {
                (true, true) => transported += f * dist[a * n + b],
                (false, false) => {}
                _ => deleted += f,
            }
        }
        basis = Some(sol.basis);
        Ok((transported, deleted))
    };

    let line = |(tr, de): (f64, f64), t: f64| t * tr + (1.0 - t) * de;
    let (mut a, mut b) = (0.0, 1.0);
    let mut la = solve(a)?;
    let mut lb = solve(b)?;
    let scale = (total_pos + total_neg).max(1e-300);
    for _ in 0..200 {
        let sa = la.0 - la.1;
        let sb = lb.0 - lb.1;
        if sa <= 0.0 {
            return Ok(line(la, a));
        }
        if sb >= 0.0 {
            return Ok(line(lb, b));
        }
        let t = ((lb.1 - la.1) / (sa - sb)).clamp(a, b);
        let lt = solve(t)?;
        let value = line(lt, t);
        let upper = line(la, t).min(line(lb, t));
        if value >= upper - 1e-13 * scale {
            return Ok(value);
        }
        let st = lt.0 - lt.1;
        if st > 0.0 {
            a = t;
            la = lt;
        } else if st < 0.0 {
            b = t;
            lb = lt;
        } else {
            return Ok(value);
        }
    }
    Err(Error::Solver("bounded-Lipschitz search did not converge".into()))
}

/// Optimal transport between two nonnegative measures of equal mass.
#[derive(Debug, Clone)]
pub struct W1Solution {
    pub cost: f64,
    /// `(atom of μ, atom of ν, mass)`.
    pub plan: Vec<(usize, usize, f64)>,
    /// Kantorovich potentials with `u_i + v_j <= |x_i - y_j|`.
    pub mu_potentials: Vec<f64>,
    pub nu_potentials: Vec<f64>,
}

pub fn w1_transport(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<W1Solution> {
    check_dim(mu.dim(), nu.dim())?;
    if mu.is_signed() || nu.is_signed() || mu.weights().iter().chain(nu.weights()).any(|&w| w < 0.0) {
        return Err(Error::SignedInput);
    }
    let (a, b) = (mu.total_mass(), nu.total_mass());
    if !(a > 0.0) || (a - b).abs() > 1e-9 {
        return Err(Error::MassMismatch { left: a, right: b });
    }
    let (m, n) = (mu.len(), nu.len());
    let mut cost = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            cost.push(squared_distance(mu.location(i), nu.location(j)).sqrt());
        }
    }
    // Absorb the tolerated rounding gap into the last sink.
    let mut demand = nu.weights().to_vec();
    if let Some(last) = demand.last_mut() {
        *last = (*last + a - b).max(0.0);
    }
    let TransportSolution { cost: total, flows, row_potentials, col_potentials, .. } = solve_transport(mu.weights(), &demand, &cost, None)?;
    Ok(W1Solution { cost: total, plan: flows, mu_potentials: row_potentials, nu_potentials: col_potentials })
}

/// Wasserstein-1 distance with Euclidean ground cost.
pub fn w1_distance(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    Ok(w1_transport(mu, nu)?.cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m1(points: &[f64], weights: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::new(1, points.to_vec(), weights.to_vec()).unwrap()
    }

    #[test]
    fn construction_merges_duplicates() {
        let m = DiscreteMeasure::new(2, vec![0.0, 1.0, 2.0, 3.0, 0.0, 1.0, -0.0, 1.0], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.weights(), &[8.0, 2.0]);
        assert!(matches!(DiscreteMeasure::new(1, vec![0.0], vec![-1.0]), Err(Error::SignedInput)));
        assert!(DiscreteMeasure::new_signed(1, vec![0.0], vec![-1.0]).is_ok());
        assert!(DiscreteMeasure::new(1, vec![0.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn masses() {
        assert_eq!(DiscreteMeasure::dirac(&[3.0, 4.0]).unwrap().total_mass(), 1.0);
        let seg = SegmentPart { a: vec![0.0, 0.0], b: vec![1.0, 0.0], density: 3.0 };
        let pm = PiecewiseMeasure::new(DiscreteMeasure::zero(2), vec![seg], vec![]).unwrap();
        assert_eq!(pm.total_mass(), 3.0);
    }

    #[test]
    fn discretize_segment_and_atoms() {
        let r = 0.2;
        let atoms = DiscreteMeasure::new(2, vec![5.0, 5.0], vec![0.5]).unwrap();
        let pure = PiecewiseMeasure::new(atoms.clone(), vec![], vec![]).unwrap();
        assert_eq!(pure.discretize(3).unwrap(), atoms);

        let seg = SegmentPart { a: vec![0.0, 0.0], b: vec![1.0, 0.0], density: 2.0 * r };
        let pm = PiecewiseMeasure::new(DiscreteMeasure::zero(2), vec![seg], vec![]).unwrap();
        let d = pm.discretize(4).unwrap();
        assert_eq!(d.len(), 4);
        for (k, (x, w)) in d.atoms().enumerate() {
            assert!((x[0] - (2 * k + 1) as f64 / 8.0).abs() < 1e-15);
            assert!((w - r / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn discretize_conserves_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let k = rng.random_range(1..20);
            let hex: Vec<[f64; 2]> = (0..6)
                .map(|i| {
                    let a = i as f64 * std::f64::consts::PI / 3.0 + 0.1;
                    [a.cos() * 2.0 + 0.3, a.sin()]
                })
                .collect();
            let pm = PiecewiseMeasure::new(
                DiscreteMeasure::new(2, vec![0.0, 0.0, 1.0, 2.0], vec![rng.random(), rng.random()]).unwrap(),
                vec![SegmentPart { a: vec![0.0, 0.0], b: vec![rng.random(), rng.random()], density: rng.random() }],
                vec![RegionPart { vertices: hex, density: rng.random() }],
            )
            .unwrap();
            let d = pm.discretize(k).unwrap();
            assert!((d.total_mass() - pm.total_mass()).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_pieces() {
        let bad = RegionPart { vertices: vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]], density: 1.0 };
        assert!(PiecewiseMeasure::new(DiscreteMeasure::zero(2), vec![], vec![bad]).is_err());
        let neg = SegmentPart { a: vec![0.0], b: vec![1.0], density: -1.0 };
        assert!(PiecewiseMeasure::new(DiscreteMeasure::zero(1), vec![neg], vec![]).is_err());
    }

    #[test]
    fn bl_two_diracs() {
        for d in [0.1, 0.5, 1.0, 3.0, 10.0] {
            let got = bl_distance(&m1(&[0.0], &[1.0]), &m1(&[d], &[1.0])).unwrap();
            assert!((got - 2.0 * d / (d + 2.0)).abs() < 1e-12, "d={d}: {got}");
        }
        let mu = m1(&[0.0, 1.0], &[0.3, 0.7]);
        assert_eq!(bl_distance(&mu, &mu).unwrap(), 0.0);
        // Unequal masses with no transport possible: delete everything.
        assert!((bl_distance(&m1(&[0.0], &[0.4]), &DiscreteMeasure::zero(1)).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn w1_examples() {
        assert!((w1_distance(&m1(&[0.0], &[1.0]), &m1(&[2.5], &[1.0])).unwrap() - 2.5).abs() < 1e-15);
        let mu = m1(&[0.0, 1.0, 4.0], &[0.2, 0.3, 0.5]);
        assert_eq!(w1_distance(&mu, &mu).unwrap(), 0.0);
        // On the line W1 is the L1 distance between CDFs.
        let nu = m1(&[0.5, 3.0], &[0.5, 0.5]);
        // CDF gap: [0,0.5): 0.2, [0.5,1): 0.3, [1,3): 0.0, [3,4): 0.5
        let expected = 0.2 * 0.5 + 0.3 * 0.5 + 0.0 * 2.0 + 0.5 * 1.0;
        assert!((w1_distance(&mu, &nu).unwrap() - expected).abs() < 1e-12);
        assert!(matches!(w1_distance(&mu, &m1(&[0.0], &[2.0])), Err(Error::MassMismatch { .. })));
        let signed = DiscreteMeasure::new_signed(1, vec![0.0], vec![1.0]).unwrap();
        assert!(matches!(w1_distance(&signed, &mu), Err(Error::SignedInput)));
    }

    // Vertex enumeration of the bounded-Lipschitz LP over values f_1..f_k and
    // the split (L, C): every basic solution is the solution of k + 2 tight
    // constraints; the optimum is the best feasible one.
    fn bl_by_vertex_enumeration(points: &[f64], dim: usize, g: &[f64]) -> f64 {
        let k = g.len();
        let nv = k + 2;
        let (li, ci) = (k, k + 1);
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    let d = squared_distance(&points[i * dim..(i + 1) * dim], &points[j * dim..(j + 1) * dim]).sqrt();
                    let mut a = vec![0.0; nv];
                    a[i] += 1.0;
                    a[j] -= 1.0;
                    a[li] -= d;
                    rows.push((a, 0.0));
                }
            }
            for s in [1.0, -1.0] {
                let mut a = vec![0.0; nv];
                a[i] = s;
                a[ci] = -1.0;
                rows.push((a, 0.0));
            }
        }
        let mut a = vec![0.0; nv];
        a[li] = 1.0;
        a[ci] = 1.0;
        rows.push((a, 1.0));
        for v in [li, ci] {
            let mut a = vec![0.0; nv];
            a[v] = -1.0;
            rows.push((a, 0.0));
        }
        let mut best = f64::NEG_INFINITY;
        let mut pick = Vec::with_capacity(nv);
        choose(&rows, nv, 0, &mut pick, &mut |sel| {
            if let Some(x) = solve_dense(sel.iter().map(|&r| rows[r].clone()).collect(), nv) {
                if rows.iter().all(|(a, b)| a.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= b + 1e-9) {
                    best = best.max(g.iter().zip(&x).map(|(p, q)| p * q).sum());
                }
            }
        });
        best
    }

    fn choose(rows: &[(Vec<f64>, f64)], k: usize, start: usize, pick: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if pick.len() == k {
            f(pick);
            return;
        }
        for r in start..rows.len() {
            pick.push(r);
            choose(rows, k, r + 1, pick, f);
            pick.pop();
        }
    }

    fn solve_dense(mut sys: Vec<(Vec<f64>, f64)>, n: usize) -> Option<Vec<f64>> {
        for c in 0..n {
            let p = (c..n).max_by(|&a, &b| sys[a].0[c].abs().total_cmp(&sys[b].0[c].abs()))?;
            if sys[p].0[c].abs() < 1e-12 {
                return None;
            }
            sys.swap(c, p);
            for r in 0..n {
                if r != c {
                    let f = sys[r].0[c] / sys[c].0[c];
                    let (pivot_row, pivot_rhs) = (sys[c].0.clone(), sys[c].1);
                    sys[r].0.iter_mut().zip(&pivot_row).for_each(|(x, y)| *x -= f * y);
                    sys[r].1 -= f * pivot_rhs;
                }
            }
        }
        Some((0..n).map(|c| sys[c].1 / sys[c].0[c]).collect())
    }

    #[test]
    fn bl_matches_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..40 {
            let k = 2 + trial % 3;
            let dim = 2;
            let pts: Vec<f64> = (0..k * dim).map(|_| rng.random_range(-1.5..1.5)).collect();
            let wa: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
            let wb: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
            let mu = DiscreteMeasure::new(dim, pts.clone(), wa.clone()).unwrap();
            let nu = DiscreteMeasure::new(dim, pts.clone(), wb.clone()).unwrap();
            let g: Vec<f64> = wa.iter().zip(&wb).map(|(a, b)| a - b).collect();
            let oracle = bl_by_vertex_enumeration(&pts, dim, &g);
            let got = bl_distance(&mu, &nu).unwrap();
            assert!((got - oracle).abs() < 1e-9, "trial {trial}: {got} vs {oracle}");
        }
    }

    fn measure_strategy(max_atoms: usize) -> impl Strategy<Value = DiscreteMeasure> {
        prop::collection::vec(((0.0f64..0.7, 0.0f64..0.7), 0.01f64..1.0), 1..max_atoms).prop_map(|atoms| {
            let total: f64 = atoms.iter().map(|a| a.1).sum();
            let locs = atoms.iter().flat_map(|a| [a.0 .0, a.0 .1]).collect();
            let ws = atoms.iter().map(|a| a.1 / total).collect();
            DiscreteMeasure::new(2, locs, ws).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn distances_are_metrics(a in measure_strategy(7), b in measure_strategy(7), c in measure_strategy(7)) {
            for f in [bl_distance as fn(&DiscreteMeasure, &DiscreteMeasure) -> Result<f64>, w1_distance] {
                let ab = f(&a, &b).unwrap();
                let ba = f(&b, &a).unwrap();
                let bc = f(&b, &c).unwrap();
                let ac = f(&a, &c).unwrap();
                prop_assert!((ab - ba).abs() < 1e-9);
                prop_assert!(ac <= ab + bc + 1e-9);
            }
        }

        #[test]
        fn bl_below_w1_on_unit_diameter_support(a in measure_strategy(7), b in measure_strategy(7)) {
            // Supports lie in [0, 0.7]^2, of diameter below one.
            let bl = bl_distance(&a, &b).unwrap();
            prop_assert!(bl <= w1_distance(&a, &b).unwrap() + 1e-9);
            prop_assert!(bl <= 2.0 + 1e-12);
        }

        #[test]
        fn bl_bounded_by_masses(a in measure_strategy(6), s in 0.1f64..3.0, b in measure_strategy(6)) {
            let scaled = a.scaled(s);
            let bl = bl_distance(&scaled, &b).unwrap();
            prop_assert!(bl <= scaled.total_mass() + b.total_mass() + 1e-9);
        }
    }
}
