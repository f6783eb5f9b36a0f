//! Exact nearest-neighbor and closed-ball counting queries.
//!
//! Low-dimensional clouds are indexed with a kd-tree; above
//! [`KD_TREE_MAX_DIM`] dimensions queries fall back to a linear scan. Both
//! paths compare squared distances computed by [`squared_distance`], so their
//! answers are identical, including the lowest-index tie rule.

use crate::error::Result;
use crate::geom::{check_dim, squared_distance, PointCloud};

/// Dimensions above this use brute force.
pub const KD_TREE_MAX_DIM: usize = 16;

const LEAF_SIZE: usize = 8;

// Relative slack on cell lower bounds. The bound is rounded, so a cell is only
// pruned when it is clearly farther than the current best.
const PRUNE_SLACK: f64 = 1.0 + 1e-9;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { left: usize, right: usize },
}

/// Immutable exact search structure over a point cloud.
#[derive(Debug, Clone)]
pub struct NearestIndex {
    cloud: PointCloud,
    // Points in tree order, flattened, with their original indices.
    ordered: Vec<f64>,
    ids: Vec<usize>,
    nodes: Vec<Node>,
    // Tight bounding box of each node, `lo` then `hi`, `2 * dim` values per node.
    bounds: Vec<f64>,
}

impl NearestIndex {
    pub fn build(cloud: PointCloud) -> Self {
        let dim = cloud.dim();
        let mut ids: Vec<usize> = (0..cloud.len()).collect();
        let mut nodes = Vec::new();
        if dim <= KD_TREE_MAX_DIM {
            build_node(&cloud, &mut ids, 0, &mut nodes);
        }
        let ordered: Vec<f64> = ids.iter().flat_map(|&i| cloud.point(i).iter().copied()).collect();
        let mut bounds = vec![0.0; 2 * dim * nodes.len()];
        if !nodes.is_empty() {
            fill_bounds(&nodes, &ordered, dim, 0, &mut bounds);
        }
        NearestIndex { cloud, ordered, ids, nodes, bounds }
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn dim(&self) -> usize {
        self.cloud.dim()
    }

    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    // Squared distance from `q` to the bounding box of `node`.
    #[inline]
    fn box_distance_sq(&self, node: usize, q: &[f64]) -> f64 {
        let d = q.len();
        let b = &self.bounds[2 * d * node..2 * d * (node + 1)];
        let mut s = 0.0;
        for k in 0..d {
            let g = (b[k] - q[k]).max(q[k] - b[d + k]).max(0.0);
            s += g * g;
        }
        s
    }

    #[inline]
    fn slot(&self, k: usize) -> &[f64] {
        let d = self.cloud.dim();
        &self.ordered[k * d..(k + 1) * d]
    }

    /// Index of the closest cloud point and its distance. Ties go to the
    /// lowest index.
    pub fn nearest(&self, q: &[f64]) -> Result<(usize, f64)> {
        check_dim(self.dim(), q.len())?;
        Ok(self.nearest_unchecked(q))
    }

    pub(crate) fn nearest_unchecked(&self, q: &[f64]) -> (usize, f64) {
        let (i, d2) = self.nearest_sq(q);
        (i, d2.sqrt())
    }

    pub(crate) fn nearest_sq(&self, q: &[f64]) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        if self.nodes.is_empty() {
            self.scan_nearest(0, self.ids.len(), q, &mut best);
        } else {
            self.search_nearest(0, q, &mut best);
        }
        best
    }

    fn scan_nearest(&self, start: usize, end: usize, q: &[f64], best: &mut (usize, f64)) {
        for k in start..end {
            let d2 = squared_distance(self.slot(k), q);
            let id = self.ids[k];
            if d2 < best.1 || (d2 == best.1 && id < best.0) {
                *best = (id, d2);
            }
        }
    }

    fn search_nearest(&self, node: usize, q: &[f64], best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => self.scan_nearest(start, end, q, best),
            Node::Split { left, right, .. } => {
                let (dl, dr) = (self.box_distance_sq(left, q), self.box_distance_sq(right, q));
                let ((near, dn), (far, df)) = if dl <= dr { ((left, dl), (right, dr)) } else { ((right, dr), (left, dl)) };
                // Equal-distance candidates must still be visited for the tie rule.
                if dn <= best.1 * PRUNE_SLACK {
                    self.search_nearest(near, q, best);
                }
                if df <= best.1 * PRUNE_SLACK {
                    self.search_nearest(far, q, best);
                }
            }
        }
    }

    /// The `k` closest points as `(index, distance)`, nearest first.
    pub fn k_nearest(&self, q: &[f64], k: usize) -> Result<Vec<(usize, f64)>> {
        check_dim(self.dim(), q.len())?;
        let mut found: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        if k > 0 {
            if self.nodes.is_empty() {
                self.scan_k(0, self.ids.len(), q, k, &mut found);
            } else {
                self.search_k(0, q, k, &mut found);
            }
        }
        Ok(found.into_iter().map(|(d2, i)| (i, d2.sqrt())).collect())
    }

    fn scan_k(&self, start: usize, end: usize, q: &[f64], k: usize, found: &mut Vec<(f64, usize)>) {
        for s in start..end {
            let cand = (squared_distance(self.slot(s), q), self.ids[s]);
            if found.len() == k && !lex_less(cand, found[k - 1]) {
                continue;
            }
            let pos = found.partition_point(|&x| lex_less(x, cand));
            found.insert(pos, cand);
            found.truncate(k);
        }
    }

    fn search_k(&self, node: usize, q: &[f64], k: usize, found: &mut Vec<(f64, usize)>) {
        if found.len() == k && self.box_distance_sq(node, q) > found[k - 1].0 * PRUNE_SLACK {
            return;
        }
        match self.nodes[node] {
            Node::Leaf { start, end } => self.scan_k(start, end, q, k, found),
            Node::Split { left, right, .. } => {
                let (near, far) =
                    if self.box_distance_sq(left, q) <= self.box_distance_sq(right, q) { (left, right) } else { (right, left) };
                self.search_k(near, q, k, found);
                self.search_k(far, q, k, found);
            }
        }
    }

    /// Number of cloud points in the closed ball `B(q, r)`.
    pub fn count_within(&self, q: &[f64], r: f64) -> Result<usize> {
        check_dim(self.dim(), q.len())?;
        Ok(self.count_within_unchecked(q, r, usize::MAX))
    }

    /// Like [`count_within`](Self::count_within) but stops once `limit`
    /// points are found, returning `min(count, limit)`.
    pub(crate) fn count_within_unchecked(&self, q: &[f64], r: f64, limit: usize) -> usize {
        let r2 = r * r;
        let mut count = 0;
        if self.nodes.is_empty() {
            self.scan_count(0, self.ids.len(), q, r2, limit, &mut count);
        } else {
            self.search_count(0, q, r2, limit, &mut count);
        }
        count
    }

    fn scan_count(&self, start: usize, end: usize, q: &[f64], r2: f64, limit: usize, count: &mut usize) {
        for k in start..end {
            if squared_distance(self.slot(k), q) <= r2 {
                *count += 1;
                if *count >= limit {
                    return;
                }
            }
        }
    }

    fn search_count(&self, node: usize, q: &[f64], r2: f64, limit: usize, count: &mut usize) {
        if *count >= limit || self.box_distance_sq(node, q) > r2 * PRUNE_SLACK {
            return;
        }
        match self.nodes[node] {
            Node::Leaf { start, end } => self.scan_count(start, end, q, r2, limit, count),
            Node::Split { left, right, .. } => {
                self.search_count(left, q, r2, limit, count);
                self.search_count(right, q, r2, limit, count);
            }
        }
    }
}

fn lex_less(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

fn fill_bounds(nodes: &[Node], ordered: &[f64], dim: usize, node: usize, bounds: &mut [f64]) {
    let mut b = vec![f64::INFINITY; dim];
    b.extend(std::iter::repeat_n(f64::NEG_INFINITY, dim));
    match nodes[node] {
        Node::Leaf { start, end } => {
            for p in ordered[start * dim..end * dim].chunks_exact(dim) {
                for k in 0..dim {
                    b[k] = b[k].min(p[k]);
                    b[dim + k] = b[dim + k].max(p[k]);
                }
            }
        }
        Node::Split { left, right, .. } => {
            for child in [left, right] {
                fill_bounds(nodes, ordered, dim, child, bounds);
                let c = &bounds[2 * dim * child..2 * dim * (child + 1)];
                for k in 0..dim {
                    b[k] = b[k].min(c[k]);
                    b[dim + k] = b[dim + k].max(c[dim + k]);
                }
            }
        }
    }
    bounds[2 * dim * node..2 * dim * (node + 1)].copy_from_slice(&b);
}

// Splits on the axis of largest spread at the median. Points equal to the
// split value may land on either side; queries prune on tight cell boxes, so
// this is safe.
fn build_node(cloud: &PointCloud, ids: &mut [usize], offset: usize, nodes: &mut Vec<Node>) -> usize {
    let me = nodes.len();
    if ids.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf { start: offset, end: offset + ids.len() });
        return me;
    }
    let dim = cloud.dim();
    let mut axis = 0;
    let mut spread = -1.0;
    for k in 0..dim {
        let (lo, hi) = ids.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            let v = cloud.point(i)[k];
            (lo.min(v), hi.max(v))
        });
        if hi - lo > spread {
            spread = hi - lo;
            axis = k;
        }
    }
    if spread <= 0.0 {
        nodes.push(Node::Leaf { start: offset, end: offset + ids.len() });
        return me;
    }
    let mid = ids.len() / 2;
    ids.select_nth_unstable_by(mid, |&a, &b| cloud.point(a)[axis].total_cmp(&cloud.point(b)[axis]));
    nodes.push(Node::Leaf { start: 0, end: 0 });
    let (lo, hi) = ids.split_at_mut(mid);
    let left = build_node(cloud, lo, offset, nodes);
    let right = build_node(cloud, hi, offset + mid, nodes);
    nodes[me] = Node::Split { left, right };
    me
}
