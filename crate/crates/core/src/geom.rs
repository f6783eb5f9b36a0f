//! Points, point clouds and the metric quantities the estimators are built on.
//!
//! A [`PointCloud`] stores its coordinates in one flat buffer; most routines
//! take points as plain `&[f64]` slices borrowed from it.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::nn::NearestIndex;

/// A point of `R^n` with finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(invalid("point must have at least one coordinate"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index: 0 });
        }
        Ok(Point(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// A non-empty finite set of points sharing one ambient dimension.
///
/// Duplicate points are allowed; they keep their own indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    /// Builds a cloud from a flat row-major coordinate buffer.
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if coords.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if coords.len() % dim != 0 {
            return Err(invalid(format!("coordinate buffer of length {} is not a multiple of dimension {dim}", coords.len())));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index: pos / dim });
        }
        Ok(PointCloud { dim, coords })
    }

    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyCloud)?;
        let dim = first.as_ref().len();
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.len() });
            }
            coords.extend_from_slice(p);
        }
        PointCloud::new(dim, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// Always false; clouds are non-empty by construction.
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Axis-aligned bounding box as `(lower, upper)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = self.point(0).to_vec();
        let mut hi = lo.clone();
        for p in self.iter() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    pub fn translated(&self, offset: &[f64]) -> Result<Self> {
        check_dim(self.dim, offset.len())?;
        let coords = self.coords.chunks_exact(self.dim).flat_map(|p| p.iter().zip(offset).map(|(a, b)| a + b)).collect();
        PointCloud::new(self.dim, coords)
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Squared Euclidean distance, summed in coordinate order.
///
/// Every exact comparison in the crate (index queries, brute-force oracles)
/// goes through this one function so that ties resolve identically.
#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    Ok(squared_distance(a, b).sqrt())
}

/// Volume of the unit ball of `R^k`.
pub fn ball_volume(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => ball_volume(k - 2) * 2.0 * PI / k as f64,
    }
}

/// `k`-dimensional Hausdorff measure of the round `k`-sphere of radius `r`
/// (the boundary of a ball in `R^{k+1}`).
pub fn sphere_measure(k: usize, r: f64) -> f64 {
    (k + 1) as f64 * ball_volume(k + 1) * r.powi(k as i32)
}

/// Hausdorff distance between two clouds: the larger of the two directed
/// max-min distances.
pub fn hausdorff_distance(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    let ia = NearestIndex::build(a.clone());
    let ib = NearestIndex::build(b.clone());
    Ok(directed(a, &ib).max(directed(b, &ia)))
}

fn directed(from: &PointCloud, to: &NearestIndex) -> f64 {
    from.iter().map(|p| to.nearest_unchecked(p).1).fold(0.0, f64::max)
}

/// Maximum pairwise distance; zero for a single point.
pub fn diameter(cloud: &PointCloud) -> f64 {
    let m = cloud.len();
    let mut best = 0.0f64;
    for i in 0..m {
        let p = cloud.point(i);
        for j in i + 1..m {
            best = best.max(squared_distance(p, cloud.point(j)));
        }
    }
    best.sqrt()
}

/// Upper bound on the number of closed `s`-balls needed to cover the cloud.
///
/// Centers are cloud points chosen by farthest-point traversal. The traversal
/// starts at the cloud's own 1-center (the point with the smallest distance to
/// its farthest neighbor) and then repeatedly adds the point farthest from the
/// centers chosen so far, lowest index first on ties. The result is the length
/// of the shortest prefix that leaves every point within `s` of a center. The
/// insertion radii of the traversal do not increase, so the count never
/// increases with `s`.
pub fn covering_number(cloud: &PointCloud, s: f64) -> Result<usize> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(invalid(format!("covering radius must be positive, got {s}")));
    }
    let m = cloud.len();
    let s2 = s * s;
    let mut ecc = vec![0.0f64; m];
    for i in 0..m {
        for j in i + 1..m {
            let d2 = squared_distance(cloud.point(i), cloud.point(j));
            ecc[i] = ecc[i].max(d2);
            ecc[j] = ecc[j].max(d2);
        }
    }
    let first = (0..m).fold(0, |best, i| if ecc[i] < ecc[best] { i } else { best });

    let mut gap: Vec<f64> = cloud.iter().map(|p| squared_distance(p, cloud.point(first))).collect();
    let mut centers = 1;
    loop {
        let far = (0..m).fold(0, |best, i| if gap[i] > gap[best] { i } else { best });
        if gap[far] <= s2 {
            return Ok(centers);
        }
        centers += 1;
        let c = cloud.point(far);
        for (g, p) in gap.iter_mut().zip(cloud.iter()) {
            *g = g.min(squared_distance(p, c));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(xs: &[f64]) -> PointCloud {
        PointCloud::new(1, xs.to_vec()).unwrap()
    }

    fn random_cloud(rng: &mut impl Rng, m: usize, dim: usize) -> PointCloud {
        PointCloud::new(dim, (0..m * dim).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(euclidean_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(euclidean_distance(&[1.5, -2.0], &[1.5, -2.0]).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let d: f64 = rng.random_range(-10.0..10.0);
            assert_eq!(euclidean_distance(&[0.0], &[d]).unwrap(), d.abs());
        }
        assert!(matches!(euclidean_distance(&[0.0], &[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn cloud_validation() {
        assert!(matches!(PointCloud::new(2, vec![]), Err(Error::EmptyCloud)));
        assert!(PointCloud::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(matches!(PointCloud::new(1, vec![0.0, f64::NAN]), Err(Error::NonFinite { index: 1 })));
        assert!(PointCloud::from_points(&[vec![0.0, 1.0], vec![2.0]]).is_err());
        assert!(Point::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn dimensional_constants() {
        assert_eq!(ball_volume(0), 1.0);
        assert_eq!(ball_volume(1), 2.0);
        assert_abs_diff_eq!(ball_volume(2), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(ball_volume(3), 4.0 * PI / 3.0, epsilon = 1e-12);
        for r in [0.1, 1.0, 2.5] {
            assert_abs_diff_eq!(sphere_measure(1, r), 2.0 * PI * r, epsilon = 1e-12);
            assert_abs_diff_eq!(sphere_measure(2, r), 4.0 * PI * r * r, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(sphere_measure(0, 3.0), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn hausdorff_examples() {
        let a = line(&[0.0, 0.5, 3.0]);
        assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(hausdorff_distance(&line(&[0.0]), &line(&[1.0])).unwrap(), 1.0);
        assert_eq!(hausdorff_distance(&line(&[0.0, 1.0]), &line(&[0.0])).unwrap(), 1.0);
        assert_eq!(hausdorff_distance(&line(&[0.0]), &line(&[0.0, 1.0])).unwrap(), 1.0);
        let planar = PointCloud::new(2, vec![0.0, 0.0]).unwrap();
        assert!(hausdorff_distance(&a, &planar).is_err());
    }

    #[test]
    fn covering_examples() {
        let c = line(&[0.0, 1.0, 2.0]);
        assert_eq!(covering_number(&c, 1.0).unwrap(), 1);
        assert_eq!(covering_number(&c, 0.4).unwrap(), 3);
        assert!(covering_number(&c, 0.0).is_err());
        let degenerate = line(&[2.0, 2.0, 2.0]);
        assert_eq!(covering_number(&degenerate, 1e-9).unwrap(), 1);
        assert_eq!(diameter(&degenerate), 0.0);
    }

    /// Exhaustive minimum set cover over cloud-centered balls.
    fn exact_cover(cloud: &PointCloud, s: f64) -> usize {
        let m = cloud.len();
        let masks: Vec<u32> = (0..m)
            .map(|i| (0..m).filter(|&j| squared_distance(cloud.point(i), cloud.point(j)) <= s * s).fold(0u32, |acc, j| acc | (1 << j)))
            .collect();
        let full = (1u32 << m) - 1;
        (1u32..(1 << m))
            .filter(|sel| (0..m).filter(|i| sel & (1 << i) != 0).fold(0, |acc, i| acc | masks[i]) == full)
            .map(|sel| sel.count_ones() as usize)
            .min()
            .unwrap()
    }

    #[test]
    fn greedy_cover_bounds_exact_cover() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..60 {
            let m = 4 + trial % 9;
            let cloud = random_cloud(&mut rng, m, 2);
            let s = rng.random_range(0.05..0.6);
            let greedy = covering_number(&cloud, s).unwrap();
            let exact = exact_cover(&cloud, s);
            assert!(greedy >= exact, "greedy {greedy} < exact {exact}");
            assert!(greedy <= m);
        }
    }

    #[test]
    fn diameter_matches_scan() {
        let sq = PointCloud::new(2, vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(diameter(&sq), 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(diameter(&line(&[4.0])), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = random_cloud(&mut rng, 40, 3);
        let mut best = 0.0f64;
        for p in c.iter() {
            for q in c.iter() {
                best = best.max(euclidean_distance(p, q).unwrap());
            }
        }
        assert_eq!(diameter(&c), best);
    }

    fn cloud_strategy(max: usize) -> impl Strategy<Value = PointCloud> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..max)
            .prop_map(|pts| PointCloud::new(2, pts.into_iter().flat_map(|(x, y)| [x, y]).collect()).unwrap())
    }

    proptest! {
        #[test]
        fn hausdorff_triangle_inequality(a in cloud_strategy(12), b in cloud_strategy(12), c in cloud_strategy(12)) {
            let ab = hausdorff_distance(&a, &b).unwrap();
            let bc = hausdorff_distance(&b, &c).unwrap();
            let ac = hausdorff_distance(&a, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-12);
        }

        #[test]
        fn covering_non_increasing(c in cloud_strategy(30), s in 0.01f64..1.0, ds in 0.0f64..1.0) {
            let small = covering_number(&c, s).unwrap();
            let large = covering_number(&c, s + ds).unwrap();
            prop_assert!(large <= small, "N({}) = {} but N({}) = {}", s, small, s + ds, large);
        }
    }
}
