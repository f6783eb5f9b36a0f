//! Closed-form offset-volume measures of simple planar shapes, and generators
//! for the point clouds used in the experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::geom::{squared_distance, PointCloud};
use crate::measures::{DiscreteMeasure, PiecewiseMeasure, RegionPart, SegmentPart};
use crate::polygon::{exterior_angle, is_convex_ccw};
use crate::sampler::sample_unit_ball;

use std::f64::consts::PI;

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("radius must be positive, got {r}")))
    }
}

/// Measure of the `r`-offset of the planar segment `[a, b]` pushed onto the
/// segment: a band of density `2r` along it and a half-disk at each end.
pub fn segment_measure(a: [f64; 2], b: [f64; 2], r: f64) -> Result<PiecewiseMeasure> {
    check_radius(r)?;
    if a == b {
        return Err(invalid("segment endpoints coincide"));
    }
    let cap = PI / 2.0 * r * r;
    let atoms = DiscreteMeasure::new(2, vec![a[0], a[1], b[0], b[1]], vec![cap, cap])?;
    let band = SegmentPart { a: a.to_vec(), b: b.to_vec(), density: 2.0 * r };
    PiecewiseMeasure::new(atoms, vec![band], vec![])
}

/// Measure of the `r`-offset of a convex polygon (vertices counter-clockwise)
/// pushed onto it: the area itself, a band of density `r` on each edge, and a
/// sector of mass `theta r^2 / 2` at each vertex of exterior angle `theta`.
pub fn convex_polygon_measure(vertices: &[[f64; 2]], r: f64) -> Result<PiecewiseMeasure> {
    check_radius(r)?;
    if !is_convex_ccw(vertices) {
        return Err(invalid("polygon must be convex, non-degenerate and counter-clockwise"));
    }
    let k = vertices.len();
    let mut locs = Vec::with_capacity(2 * k);
    let mut ws = Vec::with_capacity(k);
    let mut edges = Vec::with_capacity(k);
    for i in 0..k {
        let (prev, cur, next) = (vertices[(i + k - 1) % k], vertices[i], vertices[(i + 1) % k]);
        locs.extend(cur);
        ws.push(exterior_angle(prev, cur, next) * r * r / 2.0);
        edges.push(SegmentPart { a: cur.to_vec(), b: next.to_vec(), density: r });
    }
    let atoms = DiscreteMeasure::new(2, locs, ws)?;
    PiecewiseMeasure::new(atoms, edges, vec![RegionPart { vertices: vertices.to_vec(), density: 1.0 }])
}

/// A sampled "knife blade": `segments` circular arcs through consecutive
/// division points of the segment `[0, L] x {0}`, each centered on the line
/// `y = R`, so each arc bulges below the segment.
#[derive(Debug, Clone)]
pub struct KnifeBlade {
    pub cloud: PointCloud,
    /// Exact Hausdorff distance between the blade and the segment.
    pub hausdorff: f64,
    /// Largest chord between consecutive samples on an arc.
    pub arc_step: f64,
}

pub fn knife_blade_hausdorff(length: f64, radius: f64, segments: usize) -> f64 {
    let half = length / segments as f64 / 2.0;
    // sqrt(R^2 + h^2) - R, written to avoid cancellation.
    half * half / ((radius * radius + half * half).sqrt() + radius)
}

pub fn knife_blade(length: f64, radius: f64, segments: usize, samples_per_arc: usize) -> Result<KnifeBlade> {
    if !(length > 0.0 && radius > 0.0 && length.is_finite() && radius.is_finite()) {
        return Err(invalid("blade length and radius must be positive"));
    }
    if segments == 0 || samples_per_arc < 2 {
        return Err(invalid("need at least one arc and two samples per arc"));
    }
    let ell = length / segments as f64;
    let rho = (radius * radius + ell * ell / 4.0).sqrt();
    let half_angle = (ell / 2.0).atan2(radius);
    let mut coords = Vec::with_capacity(2 * (segments * (samples_per_arc - 1) + 1));
    for s in 0..segments {
        let cx = (s as f64 + 0.5) * ell;
        let last = if s + 1 == segments { samples_per_arc } else { samples_per_arc - 1 };
        for k in 0..last {
            let theta = -half_angle + 2.0 * half_angle * k as f64 / (samples_per_arc - 1) as f64;
            let x = if k == 0 { s as f64 * ell } else { cx + rho * theta.sin() };
            let y = if k == 0 { 0.0 } else { radius - rho * theta.cos() };
            coords.extend([x, y]);
        }
    }
    // Arc end: exact division point.
    let n = coords.len();
    coords[n - 2] = length;
    coords[n - 1] = 0.0;
    let arc_step = 2.0 * rho * (half_angle / (samples_per_arc - 1) as f64).sin();
    Ok(KnifeBlade { cloud: PointCloud::new(2, coords)?, hausdorff: knife_blade_hausdorff(length, radius, segments), arc_step })
}

/// Moves every point by an independent uniform vector of the closed
/// `eps`-ball. Each moved point is within `eps` of its origin, so the
/// Hausdorff distance between the clouds is at most `eps`.
pub fn jitter(cloud: &PointCloud, eps: f64, seed: u64) -> Result<PointCloud> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(invalid(format!("jitter radius must be nonnegative, got {eps}")));
    }
    if eps == 0.0 {
        return Ok(cloud.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = cloud.dim();
    let mut out = Vec::with_capacity(cloud.coords().len());
    for p in cloud.iter() {
        let u = sample_unit_ball(dim, &mut rng);
        let mut scale = eps;
        loop {
            let moved: Vec<f64> = p.iter().zip(&u).map(|(c, d)| c + scale * d).collect();
            // Rounding can push a point a hair past eps; pull it back.
            if squared_distance(p, &moved).sqrt() <= eps {
                out.extend(moved);
                break;
            }
            scale *= 0.5;
        }
    }
    PointCloud::new(dim, out)
}

/// `count` equally spaced points from `a` to `b`, both included.
pub fn segment_points(a: &[f64], b: &[f64], count: usize) -> Result<PointCloud> {
    if count < 2 {
        return Err(invalid("a segment sample needs at least two points"));
    }
    let coords = (0..count)
        .flat_map(|k| {
            let t = k as f64 / (count - 1) as f64;
            a.iter().zip(b).map(move |(x, y)| x + t * (y - x))
        })
        .collect();
    PointCloud::new(a.len(), coords)
}

/// `count` equally spaced points on a circle.
pub fn circle_points(center: [f64; 2], radius: f64, count: usize) -> Result<PointCloud> {
    if count == 0 {
        return Err(invalid("a circle sample needs at least one point"));
    }
    let coords = (0..count)
        .flat_map(|k| {
            let t = 2.0 * PI * k as f64 / count as f64;
            [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
        })
        .collect();
    PointCloud::new(2, coords)
}

/// The unit square `[0,1]^2`: its boundary at spacing `1/per_side` (corners
/// included), plus the interior grid `{i/g, j/g : 0 < i, j < g}`.
pub fn square_points(per_side: usize, grid: usize) -> Result<PointCloud> {
    if per_side == 0 {
        return Err(invalid("need at least one boundary point per side"));
    }
    let mut coords = Vec::with_capacity(2 * (4 * per_side + grid * grid));
    let corners = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    for s in 0..4 {
        let (p, q) = (corners[s], corners[(s + 1) % 4]);
        for k in 0..per_side {
            let t = k as f64 / per_side as f64;
            coords.extend([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    for i in 1..grid {
        for j in 1..grid {
            coords.extend([i as f64 / grid as f64, j as f64 / grid as f64]);
        }
    }
    PointCloud::new(2, coords)
}

/// `count` independent uniform points of the box `[lo, hi]`.
pub fn uniform_points(lo: &[f64], hi: &[f64], count: usize, seed: u64) -> Result<PointCloud> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..count).flat_map(|_| lo.iter().zip(hi).map(|(l, h)| l + (h - l) * rng.random::<f64>()).collect::<Vec<_>>()).collect();
    PointCloud::new(lo.len(), coords)
}
