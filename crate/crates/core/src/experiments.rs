//! Desk-scale numerical experiments on the stability of boundary measures
//! and the bounds around them. Every routine is deterministic for a fixed
//! seed and worker count.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::{estimate_on_region, projection_l1_distance, BoxRegion};
use crate::error::{invalid, Error, Result};
use crate::geom::{covering_number, diameter, hausdorff_distance, sphere_measure, PointCloud};
use crate::measures::bl_distance;
use crate::nn::NearestIndex;
use crate::oracles::{jitter, knife_blade, segment_points};
use crate::rng::RandomStream;
use crate::sampler::{boundary_area_estimate, symdiff_volume, OffsetRegion};

/// One row of a stability table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    /// Hausdorff distance between the two sets.
    pub eps: f64,
    /// Measured distance between the two outputs.
    pub dist: f64,
    /// `dist / sqrt(eps)`, zero when both vanish.
    pub ratio: f64,
    pub stderr: f64,
    /// Envelope `C * f(eps)` with the constant fitted as the largest observed
    /// ratio to `f`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub kind: String,
    pub rows: Vec<StabilityRow>,
    /// Least-squares slope of `ln dist` against `ln eps` over rows with both
    /// positive; NaN-free, zero when fewer than two such rows exist.
    pub fitted_slope: f64,
    /// Spearman correlation of the ratio against `-ln eps`.
    pub spearman: f64,
    /// One-sided exact permutation p-value for a positive correlation.
    pub spearman_p: f64,
    pub fitted_constant: f64,
    pub config: serde_json::Value,
}

impl StabilityReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,dist,ratio,stderr,bound\n");
        for r in &self.rows {
            let _ = writeln!(out, "{:e},{:e},{:e},{:e},{:e}", r.eps, r.dist, r.ratio, r.stderr, r.bound);
        }
        out
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.ratio).collect()
    }

    /// Largest over smallest positive ratio.
    pub fn ratio_spread(&self) -> f64 {
        let pos: Vec<f64> = self.ratios().into_iter().filter(|&r| r > 0.0).collect();
        if pos.is_empty() {
            return 1.0;
        }
        pos.iter().copied().fold(f64::MIN, f64::max) / pos.iter().copied().fold(f64::MAX, f64::min)
    }

    /// Ratio at the smallest eps over the median ratio.
    pub fn final_over_median(&self) -> f64 {
        let mut r = self.ratios();
        if r.is_empty() {
            return 1.0;
        }
        let last = r[0];
        r.sort_by(f64::total_cmp);
        let k = r.len();
        let median = if k % 2 == 1 { r[k / 2] } else { 0.5 * (r[k / 2 - 1] + r[k / 2]) };
        if median > 0.0 {
            last / median
        } else if last == 0.0 {
            1.0
        } else {
            f64::MAX
        }
    }
}

fn ratio(dist: f64, eps: f64) -> f64 {
    if dist == 0.0 {
        0.0
    } else if eps > 0.0 {
        dist / eps.sqrt()
    } else {
        f64::MAX
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fitted_slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    if points.len() < 2 {
        return 0.0;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    if va > 0.0 && vb > 0.0 {
        cov / (va * vb).sqrt()
    } else {
        0.0
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("successor exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Spearman correlation and its one-sided exact permutation p-value
/// `P(rho' >= rho)`. Sizes above 9 use 20000 seeded random permutations.
pub fn spearman(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (rx, ry) = (ranks(x), ranks(y));
    let rho = pearson(&rx, &ry);
    let n = x.len();
    if n < 2 {
        return (0.0, 1.0);
    }
    let tol = 1e-12;
    let mut hits = 0u64;
    let mut total = 0u64;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut permuted = vec![0.0; n];
    let mut count = |perm: &[usize]| {
        for (k, &p) in perm.iter().enumerate() {
            permuted[k] = ry[p];
        }
        total += 1;
        if pearson(&rx, &permuted) >= rho - tol {
            hits += 1;
        }
    };
    if n <= 9 {
        loop {
            count(&perm);
            if !next_permutation(&mut perm) {
                break;
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        for _ in 0..20_000 {
            for i in (1..n).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            count(&perm);
        }
    }
    (rho, hits as f64 / total as f64)
}

fn finish(kind: &str, mut rows: Vec<StabilityRow>, shape: impl Fn(f64) -> f64, config: serde_json::Value) -> StabilityReport {
    rows.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    let fitted_constant = rows.iter().filter(|r| shape(r.eps) > 0.0).map(|r| r.dist / shape(r.eps)).fold(0.0, f64::max);
    for r in &mut rows {
        r.bound = fitted_constant * shape(r.eps);
    }
    let logs: Vec<(f64, f64)> = rows.iter().filter(|r| r.eps > 0.0 && r.dist > 0.0).map(|r| (r.eps.ln(), r.dist.ln())).collect();
    let with_eps: Vec<&StabilityRow> = rows.iter().filter(|r| r.eps > 0.0).collect();
    let (rho, p) =
        spearman(&with_eps.iter().map(|r| -r.eps.ln()).collect::<Vec<_>>(), &with_eps.iter().map(|r| r.ratio).collect::<Vec<_>>());
    StabilityReport {
        kind: kind.to_string(),
        fitted_slope: fitted_slope(&logs),
        spearman: rho,
        spearman_p: p,
        fitted_constant,
        rows,
        config,
    }
}

/// Largest eps for which the Hölder estimate applies:
/// `min(diam K, r, r^2 / diam K)`.
pub fn stability_window(cloud: &PointCloud, r: f64) -> f64 {
    let d = diameter(cloud);
    if d > 0.0 {
        d.min(r).min(r * r / d)
    } else {
        r
    }
}

/// For each eps: jitters the cloud by at most eps, measures the exact
/// Hausdorff distance, estimates the offset-volume measure of both clouds
/// with the same random stream and records their bounded-Lipschitz distance.
/// Bounds use the shape `N(K, r - eps) r^n (r + diam) sqrt(eps / r)` with the
/// constant fitted to the data.
pub fn stability_experiment(
    cloud: &PointCloud,
    r: f64,
    eps_list: &[f64],
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<StabilityReport> {
    if !(r > 0.0) {
        return Err(invalid("offset radius must be positive"));
    }
    if eps_list.is_empty() {
        return Err(invalid("need at least one eps"));
    }
    let window = stability_window(cloud, r);
    for &eps in eps_list {
        if !(eps >= 0.0) || eps >= window {
            return Err(Error::OutOfWindow { eps, window });
        }
    }
    let stream = RandomStream::new(seed);
    let base = OffsetRegion::new(cloud.clone(), r)?;
    let reference = estimate_on_region(&base, samples, stream, workers)?;
    let mu = reference.mu();
    let n = cloud.dim() as i32;
    let diam = diameter(cloud);
    let mut rows = Vec::with_capacity(eps_list.len());
    let mut shapes = Vec::with_capacity(eps_list.len());
    for (k, &eps) in eps_list.iter().enumerate() {
        let moved = jitter(cloud, eps, stream.derive(100 + k as u64).seed)?;
        let dh = hausdorff_distance(cloud, &moved)?;
        let est = estimate_on_region(&OffsetRegion::new(moved, r)?, samples, stream, workers)?;
        let dist = bl_distance(&mu, &est.mu())?;
        let stderr = reference.offset_volume.stderr.hypot(est.offset_volume.stderr);
        let cover = if eps < r { covering_number(cloud, r - eps)? } else { cloud.len() };
        shapes.push((dh, cover as f64 * r.powi(n) * (r + diam) / r.sqrt()));
        rows.push(StabilityRow { eps: dh, dist, ratio: ratio(dist, dh), stderr, bound: 0.0 });
    }
    let config = serde_json::json!({
        "r": r, "samples": samples, "seed": seed, "eps_requested": eps_list, "window": window, "points": cloud.len(),
    });
    let shape = |e: f64| shapes.iter().find(|s| s.0 == e).map_or(0.0, |s| s.1 * e.sqrt());
    Ok(finish("stability", rows, shape, config))
}

/// Resolution of the knife-blade experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnifeResolution {
    /// Points sampling the straight segment.
    pub segment_points: usize,
    /// Target spacing of the blade samples along each arc.
    pub arc_spacing: f64,
}

impl Default for KnifeResolution {
    fn default() -> Self {
        KnifeResolution { segment_points: 1 << 14 | 1, arc_spacing: 1.0 / (1 << 14) as f64 }
    }
}

/// Compares the projections onto the segment `[0, L] x {0}` and onto knife
/// blades with `N` arcs: per `N`, the L1 distance of the two projection maps
/// over `region` against the exact Hausdorff distance. Every `N` uses the
/// same sample points.
#[allow(clippy::too_many_arguments)]
pub fn holder_knife_experiment(
    length: f64,
    radius: f64,
    segments: &[usize],
    region: &BoxRegion,
    samples: u64,
    seed: u64,
    workers: usize,
    resolution: KnifeResolution,
) -> Result<StabilityReport> {
    if segments.is_empty() || segments.contains(&0) {
        return Err(invalid("need a nonempty list of positive arc counts"));
    }
    if region.dim() != 2 {
        return Err(invalid("the knife region must be planar"));
    }
    let straight = NearestIndex::build(segment_points(&[0.0, 0.0], &[length, 0.0], resolution.segment_points)?);
    let stream = RandomStream::new(seed);
    let mut rows = Vec::with_capacity(segments.len());
    for &nseg in segments {
        let per_arc = ((length / nseg as f64 / resolution.arc_spacing).ceil() as usize + 1).max(2);
        let blade = knife_blade(length, radius, nseg, per_arc)?;
        let est = projection_l1_distance(&straight, &NearestIndex::build(blade.cloud), region, samples, stream, workers)?;
        rows.push(StabilityRow {
            eps: blade.hausdorff,
            dist: est.value,
            ratio: ratio(est.value, blade.hausdorff),
            stderr: est.stderr,
            bound: 0.0,
        });
    }
    let config = serde_json::json!({
        "length": length, "radius": radius, "segments": segments,
        "region": { "lower": region.lower(), "upper": region.upper() },
        "samples": samples, "seed": seed, "segment_points": resolution.segment_points, "arc_spacing": resolution.arc_spacing,
    });
    Ok(finish("knife", rows, f64::sqrt, config))
}

/// A Monte-Carlo measurement against an analytic bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub measured: f64,
    pub stderr: f64,
    pub bound: f64,
    pub pass: bool,
}

impl BoundCheck {
    fn new(measured: f64, stderr: f64, bound: f64) -> Self {
        BoundCheck { measured, stderr, bound, pass: measured <= bound + 5.0 * stderr }
    }
}

/// Volume of `K^r Δ K'^r` for a given perturbation `moved` of the cloud with
/// `d_H <= eps`, against `2 N(K, r - eps) sphere(2r + 2eps) eps`.
pub fn symdiff_bound_for_pair(
    cloud: &PointCloud,
    moved: &PointCloud,
    r: f64,
    eps: f64,
    samples: u64,
    stream: RandomStream,
    workers: usize,
) -> Result<BoundCheck> {
    if !(eps > 0.0 && eps < r) {
        return Err(invalid(format!("need 0 < eps < r, got eps={eps}, r={r}")));
    }
    let a = OffsetRegion::new(cloud.clone(), r)?;
    let b = OffsetRegion::new(moved.clone(), r)?;
    let est = symdiff_volume(&a, &b, samples, stream, workers)?;
    let n = cloud.dim();
    let bound = 2.0 * covering_number(cloud, r - eps)? as f64 * sphere_measure(n - 1, 2.0 * r + 2.0 * eps) * eps;
    Ok(BoundCheck::new(est.value, est.stderr, bound))
}

/// [`symdiff_bound_for_pair`] against a jittered copy of the cloud.
pub fn symdiff_bound_check(cloud: &PointCloud, r: f64, eps: f64, samples: u64, seed: u64, workers: usize) -> Result<BoundCheck> {
    if !(eps > 0.0 && eps < r) {
        return Err(invalid(format!("need 0 < eps < r, got eps={eps}, r={r}")));
    }
    let stream = RandomStream::new(seed);
    let moved = jitter(cloud, eps, stream.derive(7).seed)?;
    symdiff_bound_for_pair(cloud, &moved, r, eps, samples, stream, workers)
}

/// Boundary length (area) of the offset, as a volume derivative, against
/// `N(K, r) sphere(2r)`.
pub fn boundary_area_check(cloud: &PointCloud, r: f64, h: f64, samples: u64, seed: u64, workers: usize) -> Result<BoundCheck> {
    if !(h > 0.0 && h < r / 10.0) {
        return Err(invalid(format!("need 0 < h < r/10, got h={h}, r={r}")));
    }
    let region = OffsetRegion::new(cloud.clone(), r)?;
    let est = boundary_area_estimate(&region, h, samples, RandomStream::new(seed), workers)?;
    let bound = covering_number(cloud, r)? as f64 * sphere_measure(cloud.dim() - 1, 2.0 * r);
    Ok(BoundCheck::new(est.value, est.stderr, bound))
}

/// Outcome of the convexity and gradient checks of `v(x) = |x|^2 - d(x)^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub convexity_trials: u64,
    pub convexity_violations: u64,
    /// Largest `v(mid) - (v(x) + v(y))/2`.
    pub worst_convexity_excess: f64,
    pub gradient_trials: u64,
    pub gradient_skipped: u64,
    pub gradient_violations: u64,
    /// Largest componentwise `|finite difference - 2 p(x)|`.
    pub worst_gradient_error: f64,
    pub counterexample: Option<String>,
    pub pass: bool,
}

pub const CONVEXITY_TOLERANCE: f64 = 1e-9;
pub const GRADIENT_STEP: f64 = 1e-5;
pub const GRADIENT_TOLERANCE: f64 = 1e-3;
pub const PROJECTION_GAP: f64 = 1e-6;

/// Midpoint convexity of `v` on `trials` random pairs, and central
/// differences of `v` against `2 p(x)` at `trials` random points with a
/// unique projection. Points are drawn from the cloud's bounding box grown
/// by half its diameter (by one when the cloud is a point).
///
/// A gradient trial is kept when the two nearest cloud points differ in
/// distance by more than [`PROJECTION_GAP`] and every point of the
/// difference stencil projects to the same cloud point; otherwise it is
/// skipped and redrawn (at most `100 * trials` draws).
pub fn convexity_and_gradient_check(cloud: &PointCloud, trials: u64, seed: u64) -> Result<ConvexityReport> {
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let index = NearestIndex::build(cloud.clone());
    let dim = cloud.dim();
    let (mut lo, mut hi) = cloud.bounding_box();
    let pad = if cloud.len() > 1 { 0.5 * diameter(cloud) } else { 1.0 };
    lo.iter_mut().for_each(|c| *c -= pad);
    hi.iter_mut().for_each(|c| *c += pad);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> { lo.iter().zip(&hi).map(|(l, h)| rng.random_range(*l..*h)).collect() };
    let v = |x: &[f64]| -> f64 {
        let norm2: f64 = x.iter().map(|c| c * c).sum();
        norm2 - index.nearest_unchecked(x).1.powi(2)
    };

    let mut report = ConvexityReport {
        convexity_trials: trials,
        convexity_violations: 0,
        worst_convexity_excess: f64::NEG_INFINITY,
        gradient_trials: 0,
        gradient_skipped: 0,
        gradient_violations: 0,
        worst_gradient_error: 0.0,
        counterexample: None,
        pass: true,
    };
    for _ in 0..trials {
        let (x, y) = (draw(&mut rng), draw(&mut rng));
        let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
        let excess = v(&mid) - 0.5 * (v(&x) + v(&y));
        report.worst_convexity_excess = report.worst_convexity_excess.max(excess);
        if excess > CONVEXITY_TOLERANCE {
            report.convexity_violations += 1;
            report.counterexample.get_or_insert_with(|| format!("midpoint convexity fails between {x:?} and {y:?} by {excess:e}"));
        }
    }

    let mut draws = 0u64;
    while report.gradient_trials < trials && draws < 100 * trials {
        draws += 1;
        let x = draw(&mut rng);
        let near = index.k_nearest(&x, 2)?;
        if near.len() > 1 && near[1].1 - near[0].1 <= PROJECTION_GAP {
            report.gradient_skipped += 1;
            continue;
        }
        let p = index.cloud().point(near[0].0);
        let mut grad = vec![0.0; dim];
        let mut same_cell = true;
        for k in 0..dim {
            let mut plus = x.clone();
            let mut minus = x.clone();
            plus[k] += GRADIENT_STEP;
            minus[k] -= GRADIENT_STEP;
            same_cell &= index.nearest_unchecked(&plus).0 == near[0].0 && index.nearest_unchecked(&minus).0 == near[0].0;
            grad[k] = (v(&plus) - v(&minus)) / (2.0 * GRADIENT_STEP);
        }
        if !same_cell {
            report.gradient_skipped += 1;
            continue;
        }
        report.gradient_trials += 1;
        let err = grad.iter().zip(p).map(|(g, c)| (g - 2.0 * c).abs()).fold(0.0, f64::max);
        report.worst_gradient_error = report.worst_gradient_error.max(err);
        if err > GRADIENT_TOLERANCE {
            report.gradient_violations += 1;
            report.counterexample.get_or_insert_with(|| format!("gradient at {x:?} is {grad:?}, expected twice {p:?}"));
        }
    }
    report.pass = report.convexity_violations == 0 && report.gradient_violations == 0 && report.gradient_trials == trials;
    Ok(report)
}

/// One randomized bound-check trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteTrial {
    pub points: usize,
    pub r: f64,
    /// Perturbation size or finite-difference step.
    pub param: f64,
    pub check: BoundCheck,
}

fn random_cloud(rng: &mut ChaCha8Rng) -> Result<PointCloud> {
    let m = rng.random_range(3..=30);
    let coords: Vec<f64> = (0..2 * m).map(|_| rng.random::<f64>()).collect();
    PointCloud::new(2, coords)
}

/// [`symdiff_bound_check`] on `trials` random planar clouds of 3 to 30
/// points in the unit square, `r` in `[0.05, 0.3]`, `eps` in `[0.01r, 0.5r]`.
pub fn symdiff_suite(trials: usize, samples: u64, seed: u64, workers: usize) -> Result<Vec<SuiteTrial>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|t| {
            let cloud = random_cloud(&mut rng)?;
            let r = rng.random_range(0.05..=0.3);
            let eps = r * rng.random_range(0.01..=0.5);
            let check = symdiff_bound_check(&cloud, r, eps, samples, RandomStream::new(seed).derive(t as u64).seed, workers)?;
            Ok(SuiteTrial { points: cloud.len(), r, param: eps, check })
        })
        .collect()
}

/// [`boundary_area_check`] on `trials` random planar clouds as in
/// [`symdiff_suite`], with `h = r / 20`.
pub fn area_suite(trials: usize, samples: u64, seed: u64, workers: usize) -> Result<Vec<SuiteTrial>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|t| {
            let cloud = random_cloud(&mut rng)?;
            let r = rng.random_range(0.05..=0.3);
            let h = r / 20.0;
            let check = boundary_area_check(&cloud, r, h, samples, RandomStream::new(seed).derive(t as u64).seed, workers)?;
            Ok(SuiteTrial { points: cloud.len(), r, param: h, check })
        })
        .collect()
}

/// The disk `B(0, r)` sampled by `boundary_points` points on its circle plus
/// its center, for which the boundary bound `sphere(2r)` is attained in the
/// limit.
pub fn disk_tightness(boundary_points: usize, r: f64, h: f64, samples: u64, seed: u64, workers: usize) -> Result<BoundCheck> {
    // Pulled in by a relative 1e-12 so rounding keeps every sample inside the disk.
    let ring = crate::oracles::circle_points([0.0, 0.0], r * (1.0 - 1e-12), boundary_points)?;
    let mut coords = ring.coords().to_vec();
    coords.extend([0.0, 0.0]);
    boundary_area_check(&PointCloud::new(2, coords)?, r, h, samples, seed, workers)
}
