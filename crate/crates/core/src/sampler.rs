//! Uniform sampling on the offset `K^r` of a point cloud, and the volume
//! estimators built on it.
//!
//! One proposal round draws, in this order: a cloud index `i` uniformly, a
//! point `u` of the unit ball (`dim` standard normals for the direction, then
//! one uniform `U` for the radius `U^{1/dim}`), and a uniform `V` in `[0, 1)`.
//! The candidate `X = x_i + r u` is accepted iff `k < ceil(1/V)`, where `k` is
//! the number of cloud points within distance `r` of `X`. That is the same
//! event as drawing `d` uniformly in `1..=k` and accepting when `d = 1`, but
//! lets the neighbor count stop early.
//!
//! When the cloud is dense the balls overlap heavily and most rounds are
//! rejected. A region may instead propose uniformly from the bounding box of
//! the cloud grown by `r`, accepting candidates within `r` of the cloud; one
//! round then draws the `dim` box coordinates only. Both proposals yield
//! exactly uniform points on the offset. [`Proposal::Auto`] picks whichever
//! has the smaller total proposal volume.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::geom::{ball_volume, check_dim, PointCloud};
use crate::nn::NearestIndex;
use crate::rng::{run_items, RandomStream};

/// Rounds after which a single draw gives up.
pub const MAX_REJECTION_ROUNDS: u64 = 1_000_000;

/// How candidate points are proposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Proposal {
    #[default]
    Auto,
    /// Uniform index, then uniform point of that ball.
    Balls,
    /// Uniform point of the `r`-grown bounding box.
    BoundingBox,
}

/// The closed `r`-offset of a point cloud, with its search index.
#[derive(Debug, Clone)]
pub struct OffsetRegion {
    index: Arc<NearestIndex>,
    r: f64,
    requested: Proposal,
    // Grown bounding box when proposing from it.
    bbox: Option<(Vec<f64>, Vec<f64>)>,
}

impl OffsetRegion {
    pub fn new(cloud: PointCloud, r: f64) -> Result<Self> {
        OffsetRegion::from_index(NearestIndex::build(cloud), r)
    }

    pub fn from_index(index: NearestIndex, r: f64) -> Result<Self> {
        OffsetRegion::from_shared(Arc::new(index), r)
    }

    pub fn from_shared(index: Arc<NearestIndex>, r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(invalid(format!("offset radius must be positive, got {r}")));
        }
        OffsetRegion { index, r, requested: Proposal::Auto, bbox: None }.resolved(Proposal::Auto)
    }

    fn resolved(mut self, proposal: Proposal) -> Result<Self> {
        if self.index.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let n = self.dim();
        let (mut lo, mut hi) = self.cloud().bounding_box();
        lo.iter_mut().for_each(|c| *c -= self.r);
        hi.iter_mut().for_each(|c| *c += self.r);
        let box_volume: f64 = lo.iter().zip(&hi).map(|(l, h)| h - l).product();
        let balls_volume = self.index.len() as f64 * ball_volume(n) * self.r.powi(n as i32);
        let use_box = match proposal {
            Proposal::Auto => box_volume < balls_volume,
            Proposal::Balls => false,
            Proposal::BoundingBox => true,
        };
        self.requested = proposal;
        self.bbox = use_box.then_some((lo, hi));
        Ok(self)
    }

    /// The same cloud and proposal rule at another radius.
    pub fn with_radius(&self, r: f64) -> Result<Self> {
        OffsetRegion::from_shared(Arc::clone(&self.index), r)?.resolved(self.requested)
    }

    pub fn with_proposal(self, proposal: Proposal) -> Result<Self> {
        self.resolved(proposal)
    }

    /// The proposal in use, `Balls` or `BoundingBox`.
    pub fn proposal(&self) -> Proposal {
        if self.bbox.is_some() {
            Proposal::BoundingBox
        } else {
            Proposal::Balls
        }
    }

    pub fn cloud(&self) -> &PointCloud {
        self.index.cloud()
    }

    pub fn index(&self) -> &NearestIndex {
        &self.index
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.index.dim()
    }

    /// Whether `x` lies within distance `r` of the cloud.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.index.count_within_unchecked(x, self.r, 1) > 0
    }

    /// Total volume of the proposal: `m * vol(B^n) * r^n` for the (overlapping)
    /// balls, or the grown box's volume.
    pub fn proposal_volume(&self) -> f64 {
        match &self.bbox {
            Some((lo, hi)) => lo.iter().zip(hi).map(|(l, h)| h - l).product(),
            None => {
                let n = self.dim();
                self.index.len() as f64 * ball_volume(n) * self.r.powi(n as i32)
            }
        }
    }
}

/// Uniform point of the closed unit ball of `R^dim`.
pub fn sample_unit_ball<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    fill_unit_ball(rng, &mut out);
    out
}

pub(crate) fn fill_unit_ball<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    let dim = out.len();
    loop {
        let mut norm2 = 0.0;
        for c in out.iter_mut() {
            *c = rng.sample(StandardNormal);
            norm2 += *c * *c;
        }
        if norm2 > 0.0 {
            let u: f64 = rng.random();
            let scale = u.powf(1.0 / dim as f64) / norm2.sqrt();
            out.iter_mut().for_each(|c| *c *= scale);
            return;
        }
    }
}

/// Draws one point uniformly on the offset. Returns the point and the number
/// of proposal rounds used (at least one).
pub fn sample_offset<R: Rng + ?Sized>(region: &OffsetRegion, rng: &mut R) -> Result<(Vec<f64>, u64)> {
    let mut x = vec![0.0; region.dim()];
    let rounds = sample_offset_into(region, rng, &mut x)?;
    Ok((x, rounds))
}

pub(crate) fn sample_offset_into<R: Rng + ?Sized>(region: &OffsetRegion, rng: &mut R, x: &mut [f64]) -> Result<u64> {
    let cloud = region.cloud();
    let m = cloud.len();
    let r = region.r;
    if let Some((lo, hi)) = &region.bbox {
        for round in 1..=MAX_REJECTION_ROUNDS {
            for ((xk, l), h) in x.iter_mut().zip(lo).zip(hi) {
                *xk = l + (h - l) * rng.random::<f64>();
            }
            if region.contains(x) {
                return Ok(round);
            }
        }
        return Err(Error::SamplerExhausted { rounds: MAX_REJECTION_ROUNDS });
    }
    for round in 1..=MAX_REJECTION_ROUNDS {
        let center = cloud.point(rng.random_range(0..m));
        fill_unit_ball(rng, x);
        for (xk, ck) in x.iter_mut().zip(center) {
            *xk = ck + r * *xk;
        }
        let v: f64 = rng.random();
        let limit = if v > 0.0 { (1.0 / v).ceil().min(usize::MAX as f64) as usize } else { usize::MAX };
        let k = region.index.count_within_unchecked(x, r, limit);
        // k == 0 only when rounding pushed X just outside its own ball.
        if k > 0 && k < limit {
            return Ok(round);
        }
    }
    Err(Error::SamplerExhausted { rounds: MAX_REJECTION_ROUNDS })
}

/// Draws `samples` offset points, sample `j` from item stream `j`, feeding
/// each to `visit` with a per-block accumulator. Returns total proposal
/// rounds and the accumulators in block order.
pub(crate) fn drive<A, F>(region: &OffsetRegion, samples: u64, stream: RandomStream, workers: usize, visit: F) -> Result<(u64, Vec<A>)>
where
    A: Default + Send,
    F: Fn(&mut A, &[f64]) + Sync,
{
    let parts = run_items(stream, samples, workers, |acc: &mut (u64, A, Vec<f64>), rng, _| {
        if acc.2.is_empty() {
            acc.2.resize(region.dim(), 0.0);
        }
        acc.0 += sample_offset_into(region, rng, &mut acc.2)?;
        visit(&mut acc.1, &acc.2);
        Ok::<_, Error>(())
    })?;
    let total = parts.iter().map(|p| p.0).sum();
    Ok((total, parts.into_iter().map(|p| p.1).collect()))
}

/// A Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Offset volume estimated from the proposal acceptance rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub accepted: u64,
    pub rounds: u64,
}

impl VolumeEstimate {
    /// `acceptance rate * m * vol(B^n) * r^n`, with a binomial standard error.
    pub fn from_counts(region: &OffsetRegion, accepted: u64, rounds: u64) -> Self {
        let scale = region.proposal_volume();
        let p = accepted as f64 / rounds as f64;
        VolumeEstimate { estimate: p * scale, stderr: (p * (1.0 - p) / rounds as f64).sqrt() * scale, accepted, rounds }
    }
}

pub fn offset_volume(region: &OffsetRegion, samples: u64, stream: RandomStream, workers: usize) -> Result<VolumeEstimate> {
    if samples == 0 {
        return Err(invalid("offset_volume needs at least one sample"));
    }
    let (rounds, _) = drive(region, samples, stream, workers, |_: &mut (), _| {})?;
    Ok(VolumeEstimate::from_counts(region, samples, rounds))
}

// Volume of `region` times the fraction of its uniform samples satisfying
// `hit`, with a delta-method standard error.
fn volume_fraction<F>(
    region: &OffsetRegion,
    samples: u64,
    stream: RandomStream,
    workers: usize,
    hit: F,
) -> Result<(VolumeEstimate, f64, Estimate)>
where
    F: Fn(&[f64]) -> bool + Sync,
{
    let (rounds, hits) = drive(region, samples, stream, workers, |acc: &mut u64, x| {
        if hit(x) {
            *acc += 1;
        }
    })?;
    let vol = VolumeEstimate::from_counts(region, samples, rounds);
    let q = hits.iter().sum::<u64>() as f64 / samples as f64;
    let var = q * q * vol.stderr * vol.stderr + vol.estimate * vol.estimate * q * (1.0 - q) / samples as f64;
    Ok((vol, q, Estimate { value: vol.estimate * q, stderr: var.sqrt() }))
}

/// Volume of `A^r Δ B^r`: each side's volume times the estimated fraction of
/// its uniform samples falling outside the other offset.
pub fn symdiff_volume(a: &OffsetRegion, b: &OffsetRegion, samples: u64, stream: RandomStream, workers: usize) -> Result<Estimate> {
    check_dim(a.dim(), b.dim())?;
    if samples == 0 {
        return Err(invalid("symdiff_volume needs at least one sample"));
    }
    let (_, _, left) = volume_fraction(a, samples, stream.derive(1), workers, |x| !b.contains(x))?;
    let (_, _, right) = volume_fraction(b, samples, stream.derive(2), workers, |x| !a.contains(x))?;
    Ok(Estimate { value: left.value + right.value, stderr: left.stderr.hypot(right.stderr) })
}

/// Central difference `(vol(r+h) - vol(r-h)) / 2h` of the offset volume.
///
/// Both volumes come from one run on the `(r+h)`-offset:
/// `vol(r-h) = vol(r+h) * P(d(X) <= r-h)` for `X` uniform there, so the
/// difference is estimated directly rather than as two noisy volumes.
pub fn boundary_area_estimate(region: &OffsetRegion, h: f64, samples: u64, stream: RandomStream, workers: usize) -> Result<Estimate> {
    let r = region.r();
    if !(h > 0.0) || h >= r {
        return Err(invalid(format!("finite-difference step must satisfy 0 < h < r, got h={h}, r={r}")));
    }
    if samples == 0 {
        return Err(invalid("boundary_area_estimate needs at least one sample"));
    }
    let outer = region.with_radius(r + h)?;
    let inner = region.with_radius(r - h)?;
    let (_, _, shell) = volume_fraction(&outer, samples, stream, workers, |x| !inner.contains(x))?;
    Ok(Estimate { value: shell.value / (2.0 * h), stderr: shell.stderr / (2.0 * h) })
}
