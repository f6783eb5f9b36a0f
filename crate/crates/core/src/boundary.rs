//! Monte-Carlo estimation of projection pushforwards: boundary measures of a
//! point cloud (uniform measure on its offset, projected back onto the cloud)
//! and pushforwards of the uniform measure on a box.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::geom::{check_dim, squared_distance, PointCloud};
use crate::measures::DiscreteMeasure;
use crate::nn::NearestIndex;
use crate::rng::{run_items, RandomStream};
use crate::sampler::{drive, Estimate, OffsetRegion, VolumeEstimate};

/// Number of samples after which the estimated boundary measure is within
/// `eps` in bounded-Lipschitz distance with probability at least `1 - delta`,
/// given the covering number of the cloud at scale `eps / 16`:
/// the least `N` with `2 exp(ln(16/eps) * cover - N eps^2 / 2) <= delta`.
pub fn required_sample_count(covering: usize, eps: f64, delta: f64) -> Result<u64> {
    if covering == 0 {
        return Err(invalid("covering number must be positive"));
    }
    if !(eps > 0.0 && eps < 2.0) {
        return Err(invalid(format!("eps must lie in (0, 2), got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    let n = 2.0 / (eps * eps) * ((16.0 / eps).ln() * covering as f64 + (2.0 / delta).ln());
    if !(n < u64::MAX as f64) {
        return Err(invalid("required sample count overflows"));
    }
    Ok((n.ceil() as u64).max(1))
}

/// Per-atom hit counts of projected offset samples, with the offset volume
/// measured from the same proposal stream.
#[derive(Debug, Clone)]
pub struct BoundaryMeasureEstimate {
    pub cloud: PointCloud,
    pub r: f64,
    pub counts: Vec<u64>,
    pub samples: u64,
    pub seed: u64,
    pub offset_volume: VolumeEstimate,
}

impl BoundaryMeasureEstimate {
    /// The normalized measure: counts over samples.
    pub fn beta(&self) -> DiscreteMeasure {
        self.weighted(1.0)
    }

    /// The unnormalized measure: offset volume times `beta`.
    pub fn mu(&self) -> DiscreteMeasure {
        self.weighted(self.offset_volume.estimate)
    }

    /// Estimated mass of atom `i` under `mu`.
    pub fn mu_mass(&self, i: usize) -> f64 {
        self.offset_volume.estimate * self.counts[i] as f64 / self.samples as f64
    }

    /// Standard error of `mu_mass(i)`, combining the binomial count noise and
    /// the offset-volume noise.
    pub fn mu_mass_stderr(&self, i: usize) -> f64 {
        let p = self.counts[i] as f64 / self.samples as f64;
        let v = self.offset_volume;
        (p * p * v.stderr * v.stderr + v.estimate * v.estimate * p * (1.0 - p) / self.samples as f64).sqrt()
    }

    fn weighted(&self, total: f64) -> DiscreteMeasure {
        let n = self.samples as f64;
        let weights = self.counts.iter().map(|&c| total * c as f64 / n).collect();
        DiscreteMeasure::new(self.cloud.dim(), self.cloud.coords().to_vec(), weights).expect("cloud coordinates and counts are valid")
    }
}

/// Samples `samples` points uniformly on `cloud^r`, projects each onto its
/// nearest cloud point and tallies the hits.
pub fn estimate_boundary_measure(cloud: PointCloud, r: f64, samples: u64, seed: u64, workers: usize) -> Result<BoundaryMeasureEstimate> {
    let region = OffsetRegion::new(cloud, r)?;
    estimate_on_region(&region, samples, RandomStream::new(seed), workers)
}

/// [`estimate_boundary_measure`] on a prebuilt region and stream.
pub fn estimate_on_region(region: &OffsetRegion, samples: u64, stream: RandomStream, workers: usize) -> Result<BoundaryMeasureEstimate> {
    if samples == 0 {
        return Err(invalid("boundary measure estimation needs at least one sample"));
    }
    let m = region.cloud().len();
    let index = region.index();
    let (rounds, parts) = drive(region, samples, stream, workers, |acc: &mut Vec<u64>, x| {
        if acc.is_empty() {
            acc.resize(m, 0);
        }
        acc[index.nearest_unchecked(x).0] += 1;
    })?;
    let mut counts = vec![0u64; m];
    for part in parts {
        for (c, p) in counts.iter_mut().zip(part) {
            *c += p;
        }
    }
    Ok(BoundaryMeasureEstimate {
        cloud: region.cloud().clone(),
        r: region.r(),
        counts,
        samples,
        seed: stream.seed,
        offset_volume: VolumeEstimate::from_counts(region, samples, rounds),
    })
}

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(invalid("box must have positive dimension"));
        }
        if !lower.iter().zip(&upper).all(|(l, u)| l.is_finite() && u.is_finite() && l < u) {
            return Err(invalid("box needs finite corners with lower < upper in every coordinate"));
        }
        Ok(BoxRegion { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, x: &mut [f64]) {
        for ((xk, l), u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *xk = l + (u - l) * rng.random::<f64>();
        }
    }
}

fn over_box<A, F>(region: &BoxRegion, samples: u64, stream: RandomStream, workers: usize, visit: F) -> Result<Vec<A>>
where
    A: Default + Send,
    F: Fn(&mut A, &[f64]) + Sync,
{
    let dim = region.dim();
    let parts = run_items(stream, samples, workers, |acc: &mut (A, Vec<f64>), rng: &mut ChaCha8Rng, _| {
        if acc.1.is_empty() {
            acc.1.resize(dim, 0.0);
        }
        region.sample_into(rng, &mut acc.1);
        visit(&mut acc.0, &acc.1);
        Ok::<_, Error>(())
    })?;
    Ok(parts.into_iter().map(|p| p.0).collect())
}

/// Empirical pushforward of the uniform probability on `region` under the
/// nearest-point projection onto the cloud.
pub fn pushforward_from_box(cloud: PointCloud, region: &BoxRegion, samples: u64, seed: u64, workers: usize) -> Result<DiscreteMeasure> {
    check_dim(cloud.dim(), region.dim())?;
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if samples == 0 {
        return Err(invalid("pushforward needs at least one sample"));
    }
    let index = NearestIndex::build(cloud);
    let m = index.len();
    let parts = over_box(region, samples, RandomStream::new(seed), workers, |acc: &mut Vec<u64>, x| {
        if acc.is_empty() {
            acc.resize(m, 0);
        }
        acc[index.nearest_unchecked(x).0] += 1;
    })?;
    let mut counts = vec![0u64; m];
    for part in parts {
        for (c, p) in counts.iter_mut().zip(part) {
            *c += p;
        }
    }
    let weights = counts.iter().map(|&c| c as f64 / samples as f64).collect();
    DiscreteMeasure::new(index.dim(), index.cloud().coords().to_vec(), weights)
}

/// `∫_E |p_A(x) - p_B(x)| dx` for the box `E`, as box volume times the sample
/// mean, with the standard error from the sample variance.
pub fn projection_l1_distance(
    a: &NearestIndex,
    b: &NearestIndex,
    region: &BoxRegion,
    samples: u64,
    stream: RandomStream,
    workers: usize,
) -> Result<Estimate> {
    check_dim(a.dim(), b.dim())?;
    check_dim(a.dim(), region.dim())?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if samples == 0 {
        return Err(invalid("projection distance needs at least one sample"));
    }
    let parts = over_box(region, samples, stream, workers, |acc: &mut (f64, f64), x| {
        let pa = a.cloud().point(a.nearest_unchecked(x).0);
        let pb = b.cloud().point(b.nearest_unchecked(x).0);
        let d = squared_distance(pa, pb).sqrt();
        acc.0 += d;
        acc.1 += d * d;
    })?;
    let (sum, sumsq) = parts.iter().fold((0.0, 0.0), |s, p| (s.0 + p.0, s.1 + p.1));
    let n = samples as f64;
    let mean = sum / n;
    let var = if samples > 1 { ((sumsq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    let vol = region.volume();
    Ok(Estimate { value: vol * mean, stderr: vol * (var / n).sqrt() })
}
