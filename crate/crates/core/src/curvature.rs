//! Approximate curvature measures from boundary measures at several radii.
//!
//! For a set in `R^n` the offset-volume measure is a polynomial in `r`,
//! `mu_r = sum_j vol(B^{n-j}) Phi_j r^{n-j}`. Given masses at `n + 1`
//! distinct radii, each atom's coefficients solve a generalized Vandermonde
//! system `A Phi = mu` with `A[i][j] = vol(B^{n-j}) r_i^{n-j}`.

use serde::{Deserialize, Serialize};

use crate::boundary::estimate_on_region;
use crate::error::{invalid, Error, Result};
use crate::geom::{ball_volume, PointCloud};
use crate::measures::DiscreteMeasure;
use crate::rng::RandomStream;
use crate::sampler::OffsetRegion;

/// Solves with a condition number above this fail with
/// [`Error::DegenerateSchedule`].
pub const MAX_CONDITION: f64 = 1e12;

/// `n + 1` strictly increasing positive radii for a cloud in `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiiSchedule {
    radii: Vec<f64>,
}

impl RadiiSchedule {
    pub fn new(radii: Vec<f64>, dim: usize) -> Result<Self> {
        if radii.len() != dim + 1 {
            return Err(invalid(format!("need {} radii in dimension {dim}, got {}", dim + 1, radii.len())));
        }
        if !radii.iter().all(|r| r.is_finite() && *r > 0.0) {
            return Err(invalid("radii must be positive and finite"));
        }
        if radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("radii must be strictly increasing"));
        }
        Ok(RadiiSchedule { radii })
    }

    /// `r_i = r0 * g^i` with `r_n = 4 r0`.
    pub fn geometric(r0: f64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        let g = 4f64.powf(1.0 / dim as f64);
        let mut radii: Vec<f64> = (0..=dim).map(|i| r0 * g.powi(i as i32)).collect();
        radii[dim] = 4.0 * r0;
        RadiiSchedule::new(radii, dim)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn dim(&self) -> usize {
        self.radii.len() - 1
    }

    /// The system matrix, row-major.
    pub fn matrix(&self) -> Vec<f64> {
        let n = self.dim();
        let mut a = Vec::with_capacity((n + 1) * (n + 1));
        for &r in &self.radii {
            for j in 0..=n {
                a.push(ball_volume(n - j) * r.powi((n - j) as i32));
            }
        }
        a
    }
}

/// Signed measures `Phi_0 .. Phi_n` on the cloud's atoms.
#[derive(Debug, Clone)]
pub struct CurvatureProfile {
    pub radii: Vec<f64>,
    pub profiles: Vec<DiscreteMeasure>,
    pub condition_number: f64,
}

impl CurvatureProfile {
    pub fn totals(&self) -> Vec<f64> {
        self.profiles.iter().map(DiscreteMeasure::total_mass).collect()
    }
}

struct Lu {
    n: usize,
    a: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(mut a: Vec<f64>, n: usize) -> Option<Lu> {
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n).max_by(|&x, &y| a[x * n + k].abs().total_cmp(&a[y * n + k].abs()))?;
            if a[p * n + k] == 0.0 {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.swap(p * n + j, k * n + j);
                }
                perm.swap(p, k);
            }
            for i in k + 1..n {
                let f = a[i * n + k] / a[k * n + k];
                a[i * n + k] = f;
                for j in k + 1..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
        Some(Lu { n, a, perm })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.a[i * n + k] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.a[i * n + k] * x[k];
            }
            x[i] /= self.a[i * n + i];
        }
        x
    }

    /// 1-norm condition number, from the explicit inverse.
    fn condition(&self, original: &[f64]) -> f64 {
        let n = self.n;
        let col_norm_max = |m: &dyn Fn(usize, usize) -> f64| (0..n).map(|j| (0..n).map(|i| m(i, j).abs()).sum::<f64>()).fold(0.0, f64::max);
        let mut inv = vec![0.0; n * n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            for (i, v) in self.solve(&e).into_iter().enumerate() {
                inv[i * n + j] = v;
            }
        }
        col_norm_max(&|i, j| original[i * n + j]) * col_norm_max(&|i, j| inv[i * n + j])
    }
}

/// Solves the per-atom system. `mass_table[i][k]` is the mass of atom `k` at
/// radius `i` of the schedule.
pub fn solve_curvature(cloud: &PointCloud, mass_table: &[Vec<f64>], schedule: &RadiiSchedule) -> Result<CurvatureProfile> {
    let n = schedule.dim();
    if cloud.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: cloud.dim() });
    }
    if mass_table.len() != n + 1 {
        return Err(invalid(format!("need {} rows of masses, got {}", n + 1, mass_table.len())));
    }
    let m = cloud.len();
    if let Some(row) = mass_table.iter().find(|row| row.len() != m) {
        return Err(invalid(format!("mass row has {} entries for {m} atoms", row.len())));
    }
    if mass_table.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid("masses must be finite"));
    }
    let a = schedule.matrix();
    let degenerate = |condition| Error::DegenerateSchedule { condition, limit: MAX_CONDITION };
    let lu = Lu::factor(a.clone(), n + 1).ok_or_else(|| degenerate(f64::INFINITY))?;
    let condition = lu.condition(&a);
    if !(condition <= MAX_CONDITION) {
        return Err(degenerate(condition));
    }
    let mut weights = vec![Vec::with_capacity(m); n + 1];
    let mut b = vec![0.0; n + 1];
    for k in 0..m {
        for (bi, row) in b.iter_mut().zip(mass_table) {
            *bi = row[k];
        }
        for (j, phi) in lu.solve(&b).into_iter().enumerate() {
            weights[j].push(phi);
        }
    }
    let profiles =
        weights.into_iter().map(|w| DiscreteMeasure::new_signed(cloud.dim(), cloud.coords().to_vec(), w)).collect::<Result<_>>()?;
    Ok(CurvatureProfile { radii: schedule.radii().to_vec(), profiles, condition_number: condition })
}

/// Per-atom boundary-measure masses at each radius of the schedule. Every
/// radius uses the same random stream.
pub fn mass_table_from_cloud(
    cloud: PointCloud,
    schedule: &RadiiSchedule,
    samples_per_radius: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<Vec<f64>>> {
    if cloud.dim() != schedule.dim() {
        return Err(Error::DimensionMismatch { expected: schedule.dim(), found: cloud.dim() });
    }
    let base = OffsetRegion::new(cloud, schedule.radii()[0])?;
    schedule
        .radii()
        .iter()
        .map(|&r| {
            let est = estimate_on_region(&base.with_radius(r)?, samples_per_radius, RandomStream::new(seed), workers)?;
            Ok((0..est.counts.len()).map(|i| est.mu_mass(i)).collect())
        })
        .collect()
}

/// Estimates boundary measures at each radius, then solves.
pub fn curvature_from_cloud(
    cloud: PointCloud,
    schedule: &RadiiSchedule,
    samples_per_radius: u64,
    seed: u64,
    workers: usize,
) -> Result<CurvatureProfile> {
    let table = mass_table_from_cloud(cloud.clone(), schedule, samples_per_radius, seed, workers)?;
    solve_curvature(&cloud, &table, schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cloud(dim: usize, coords: &[f64]) -> PointCloud {
        PointCloud::new(dim, coords.to_vec()).unwrap()
    }

    fn reconstruct(profile: &CurvatureProfile, k: usize) -> Vec<f64> {
        let n = profile.radii.len() - 1;
        profile
            .radii
            .iter()
            .map(|&r| (0..=n).map(|j| ball_volume(n - j) * profile.profiles[j].weight(k) * r.powi((n - j) as i32)).sum())
            .collect()
    }

    #[test]
    fn schedules() {
        let s = RadiiSchedule::geometric(0.05, 2).unwrap();
        assert_eq!(s.radii().len(), 3);
        assert!((s.radii()[1] - 0.1).abs() < 1e-15);
        assert_eq!(s.radii()[2], 0.2);
        assert!(RadiiSchedule::new(vec![0.1, 0.1, 0.2], 2).is_err());
        assert!(RadiiSchedule::new(vec![0.1, 0.2], 2).is_err());
        assert!(RadiiSchedule::new(vec![0.0, 0.1, 0.2], 2).is_err());
    }

    #[test]
    fn zero_masses_give_zero() {
        let c = cloud(2, &[0.0, 0.0, 1.0, 0.0]);
        let s = RadiiSchedule::geometric(0.1, 2).unwrap();
        let p = solve_curvature(&c, &vec![vec![0.0; 2]; 3], &s).unwrap();
        assert!(p.profiles.iter().all(|m| m.weights().iter().all(|&w| w == 0.0)));
    }

    #[test]
    fn single_point_is_pure_euler() {
        let c = cloud(2, &[0.3, 0.4]);
        let s = RadiiSchedule::new(vec![0.05, 0.1, 0.2], 2).unwrap();
        let table: Vec<Vec<f64>> = s.radii().iter().map(|r| vec![PI * r * r]).collect();
        let p = solve_curvature(&c, &table, &s).unwrap();
        assert!((p.profiles[0].weight(0) - 1.0).abs() < 1e-12);
        assert!(p.profiles[1].weight(0).abs() < 1e-12);
        assert!(p.profiles[2].weight(0).abs() < 1e-12);
        assert!(p.condition_number > 1.0 && p.condition_number < 1e6);
    }

    #[test]
    fn unit_square_steiner_masses() {
        // Vertices carry the corner sectors, edge midpoints the bands, the
        // center the interior.
        let coords = [0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.5, 0.0, 1.0, 0.5, 0.5, 1.0, 0.0, 0.5, 0.5, 0.5];
        let c = cloud(2, &coords);
        let s = RadiiSchedule::geometric(0.05, 2).unwrap();
        let table: Vec<Vec<f64>> = s
            .radii()
            .iter()
            .map(|&r| {
                let mut row = vec![(PI / 2.0) * r * r / 2.0; 4];
                row.extend([r; 4]);
                row.push(1.0);
                row
            })
            .collect();
        let p = solve_curvature(&c, &table, &s).unwrap();
        for k in 0..4 {
            assert!((p.profiles[0].weight(k) - 0.25).abs() < 1e-9);
        }
        let totals = p.totals();
        assert!((totals[0] - 1.0).abs() < 1e-9);
        assert!((totals[1] - 2.0).abs() < 1e-9);
        assert!((totals[2] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn scale_coherence() {
        for n in 1..=4usize {
            for scale in [1e-2, 1.0, 30.0] {
                let s = RadiiSchedule::geometric(0.1 * scale, n).unwrap();
                let table: Vec<Vec<f64>> = s.radii().iter().map(|r| vec![ball_volume(n) * r.powi(n as i32)]).collect();
                let c = cloud(n, &vec![0.0; n]);
                match solve_curvature(&c, &table, &s) {
                    Ok(p) => assert!((p.profiles[0].weight(0) - 1.0).abs() < 1e-9, "n={n} scale={scale}"),
                    Err(Error::DegenerateSchedule { .. }) => assert!(scale < 1.0 && n >= 3),
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn clustered_radii_are_degenerate() {
        let s = RadiiSchedule::new(vec![1e-5, 1e-5 + 1e-13, 2e-5], 2).unwrap();
        let c = cloud(2, &[0.0, 0.0]);
        let r = solve_curvature(&c, &vec![vec![1.0]; 3], &s);
        assert!(matches!(r, Err(Error::DegenerateSchedule { .. })));
    }

    #[test]
    fn from_cloud_singleton_and_far_pair() {
        let s = RadiiSchedule::geometric(0.1, 2).unwrap();
        let p = curvature_from_cloud(cloud(2, &[0.0, 0.0]), &s, 2000, 3, 1).unwrap();
        assert!((p.profiles[0].weight(0) - 1.0).abs() < 1e-9);
        assert!(p.profiles[1].weight(0).abs() < 1e-9 && p.profiles[2].weight(0).abs() < 1e-9);
        let p = curvature_from_cloud(cloud(2, &[0.0, 0.0, 5.0, 0.0]), &s, 20_000, 3, 2).unwrap();
        assert!((p.totals()[0] - 2.0).abs() < 1e-9);
    }

    fn table_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>, f64)> {
        let row = || prop::collection::vec(-5.0f64..5.0, 4);
        (prop::collection::vec(row(), 3), prop::collection::vec(row(), 3), -3.0f64..3.0)
    }

    proptest! {
        #[test]
        fn reconstruction_and_linearity((t1, t2, alpha) in table_strategy(), r0 in 0.01f64..1.0) {
            let c = cloud(2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 2.0, 2.0]);
            let s = RadiiSchedule::geometric(r0, 2).unwrap();
            let p1 = solve_curvature(&c, &t1, &s).unwrap();
            let p2 = solve_curvature(&c, &t2, &s).unwrap();
            let mix: Vec<Vec<f64>> = t1.iter().zip(&t2).map(|(a, b)| a.iter().zip(b).map(|(x, y)| alpha * x + y).collect()).collect();
            let pm = solve_curvature(&c, &mix, &s).unwrap();
            for k in 0..4 {
                for (i, v) in reconstruct(&p1, k).into_iter().enumerate() {
                    prop_assert!((v - t1[i][k]).abs() <= 1e-9 * t1.iter().flatten().fold(1.0f64, |m, x| m.max(x.abs())));
                }
                for j in 0..3 {
                    let lin = alpha * p1.profiles[j].weight(k) + p2.profiles[j].weight(k);
                    let got = pm.profiles[j].weight(k);
                    prop_assert!((got - lin).abs() <= 1e-9 * (1.0 + lin.abs()), "{got} vs {lin}");
                }
            }
        }
    }
}
