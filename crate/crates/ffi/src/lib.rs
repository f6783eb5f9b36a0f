//! C interface to `tubemeasure`.
//!
//! Objects are opaque handles created by `tm_*` constructors and released with
//! the matching `tm_*_free`. Every fallible call returns a [`TmStatus`]; on
//! failure the message is available from [`tm_last_error`] on the same thread.
//! Panics never cross the boundary; they are reported as `TM_STATUS_PANIC`.
//!
//! Every pointer argument must be NULL or valid for the stated length, and
//! handles must come from this library and not be used after being freed.
//! NULL is always detected and reported as `TM_STATUS_NULL_POINTER`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::os::raw::c_double;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use tubemeasure::boundary::{estimate_boundary_measure, required_sample_count, BoundaryMeasureEstimate};
use tubemeasure::curvature::{curvature_from_cloud, CurvatureProfile, RadiiSchedule};
use tubemeasure::geom::PointCloud;
use tubemeasure::io::read_points;
use tubemeasure::measures::{bl_distance, w1_distance, DiscreteMeasure};
use tubemeasure::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    EmptyCloud = 4,
    /// Ill-conditioned radii, exhausted sampler or transport failure.
    Numerical = 5,
    Parse = 6,
    Io = 7,
    Panic = 8,
}

/// A point cloud.
pub struct TmCloud(PointCloud);

/// A boundary-measure estimate with its sampling metadata.
pub struct TmEstimate(BoundaryMeasureEstimate);

/// A finite (possibly signed) discrete measure.
pub struct TmMeasure(DiscreteMeasure);

/// Curvature measures, one per index `0..=dim`.
pub struct TmProfile(CurvatureProfile);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> TmStatus {
    match e {
        Error::DimensionMismatch { .. } => TmStatus::DimensionMismatch,
        Error::EmptyCloud => TmStatus::EmptyCloud,
        Error::DegenerateSchedule { .. } | Error::SamplerExhausted { .. } | Error::Solver(_) => TmStatus::Numerical,
        Error::Parse { .. } | Error::Json(_) => TmStatus::Parse,
        Error::Io(_) => TmStatus::Io,
        _ => TmStatus::InvalidArgument,
    }
}

enum Fail {
    Lib(Error),
    Null(&'static str),
    Arg(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            TmStatus::Ok
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            TmStatus::NullPointer
        }
        Ok(Err(Fail::Arg(msg))) => {
            set_error(msg);
            TmStatus::InvalidArgument
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            TmStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    *out = value;
    Ok(())
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to `len - 1` bytes. Returns the full
/// message length without the terminator; pass `buf = NULL` to query it.
#[no_mangle]
pub unsafe extern "C" fn tm_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a cloud from `count` points of dimension `dim`, stored row-major.
#[no_mangle]
pub unsafe extern "C" fn tm_cloud_new(dim: usize, coords: *const c_double, count: usize, out: *mut *mut TmCloud) -> TmStatus {
    guard(|| {
        let len = dim.checked_mul(count).ok_or_else(|| Fail::Arg("dim * count overflows".into()))?;
        let coords = slice(coords, len, "coords")?;
        put(out, TmCloud(PointCloud::new(dim, coords.to_vec())?))
    })
}

/// Reads a point file (one point per line, comma or whitespace separated).
#[no_mangle]
pub unsafe extern "C" fn tm_cloud_read(path: *const c_char, out: *mut *mut TmCloud) -> TmStatus {
    guard(|| {
        if path.is_null() {
            return Err(Fail::Null("path"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|_| Fail::Arg("path is not UTF-8".into()))?;
        put(out, TmCloud(read_points(Path::new(path))?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_cloud_free(cloud: *mut TmCloud) {
    release(cloud)
}

/// Dimension of the cloud, 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn tm_cloud_dim(cloud: *const TmCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.0.dim())
}

/// Number of points, 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn tm_cloud_len(cloud: *const TmCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.0.len())
}

/// Samples needed so the estimate is within `eps` in the bounded-Lipschitz
/// distance with probability at least `1 - delta`, given a covering number.
#[no_mangle]
pub unsafe extern "C" fn tm_required_sample_count(covering: usize, eps: c_double, delta: c_double, out: *mut u64) -> TmStatus {
    guard(|| write(out, required_sample_count(covering, eps, delta)?))
}

/// Estimates the boundary measure of `cloud` at offset radius `r` from
/// `samples` uniform points of the offset. Results depend only on `seed`, not
/// on `workers`.
#[no_mangle]
pub unsafe extern "C" fn tm_boundary_estimate(
    cloud: *const TmCloud,
    r: c_double,
    samples: u64,
    seed: u64,
    workers: usize,
    out: *mut *mut TmEstimate,
) -> TmStatus {
    guard(|| {
        let cloud = get(cloud, "cloud")?;
        put(out, TmEstimate(estimate_boundary_measure(cloud.0.clone(), r, samples, seed, workers)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_estimate_free(est: *mut TmEstimate) {
    release(est)
}

/// Offset volume estimate and its standard error.
#[no_mangle]
pub unsafe extern "C" fn tm_estimate_offset_volume(est: *const TmEstimate, volume: *mut c_double, stderr: *mut c_double) -> TmStatus {
    guard(|| {
        let est = get(est, "estimate")?;
        write(volume, est.0.offset_volume.estimate)?;
        write(stderr, est.0.offset_volume.stderr)
    })
}

/// Per-point sample counts, copied into `counts` (length `tm_cloud_len`).
#[no_mangle]
pub unsafe extern "C" fn tm_estimate_counts(est: *const TmEstimate, counts: *mut u64, len: usize) -> TmStatus {
    guard(|| {
        let est = get(est, "estimate")?;
        if len != est.0.counts.len() {
            return Err(Fail::Arg(format!("counts buffer holds {len}, need {}", est.0.counts.len())));
        }
        if counts.is_null() {
            return Err(Fail::Null("counts"));
        }
        ptr::copy_nonoverlapping(est.0.counts.as_ptr(), counts, len);
        Ok(())
    })
}

/// The boundary measure, scaled by the offset volume.
#[no_mangle]
pub unsafe extern "C" fn tm_estimate_measure(est: *const TmEstimate, out: *mut *mut TmMeasure) -> TmStatus {
    guard(|| put(out, TmMeasure(get(est, "estimate")?.0.mu())))
}

/// The normalized (probability) boundary measure.
#[no_mangle]
pub unsafe extern "C" fn tm_estimate_probability(est: *const TmEstimate, out: *mut *mut TmMeasure) -> TmStatus {
    guard(|| put(out, TmMeasure(get(est, "estimate")?.0.beta())))
}

/// Builds a nonnegative measure from `count` atoms.
#[no_mangle]
pub unsafe extern "C" fn tm_measure_new(
    dim: usize,
    locations: *const c_double,
    weights: *const c_double,
    count: usize,
    out: *mut *mut TmMeasure,
) -> TmStatus {
    guard(|| {
        let len = dim.checked_mul(count).ok_or_else(|| Fail::Arg("dim * count overflows".into()))?;
        let locs = slice(locations, len, "locations")?;
        let ws = slice(weights, count, "weights")?;
        put(out, TmMeasure(DiscreteMeasure::new(dim, locs.to_vec(), ws.to_vec())?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_measure_free(m: *mut TmMeasure) {
    release(m)
}

/// Number of atoms, 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn tm_measure_len(m: *const TmMeasure) -> usize {
    m.as_ref().map_or(0, |m| m.0.len())
}

/// Dimension, 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn tm_measure_dim(m: *const TmMeasure) -> usize {
    m.as_ref().map_or(0, |m| m.0.dim())
}

/// Sum of the weights, NaN for NULL.
#[no_mangle]
pub unsafe extern "C" fn tm_measure_total_mass(m: *const TmMeasure) -> c_double {
    m.as_ref().map_or(f64::NAN, |m| m.0.total_mass())
}

/// Copies the atoms out: `locations` holds `len * dim` values row-major and
/// `weights` holds `len`, where `len` must equal `tm_measure_len`.
#[no_mangle]
pub unsafe extern "C" fn tm_measure_atoms(m: *const TmMeasure, locations: *mut c_double, weights: *mut c_double, len: usize) -> TmStatus {
    guard(|| {
        let m = &get(m, "measure")?.0;
        if len != m.len() {
            return Err(Fail::Arg(format!("buffers hold {len} atoms, need {}", m.len())));
        }
        if len == 0 {
            return Ok(());
        }
        if locations.is_null() || weights.is_null() {
            return Err(Fail::Null("locations or weights"));
        }
        ptr::copy_nonoverlapping(m.locations().as_ptr(), locations, len * m.dim());
        ptr::copy_nonoverlapping(m.weights().as_ptr(), weights, len);
        Ok(())
    })
}

/// Exact bounded-Lipschitz distance between two measures.
#[no_mangle]
pub unsafe extern "C" fn tm_bl_distance(a: *const TmMeasure, b: *const TmMeasure, out: *mut c_double) -> TmStatus {
    guard(|| write(out, bl_distance(&get(a, "a")?.0, &get(b, "b")?.0)?))
}

/// Exact 1-Wasserstein distance between two measures of equal mass.
#[no_mangle]
pub unsafe extern "C" fn tm_w1_distance(a: *const TmMeasure, b: *const TmMeasure, out: *mut c_double) -> TmStatus {
    guard(|| write(out, w1_distance(&get(a, "a")?.0, &get(b, "b")?.0)?))
}

/// Curvature measures of `cloud` from boundary measures at the given
/// increasing radii (`dim + 1` of them), or at a geometric schedule from
/// `r0` to `4 r0` when `radii` is NULL.
#[no_mangle]
pub unsafe extern "C" fn tm_curvature(
    cloud: *const TmCloud,
    radii: *const c_double,
    radii_len: usize,
    r0: c_double,
    samples_per_radius: u64,
    seed: u64,
    workers: usize,
    out: *mut *mut TmProfile,
) -> TmStatus {
    guard(|| {
        let cloud = &get(cloud, "cloud")?.0;
        let schedule = if radii.is_null() {
            RadiiSchedule::geometric(r0, cloud.dim())?
        } else {
            RadiiSchedule::new(slice(radii, radii_len, "radii")?.to_vec(), cloud.dim())?
        };
        put(out, TmProfile(curvature_from_cloud(cloud.clone(), &schedule, samples_per_radius, seed, workers)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_profile_free(p: *mut TmProfile) {
    release(p)
}

/// Number of curvature measures (`dim + 1`), 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn tm_profile_count(p: *const TmProfile) -> usize {
    p.as_ref().map_or(0, |p| p.0.profiles.len())
}

/// 1-norm condition number of the solved system, NaN for NULL.
#[no_mangle]
pub unsafe extern "C" fn tm_profile_condition(p: *const TmProfile) -> c_double {
    p.as_ref().map_or(f64::NAN, |p| p.0.condition_number)
}

/// A copy of curvature measure `index` (signed in general).
#[no_mangle]
pub unsafe extern "C" fn tm_profile_measure(p: *const TmProfile, index: usize, out: *mut *mut TmMeasure) -> TmStatus {
    guard(|| {
        let p = &get(p, "profile")?.0;
        let m = p.profiles.get(index).ok_or_else(|| Fail::Arg(format!("index {index} out of range 0..{}", p.profiles.len())))?;
        put(out, TmMeasure(m.clone()))
    })
}
