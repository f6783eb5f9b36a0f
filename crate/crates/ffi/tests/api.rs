use std::ffi::{CStr, CString};
use std::ptr;

use tubemeasure_ffi::*;

fn last_error() -> String {
    let n = unsafe { tm_last_error(ptr::null_mut(), 0) };
    let mut buf = vec![0 as std::ffi::c_char; n + 1];
    unsafe { tm_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_owned()
}

fn cloud(dim: usize, coords: &[f64]) -> *mut TmCloud {
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { tm_cloud_new(dim, coords.as_ptr(), coords.len() / dim, &mut c) }, TmStatus::Ok);
    c
}

fn atoms(m: *const TmMeasure) -> (Vec<f64>, Vec<f64>) {
    let (n, d) = unsafe { (tm_measure_len(m), tm_measure_dim(m)) };
    let (mut locs, mut ws) = (vec![0.0; n * d], vec![0.0; n]);
    assert_eq!(unsafe { tm_measure_atoms(m, locs.as_mut_ptr(), ws.as_mut_ptr(), n) }, TmStatus::Ok);
    (locs, ws)
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(tm_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn boundary_estimate_round_trip() {
    let c = cloud(2, &[0.0, 0.0, 1.0, 0.0]);
    assert_eq!(unsafe { (tm_cloud_dim(c), tm_cloud_len(c)) }, (2, 2));
    let mut est = ptr::null_mut();
    assert_eq!(unsafe { tm_boundary_estimate(c, 0.3, 20_000, 7, 2, &mut est) }, TmStatus::Ok);
    let (mut vol, mut se) = (0.0, 0.0);
    assert_eq!(unsafe { tm_estimate_offset_volume(est, &mut vol, &mut se) }, TmStatus::Ok);
    // Two disjoint disks.
    let exact = 2.0 * std::f64::consts::PI * 0.09;
    assert!((vol - exact).abs() < 5.0 * se.max(1e-12), "{vol} vs {exact}");
    let mut counts = [0u64; 2];
    assert_eq!(unsafe { tm_estimate_counts(est, counts.as_mut_ptr(), 2) }, TmStatus::Ok);
    assert_eq!(counts[0] + counts[1], 20_000);

    let mut p = ptr::null_mut();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { tm_estimate_probability(est, &mut p) }, TmStatus::Ok);
    assert_eq!(unsafe { tm_estimate_measure(est, &mut m) }, TmStatus::Ok);
    assert!((unsafe { tm_measure_total_mass(p) } - 1.0).abs() < 1e-12);
    assert!((unsafe { tm_measure_total_mass(m) } - vol).abs() < 1e-9 * vol);
    let (locs, ws) = atoms(p);
    assert_eq!(locs, vec![0.0, 0.0, 1.0, 0.0]);
    assert_eq!(ws[0], counts[0] as f64 / 20_000.0);

    // Same seed, different worker count: same answer.
    let mut est1 = ptr::null_mut();
    assert_eq!(unsafe { tm_boundary_estimate(c, 0.3, 20_000, 7, 1, &mut est1) }, TmStatus::Ok);
    let mut counts1 = [0u64; 2];
    unsafe { tm_estimate_counts(est1, counts1.as_mut_ptr(), 2) };
    assert_eq!(counts, counts1);

    unsafe {
        tm_measure_free(p);
        tm_measure_free(m);
        tm_estimate_free(est);
        tm_estimate_free(est1);
        tm_cloud_free(c);
    }
}

#[test]
fn distances() {
    let mk = |locs: &[f64], ws: &[f64]| {
        let mut m = ptr::null_mut();
        assert_eq!(unsafe { tm_measure_new(1, locs.as_ptr(), ws.as_ptr(), ws.len(), &mut m) }, TmStatus::Ok);
        m
    };
    let a = mk(&[0.0], &[1.0]);
    let b = mk(&[1.0], &[1.0]);
    let (mut bl, mut w1) = (0.0, 0.0);
    assert_eq!(unsafe { tm_bl_distance(a, b, &mut bl) }, TmStatus::Ok);
    assert_eq!(unsafe { tm_w1_distance(a, b, &mut w1) }, TmStatus::Ok);
    // Two unit Diracs at distance d: bl = 2d / (d + 2).
    assert!((bl - 2.0 / 3.0).abs() < 1e-12, "{bl}");
    assert!((w1 - 1.0).abs() < 1e-12);
    let heavy = mk(&[1.0], &[2.0]);
    assert_eq!(unsafe { tm_w1_distance(a, heavy, &mut w1) }, TmStatus::InvalidArgument);
    assert!(last_error().contains("masses differ"), "{}", last_error());
    unsafe {
        tm_measure_free(a);
        tm_measure_free(b);
        tm_measure_free(heavy);
    }
}

#[test]
fn curvature_of_single_point() {
    let c = cloud(2, &[0.5, 0.5]);
    let radii = [0.1, 0.2, 0.4];
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { tm_curvature(c, radii.as_ptr(), 3, 0.0, 1000, 1, 1, &mut p) }, TmStatus::Ok);
    assert_eq!(unsafe { tm_profile_count(p) }, 3);
    assert!(unsafe { tm_profile_condition(p) } >= 1.0);
    let mut m0 = ptr::null_mut();
    assert_eq!(unsafe { tm_profile_measure(p, 0, &mut m0) }, TmStatus::Ok);
    assert!((unsafe { tm_measure_total_mass(m0) } - 1.0).abs() < 1e-9);
    let mut bad = ptr::null_mut();
    assert_eq!(unsafe { tm_profile_measure(p, 3, &mut bad) }, TmStatus::InvalidArgument);
    assert!(bad.is_null());

    let mut g = ptr::null_mut();
    assert_eq!(unsafe { tm_curvature(c, ptr::null(), 0, 0.05, 1000, 1, 1, &mut g) }, TmStatus::Ok);
    let close = [0.1, 0.1 + 1e-13, 0.2];
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { tm_curvature(c, close.as_ptr(), 3, 0.0, 100, 1, 1, &mut d) }, TmStatus::Numerical);
    assert!(d.is_null());
    unsafe {
        tm_measure_free(m0);
        tm_profile_free(p);
        tm_profile_free(g);
        tm_cloud_free(c);
    }
}

#[test]
fn errors_are_reported() {
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { tm_cloud_new(2, ptr::null(), 3, &mut c) }, TmStatus::NullPointer);
    assert_eq!(unsafe { tm_cloud_new(0, [1.0].as_ptr(), 1, &mut c) }, TmStatus::InvalidArgument);
    assert_eq!(unsafe { tm_cloud_new(1, [f64::NAN].as_ptr(), 1, &mut c) }, TmStatus::InvalidArgument);
    assert!(c.is_null());
    let mut est = ptr::null_mut();
    assert_eq!(unsafe { tm_boundary_estimate(ptr::null(), 0.1, 10, 0, 1, &mut est) }, TmStatus::NullPointer);
    assert!(last_error().contains("cloud"));

    let missing = CString::new("/nonexistent/points.txt").unwrap();
    assert_eq!(unsafe { tm_cloud_read(missing.as_ptr(), &mut c) }, TmStatus::Io);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "0 0\n1\n").unwrap();
    let path = CString::new(path.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { tm_cloud_read(path.as_ptr(), &mut c) }, TmStatus::Parse);
    assert!(last_error().starts_with("line 2"), "{}", last_error());

    let mut n = 0u64;
    assert_eq!(unsafe { tm_required_sample_count(10, 0.1, 0.01, &mut n) }, TmStatus::Ok);
    assert_eq!(n, 11211);
    assert_eq!(last_error(), "");

    // Truncation keeps the terminator.
    unsafe { tm_required_sample_count(0, 0.1, 0.01, &mut n) };
    let mut small = [1 as std::ffi::c_char; 5];
    let full = unsafe { tm_last_error(small.as_mut_ptr(), small.len()) };
    assert!(full > 4);
    assert_eq!(small[4], 0);
    unsafe { tm_cloud_free(ptr::null_mut()) };
}

#[test]
fn errors_are_per_thread() {
    let mut n = 0u64;
    unsafe { tm_required_sample_count(0, 0.1, 0.01, &mut n) };
    let here = last_error();
    assert!(!here.is_empty());
    std::thread::spawn(|| assert_eq!(last_error(), "")).join().unwrap();
    assert_eq!(last_error(), here);
}
