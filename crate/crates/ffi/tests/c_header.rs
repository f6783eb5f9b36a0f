//! Compiles and runs a small C program against the generated header and a
//! freshly built static library. Skipped when no C compiler is on PATH.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "tubemeasure.h"

int main(void) {
    double pts[] = {0.0, 0.0, 1.0, 0.0, 0.5, 0.8};
    TmCloud *cloud = NULL;
    if (tm_cloud_new(2, pts, 3, &cloud) != TM_STATUS_OK) return 1;
    TmEstimate *est = NULL;
    if (tm_boundary_estimate(cloud, 0.2, 5000, 3, 1, &est) != TM_STATUS_OK) return 2;
    TmMeasure *beta = NULL;
    if (tm_estimate_probability(est, &beta) != TM_STATUS_OK) return 3;
    if (fabs(tm_measure_total_mass(beta) - 1.0) > 1e-12) return 4;
    TmEstimate *bad = NULL;
    if (tm_boundary_estimate(cloud, -1.0, 10, 0, 1, &bad) != TM_STATUS_INVALID_ARGUMENT) return 5;
    char msg[256];
    if (tm_last_error(msg, sizeof msg) == 0) return 6;
    printf("%s|%zu\n", tm_version(), tm_measure_len(beta));
    tm_measure_free(beta);
    tm_estimate_free(est);
    tm_cloud_free(cloud);
    return 0;
}
"#;

fn compiler() -> Option<String> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .map(String::from)
}

// `cargo test` does not refresh staticlib outputs, so build one into a
// separate target directory (which also avoids the outer build lock).
fn build_static_library() -> PathBuf {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let target = manifest.join("../../target/c-abi");
    let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
    let status = Command::new(cargo)
        .args(["build", "--release", "--quiet", "--manifest-path"])
        .arg(manifest.join("Cargo.toml"))
        .arg("--target-dir")
        .arg(&target)
        .status()
        .unwrap();
    assert!(status.success(), "building the static library failed");
    target.join("release").join("libtubemeasure_ffi.a")
}

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let lib = build_static_library();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let out = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl"])
        .arg("-o")
        .arg(&bin)
        .output()
        .unwrap();
    assert!(out.status.success(), "compile failed:\n{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert_eq!(stdout.trim(), format!("{}|3", env!("CARGO_PKG_VERSION")));
}
