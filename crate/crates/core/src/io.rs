//! Text point files and the JSON forms of measures and estimates.
//!
//! Point files hold one point per line, coordinates separated by commas
//! and/or whitespace. Blank lines and lines starting with `#` are skipped.
//! The first data line fixes the dimension.
//!
//! Measures are written as `{"dim": n, "atoms": [{"x": [...], "w": w}, ...]}`
//! with an optional `metadata` object.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::boundary::BoundaryMeasureEstimate;
use crate::curvature::CurvatureProfile;
use crate::error::{Error, Result};
use crate::geom::PointCloud;
use crate::measures::DiscreteMeasure;

pub fn parse_points(text: &str) -> Result<PointCloud> {
    let mut dim = None;
    let mut coords = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = k + 1;
        let mut count = 0;
        for field in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()) {
            let v: f64 = field.parse().map_err(|_| Error::Parse { line: lineno, message: format!("not a number: {field:?}") })?;
            if !v.is_finite() {
                return Err(Error::Parse { line: lineno, message: format!("non-finite coordinate {field:?}") });
            }
            coords.push(v);
            count += 1;
        }
        match dim {
            None if count == 0 => return Err(Error::Parse { line: lineno, message: "no coordinates".into() }),
            None => dim = Some(count),
            Some(d) if d != count => {
                return Err(Error::Parse { line: lineno, message: format!("expected {d} coordinates, found {count}") });
            }
            Some(_) => {}
        }
    }
    let dim = dim.ok_or(Error::Parse { line: 0, message: "no points in input".into() })?;
    PointCloud::new(dim, coords)
}

pub fn read_points(path: &Path) -> Result<PointCloud> {
    parse_points(&std::fs::read_to_string(path)?)
}

/// Shortest round-trip representation, one point per line.
pub fn format_points(cloud: &PointCloud) -> String {
    let mut out = String::with_capacity(cloud.coords().len() * 12);
    for p in cloud.iter() {
        let fields: Vec<String> = p.iter().map(|c| format!("{c:?}")).collect();
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    out
}

#[derive(Serialize, Deserialize)]
struct AtomJson {
    x: Vec<f64>,
    w: f64,
}

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    dim: usize,
    atoms: Vec<AtomJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<Value>,
}

pub fn measure_to_json(m: &DiscreteMeasure, metadata: Option<Value>) -> Value {
    let atoms: Vec<AtomJson> = m.atoms().map(|(x, w)| AtomJson { x: x.to_vec(), w }).collect();
    serde_json::to_value(MeasureJson { dim: m.dim(), atoms, metadata }).expect("measure serializes")
}

/// Parses the measure schema; negative weights produce a signed measure.
pub fn measure_from_json(value: &Value) -> Result<(DiscreteMeasure, Option<Value>)> {
    let parsed: MeasureJson = serde_json::from_value(value.clone())?;
    let mut locs = Vec::with_capacity(parsed.atoms.len() * parsed.dim);
    let mut ws = Vec::with_capacity(parsed.atoms.len());
    for a in parsed.atoms {
        if a.x.len() != parsed.dim {
            return Err(Error::DimensionMismatch { expected: parsed.dim, found: a.x.len() });
        }
        locs.extend(a.x);
        ws.push(a.w);
    }
    let m = if ws.iter().any(|&w| w < 0.0) {
        DiscreteMeasure::new_signed(parsed.dim, locs, ws)?
    } else {
        DiscreteMeasure::new(parsed.dim, locs, ws)?
    };
    Ok((m, parsed.metadata))
}

/// The unnormalized measure with its sampling metadata and raw counts.
pub fn boundary_estimate_to_json(est: &BoundaryMeasureEstimate, extra: Value) -> Value {
    let mut meta = json!({
        "r": est.r,
        "N": est.samples,
        "seed": est.seed,
        "offset_volume": est.offset_volume.estimate,
        "offset_volume_stderr": est.offset_volume.stderr,
        "proposal_rounds": est.offset_volume.rounds,
        "counts": est.counts,
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut meta, extra) {
        m.extend(e);
    }
    measure_to_json(&est.mu(), Some(meta))
}

pub fn curvature_to_json(profile: &CurvatureProfile, extra: Value) -> Value {
    let mut out = json!({
        "radii": profile.radii,
        "condition_number": profile.condition_number,
        "totals": profile.totals(),
        "profiles": profile.profiles.iter().map(|m| measure_to_json(m, None)).collect::<Vec<_>>(),
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut out, extra) {
        m.extend(e);
    }
    out
}
