//! JSON schemas for machine-readable reports. Field order is fixed by the
//! struct declarations and serde_json maps are sorted, so reports are
//! byte-identical across reruns with the same inputs and seed.

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::linalg::Mat;
use crate::qdiff::QuadDiff;
use crate::transversality::JacobianReport;

pub fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

pub fn matrix_json(m: &Mat) -> Value {
    let rows: Vec<Value> = (0..m.rows)
        .map(|i| Value::Array((0..m.cols).map(|j| complex_json(m.get(i, j))).collect()))
        .collect();
    Value::Array(rows)
}

/// {"matrix": [[[re,im],...]], "singular_values": [...], "rank": n,
///  "gap": g | null, "tolerance": t, "chart": "..."}
pub fn jacobian_report_json(r: &JacobianReport) -> Value {
    json!({
        "matrix": matrix_json(&r.matrix),
        "singular_values": r.singular_values,
        "rank": r.certified_rank,
        "gap": if r.gap.is_finite() { Value::from(r.gap) } else { Value::Null },
        "tolerance": r.tolerance,
        "chart": r.chart,
    })
}

/// {"terms": [[[re,im],[re,im]], ...]} as (pole, residue) pairs.
pub fn quad_diff_json(q: &QuadDiff) -> Value {
    let terms: Vec<Value> = q
        .terms()
        .iter()
        .map(|&(pole, residue)| Value::Array(vec![complex_json(pole), complex_json(residue)]))
        .collect();
    json!({ "terms": terms })
}

/// The envelope every command emits.
#[derive(Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub input: String,
    pub tolerances: std::collections::BTreeMap<String, f64>,
    pub results: Value,
}

impl Report {
    pub fn new(command: &str, input: &str, results: Value) -> Self {
        Self {
            schema_version: 1,
            command: command.to_string(),
            input: input.to_string(),
            tolerances: Default::default(),
            results,
        }
    }

    pub fn tolerance(mut self, name: &str, value: f64) -> Self {
        self.tolerances.insert(name.to_string(), value);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}
