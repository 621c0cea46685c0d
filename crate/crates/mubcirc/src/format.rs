//! On-disk formats: versioned JSON for sets and reports, CSV entry tables
//! and a decimal export for numerical tools.

use std::f64::consts::PI;
use std::fmt;

use mubcirc_core::weil::WeilReport;
use mubcirc_core::{CycInt, ExactMatrix, FieldSpec, MubSet};
use serde::{Deserialize, Serialize};

/// Version of every JSON document written by this crate.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub enum FormatError {
    /// Malformed or inconsistent document, with the parser's location.
    Parse(String),
    Unsupported(String),
    Serialize(String),
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatError::Parse(msg) => write!(f, "parse error: {msg}"),
            FormatError::Unsupported(msg) => write!(f, "unsupported document: {msg}"),
            FormatError::Serialize(msg) => write!(f, "cannot serialize: {msg}"),
        }
    }
}

impl std::error::Error for FormatError {}

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON with a leading `schema_version` key.
pub fn to_json<T: Serialize>(body: &T) -> Result<String, FormatError> {
    let mut s = serde_json::to_string_pretty(&Versioned { schema_version: SCHEMA_VERSION, body })
        .map_err(|e| FormatError::Serialize(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[derive(Deserialize)]
struct Header {
    schema_version: Option<u32>,
}

#[derive(Deserialize)]
struct MubSetFile {
    field: FieldSpec,
    bases: Vec<ExactMatrix>,
}

fn check_version(text: &str) -> Result<(), FormatError> {
    let header: Header = serde_json::from_str(text).map_err(|e| FormatError::Parse(e.to_string()))?;
    match header.schema_version {
        Some(SCHEMA_VERSION) => Ok(()),
        Some(v) => Err(FormatError::Unsupported(format!("schema_version {v}, expected {SCHEMA_VERSION}"))),
        None => Err(FormatError::Parse("missing schema_version".into())),
    }
}

/// Parses a MUB set document; every matrix is validated on load.
pub fn read_mub_set(text: &str) -> Result<MubSet, FormatError> {
    check_version(text)?;
    let file: MubSetFile = serde_json::from_str(text).map_err(|e| FormatError::Parse(e.to_string()))?;
    MubSet::new(file.field, file.bases).map_err(|e| FormatError::Parse(e.to_string()))
}

/// Parses any versioned report type written by [`to_json`].
pub fn read_report<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, FormatError> {
    check_version(text)?;
    serde_json::from_str(text).map_err(|e| FormatError::Parse(e.to_string()))
}

fn csv_string(rows: Vec<Vec<String>>) -> Result<String, FormatError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).map_err(|e| FormatError::Serialize(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| FormatError::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| FormatError::Serialize(e.to_string()))
}

fn coeff_header(prefix: &[&str], width: usize, suffix: &[&str]) -> Vec<String> {
    prefix
        .iter()
        .map(|s| s.to_string())
        .chain((0..width).map(|k| format!("c{k}")))
        .chain(suffix.iter().map(|s| s.to_string()))
        .collect()
}

/// One row per entry: `basis,row,col,t,c0,…` with the canonical coefficients.
pub fn mub_set_csv(set: &MubSet) -> Result<String, FormatError> {
    let width = set.bases()[0].entry(0, 0).coeffs().len();
    let mut rows = vec![coeff_header(&["basis", "row", "col", "t"], width, &[])];
    for (k, b) in set.bases().iter().enumerate() {
        for r in 0..b.dim() {
            for c in 0..b.dim() {
                let mut row = vec![k.to_string(), r.to_string(), c.to_string(), b.t().to_string()];
                row.extend(b.entry(r, c).coeffs().iter().map(|x| x.to_string()));
                rows.push(row);
            }
        }
    }
    csv_string(rows)
}

/// One row per `(θ, θ′)`: indices, coefficients of the sum, `|Σ|²`, verdict.
pub fn weil_csv(report: &WeilReport) -> Result<String, FormatError> {
    let width = (report.field.p() - 1) as usize;
    let mut rows = vec![coeff_header(&["theta_index", "theta_prime_index"], width, &["norm_sq", "pass"])];
    for r in &report.rows {
        let mut row = vec![r.theta_index.to_string(), r.theta_prime_index.to_string()];
        row.extend(r.sum.coeffs().iter().map(|x| x.to_string()));
        row.push(r.norm_sq.map(|v| v.to_string()).unwrap_or_default());
        row.push(r.pass.to_string());
        rows.push(row);
    }
    csv_string(rows)
}

/// `p^{−t/2} · Σ c_k ζ_m^k` as `(re, im)`.
pub fn complex_value(value: &CycInt, t: u32, p: u32) -> (f64, f64) {
    let m = value.m() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (k, &c) in value.coeffs().iter().enumerate() {
        let a = 2.0 * PI * k as f64 / m;
        re += c as f64 * a.cos();
        im += c as f64 * a.sin();
    }
    let s = (p as f64).powf(-(t as f64) / 2.0);
    (re * s, im * s)
}

/// Decimal approximations (15 significant digits): `basis,row,col,re,im`.
pub fn float_export(set: &MubSet) -> Result<String, FormatError> {
    let p = set.spec().p();
    let mut rows = vec![["basis", "row", "col", "re", "im"].map(String::from).to_vec()];
    for (k, b) in set.bases().iter().enumerate() {
        for r in 0..b.dim() {
            for c in 0..b.dim() {
                let (re, im) = complex_value(&b.entry(r, c), b.t(), p);
                rows.push(vec![k.to_string(), r.to_string(), c.to_string(), format!("{re:.14e}"), format!("{im:.14e}")]);
            }
        }
    }
    csv_string(rows)
}
