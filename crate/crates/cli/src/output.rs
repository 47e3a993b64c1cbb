//! CSV and JSON writers. Numbers use Rust's shortest round-trip formatting,
//! lines end in `\n`, and every file carries the config hash and seed.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use poisson_mixing::transforms::VanishingWitness;
use poisson_mixing::StatReport;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

pub fn coord_header(dim: usize) -> String {
    (0..dim).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",")
}

pub fn csv(
    hash: &str,
    seed: u64,
    header: &str,
    rows: impl Iterator<Item = Vec<f64>>,
) -> String {
    let mut out = format!("# config_sha256={hash} seed={seed}\n{header}\n");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| number(*v)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Shortest round-trip form, switching to exponent notation for very small
/// or very large magnitudes.
pub fn number(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

/// Writes to `path`, or to standard output when absent.
pub fn write(path: Option<&Path>, body: &str) -> io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, body),
        None => io::stdout().lock().write_all(body.as_bytes()),
    }
}

/// One check as it appears in the JSON report. Infinite z-scores are
/// written as `null`.
#[derive(Serialize)]
pub struct CheckRow {
    pub label: String,
    pub estimate: f64,
    pub reference: f64,
    pub reference_kind: &'static str,
    pub std_error: f64,
    pub z_score: Option<f64>,
    pub n_replicates: usize,
    pub pass: bool,
}

pub struct Report {
    command: String,
    hash: String,
    seed: u64,
    replicates: usize,
    config: Value,
    pub checks: Vec<CheckRow>,
    pub pass: bool,
    witness: Option<Value>,
}

impl Report {
    pub fn new(command: &str, hash: &str, seed: u64, replicates: usize, config: &RunConfig) -> Self {
        Self {
            command: command.into(),
            hash: hash.into(),
            seed,
            replicates,
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            checks: Vec::new(),
            pass: true,
            witness: None,
        }
    }

    pub fn push(&mut self, r: &StatReport) {
        self.push_row(CheckRow::from_report(r));
    }

    pub fn push_row(&mut self, row: CheckRow) {
        self.pass &= row.pass;
        self.checks.push(row);
    }

    pub fn set_witness(&mut self, draw: usize, w: &VanishingWitness) {
        let coords = |ps: &[poisson_mixing::Point]| -> Vec<Vec<f64>> {
            ps.iter().map(|p| p.coords().to_vec()).collect()
        };
        self.witness = Some(json!({
            "draw": draw,
            "subsets": w.subsets.iter().map(|s| coords(s)).collect::<Vec<_>>(),
            "factors": coords(&w.factors),
        }));
    }

    pub fn to_json(&self) -> String {
        let mut v = json!({
            "schema": SCHEMA_VERSION,
            "command": self.command,
            "config_sha256": self.hash,
            "seed": self.seed,
            "replicates": self.replicates,
            "config": self.config,
            "checks": self.checks,
            "pass": self.pass,
        });
        if let Some(w) = &self.witness {
            v["witness"] = w.clone();
        }
        let mut s = serde_json::to_string_pretty(&v).expect("report serialises");
        s.push('\n');
        s
    }
}
