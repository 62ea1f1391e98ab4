//! Report envelope and writers. Reports carry no timestamps, so identical
//! configurations produce byte-identical files.

use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use hofa_core::{Estimate, Mode};
use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, ErrorKind};
use crate::input::{InputHash, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// The effective run configuration echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub budget: u64,
    pub threads: usize,
    pub mc_samples: Option<u64>,
    pub exact_only: bool,
    pub format: Format,
}

/// Numerical tolerance attached to a result.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tolerance {
    /// Full enumeration; the value is exact up to floating-point roundoff.
    Roundoff { abs: f64 },
    /// Sampling error of a Monte Carlo estimate; `half_width` = sigmas · std_error.
    Statistical { std_error: f64, sigmas: f64, half_width: f64 },
    /// A seeded randomized procedure (tester, experiment) with no single error bar.
    Seeded,
}

/// Roundoff allowance quoted for exact results.
pub const ROUNDOFF: f64 = 1e-9;
/// Width, in standard errors, of the quoted Monte Carlo interval.
pub const MC_SIGMAS: f64 = 4.0;

impl Tolerance {
    pub fn exact() -> Self {
        Tolerance::Roundoff { abs: ROUNDOFF }
    }

    pub fn of<T>(e: &Estimate<T>) -> Self {
        match (e.mode, e.std_error) {
            (Mode::MonteCarlo { .. }, Some(se)) => Tolerance::Statistical { std_error: se, sigmas: MC_SIGMAS, half_width: MC_SIGMAS * se },
            _ => Tolerance::exact(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: &'static str,
    pub command: String,
    pub config: RunConfig,
    pub inputs: Vec<InputHash>,
    pub mode: Option<Mode>,
    pub tolerance: Tolerance,
    pub result: Value,
}

impl Report {
    pub fn new(command: &str, config: RunConfig, inputs: Vec<InputHash>, mode: Option<Mode>, tolerance: Tolerance, result: Value) -> Self {
        Self { schema_version: SCHEMA_VERSION, command: command.into(), config, inputs, mode, tolerance, result }
    }
}

/// What a command hands back: the report, plus an optional table that CSV
/// output prefers over the flattened report (spectra, function tables).
pub struct Output {
    pub report: Report,
    pub csv_table: Option<String>,
}

pub fn render(out: &Output, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&out.report).expect("reports serialize");
            s.push('\n');
            s
        }
        Format::Csv => match &out.csv_table {
            Some(table) => table.clone(),
            None => flatten_csv(&serde_json::to_value(&out.report).expect("reports serialize")),
        },
    }
}

/// `pointer,value` rows, one per scalar leaf, in document order.
pub fn flatten_csv(v: &Value) -> String {
    fn walk(v: &Value, path: &mut String, out: &mut String) {
        match v {
            Value::Object(map) => {
                for (k, child) in map {
                    let len = path.len();
                    path.push('/');
                    path.push_str(&k.replace('~', "~0").replace('/', "~1"));
                    walk(child, path, out);
                    path.truncate(len);
                }
            }
            Value::Array(items) => {
                for (i, child) in items.iter().enumerate() {
                    let len = path.len();
                    path.push_str(&format!("/{i}"));
                    walk(child, path, out);
                    path.truncate(len);
                }
            }
            Value::String(s) => out.push_str(&format!("{path},{}\n", quote(s))),
            Value::Null => out.push_str(&format!("{path},\n")),
            other => out.push_str(&format!("{path},{other}\n")),
        }
    }
    let mut out = String::from("pointer,value\n");
    walk(v, &mut String::new(), &mut out);
    out
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::new(ErrorKind::Io, format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::new(ErrorKind::Io, format!("cannot write to stdout: {e}"))),
    }
}
