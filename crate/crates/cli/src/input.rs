//! Input files. Every file is a JSON object carrying `"schema_version": "v1"`;
//! schema violations are reported with a JSON pointer to the offending value.

use std::path::{Path, PathBuf};

use hofa_core::analysis::{Codomain, FunctionTableJson, JsonValue};
use hofa_core::linear_forms::{FlaggedSystem, LinearSystem, SystemSpec};
use hofa_core::polynomials::TermJson;
use hofa_core::testers::{QuerySampler, SupportPoint, TesterSpec};
use hofa_core::{FunctionTable, Polynomial, PrimeField};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SCHEMA_VERSION: &str = "v1";

/// Path and SHA-256 of an input file, embedded in every report.
#[derive(Debug, Clone, Serialize)]
pub struct InputHash {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

/// Collects the hashes of every file read during a run.
#[derive(Debug, Default)]
pub struct Inputs {
    pub hashes: Vec<InputHash>,
}

impl Inputs {
    fn read<T: DeserializeOwned>(&mut self, role: &str, path: &Path) -> Result<T, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::input(path, None, format!("cannot read file: {e}")))?;
        self.hashes.push(InputHash { role: role.into(), path: path.to_path_buf(), sha256: hex::encode(Sha256::digest(&bytes)) });
        parse_document(path, &bytes)
    }

    pub fn table(&mut self, role: &str, path: &Path) -> Result<FunctionTable, CliError> {
        let file: TableFile = self.read(role, path)?;
        table_from_file(path, file)
    }

    pub fn system(&mut self, role: &str, path: &Path) -> Result<SystemSpec, CliError> {
        let file: SystemFile = self.read(role, path)?;
        Ok(SystemSpec { p: file.p, k: file.k, forms: file.forms, flag: file.flag })
    }

    pub fn linear_system(&mut self, role: &str, path: &Path) -> Result<LinearSystem, CliError> {
        Ok(self.system(role, path)?.system()?)
    }

    pub fn flagged_system(&mut self, role: &str, path: &Path) -> Result<FlaggedSystem, CliError> {
        Ok(self.system(role, path)?.flagged()?)
    }

    pub fn polynomial(&mut self, role: &str, path: &Path) -> Result<Polynomial, CliError> {
        let file: PolynomialFile = self.read(role, path)?;
        let field = PrimeField::new(file.p)?;
        match (file.terms, file.expr) {
            (Some(terms), None) => {
                for (i, t) in terms.iter().enumerate() {
                    if t.coeff as u32 >= file.p {
                        return Err(CliError::input(path, Some(format!("/terms/{i}/coeff")), format!("{} is not a residue mod {}", t.coeff, file.p)));
                    }
                }
                Ok(Polynomial::new(field, file.n, terms.into_iter().map(|t| (t.exps, t.coeff)))?)
            }
            (None, Some(expr)) => {
                Polynomial::parse(field, file.n, &expr).map_err(|e| CliError::input(path, Some("/expr".into()), e.to_string()))
            }
            _ => Err(CliError::input(path, Some(String::new()), "exactly one of `terms` and `expr` is required")),
        }
    }

    pub fn tester(&mut self, role: &str, path: &Path) -> Result<TesterSpec, CliError> {
        let file: TesterFile = self.read(role, path)?;
        let field = PrimeField::new(file.p)?;
        let sampler = match file.sampler {
            SamplerFile::LinearPattern { k, forms } => QuerySampler::LinearPattern(LinearSystem::new(field, k, forms)?),
            SamplerFile::ExplicitSupport { n, support } => QuerySampler::ExplicitSupport { n, support },
        };
        Ok(TesterSpec::new(field, sampler, file.decision, file.theta_minus, file.theta_plus, file.epsilon, file.delta)?)
    }
}

/// Deserializes `bytes`, checks the schema version, and turns serde errors
/// into JSON-pointer diagnostics (syntax errors keep line and column).
pub fn parse_document<T: DeserializeOwned>(path: &Path, bytes: &[u8]) -> Result<T, CliError> {
    let value: serde_json::Value = serde_json::from_slice(bytes)
        .map_err(|e| CliError::input(path, None, format!("invalid JSON at line {}, column {}: {e}", e.line(), e.column())))?;
    match value.get("schema_version") {
        Some(serde_json::Value::String(v)) if v == SCHEMA_VERSION => {}
        Some(other) => {
            return Err(CliError::input(path, Some("/schema_version".into()), format!("unsupported schema version {other}; expected \"{SCHEMA_VERSION}\"")))
        }
        None => return Err(CliError::input(path, Some("/schema_version".into()), "missing schema_version")),
    }
    serde_path_to_error::deserialize(value).map_err(|e| {
        let pointer = pointer_of(e.path());
        CliError::input(path, Some(pointer), e.into_inner().to_string())
    })
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => {}
        }
    }
    out
}

fn table_from_file(path: &Path, file: TableFile) -> Result<FunctionTable, CliError> {
    let json = FunctionTableJson { p: file.p, n: file.n, codomain: file.codomain, values: file.values };
    FunctionTable::from_json(&json).map_err(|e| match e {
        // The core names entries as `values/<i>`.
        hofa_core::Error::Parse(msg) => match msg.split_once(": ") {
            Some((loc, rest)) if loc.starts_with("values") => CliError::input(path, Some(format!("/{loc}")), rest.to_string()),
            _ => CliError::input(path, None, msg),
        },
        other => CliError::from(other),
    })
}

/// The on-disk table format written by [`table_document`].
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableFile {
    pub schema_version: String,
    pub p: u32,
    pub n: usize,
    pub codomain: Codomain,
    pub values: Vec<JsonValue>,
}

pub fn table_document(t: &FunctionTable) -> TableFile {
    let json = t.to_json();
    TableFile { schema_version: SCHEMA_VERSION.into(), p: json.p, n: json.n, codomain: json.codomain, values: json.values }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    #[allow(dead_code)]
    schema_version: String,
    p: u32,
    k: usize,
    forms: Vec<Vec<u8>>,
    #[serde(default)]
    flag: Option<Vec<u8>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolynomialFile {
    #[allow(dead_code)]
    schema_version: String,
    p: u32,
    n: usize,
    #[serde(default)]
    terms: Option<Vec<TermJson>>,
    #[serde(default)]
    expr: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SamplerFile {
    LinearPattern { k: usize, forms: Vec<Vec<u8>> },
    ExplicitSupport { n: usize, support: Vec<SupportPoint> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TesterFile {
    #[allow(dead_code)]
    schema_version: String,
    p: u32,
    sampler: SamplerFile,
    decision: Vec<u8>,
    theta_minus: f64,
    theta_plus: f64,
    epsilon: f64,
    delta: f64,
}
