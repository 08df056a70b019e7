//! Configuration, versioned serializers and run manifests.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arith::ConstantConfig;
use crate::cf::{parse_exact, Exact};
use crate::comb::{farey_grid, ScanRow};
use crate::germs::{FamilyKind, GermFamily, PolyRule};
use crate::linearize::EscapeParams;
use crate::series::C64;

pub const SCAN_SCHEMA: &str = "scan_row";
pub const SCHEMA_VERSION: u32 = 1;
pub const SCAN_HEADER: &str = "alpha_text,alpha_float,r_lower,r_upper,method,iterations,wall_time_ms";
pub const ENV_PREFIX: &str = "SIEGEL_";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IoError {
    #[error("schema mismatch: expected {expected:?}, found {found:?}")]
    SchemaMismatch { expected: String, found: String },
    #[error("schema {schema} version {found} is not supported (this build reads version {supported}); migrate the file first")]
    UnsupportedVersion { schema: String, found: u32, supported: u32 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for IoError {
    fn from(e: std::io::Error) -> Self {
        IoError::Io(e.to_string())
    }
}

fn schema_line(schema: &str, run: Option<&str>) -> String {
    match run {
        Some(d) => format!("# siegel {schema} v{SCHEMA_VERSION} run={d}"),
        None => format!("# siegel {schema} v{SCHEMA_VERSION}"),
    }
}

/// Checks a `# siegel <schema> v<version> [run=<digest>]` line and returns the run digest.
fn check_schema_line(line: &str, schema: &str) -> Result<Option<String>, IoError> {
    let mismatch = || IoError::SchemaMismatch { expected: schema_line(schema, None), found: line.to_string() };
    let mut parts = line.split_whitespace();
    if parts.next() != Some("#") || parts.next() != Some("siegel") || parts.next() != Some(schema) {
        return Err(mismatch());
    }
    let version = parts
        .next()
        .and_then(|v| v.strip_prefix('v'))
        .and_then(|v| v.parse::<u32>().ok())
        .ok_or_else(mismatch)?;
    if version != SCHEMA_VERSION {
        return Err(IoError::UnsupportedVersion { schema: schema.into(), found: version, supported: SCHEMA_VERSION });
    }
    let run = match parts.next() {
        None => None,
        Some(p) => Some(p.strip_prefix("run=").ok_or_else(mismatch)?.to_string()),
    };
    if parts.next().is_some() {
        return Err(mismatch());
    }
    Ok(run)
}

/// Scan rows as CSV: a schema line, the column header, then one record per row.
pub fn emit_scan_csv(rows: &[ScanRow], run: Option<&str>) -> Result<String, IoError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| IoError::Parse(e.to_string()))?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| IoError::Io(e.to_string()))?)
        .map_err(|e| IoError::Parse(e.to_string()))?;
    Ok(format!("{}\n{SCAN_HEADER}\n{body}", schema_line(SCAN_SCHEMA, run)))
}

pub fn load_scan_csv(text: &str) -> Result<Vec<ScanRow>, IoError> {
    let mut lines = text.splitn(3, '\n');
    check_schema_line(lines.next().unwrap_or("").trim_end(), SCAN_SCHEMA)?;
    let header = lines.next().unwrap_or("").trim_end();
    if header != SCAN_HEADER {
        return Err(IoError::SchemaMismatch { expected: SCAN_HEADER.into(), found: header.into() });
    }
    let body = lines.next().unwrap_or("");
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(body.as_bytes());
    r.deserialize().map(|row| row.map_err(|e| IoError::Parse(e.to_string()))).collect()
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    schema: String,
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    run: Option<String>,
    data: T,
}

/// Pretty JSON wrapped in a `{schema, version, run, data}` envelope.
pub fn emit_json<T: Serialize>(schema: &str, data: &T, run: Option<&str>) -> Result<String, IoError> {
    let env = Envelope { schema: schema.into(), version: SCHEMA_VERSION, run: run.map(str::to_string), data };
    serde_json::to_string_pretty(&env).map(|s| s + "\n").map_err(|e| IoError::Parse(e.to_string()))
}

pub fn load_json<T: DeserializeOwned>(schema: &str, text: &str) -> Result<T, IoError> {
    #[derive(Deserialize)]
    struct Head {
        schema: String,
        version: u32,
    }
    let head: Head = serde_json::from_str(text).map_err(|e| IoError::Parse(e.to_string()))?;
    if head.schema != schema {
        return Err(IoError::SchemaMismatch { expected: schema.into(), found: head.schema });
    }
    if head.version != SCHEMA_VERSION {
        return Err(IoError::UnsupportedVersion { schema: schema.into(), found: head.version, supported: SCHEMA_VERSION });
    }
    let env: Envelope<T> = serde_json::from_str(text).map_err(|e| IoError::Parse(e.to_string()))?;
    Ok(env.data)
}

/// Flat lower-case key/value configuration.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub values: BTreeMap<String, String>,
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, String>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.to_lowercase() } else { format!("{prefix}.{}", k.to_lowercase()) };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            toml::Value::String(s) => {
                out.insert(key, s.clone());
            }
            other => {
                out.insert(key, other.to_string());
            }
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config, IoError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| IoError::Config(e.to_string()))?;
        let mut values = BTreeMap::new();
        flatten("", &table, &mut values);
        Ok(Config { values })
    }

    /// Applies `SIEGEL_<KEY>` overrides from `vars`; `__` in a variable name stands for a dot.
    pub fn with_env(mut self, vars: impl IntoIterator<Item = (String, String)>) -> Config {
        for (k, v) in vars {
            if let Some(rest) = k.strip_prefix(ENV_PREFIX) {
                self.values.insert(rest.to_lowercase().replace("__", "."), v);
            }
        }
        self
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_lowercase(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(&key.to_lowercase()).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, IoError> {
        match self.get(key) {
            None => Ok(None),
            Some(s) => s
                .trim()
                .parse::<T>()
                .map(Some)
                .map_err(|_| IoError::Config(format!("bad value {s:?} for {key}"))),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, IoError> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, IoError> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, IoError> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    /// Constants from `c1`, `c2`, `c3`, `C0`, `D`, `C_sqrt2`, `A`, `C1_glue`, `B_slope`
    /// (case-insensitive, optionally under a `constants.` section).
    pub fn constants(&self) -> Result<ConstantConfig, IoError> {
        let mut cfg = ConstantConfig::default();
        for name in ["c1", "c2", "c3", "C0", "D", "C_sqrt2", "A", "C1_glue", "B_slope"] {
            let v = match self.parsed::<f64>(name)? {
                Some(v) => Some(v),
                None => self.parsed::<f64>(&format!("constants.{name}"))?,
            };
            if let Some(v) = v {
                cfg.set(name, v).map_err(|e| IoError::Config(e.to_string()))?;
            }
        }
        cfg.validate().map_err(|e| IoError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn escape_params(&self) -> Result<EscapeParams, IoError> {
        let d = EscapeParams::default();
        Ok(EscapeParams {
            max_iter: self.u64_or("max_iter", d.max_iter)?,
            circle_samples: self.usize_or("circle_samples", d.circle_samples)?,
            bisect_tol: self.f64_or("bisect_tol", d.bisect_tol)?,
            residual_tol: self.f64_or("residual_tol", d.residual_tol)?,
        })
    }

    /// The germ family named by `family` (default quadratic), restricted to radius `s`.
    ///
    /// `flow` reads its higher vector-field coefficients from `chi` as
    /// `re,im;re,im;...` starting at `z^2` (default `z^2`); `polynomial` reads
    /// `poly_rules` as a JSON array of rules.
    pub fn family(&self) -> Result<GermFamily, IoError> {
        let name = self.get("family").unwrap_or("quadratic");
        let s = self.f64_or("s", 1.0)?;
        let kind = match name {
            "rotation" => FamilyKind::Rotation,
            "quadratic" => FamilyKind::Quadratic,
            "flow" => FamilyKind::Flow(match self.get("chi") {
                None => vec![C64::new(1.0, 0.0)],
                Some(text) => parse_complex_list(text)?,
            }),
            "polynomial" => {
                let text = self.get("poly_rules").ok_or_else(|| IoError::Config("polynomial needs poly_rules".into()))?;
                let rules: Vec<PolyRule> = serde_json::from_str(text).map_err(|e| IoError::Config(e.to_string()))?;
                FamilyKind::Polynomial(rules)
            }
            other => return Err(IoError::Config(format!("unknown family {other:?}"))),
        };
        let order = self.usize_or("family_order", crate::germs::DEFAULT_ORDER)?;
        GermFamily::new(kind, s).map(|f| f.with_order(order)).map_err(|e| IoError::Config(e.to_string()))
    }
}

fn parse_complex_list(text: &str) -> Result<Vec<C64>, IoError> {
    text.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let parts: Vec<&str> = t.split(',').map(str::trim).collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| IoError::Config(format!("bad number {s:?} in chi")));
            match parts.as_slice() {
                [re] => Ok(C64::new(num(re)?, 0.0)),
                [re, im] => Ok(C64::new(num(re)?, num(im)?)),
                _ => Err(IoError::Config(format!("bad coefficient {t:?} in chi"))),
            }
        })
        .collect()
}

/// `farey:Q=n`, or `list:x1,x2,...` of exact values (rationals or continued fractions
/// separated by `|` when they contain commas).
pub fn parse_grid(grid: &str) -> Result<Vec<Exact>, IoError> {
    let grid = grid.trim();
    if let Some(rest) = grid.strip_prefix("farey:") {
        let q = rest
            .strip_prefix("Q=")
            .or_else(|| rest.strip_prefix("q="))
            .and_then(|v| v.parse::<u64>().ok())
            .filter(|&q| q >= 1)
            .ok_or_else(|| IoError::Parse(format!("bad farey grid {grid:?}")))?;
        return Ok(farey_grid(q));
    }
    if let Some(rest) = grid.strip_prefix("list:") {
        let sep = if rest.contains('|') { '|' } else { ',' };
        return rest
            .split(sep)
            .filter(|t| !t.trim().is_empty())
            .map(|t| parse_exact(t.trim()).map_err(|e| IoError::Parse(e.to_string())))
            .collect();
    }
    Err(IoError::Parse(format!("unknown grid {grid:?}; expected farey:Q=n or list:...")))
}

/// Identity and outputs of one run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: String,
    pub config: BTreeMap<String, String>,
    pub seed: u64,
    /// Output file name to its sha256.
    pub artifacts: BTreeMap<String, String>,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command_line: impl Into<String>, config: &Config, seed: u64) -> RunManifest {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs().to_string())
            .unwrap_or_default();
        RunManifest {
            command_line: command_line.into(),
            config: config.values.clone(),
            seed,
            artifacts: BTreeMap::new(),
            timestamp,
        }
    }

    /// Digest of the inputs (command line, config, seed). Outputs embed it, so it
    /// cannot cover the artifact hashes; the timestamp and the worker count, which
    /// do not affect results, are left out as well.
    pub fn digest(&self) -> String {
        let config: BTreeMap<&String, &String> = self.config.iter().filter(|(k, _)| k.as_str() != "workers").collect();
        let identity = serde_json::json!({
            "command_line": self.command_line,
            "config": config,
            "seed": self.seed,
        });
        sha256_hex(identity.to_string().as_bytes())
    }

    pub fn record_artifact(&mut self, name: impl Into<String>, bytes: &[u8]) {
        self.artifacts.insert(name.into(), sha256_hex(bytes));
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(i: usize) -> ScanRow {
        ScanRow {
            alpha_text: format!("{i}/7"),
            alpha_float: i as f64 / 7.0,
            r_lower: 0.1 * i as f64,
            r_upper: if i % 3 == 0 { f64::INFINITY } else { 0.1 * i as f64 + 1e-3 },
            method: "escape".into(),
            iterations: 1000 + i as u64,
            wall_time_ms: 0,
        }
    }

    #[test]
    fn csv_roundtrip_with_infinite_upper() {
        let rows: Vec<ScanRow> = (0..7).map(row).collect();
        let text = emit_scan_csv(&rows, Some("abc")).unwrap();
        assert!(text.starts_with("# siegel scan_row v1 run=abc\n"));
        assert_eq!(load_scan_csv(&text).unwrap(), rows);
    }

    #[test]
    fn version_bump_is_a_migration_error() {
        let text = emit_scan_csv(&[row(1)], None).unwrap().replacen("v1", "v2", 1);
        assert!(matches!(load_scan_csv(&text), Err(IoError::UnsupportedVersion { found: 2, .. })));
    }

    #[test]
    fn config_env_overrides_and_constants() {
        let cfg = Config::from_toml("family = \"flow\"\nmax_iter = 500\n[constants]\nc3 = 2.0\n").unwrap().with_env([
            ("SIEGEL_MAX_ITER".to_string(), "700".to_string()),
            ("OTHER".to_string(), "1".to_string()),
        ]);
        assert_eq!(cfg.escape_params().unwrap().max_iter, 700);
        assert_eq!(cfg.constants().unwrap().c3, 2.0);
        assert_eq!(cfg.family().unwrap().name(), "flow");
        assert!(cfg.get("other").is_none());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("farey:Q=5").unwrap().len(), 11);
        let l = parse_grid("list:1/2|[0;(2)]").unwrap();
        assert_eq!(l.len(), 2);
        assert!(parse_grid("farey:Q=0").is_err());
    }

    #[test]
    fn manifest_digest_ignores_timestamp_and_artifacts() {
        let cfg = Config::from_toml("x = 1").unwrap();
        let mut a = RunManifest::new("siegel scan", &cfg, 7);
        let mut b = a.clone();
        b.timestamp = "0".into();
        b.record_artifact("out.csv", b"data");
        assert_eq!(a.digest(), b.digest());
        a.seed = 8;
        assert_ne!(a.digest(), b.digest());
    }
}
