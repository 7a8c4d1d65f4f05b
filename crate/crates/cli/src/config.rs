//! Run configuration: a TOML file plus `key=value` overrides.
//!
//! ```toml
//! molecule = "data/c20.toml"   # relative paths resolve against this file
//! scheme = "exact-cartesian"
//! temperature = 300.0          # K
//! t_end = 100.0                # ps
//! out_interval = 10.0          # ps
//! eps_tau = 1e-10
//! seed = 1
//! eta = 1.0
//! output = "out"
//! energy_gauge = "absolute"    # or "equilibrium"
//! basis = "out/c20.basis.json" # optional, skips the mode analysis
//!
//! [compare]
//! reference = { scheme = "exact-cartesian", eps_tau = 1e-13 }
//! trials = [{ scheme = "sma", eps_tau = 1e-13 }]
//!
//! [bench]
//! schemes = ["exact-cartesian", "zma"]      # default: all six
//! eps = [1e-6, 1e-8, 1e-10, 1e-12, 1e-13]
//! molecules = ["data/c20.toml"]             # default: `molecule`
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use modemd::diagnostics::EnergyGauge;
use modemd::SchemeKind;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Tolerance range accepted unless `allow_any_eps` is set.
pub const EPS_RANGE: (f64, f64) = (1e-13, 1e-6);

pub const BENCH_EPS: [f64; 5] = [1e-6, 1e-8, 1e-10, 1e-12, 1e-13];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeAt {
    #[serde(with = "scheme_name")]
    pub scheme: SchemeKind,
    pub eps_tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub reference: SchemeAt,
    pub trials: Vec<SchemeAt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default = "all_schemes", with = "scheme_names")]
    pub schemes: Vec<SchemeKind>,
    #[serde(default = "bench_eps")]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub molecules: Vec<PathBuf>,
}

fn all_schemes() -> Vec<SchemeKind> {
    SchemeKind::ALL.to_vec()
}

fn bench_eps() -> Vec<f64> {
    BENCH_EPS.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub molecule: PathBuf,
    #[serde(default = "default_scheme", with = "scheme_name")]
    pub scheme: SchemeKind,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_out_interval")]
    pub out_interval: f64,
    #[serde(default = "default_eps")]
    pub eps_tau: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub energy_gauge: EnergyGauge,
    #[serde(default)]
    pub basis: Option<PathBuf>,
    #[serde(default)]
    pub allow_any_eps: bool,
    #[serde(default)]
    pub compare: Option<CompareConfig>,
    #[serde(default)]
    pub bench: Option<BenchConfig>,
}

fn default_scheme() -> SchemeKind {
    SchemeKind::ExactCartesian
}
fn default_temperature() -> f64 {
    300.0
}
fn default_t_end() -> f64 {
    100.0
}
fn default_out_interval() -> f64 {
    10.0
}
fn default_eps() -> f64 {
    1e-10
}
fn default_seed() -> u64 {
    1
}
fn default_eta() -> f64 {
    1.0
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

mod scheme_name {
    use modemd::SchemeKind;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(k: &SchemeKind, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(k.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SchemeKind, D::Error> {
        let name = String::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

mod scheme_names {
    use modemd::SchemeKind;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ks: &[SchemeKind], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(ks.iter().map(|k| k.name()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<SchemeKind>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|n| n.parse().map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Sets `path` (dot-separated) in `table`. The value is read as a TOML value
/// when it parses as one and as a bare string otherwise.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {assignment:?} is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad override key {key:?}")));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        cur = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override {key:?}: {part} is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    /// Reads `path`, applies the overrides in order, resolves relative paths
    /// against the file's directory and validates.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut table: toml::Table =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.molecule = resolve(base, &cfg.molecule);
        cfg.output = resolve(base, &cfg.output);
        cfg.basis = cfg.basis.as_deref().map(|b| resolve(base, b));
        if let Some(bench) = cfg.bench.as_mut() {
            bench.molecules = bench.molecules.iter().map(|m| resolve(base, m)).collect();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn check_eps(&self, eps: f64) -> Result<(), CliError> {
        let (lo, hi) = EPS_RANGE;
        let in_range = eps >= lo * (1.0 - 1e-12) && eps <= hi * (1.0 + 1e-12);
        if !(eps > 0.0 && eps.is_finite()) || !(in_range || self.allow_any_eps) {
            return Err(CliError::Config(format!(
                "eps_tau {eps:e} outside [{lo:e}, {hi:e}] (set allow_any_eps = true to override)"
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(CliError::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.out_interval > 0.0 && self.out_interval.is_finite()) {
            return Err(CliError::Config(format!(
                "out_interval must be positive, got {}",
                self.out_interval
            )));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(CliError::Config(format!(
                "temperature must be non-negative, got {}",
                self.temperature
            )));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(CliError::Config(format!("eta must be non-negative, got {}", self.eta)));
        }
        self.check_eps(self.eps_tau)?;
        if let Some(c) = &self.compare {
            self.check_eps(c.reference.eps_tau)?;
            for t in &c.trials {
                self.check_eps(t.eps_tau)?;
            }
        }
        if let Some(b) = &self.bench {
            for e in &b.eps {
                self.check_eps(*e)?;
            }
            if b.schemes.is_empty() || b.eps.is_empty() {
                return Err(CliError::Config("bench needs at least one scheme and one eps".into()));
            }
        }
        Ok(())
    }

    /// One-line JSON echo of the effective configuration for file headers.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
