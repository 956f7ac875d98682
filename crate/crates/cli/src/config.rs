//! Run configuration: a TOML file, defaults for every key, and `key=value`
//! overrides from the command line.

use std::fs;
use std::path::{Path, PathBuf};

use nschsim_core::{Grid, PotentialSpec, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub model: ModelConfig,
    pub time: TimeConfig,
    pub solver: SolverSection,
    pub init: InitConfig,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainConfig {
    pub dim: usize,
    pub cells: Vec<usize>,
    pub lengths: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub potential: String,
    pub theta: f64,
    pub theta_c: f64,
    pub eps: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub dt: f64,
    pub tau: f64,
    pub t_end: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub lambda: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub lin_tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Constant,
    Cosine,
    Random,
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitConfig {
    #[serde(rename = "type")]
    pub kind: InitKind,
    pub mu0: f64,
    pub rho0: f64,
    pub amplitude: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_file: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub snapshot_every: usize,
    pub diagnostics_every: usize,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self { dim: 1, cells: vec![128], lengths: vec![1.0] }
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { potential: "log".into(), theta: 1.0, theta_c: 3.0, eps: 1.0, delta: 1.0 }
    }
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { dt: 1e-3, tau: 0.0, t_end: 1.0 }
    }
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { lambda: 0.0, newton_tol: 1e-10, newton_max_iter: 50, lin_tol: 1e-10 }
    }
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            kind: InitKind::Cosine,
            mu0: 1.0,
            rho0: 0.5,
            amplitude: 0.1,
            seed: 0,
            mu_file: None,
            rho_file: None,
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("nschsim-out"), snapshot_every: 100, diagnostics_every: 1 }
    }
}

impl RunConfig {
    /// Reads `path` (if any), applies `overrides` in order, then validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Validation(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.grid()?;
        self.potential()?;
        self.solver().validate().map_err(|e| CliError::Validation(e.to_string()))?;
        if !(self.time.t_end.is_finite() && self.time.t_end >= 0.0) {
            return Err(CliError::Validation("time.t_end must be nonnegative".into()));
        }
        if self.output.snapshot_every == 0 || self.output.diagnostics_every == 0 {
            return Err(CliError::Validation("output intervals must be positive".into()));
        }
        if self.init.kind == InitKind::File && (self.init.mu_file.is_none() || self.init.rho_file.is_none()) {
            return Err(CliError::Validation("init.type = \"file\" needs init.mu_file and init.rho_file".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        let d = &self.domain;
        if !(1..=2).contains(&d.dim) {
            return Err(CliError::Validation(format!("domain.dim must be 1 or 2, got {}", d.dim)));
        }
        if d.cells.len() != d.dim || d.lengths.len() != d.dim {
            return Err(CliError::Validation(format!(
                "domain.cells and domain.lengths need {} entries each",
                d.dim
            )));
        }
        Grid::new(&d.cells, &d.lengths).map_err(|e| CliError::Validation(format!("domain: {e}")))
    }

    pub fn potential(&self) -> Result<PotentialSpec, CliError> {
        if self.model.potential != "log" {
            return Err(CliError::Validation(format!(
                "model.potential = {:?} is not available (only \"log\")",
                self.model.potential
            )));
        }
        PotentialSpec::logarithmic(self.model.theta, self.model.theta_c)
            .map_err(|e| CliError::Validation(format!("model: {e}")))
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            eps: self.model.eps,
            delta: self.model.delta,
            tau: self.time.tau,
            dt: self.time.dt,
            lambda: self.solver.lambda,
            newton_tol: self.solver.newton_tol,
            newton_max_iter: self.solver.newton_max_iter,
            lin_tol: self.solver.lin_tol,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Writes the effective configuration to `<output.dir>/config.toml`.
    pub fn echo(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.output.dir).map_err(|e| CliError::io(&self.output.dir, e))?;
        let path = self.output.dir.join("config.toml");
        fs::write(&path, self.to_toml()).map_err(|e| CliError::io(&path, e))
    }
}

/// `section.key=value`; the value is read as a TOML value, falling back to a
/// bare string.
pub fn apply_override(table: &mut toml::Table, item: &str) -> Result<(), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Validation(format!("override {item:?} is not of the form key=value")))?;
    let value = parse_value(raw.trim());
    set_path(table, key.trim(), value)
}

pub fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

pub fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Validation(format!("bad config key {key:?}")));
    }
    let (last, head) = parts.split_last().expect("split yields at least one part");
    let mut cur = table;
    for p in head {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Validation(format!("config key {p:?} is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = RunConfig::load(None, &[]).unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn overrides_apply() {
        let cfg = RunConfig::load(
            None,
            &["time.dt=5e-4".into(), "domain.cells=[64]".into(), "init.type=random".into(), "output.dir=out/x".into()],
        )
        .unwrap();
        assert_eq!(cfg.time.dt, 5e-4);
        assert_eq!(cfg.domain.cells, vec![64]);
        assert_eq!(cfg.init.kind, InitKind::Random);
        assert_eq!(cfg.output.dir, PathBuf::from("out/x"));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::load(None, &["time.dtt=1".into()]).is_err());
        assert!(RunConfig::load(None, &["extra.x=1".into()]).is_err());
        assert!(RunConfig::load(None, &["nokey".into()]).is_err());
    }

    #[test]
    fn constraints_checked() {
        assert!(RunConfig::load(None, &["time.tau=1.5e-3".into()]).is_err());
        assert!(RunConfig::load(None, &["model.eps=0".into()]).is_err());
        assert!(RunConfig::load(None, &["domain.dim=2".into()]).is_err());
        assert!(RunConfig::load(None, &["domain.dim=3".into(), "domain.cells=[2,2,2]".into(), "domain.lengths=[1,1,1]".into()]).is_err());
        assert!(RunConfig::load(None, &["model.potential=\"poly\"".into()]).is_err());
        assert!(RunConfig::load(None, &["init.type=file".into()]).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig::load(None, &["time.dt=0.1".into(), "solver.lambda=1e-7".into()]).unwrap();
        let back: RunConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }
}
