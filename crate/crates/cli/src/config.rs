//! Run configuration: a model plus coupling, grid, quadrature and output
//! settings, loaded from JSON and overridable from the command line.

use std::path::{Path, PathBuf};

use hardy_kernels_core::{HardyCoupling, LevyModel};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

/// Largest horizon accepted without `--unsafe-large`.
pub const MAX_HORIZON: f64 = 4.0;
/// Largest radial resolution accepted without `--unsafe-large`.
pub const MAX_RADII: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Radii; each command picks its own default when absent.
    pub n: Option<usize>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    /// Number of times.
    pub m: usize,
    #[serde(rename = "T")]
    pub t_max: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: None, r_min: None, r_max: None, m: 64, t_max: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub tol: f64,
    pub n_terms: usize,
    /// Time steps of the Duhamel solver.
    pub nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { tol: 1e-8, n_terms: 400, nodes: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: LevyModel,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    /// Filled in from `kappa` or `delta` by [`RunConfig::validate`].
    #[serde(skip)]
    pub coupling: Option<HardyCoupling>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub suite: Option<String>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub unsafe_large: bool,
}

impl RunConfig {
    pub fn for_model(model: LevyModel) -> Self {
        Self {
            model,
            kappa: None,
            delta: None,
            coupling: None,
            grid: GridConfig::default(),
            quadrature: QuadratureConfig::default(),
            output: OutputConfig::default(),
            suite: None,
            workers: None,
            unsafe_large: false,
        }
    }

    /// Checks the guards and derives the coupling from whichever of
    /// `kappa`, `delta` is given.
    pub fn validate(mut self) -> Result<Self> {
        let mut bad = Vec::new();
        if !(self.grid.t_max > 0.0) {
            bad.push(format!("T = {} must be positive", self.grid.t_max));
        } else if self.grid.t_max > MAX_HORIZON && !self.unsafe_large {
            bad.push(format!("T = {} exceeds {MAX_HORIZON} (pass --unsafe-large to override)", self.grid.t_max));
        }
        if let Some(n) = self.grid.n {
            if n < 4 {
                bad.push(format!("N = {n} is too small"));
            } else if n > MAX_RADII && !self.unsafe_large {
                bad.push(format!("N = {n} exceeds {MAX_RADII} (pass --unsafe-large to override)"));
            }
        }
        if self.grid.m == 0 {
            bad.push("M must be at least 1".into());
        }
        if let (Some(a), Some(b)) = (self.grid.r_min, self.grid.r_max) {
            if !(a > 0.0 && b > a) {
                bad.push(format!("need 0 < r_min < r_max, got [{a}, {b}]"));
            }
        }
        if !(self.quadrature.tol > 0.0) {
            bad.push("quadrature.tol must be positive".into());
        }
        if self.quadrature.nodes == 0 || self.quadrature.n_terms == 0 {
            bad.push("quadrature.nodes and quadrature.n_terms must be positive".into());
        }
        if self.kappa.is_some() && self.delta.is_some() {
            bad.push("give exactly one of kappa and delta".into());
        }
        if !bad.is_empty() {
            return Err(CliError::Config(bad.join("; ")));
        }
        let (d, alpha) = (self.model.d(), self.model.alpha());
        self.coupling = match (self.kappa, self.delta) {
            (Some(k), None) => Some(HardyCoupling::from_kappa(d, alpha, k)?),
            (None, Some(x)) => Some(HardyCoupling::from_delta(d, alpha, x)?),
            _ => None,
        };
        if let Some(c) = self.coupling {
            self.kappa = Some(c.kappa);
            self.delta = Some(c.delta);
        }
        Ok(self)
    }

    pub fn coupling(&self) -> Result<HardyCoupling> {
        self.coupling.ok_or_else(|| CliError::Config("this command needs kappa or delta".into()))
    }
}

/// Parses a configuration. A document with a `model` key is a full
/// [`RunConfig`]; any other object is read as a bare model specification.
pub fn parse_config(text: &str) -> std::result::Result<RunConfig, String> {
    let value: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if value.get("model").is_some() {
        serde_json::from_value(value).map_err(|e| e.to_string())
    } else {
        let model: LevyModel = serde_json::from_value(value).map_err(|e| e.to_string())?;
        Ok(RunConfig::for_model(model))
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    let cfg = parse_config(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    cfg.validate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use hardy_kernels_core::Error;

    fn parse(text: &str) -> Result<RunConfig> {
        parse_config(text).map_err(CliError::Config)?.validate()
    }

    #[test]
    fn minimal_config_gets_defaults_and_delta() {
        let c = parse(r#"{"model": {"d": 3, "alpha": 1.0, "kind": "relativistic", "m": 1.0}, "kappa": 0.5}"#).unwrap();
        assert!((c.delta.unwrap() - 0.5).abs() < 1e-10);
        assert_eq!(c.grid, GridConfig::default());
        assert_eq!(c.quadrature, QuadratureConfig::default());
    }

    #[test]
    fn bare_model_is_accepted() {
        let c = parse(r#"{"d": 1, "alpha": 0.5, "kind": "stable"}"#).unwrap();
        assert_eq!(c.model, LevyModel::stable(1, 0.5).unwrap());
        assert!(c.coupling.is_none());
    }

    #[test]
    fn supercritical_coupling_is_a_domain_error() {
        let e = parse(r#"{"model": {"d": 3, "alpha": 1.0, "kind": "stable"}, "kappa": 0.7}"#).unwrap_err();
        assert!(matches!(e, CliError::Core(Error::Domain(_))), "{e}");
    }

    #[test]
    fn both_couplings_are_rejected() {
        let e = parse(r#"{"model": {"d": 3, "alpha": 1.0, "kind": "stable"}, "kappa": 0.5, "delta": 0.2}"#).unwrap_err();
        assert!(matches!(e, CliError::Config(_)));
    }

    #[test]
    fn guards_list_every_offending_field() {
        let e = parse(r#"{"model": {"d": 1, "alpha": 0.5, "kind": "stable"}, "grid": {"n": 4096, "m": 8, "T": 10.0}}"#).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("T = 10") && msg.contains("N = 4096"), "{msg}");
        let ok = parse(r#"{"model": {"d": 1, "alpha": 0.5, "kind": "stable"}, "grid": {"n": 4096, "m": 8, "T": 10.0}, "unsafe_large": true}"#);
        assert!(ok.is_ok());
    }

    #[test]
    fn unknown_fields_are_configuration_errors() {
        assert!(matches!(parse(r#"{"model": {"d": 1, "alpha": 0.5, "kind": "stable"}, "kapa": 0.1}"#), Err(CliError::Config(_))));
    }
}
