//! Run configuration: a TOML document with `[domain]`, `[model]` and `[run]`
//! sections plus `section.key=value` overrides, resolved into a grid, a
//! model and the knobs of each command.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::StepperConfig;
use crate::grid::Grid;
use crate::model::{InitialData, Model, Nonlinearity, ParamPoint, Profile};
use crate::problem::Problem;
use crate::stationary::{CurveOptions, StationaryConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainConfig {
    /// `interval` or `rectangle`.
    pub kind: String,
    pub a: f64,
    pub b: f64,
    /// Interior nodes of an interval.
    pub n: usize,
    pub ax: f64,
    pub bx: f64,
    pub ay: f64,
    pub by: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self { kind: "interval".into(), a: 0.0, b: 1.0, n: 199, ax: 0.0, bx: 1.0, ay: 0.0, by: 1.0, nx: 39, ny: 39 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub lambda: f64,
    pub mu: f64,
    pub f: Nonlinearity,
    pub g: Nonlinearity,
    pub alpha: Profile,
    pub beta: Profile,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let m = Model::mems(0.5, 0.5);
        Self { lambda: 0.5, mu: 0.5, f: m.f, g: m.g, alpha: m.alpha, beta: m.beta }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub initial: InitialData,
    pub horizon: f64,
    /// Explicit λ values for the curve; when absent, `samples` points are
    /// spread evenly below the λ-axis intercept.
    pub lambda_samples: Option<Vec<f64>>,
    pub samples: usize,
    pub bisect_tol: f64,
    pub floor: f64,
    pub max_iter_cap: usize,
    pub stationary: StationaryConfig,
    pub stepper: StepperConfig,
    /// Drop the coupling blocks of the linearized operator.
    pub decoupled: bool,
    /// Seed amplitudes tried, in order, when a second solution is needed.
    pub seed_amplitudes: Vec<f64>,
}

impl Default for RunSection {
    fn default() -> Self {
        let curve = CurveOptions::default();
        Self {
            initial: InitialData::Zero,
            horizon: 5.0,
            lambda_samples: None,
            samples: 16,
            bisect_tol: curve.bisect_tol,
            floor: curve.floor,
            max_iter_cap: curve.max_iter_cap,
            stationary: StationaryConfig::default(),
            stepper: StepperConfig::default(),
            decoupled: false,
            seed_amplitudes: vec![0.8, 0.9, 0.95, 0.98],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub model: ModelConfig,
    pub run: RunSection,
}

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config { key: key.to_string(), message: message.into() }
}

/// Parses the right-hand side of an override as a TOML value, falling back
/// to a bare string.
fn parse_override_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Applies one `section.key=value` override; intermediate tables are created
/// as needed.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| config_err(spec, "override must have the form KEY=VALUE"))?;
    let path = path.trim();
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) || keys.len() < 2 {
        return Err(config_err(path, "override key must be section.key"));
    }
    let mut cur = table;
    for k in &keys[..keys.len() - 1] {
        let entry = cur.entry(k.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(config_err(path, format!("`{k}` is not a table"))),
        };
    }
    cur.insert(keys[keys.len() - 1].to_string(), parse_override_value(raw.trim()));
    Ok(())
}

impl RunConfig {
    /// Parses a TOML document, applies overrides in order and validates.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| config_err("<file>", e.message()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let key = e.path().to_string();
            config_err(&key, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    pub fn grid(&self) -> Result<Grid> {
        let d = &self.domain;
        let g = match d.kind.as_str() {
            "interval" => Grid::interval(d.a, d.b, d.n),
            "rectangle" => Grid::rectangle((d.ax, d.bx), (d.ay, d.by), d.nx, d.ny),
            other => return Err(config_err("domain.kind", format!("unknown domain kind `{other}`"))),
        };
        let key = if d.kind == "interval" { "domain.n" } else { "domain.nx" };
        g.map_err(|e| config_err(key, e.to_string()))
    }

    pub fn model(&self) -> Model {
        let m = &self.model;
        Model { f: m.f, g: m.g, alpha: m.alpha, beta: m.beta, params: ParamPoint { lambda: m.lambda, mu: m.mu } }
    }

    pub fn problem(&self) -> Result<Problem> {
        Problem::new(self.grid()?, self.model()).map_err(|e| config_err("model", e.to_string()))
    }

    pub fn curve_options(&self) -> CurveOptions {
        CurveOptions {
            bisect_tol: self.run.bisect_tol,
            floor: self.run.floor,
            stationary: self.run.stationary,
            max_iter_cap: self.run.max_iter_cap,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        let m = &self.model;
        for (key, v) in [("model.lambda", m.lambda), ("model.mu", m.mu)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(config_err(key, format!("must be positive, got {v}")));
            }
        }
        for (key, n) in [("model.f", m.f), ("model.g", m.g)] {
            if let Nonlinearity::Power { p } = n {
                if !(p.is_finite() && p > 0.0) {
                    return Err(config_err(&format!("{key}.p"), format!("exponent must be positive, got {p}")));
                }
            }
        }
        self.problem()?;
        let r = &self.run;
        if !(r.horizon.is_finite() && r.horizon > 0.0) {
            return Err(config_err("run.horizon", "must be positive"));
        }
        if !(r.bisect_tol > 0.0 && r.bisect_tol < 1.0) {
            return Err(config_err("run.bisect_tol", "must lie in (0, 1)"));
        }
        if !(r.floor > 0.0) {
            return Err(config_err("run.floor", "must be positive"));
        }
        if let Some(s) = &r.lambda_samples {
            if s.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
                return Err(config_err("run.lambda_samples", "samples must be positive"));
            }
        } else if r.samples == 0 {
            return Err(config_err("run.samples", "must be at least 1"));
        }
        let s = &r.stationary;
        if !(s.tol_stat > 0.0 && s.tol_res > 0.0 && s.max_iter > 0 && s.delta_blow > 0.0 && s.delta_blow < 1.0) {
            return Err(config_err("run.stationary", "tolerances and max_iter must be positive, delta_blow in (0, 1)"));
        }
        r.stepper.validate().map_err(|e| config_err("run.stepper", e.to_string()))?;
        Ok(())
    }
}
