//! Scenario configuration file (TOML). Every section is optional and defaults to
//! the paraffin reference experiment; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observer::Injection;
use crate::params::{ControllerConfig, InitialData, MaterialConstants, Quadrature, TriggerConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeConfig {
    /// Grid nodes on ξ ∈ [0, 1].
    pub nodes: usize,
    /// Time step [s].
    pub dt: f64,
    /// Simulated time [s].
    pub horizon: f64,
    /// Event-triggered runs require dt < dt_guard_ratio · τ.
    pub dt_guard_ratio: f64,
    pub injection: Injection,
    /// Lyapunov and series rows are written every this many steps (and at events).
    pub diagnostic_stride: u64,
    /// |s − s_r| below which the interface counts as converged [cm].
    pub convergence_tol: f64,
    pub quadrature: Quadrature,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            nodes: 61,
            dt: 0.5,
            horizon: DEFAULT_HORIZON,
            dt_guard_ratio: 1.0,
            injection: Injection::Implicit,
            diagnostic_stride: 10,
            convergence_tol: 0.02,
            quadrature: Quadrature::default(),
        }
    }
}

/// Reference horizon [s]: convergence to |s − s_r| < 0.02 cm plus a 20 % margin.
pub const DEFAULT_HORIZON: f64 = 14_313.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    EventTriggered,
    SampledData,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    pub kind: ScenarioKind,
    /// Update period for sampled-data runs [s].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    /// Run even when the initial-data validation fails.
    pub allow_unsafe: bool,
    /// Seed for randomized checks.
    pub seed: u64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            name: "event_triggered".into(),
            kind: ScenarioKind::EventTriggered,
            period: None,
            allow_unsafe: false,
            seed: 20_240_601,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    /// Also write a matplotlib script next to the CSV files.
    pub plot_script: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub physical: MaterialConstants,
    pub controller: ControllerConfig,
    pub trigger: TriggerConfig,
    pub initial: InitialData,
    pub scheme: SchemeConfig,
    pub scenario: ScenarioSection,
    pub output: OutputSection,
}

/// Environment variable that overrides the output root directory.
pub const OUTPUT_ROOT_ENV: &str = "STEFAN_OUTPUT_ROOT";

impl ScenarioConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Consistency(format!("config serialization: {e}")))
    }

    /// Checks of the scheme and scenario sections (the physics sections are checked
    /// where they are consumed).
    pub fn check_scheme(&self) -> Result<()> {
        let sc = &self.scheme;
        if sc.nodes < 3 {
            return Err(Error::config("scheme.nodes", "need at least 3 nodes"));
        }
        if !(sc.dt > 0.0 && sc.dt.is_finite()) {
            return Err(Error::config("scheme.dt", "must be positive"));
        }
        if !(sc.horizon >= 0.0 && sc.horizon.is_finite()) {
            return Err(Error::config("scheme.horizon", "must be nonnegative"));
        }
        if !(sc.dt_guard_ratio > 0.0) {
            return Err(Error::config("scheme.dt_guard_ratio", "must be positive"));
        }
        if sc.diagnostic_stride == 0 {
            return Err(Error::config("scheme.diagnostic_stride", "must be at least 1"));
        }
        if !(sc.convergence_tol > 0.0) {
            return Err(Error::config("scheme.convergence_tol", "must be positive"));
        }
        if sc.quadrature.s_points < 64 || sc.quadrature.y_points < 2 {
            return Err(Error::config("scheme.quadrature", "need s_points ≥ 64 and y_points ≥ 2"));
        }
        if self.scenario.kind == ScenarioKind::SampledData && self.scenario.period.is_none() {
            return Err(Error::config("scenario.period", "sampled-data runs need a period"));
        }
        if self.scenario.name.is_empty()
            || !self
                .scenario
                .name
                .chars()
                .all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '-' || ch == '.')
        {
            return Err(Error::config(
                "scenario.name",
                "use ASCII letters, digits, '_', '-' or '.'",
            ));
        }
        Ok(())
    }

    /// Output directory: `$STEFAN_OUTPUT_ROOT/<name>` if the variable is set, else
    /// `output.directory`, else `out/<name>`.
    pub fn output_dir(&self) -> PathBuf {
        if let Some(root) = std::env::var_os(OUTPUT_ROOT_ENV) {
            return PathBuf::from(root).join(&self.scenario.name);
        }
        match &self.output.directory {
            Some(dir) => dir.clone(),
            None => PathBuf::from("out").join(&self.scenario.name),
        }
    }

    /// Same configuration run as a different scenario kind.
    pub fn with_kind(&self, kind: ScenarioKind, period: Option<f64>, name: &str) -> Self {
        let mut cfg = self.clone();
        cfg.scenario.kind = kind;
        cfg.scenario.period = period;
        cfg.scenario.name = name.to_string();
        cfg
    }

    /// Replaces the value at a dotted key path, e.g. `controller.gain`.
    pub fn with_override(&self, key: &str, value: f64) -> Result<Self> {
        let mut doc = toml::Value::try_from(self)
            .map_err(|e| Error::Consistency(format!("config serialization: {e}")))?;
        let mut slot = &mut doc;
        for part in key.split('.') {
            slot = slot
                .as_table_mut()
                .and_then(|t| t.get_mut(part))
                .ok_or_else(|| Error::config(key, "no such numeric key"))?;
        }
        *slot = match slot {
            toml::Value::Float(_) => toml::Value::Float(value),
            toml::Value::Integer(_) if value.fract() == 0.0 => toml::Value::Integer(value as i64),
            _ => return Err(Error::config(key, "not a numeric key")),
        };
        doc.try_into()
            .map_err(|e: toml::de::Error| Error::config(key, e.to_string()))
    }
}
