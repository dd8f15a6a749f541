//! Side-by-side runs: the event-triggered / sampled-data / continuous comparison
//! and one-parameter sweeps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;

use super::config::{ScenarioConfig, ScenarioKind};
use super::scenario::{run_scenario_with, ScenarioResult};

/// Period of the sampled-data baseline [s] (50 min).
pub const BASELINE_PERIOD: f64 = 3000.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub name: String,
    pub kind: ScenarioKind,
    pub updates: usize,
    pub steps: u64,
    pub min_dwell: Option<f64>,
    pub mean_dwell: Option<f64>,
    pub max_dwell: Option<f64>,
    pub convergence_time: Option<f64>,
    pub final_error: f64,
    pub breach: Option<String>,
}

impl ComparisonRow {
    pub fn from_result(res: &ScenarioResult) -> Self {
        let s = &res.summary;
        Self {
            name: s.name.clone(),
            kind: res.config.scenario.kind,
            updates: s.update_count,
            steps: s.steps,
            min_dwell: s.min_dwell,
            mean_dwell: s.mean_dwell,
            max_dwell: s.max_dwell,
            convergence_time: s.convergence_time,
            final_error: s.final_error,
            breach: s.breach.as_ref().map(|b| b.message.clone()),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.1}")).unwrap_or_else(|| "-".into())
}

/// Fixed-width text table.
pub fn render_table(rows: &[ComparisonRow]) -> String {
    let mut out = format!(
        "{:<20} {:>8} {:>8} {:>10} {:>10} {:>10} {:>12} {:>12}  {}\n",
        "scenario", "updates", "steps", "min_dwell", "mean_dwell", "max_dwell", "t_converge", "|s-s_r|", "status"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<20} {:>8} {:>8} {:>10} {:>10} {:>10} {:>12} {:>12.3e}  {}\n",
            r.name,
            r.updates,
            r.steps,
            opt(r.min_dwell),
            opt(r.mean_dwell),
            opt(r.max_dwell),
            opt(r.convergence_time),
            r.final_error,
            r.breach.as_deref().unwrap_or("ok")
        ));
    }
    out
}

/// The three reference scenarios built from one base configuration.
pub fn reference_trio(base: &ScenarioConfig) -> Vec<ScenarioConfig> {
    vec![
        base.with_kind(ScenarioKind::EventTriggered, None, "event_triggered"),
        base.with_kind(ScenarioKind::SampledData, Some(BASELINE_PERIOD), "sampled_data"),
        base.with_kind(ScenarioKind::Continuous, None, "continuous"),
    ]
}

fn run_all(configs: &[ScenarioConfig], exec: Execution) -> Result<Vec<ScenarioResult>> {
    // each run is sequential inside; the fan-out is across runs
    exec.map(configs, |cfg| run_scenario_with(cfg, Execution::Sequential))
        .into_iter()
        .collect()
}

/// Runs configurations that share physical and initial data.
pub fn compare_scenarios(configs: &[ScenarioConfig], exec: Execution) -> Result<Vec<ScenarioResult>> {
    if let Some(first) = configs.first() {
        for cfg in &configs[1..] {
            if cfg.physical != first.physical {
                return Err(Error::config(
                    "physical",
                    format!("scenario `{}` differs from `{}`", cfg.scenario.name, first.scenario.name),
                ));
            }
            if cfg.initial != first.initial {
                return Err(Error::config(
                    "initial",
                    format!("scenario `{}` differs from `{}`", cfg.scenario.name, first.scenario.name),
                ));
            }
        }
    }
    run_all(configs, exec)
}

/// One configuration per value of the dotted key, named `<name>-<key>-<value>`.
pub fn sweep_configs(base: &ScenarioConfig, key: &str, values: &[f64]) -> Result<Vec<ScenarioConfig>> {
    values
        .iter()
        .map(|&v| {
            let mut cfg = base.with_override(key, v)?;
            cfg.scenario.name = format!("{}-{}-{}", base.scenario.name, key.replace('.', "_"), v);
            Ok(cfg)
        })
        .collect()
}

/// Runs a sweep. Configurations that fail before the run starts (for example
/// rejected initial data) come back as errors in their slot.
pub fn sweep(base: &ScenarioConfig, key: &str, values: &[f64], exec: Execution) -> Result<Vec<(ScenarioConfig, Result<ScenarioResult>)>> {
    let configs = sweep_configs(base, key, values)?;
    let results = exec.map(&configs, |cfg| run_scenario_with(cfg, Execution::Sequential));
    Ok(configs.into_iter().zip(results).collect())
}
