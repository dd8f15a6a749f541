//! Closed-loop runner: plant, observer, held input, trigger and monitors.

use serde::Serialize;

use crate::control::{self, ControlMode, SampledSchedule};
use crate::diagnostics::{self, LyapunovConfig, TransformConstants, ValidityMonitor, ValidityReport};
use crate::error::{BreachKind, Error, Result};
use crate::exec::Execution;
use crate::observer::{self, ObserverState};
use crate::params::{self, PhysicalParams, TriggerDerived, ValidationReport};
use crate::plant::PlantState;
use crate::trigger::{self, Event, EventReason, Snapshot, Sources, TriggerState, TriggerWeights};

use super::config::{ScenarioConfig, ScenarioKind};

/// One logged instant. Rows are taken every `diagnostic_stride` steps, at every
/// event, and at the final step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesRow {
    pub step: u64,
    pub t: f64,
    pub s: f64,
    pub sdot: f64,
    /// T(0, t) − Tm
    pub boundary_temp: f64,
    /// ‖T − Tm‖
    pub temp_norm: f64,
    /// ‖T − T̂‖
    pub error_norm: f64,
    /// applied (held) input
    pub q: f64,
    /// continuous law at this instant
    pub q_cont: f64,
    /// d² after any event reset
    pub d_sq: f64,
    pub gamma_m: f64,
    pub m: f64,
    pub v1: f64,
    /// A·V₁ + m; the m term is dropped outside event-triggered runs
    pub v: f64,
    pub w: f64,
    pub log_w: f64,
    /// ‖w̃‖
    pub w_tilde_norm: f64,
    /// (1/α)∫u + s/β − (1/k)∫q dt minus its initial value
    pub energy_residual: f64,
    /// min over the grid of T − Tm
    pub min_temp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreachRecord {
    pub kind: Option<BreachKind>,
    pub time: f64,
    pub value: f64,
    pub message: String,
}

/// Per-step checks aggregated over the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepChecks {
    /// max over steps of |d − (q_cont − q_j)/k| / (|d| + rounding scale)
    pub identity_max_rel: f64,
    /// steps where d² > γm after supervision (should be zero)
    pub threshold_violations: u64,
    /// max d²/(γm) at threshold events (one-step overshoot)
    pub max_overshoot: f64,
    /// max of the finite-difference ḋ² over θ₀d² + θ₁‖û‖² + θ₂X² + θ₃ũ_x²(s), between events
    pub growth_ratio_max: f64,
    /// min m over the run (event-triggered runs only)
    pub min_m: f64,
    /// max of ((1 − c(t − t_j)) q_j − q(t)) / q_j during holds; negative when the
    /// continuous law stays above the linear floor
    pub hold_bound_excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub name: String,
    pub mode: ControlMode,
    pub steps: u64,
    pub horizon: f64,
    pub completed: bool,
    pub update_count: usize,
    pub threshold_events: usize,
    pub max_dwell_events: usize,
    pub min_dwell: Option<f64>,
    pub mean_dwell: Option<f64>,
    pub max_dwell: Option<f64>,
    pub tau: f64,
    pub dwell_cap: f64,
    pub final_s: f64,
    pub final_error: f64,
    /// first time after which |s − s_r| stays below the tolerance
    pub convergence_time: Option<f64>,
    pub convergence_tol: f64,
    pub initial_error_norm: f64,
    pub final_error_norm: f64,
    /// least-squares slope of log W over the logged rows
    pub log_w_slope: Option<f64>,
    /// decay rate of ‖w̃‖ fitted while it stays above 1e-8 of its initial value
    pub w_tilde_rate: Option<f64>,
    pub max_energy_residual: f64,
    pub checks: StepChecks,
    pub validity: ValidityReport,
    pub breach: Option<BreachRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    pub derived: TriggerDerived,
    pub validation: ValidationReport,
    pub rows: Vec<SeriesRow>,
    pub events: Vec<Event>,
    pub summary: Summary,
}

/// Derivation and validation shared by `run_scenario` and the CLI.
pub struct Prepared {
    pub phys: PhysicalParams,
    pub derived: TriggerDerived,
    pub validation: ValidationReport,
}

pub fn prepare(cfg: &ScenarioConfig, exec: Execution) -> Result<Prepared> {
    cfg.check_scheme()?;
    let phys = params::derive_physical(&cfg.physical)?;
    cfg.initial.check(&phys)?;
    let derived = params::derive_trigger(&phys, &cfg.controller, &cfg.trigger, cfg.scheme.quadrature, exec)?;
    let validation = params::validate_initial_data(&cfg.initial, &cfg.controller, &phys);
    Ok(Prepared {
        phys,
        derived,
        validation,
    })
}

fn mode_of(kind: ScenarioKind) -> ControlMode {
    match kind {
        ScenarioKind::EventTriggered => ControlMode::EventTriggered,
        ScenarioKind::SampledData => ControlMode::SampledData,
        ScenarioKind::Continuous => ControlMode::Continuous,
    }
}

/// Floor for the identity check: the rounding error of q_cont − q_j, divided by k.
fn identity_scale(q_cont: f64, q_j: f64, k: f64) -> f64 {
    8.0 * f64::EPSILON * (q_cont.abs() + q_j.abs()) / k
}

/// Runs one scenario. Configuration problems are errors; validity breaches end
/// the run early and are recorded in the summary.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    // the quadratures are the only parallel part; a run is otherwise sequential
    run_scenario_with(cfg, Execution::default())
}

pub fn run_scenario_with(cfg: &ScenarioConfig, exec: Execution) -> Result<ScenarioResult> {
    let Prepared {
        phys,
        derived,
        validation,
    } = prepare(cfg, exec)?;
    if !validation.passed() && !cfg.scenario.allow_unsafe {
        return Err(Error::Rejected(validation.render()));
    }
    let mode = mode_of(cfg.scenario.kind);
    let sc = &cfg.scheme;
    let dt = sc.dt;
    if mode == ControlMode::EventTriggered && dt >= sc.dt_guard_ratio * derived.dwell.tau {
        return Err(Error::config(
            "scheme.dt",
            format!(
                "dt = {dt} s must be below {} × τ = {:.6} s for event-triggered runs",
                sc.dt_guard_ratio,
                sc.dt_guard_ratio * derived.dwell.tau
            ),
        ));
    }
    let schedule: Option<SampledSchedule> = match mode {
        ControlMode::SampledData => Some(control::sampled_data_schedule(cfg.scenario.period.unwrap_or(dt), dt)?),
        ControlMode::Continuous => Some(control::sampled_data_schedule(dt, dt)?),
        ControlMode::EventTriggered => None,
    };

    let ctrl = &cfg.controller;
    let (c, setpoint, k) = (ctrl.gain, ctrl.setpoint, phys.k());
    let tc: TransformConstants = derived.transform;
    let lyap = LyapunovConfig::new(&phys, ctrl, &derived);
    let weights = TriggerWeights {
        eta: cfg.trigger.eta,
        gamma: cfg.trigger.gamma,
        sigma: derived.sigma,
        mus: derived.mus,
    };
    let gamma = weights.gamma;

    let init = &cfg.initial;
    let temperature = init.temperature.clone();
    let estimate = init.estimate.clone();
    let s0 = init.s0;
    let mut plant = PlantState::immobilize(|x| temperature.eval(x / s0), s0, sc.nodes, &phys)?;
    let mut obs = ObserverState::new(|x| estimate.eval(x / s0), s0, sc.nodes)?;
    let mut trig = TriggerState::new(cfg.trigger.m0);
    let mut monitor = ValidityMonitor::new(phys.length());

    let steps = (sc.horizon / dt + 1e-9).floor() as u64;
    let energy0 = plant.energy(&phys);
    let mut heat_in = 0.0;
    let mut rows = Vec::new();
    let mut checks = StepChecks {
        identity_max_rel: 0.0,
        threshold_violations: 0,
        max_overshoot: 0.0,
        growth_ratio_max: 0.0,
        min_m: trig.m,
        hold_bound_excess: f64::NEG_INFINITY,
    };
    let mut breach: Option<BreachRecord> = None;
    let mut prev_growth: Option<(f64, f64)> = None; // (d, bound) at the previous step of the same hold
    let initial_error_norm = observer::error_norms(&plant, &obs)?.l2;
    let mut completed_steps = 0;

    for n in 0..=steps {
        let t = n as f64 * dt;
        let now = Snapshot::take(&obs.u_hat, plant.s, setpoint);
        let q_cont = control::continuous_q(&obs.u_hat, plant.s, setpoint, c, &phys);
        let d_pre = if n == 0 {
            0.0
        } else {
            trigger::deviation(&now, &trig.snapshot, c, &phys)
        };
        let reason = if n == 0 {
            Some(EventReason::Initial)
        } else if let Some(sched) = &schedule {
            sched.is_update(n).then_some(EventReason::Scheduled)
        } else {
            trigger::check_event(&trig, d_pre, n, dt, c, gamma)
        };
        if let Some(reason) = reason {
            match control::zoh_update(&obs.u_hat, plant.s, setpoint, c, &phys, mode, t) {
                Ok(sig) => {
                    if reason == EventReason::Threshold {
                        checks.max_overshoot = checks.max_overshoot.max(d_pre * d_pre / (gamma * trig.m));
                    }
                    trig.record_event(reason, n, t, sig.q, now, d_pre * d_pre, gamma);
                    monitor.observe_input(sig.q);
                    prev_growth = None;
                }
                Err(e) => {
                    monitor.observe_input(q_cont);
                    breach = Some(breach_record(&e));
                    monitor.observe(&plant, &obs);
                    break;
                }
            }
        } else {
            // lower bound on the continuous law during a hold
            let floor = (1.0 - c * (t - trig.t_j)) * trig.q_j;
            checks.hold_bound_excess = checks.hold_bound_excess.max((floor - q_cont) / trig.q_j);
        }

        let d = trigger::deviation(&now, &trig.snapshot, c, &phys);
        let via_q = (q_cont - trig.q_j) / k;
        let rel = (d - via_q).abs() / (d.abs().max(via_q.abs()) + identity_scale(q_cont, trig.q_j, k));
        checks.identity_max_rel = checks.identity_max_rel.max(rel);
        if mode == ControlMode::EventTriggered && d * d > gamma * trig.m {
            checks.threshold_violations += 1;
        }
        if mode == ControlMode::EventTriggered {
            checks.min_m = checks.min_m.min(trig.m);
        }

        let x_err = plant.s - setpoint;
        let u_hat_norm = obs.u_hat.l2_norm(plant.s);
        // ũ_x(s) from the measurement −ṡ/β and the observer's own slope
        let slope = plant.measure().interface_slope(phys.beta()) - obs.interface_slope(plant.s);
        let src = Sources {
            d,
            u_hat_sq: u_hat_norm * u_hat_norm,
            x_sq: x_err * x_err,
            slope_sq: slope * slope,
        };
        let bound = trigger::growth_bound(&derived.thetas, &src);
        if let Some((d_prev, bound_prev)) = prev_growth {
            let rate = (d - d_prev) / dt;
            let cap = bound.max(bound_prev);
            if cap > 0.0 {
                checks.growth_ratio_max = checks.growth_ratio_max.max(rate * rate / cap);
            }
        }
        prev_growth = Some((d, bound));

        monitor.observe(&plant, &obs);
        let energy_residual = plant.energy(&phys) - energy0 - heat_in / k;
        // per-step updates of the continuous baseline would log every row
        let log_row = n % sc.diagnostic_stride == 0
            || n == steps
            || (reason.is_some() && mode != ControlMode::Continuous);
        if log_row {
            let m_part = if mode == ControlMode::EventTriggered { trig.m } else { 0.0 };
            let lv = diagnostics::lyapunov(&plant, &obs, m_part, setpoint, &tc, &lyap)?;
            rows.push(SeriesRow {
                step: n,
                t,
                s: plant.s,
                sdot: plant.sdot,
                boundary_temp: plant.u.values()[0],
                temp_norm: plant.u.l2_norm(plant.s),
                error_norm: observer::error_norms(&plant, &obs)?.l2,
                q: trig.q_j,
                q_cont,
                d_sq: d * d,
                gamma_m: gamma * trig.m,
                m: trig.m,
                v1: lv.v1,
                v: lv.v,
                w: lv.w,
                log_w: lv.log_w,
                w_tilde_norm: lv.w_tilde_norm,
                energy_residual,
                min_temp: plant.u.min(),
            });
        }
        completed_steps = n;
        if n == steps {
            break;
        }

        let before = plant.measure();
        let next = match plant.step(trig.q_j, dt, &phys) {
            Ok(p) => p,
            Err(e) if e.is_breach() => {
                breach = Some(breach_record(&e));
                break;
            }
            Err(e) => return Err(e),
        };
        monitor.observe_step(next.s - plant.s);
        obs = match obs.step(before, next.measure(), ctrl.observer_gain, trig.q_j, dt, &phys, sc.injection) {
            Ok(o) => o,
            Err(e) if e.is_breach() => {
                breach = Some(breach_record(&e));
                break;
            }
            Err(e) => return Err(e),
        };
        heat_in += trig.q_j * dt;
        plant = next;
        if let Err(e) = trig.advance_m(&src, &weights, dt, (n + 1) as f64 * dt) {
            // m only gates events in event-triggered runs; elsewhere it is logged as is
            if mode != ControlMode::EventTriggered && matches!(e, Error::Breach { .. }) {
                continue;
            }
            checks.min_m = checks.min_m.min(trig.m);
            breach = Some(breach_record(&e));
            monitor.observe(&plant, &obs);
            break;
        }
    }

    let summary = summarize(
        cfg,
        mode,
        &derived,
        &rows,
        &trig.events,
        SummaryInputs {
            steps: completed_steps,
            initial_error_norm,
            checks,
            validity: monitor.report(),
            breach,
        },
    );
    Ok(ScenarioResult {
        config: cfg.clone(),
        derived,
        validation,
        rows,
        events: trig.events,
        summary,
    })
}

fn breach_record(e: &Error) -> BreachRecord {
    match e {
        Error::Breach { kind, time, value } => BreachRecord {
            kind: Some(*kind),
            time: *time,
            value: *value,
            message: e.to_string(),
        },
        Error::Numerical { time, .. } => BreachRecord {
            kind: None,
            time: *time,
            value: f64::NAN,
            message: e.to_string(),
        },
        other => BreachRecord {
            kind: None,
            time: f64::NAN,
            value: f64::NAN,
            message: other.to_string(),
        },
    }
}

struct SummaryInputs {
    steps: u64,
    initial_error_norm: f64,
    checks: StepChecks,
    validity: ValidityReport,
    breach: Option<BreachRecord>,
}

const W_TILDE_FLOOR: f64 = 1e-8;

fn summarize(
    cfg: &ScenarioConfig,
    mode: ControlMode,
    derived: &TriggerDerived,
    rows: &[SeriesRow],
    events: &[Event],
    inputs: SummaryInputs,
) -> Summary {
    let dwells: Vec<f64> = events.iter().filter_map(|e| e.dwell).collect();
    let setpoint = cfg.controller.setpoint;
    let tol = cfg.scheme.convergence_tol;
    let last = rows.last();
    let final_s = last.map_or(cfg.initial.s0, |r| r.s);

    // last logged row outside the band; converged from the next row on
    let convergence_time = match rows.iter().rposition(|r| (r.s - setpoint).abs() >= tol) {
        None => rows.first().map(|r| r.t),
        Some(i) if i + 1 < rows.len() => Some(rows[i + 1].t),
        Some(_) => None,
    };

    let times: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let log_w: Vec<f64> = rows.iter().map(|r| r.log_w).collect();
    let w0 = rows.first().map_or(0.0, |r| r.w_tilde_norm);
    let decay: Vec<(f64, f64)> = rows
        .iter()
        .take_while(|r| w0 > 0.0 && r.w_tilde_norm > W_TILDE_FLOOR * w0)
        .map(|r| (r.t, r.w_tilde_norm.ln()))
        .collect();
    let (dt_, dy_): (Vec<f64>, Vec<f64>) = decay.into_iter().unzip();

    Summary {
        name: cfg.scenario.name.clone(),
        mode,
        steps: inputs.steps,
        horizon: cfg.scheme.horizon,
        completed: inputs.breach.is_none(),
        update_count: events.len(),
        threshold_events: events.iter().filter(|e| e.reason == EventReason::Threshold).count(),
        max_dwell_events: events.iter().filter(|e| e.reason == EventReason::MaxDwell).count(),
        min_dwell: dwells.iter().copied().reduce(f64::min),
        mean_dwell: (!dwells.is_empty()).then(|| dwells.iter().sum::<f64>() / dwells.len() as f64),
        max_dwell: dwells.iter().copied().reduce(f64::max),
        tau: derived.dwell.tau,
        dwell_cap: derived.dwell.max_dwell,
        final_s,
        final_error: (final_s - setpoint).abs(),
        convergence_time,
        convergence_tol: tol,
        initial_error_norm: inputs.initial_error_norm,
        final_error_norm: last.map_or(inputs.initial_error_norm, |r| r.error_norm),
        log_w_slope: diagnostics::fit_slope(&times, &log_w),
        w_tilde_rate: diagnostics::fit_slope(&dt_, &dy_).map(|s| -s),
        max_energy_residual: rows.iter().map(|r| r.energy_residual.abs()).fold(0.0, f64::max),
        checks: inputs.checks,
        validity: inputs.validity,
        breach: inputs.breach,
    }
}
