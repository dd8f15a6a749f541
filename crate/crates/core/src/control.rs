//! Observer-based boundary heat-flux law and its held (ZOH) realizations.

use serde::{Deserialize, Serialize};

use crate::error::{BreachKind, Error, Result};
use crate::numerics::Profile;
use crate::params::PhysicalParams;

/// q = −c (k/α ∫₀^s û dx + k/β (s − s_r)).
pub fn continuous_q(u_hat: &Profile, s: f64, setpoint: f64, gain: f64, phys: &PhysicalParams) -> f64 {
    let k = phys.k();
    -gain * (k / phys.alpha() * u_hat.integral(s) + k / phys.beta() * (s - setpoint))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    /// Held input updated at every solver step.
    Continuous,
    /// Held input updated by the dynamic trigger.
    EventTriggered,
    /// Held input updated on a fixed period.
    SampledData,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlSignal {
    pub q: f64,
    pub mode: ControlMode,
    pub held_since: f64,
}

/// Samples the continuous law at an update instant. A non-positive value means the
/// positivity hypotheses no longer hold, and the run must stop.
pub fn zoh_update(
    u_hat: &Profile,
    s: f64,
    setpoint: f64,
    gain: f64,
    phys: &PhysicalParams,
    mode: ControlMode,
    t_event: f64,
) -> Result<ControlSignal> {
    let q = continuous_q(u_hat, s, setpoint, gain, phys);
    if !(q > 0.0) {
        return Err(Error::Breach {
            kind: BreachKind::NonPositiveInput,
            time: t_event,
            value: q,
        });
    }
    Ok(ControlSignal {
        q,
        mode,
        held_since: t_event,
    })
}

/// Periodic update times aligned to the solver grid: every `period/dt` steps
/// (rounded, at least one).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledSchedule {
    stride: u64,
}

pub fn sampled_data_schedule(period: f64, dt: f64) -> Result<SampledSchedule> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::config("scenario.period", format!("must be positive, got {period}")));
    }
    let stride = (period / dt).round().max(1.0) as u64;
    Ok(SampledSchedule { stride })
}

impl SampledSchedule {
    pub fn stride(&self) -> u64 {
        self.stride
    }

    pub fn is_update(&self, step: u64) -> bool {
        step % self.stride == 0
    }

    /// Update times up to and including `horizon`.
    pub fn times(&self, dt: f64, horizon: f64) -> Vec<f64> {
        let steps = (horizon / dt + 1e-9).floor() as u64;
        (0..=steps)
            .filter(|&k| self.is_update(k))
            .map(|k| k as f64 * dt)
            .collect()
    }
}
