//! Dynamic event trigger: the deviation d between the continuous and the held
//! input, the internal variable m, and the event rule d² > γm or dwell ≥ 1/c.

use serde::Serialize;

use crate::error::{BreachKind, Error, Result};
use crate::numerics::Profile;
use crate::params::PhysicalParams;

/// Observer integral and setpoint error captured at the last event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Snapshot {
    /// ∫₀^s û dx
    pub integral: f64,
    /// X = s − s_r
    pub x: f64,
}

impl Snapshot {
    pub fn take(u_hat: &Profile, s: f64, setpoint: f64) -> Self {
        Self {
            integral: u_hat.integral(s),
            x: s - setpoint,
        }
    }
}

/// d = (c/α)(∫û(t_j) − ∫û(t)) + (c/β)(X(t_j) − X(t)).
pub fn deviation(now: &Snapshot, last: &Snapshot, gain: f64, phys: &PhysicalParams) -> f64 {
    gain / phys.alpha() * (last.integral - now.integral) + gain / phys.beta() * (last.x - now.x)
}

/// Weights of the m-dynamics ṁ = −ηm − σd² + μ₁‖û‖² + μ₂X² + μ₃ũ_x²(s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriggerWeights {
    pub eta: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub mus: [f64; 3],
}

/// Signals feeding ṁ, frozen over one step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Sources {
    pub d: f64,
    /// ‖û‖²
    pub u_hat_sq: f64,
    /// X²
    pub x_sq: f64,
    /// ũ_x(s)²
    pub slope_sq: f64,
}

impl TriggerWeights {
    fn forcing(&self, src: &Sources) -> f64 {
        -self.sigma * src.d * src.d
            + self.mus[0] * src.u_hat_sq
            + self.mus[1] * src.x_sq
            + self.mus[2] * src.slope_sq
    }
}

/// One classical RK4 step of ṁ = −ηm + forcing with the forcing held constant.
pub fn step_m(m: f64, src: &Sources, weights: &TriggerWeights, dt: f64) -> f64 {
    let g = weights.forcing(src);
    let f = |m: f64| -weights.eta * m + g;
    let k1 = f(m);
    let k2 = f(m + 0.5 * dt * k1);
    let k3 = f(m + 0.5 * dt * k2);
    let k4 = f(m + dt * k3);
    m + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Right-hand side of the bound ḋ² ≤ θ₀d² + θ₁‖û‖² + θ₂X² + θ₃ũ_x²(s) on the squared
/// rate of the deviation.
pub fn growth_bound(thetas: &[f64; 4], src: &Sources) -> f64 {
    thetas[0] * src.d * src.d + thetas[1] * src.u_hat_sq + thetas[2] * src.x_sq + thetas[3] * src.slope_sq
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventReason {
    Initial,
    Threshold,
    MaxDwell,
    Scheduled,
}

impl EventReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventReason::Initial => "initial",
            EventReason::Threshold => "threshold",
            EventReason::MaxDwell => "max_dwell",
            EventReason::Scheduled => "scheduled",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub step: u64,
    pub time: f64,
    pub reason: EventReason,
    pub q_j: f64,
    /// Time since the previous event; absent for the first one.
    pub dwell: Option<f64>,
    /// d² at the supervising instant, before the reset.
    pub d_sq: f64,
    pub gamma_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriggerState {
    pub m: f64,
    pub q_j: f64,
    pub t_j: f64,
    pub step_j: u64,
    pub snapshot: Snapshot,
    pub events: Vec<Event>,
}

/// Event rule at solver step `step`: threshold d² > γm first, then the dwell cap.
pub fn check_event(state: &TriggerState, d: f64, step: u64, dt: f64, gain: f64, gamma: f64) -> Option<EventReason> {
    if d * d > gamma * state.m {
        return Some(EventReason::Threshold);
    }
    let elapsed = (step - state.step_j) as f64 * dt;
    // the tolerance absorbs rounding when 1/c is an exact multiple of dt
    if elapsed >= 1.0 / gain * (1.0 - 1e-12) {
        return Some(EventReason::MaxDwell);
    }
    None
}

impl TriggerState {
    pub fn new(m0: f64) -> Self {
        Self {
            m: m0,
            q_j: 0.0,
            t_j: 0.0,
            step_j: 0,
            snapshot: Snapshot { integral: 0.0, x: 0.0 },
            events: Vec::new(),
        }
    }

    /// Stores a new held input and resets the snapshot.
    #[allow(clippy::too_many_arguments)]
    pub fn record_event(
        &mut self,
        reason: EventReason,
        step: u64,
        time: f64,
        q_j: f64,
        snapshot: Snapshot,
        d_sq: f64,
        gamma: f64,
    ) {
        let dwell = if self.events.is_empty() { None } else { Some(time - self.t_j) };
        self.events.push(Event {
            step,
            time,
            reason,
            q_j,
            dwell,
            d_sq,
            gamma_m: gamma * self.m,
        });
        self.q_j = q_j;
        self.t_j = time;
        self.step_j = step;
        self.snapshot = snapshot;
    }

    /// Integrates m over one step; a non-positive result is reported, not clamped.
    pub fn advance_m(&mut self, src: &Sources, weights: &TriggerWeights, dt: f64, t_next: f64) -> Result<()> {
        let next = step_m(self.m, src, weights, dt);
        if !next.is_finite() {
            return Err(Error::Numerical {
                time: t_next,
                message: format!("trigger variable became {next}"),
            });
        }
        self.m = next;
        if next <= 0.0 {
            return Err(Error::Breach {
                kind: BreachKind::NonPositiveTriggerVariable,
                time: t_next,
                value: next,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive_physical, MaterialConstants};
    use approx::assert_relative_eq;

    fn weights(eta: f64) -> TriggerWeights {
        TriggerWeights {
            eta,
            gamma: 1.0,
            sigma: 0.0,
            mus: [0.0; 3],
        }
    }

    #[test]
    fn deviation_vanishes_at_snapshot() {
        let phys = derive_physical(&MaterialConstants::paraffin()).unwrap();
        let u = Profile::from_fn(61, |xi| 3.0 * (1.0 - xi)).unwrap();
        let snap = Snapshot::take(&u, 0.7, 2.0);
        assert_eq!(deviation(&snap, &snap, 3e-4, &phys), 0.0);
    }

    #[test]
    fn free_decay_is_exponential() {
        let w = weights(1.0);
        let dt = 1e-3;
        let mut m = 1.0;
        for _ in 0..1000 {
            m = step_m(m, &Sources::default(), &w, dt);
        }
        assert_relative_eq!(m, (-1.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn zero_deviation_keeps_m_above_decay_envelope() {
        let w = TriggerWeights {
            eta: 0.1,
            gamma: 1.0,
            sigma: 5.0,
            mus: [1.0, 2.0, 3.0],
        };
        let src = Sources {
            d: 0.0,
            u_hat_sq: 0.2,
            x_sq: 0.1,
            slope_sq: 0.05,
        };
        let mut m = 0.5;
        for k in 1..=100 {
            m = step_m(m, &src, &w, 0.5);
            assert!(m >= 0.5 * (-0.1 * 0.5 * k as f64).exp());
        }
    }

    #[test]
    fn threshold_is_strict() {
        let mut st = TriggerState::new(2.0);
        st.record_event(EventReason::Initial, 0, 0.0, 1.0, Snapshot { integral: 0.0, x: -1.0 }, 0.0, 0.5);
        let d = 1.0; // d² = γm exactly
        assert_eq!(check_event(&st, d, 1, 0.5, 3e-4, 0.5), None);
        assert_eq!(check_event(&st, 1.0 + 1e-12, 1, 0.5, 3e-4, 0.5), Some(EventReason::Threshold));
    }

    #[test]
    fn max_dwell_fires_at_one_over_c() {
        let mut st = TriggerState::new(1.0);
        st.record_event(EventReason::Initial, 0, 0.0, 1.0, Snapshot { integral: 0.0, x: -1.0 }, 0.0, 1.0);
        let gain = 0.25; // 1/c = 4 s = 8 steps
        assert_eq!(check_event(&st, 0.0, 7, 0.5, gain, 1.0), None);
        assert_eq!(check_event(&st, 0.0, 8, 0.5, gain, 1.0), Some(EventReason::MaxDwell));
        // threshold wins on a tie
        assert_eq!(check_event(&st, 10.0, 8, 0.5, gain, 1.0), Some(EventReason::Threshold));
    }

    #[test]
    fn nonpositive_m_is_reported() {
        let mut st = TriggerState::new(1e-6);
        let w = TriggerWeights {
            eta: 0.0,
            gamma: 1.0,
            sigma: 1.0,
            mus: [0.0; 3],
        };
        let src = Sources {
            d: 1.0,
            ..Default::default()
        };
        let err = st.advance_m(&src, &w, 1.0, 1.0).unwrap_err();
        assert!(matches!(
            err,
            Error::Breach {
                kind: BreachKind::NonPositiveTriggerVariable,
                ..
            }
        ));
        assert!(st.m < 0.0);
    }

    #[test]
    fn event_log_records_dwell() {
        let mut st = TriggerState::new(1.0);
        let snap = Snapshot { integral: 0.0, x: -1.0 };
        st.record_event(EventReason::Initial, 0, 0.0, 1.0, snap, 0.0, 1.0);
        st.record_event(EventReason::Threshold, 10, 5.0, 0.9, snap, 2.0, 1.0);
        assert_eq!(st.events[0].dwell, None);
        assert_eq!(st.events[1].dwell, Some(5.0));
        assert_eq!(st.q_j, 0.9);
        assert_eq!(st.step_j, 10);
    }
}
