//! Backstepping observer on the plant's measured domain.
//!
//! The observer copies the plant scheme and adds the output injection
//! p(x, s)·(T_x(s) − T̂_x(s)), where T_x(s) = −ṡ/β comes from the measurement.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numerics::{self, Profile};
use crate::params::PhysicalParams;
use crate::plant::{self, Measurement, PlantState};

/// Observer gain p(x, s) = −λ s I₁(z)/z with z = √(λ(s² − x²)/α).
pub fn observer_gain(x: f64, s: f64, lambda: f64, alpha: f64) -> f64 {
    let w = (lambda * (s * s - x * x) / alpha).max(0.0);
    -lambda * s * numerics::ratio_i1_sqrt(w)
}

/// Time level at which the injection term enters the step.
///
/// `Explicit` uses the old observer slope and the old measurement. Its loop gain
/// is roughly dt·|p(s − h s, s)|/(h s), which exceeds 2 once s grows past a few
/// millimetres at dt = 0.5 s, so it diverges on the reference problem.
/// `Implicit` couples the new observer slope into the linear solve (a rank-one
/// update of the tridiagonal system) and uses the post-step measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Injection {
    #[default]
    Implicit,
    Explicit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverState {
    /// T̂ − Tm on the unit grid; the last node is pinned to zero.
    pub u_hat: Profile,
    pub t: f64,
}

impl ObserverState {
    /// Samples `estimate(x)` (giving T̂0(x) − Tm) at x = ξ s0.
    pub fn new(estimate: impl Fn(f64) -> f64, s0: f64, nodes: usize) -> Result<Self> {
        let mut values = Profile::from_fn(nodes, |xi| estimate(xi * s0))?.into_values();
        *values.last_mut().expect("at least three nodes") = 0.0;
        Ok(Self {
            u_hat: Profile::new(values)?,
            t: 0.0,
        })
    }

    /// Physical slope T̂_x(s) from the one-sided stencil.
    pub fn interface_slope(&self, s: f64) -> f64 {
        self.u_hat.slope_at_end() / s
    }

    /// Advances one step alongside the plant.
    ///
    /// `frame` is the measurement at the old level (it fixes the grid scaling and
    /// the advection speed, exactly as in the plant step). `measured` is the
    /// measurement after the plant step, used by the implicit injection.
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &self,
        frame: Measurement,
        measured: Measurement,
        lambda: f64,
        q: f64,
        dt: f64,
        phys: &PhysicalParams,
        injection: Injection,
    ) -> Result<ObserverState> {
        let u = self.u_hat.values();
        let n = u.len();
        let last = n - 1;
        let h = self.u_hat.h();
        let mut sys = plant::assemble(u, frame.s, frame.sdot, phys, q, dt);
        // dt·p at each node; the Dirichlet node carries no source
        let mut z: Vec<f64> = (0..n)
            .map(|i| dt * observer_gain(i as f64 * h * frame.s, frame.s, lambda, phys.alpha()))
            .collect();
        z[last] = 0.0;

        let next = match injection {
            Injection::Explicit => {
                let innovation = frame.interface_slope(phys.beta()) - self.interface_slope(frame.s);
                for (r, zi) in sys.rhs.iter_mut().zip(&z) {
                    *r += zi * innovation;
                }
                sys.solve()?
            }
            Injection::Implicit => {
                // (A + z gᵀ) û = rhs + z T_x, with gᵀû the new slope T̂_x at the new interface
                let tx = measured.interface_slope(phys.beta());
                for (r, zi) in sys.rhs.iter_mut().zip(&z) {
                    *r += zi * tx;
                }
                let scale = 1.0 / (2.0 * h * measured.s);
                let g = |v: &[f64]| scale * (3.0 * v[last] - 4.0 * v[last - 1] + v[last - 2]);
                let y = sys.solve()?;
                sys.rhs = z;
                let w = sys.solve()?;
                let factor = g(&y) / (1.0 + g(&w));
                y.iter().zip(&w).map(|(yi, wi)| yi - factor * wi).collect()
            }
        };
        let t = self.t + dt;
        plant::check_finite(&next, t)?;
        Ok(ObserverState {
            u_hat: Profile::new(next)?,
            t,
        })
    }
}

/// Norms of the estimation error ũ = T − T̂ on the physical domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorNorms {
    /// ‖ũ‖
    pub l2: f64,
    /// ‖ũ_x‖
    pub grad_l2: f64,
    /// ũ_x(s)
    pub interface_slope: f64,
}

pub fn error_norms(plant: &PlantState, obs: &ObserverState) -> Result<ErrorNorms> {
    let err = plant.u.sub(&obs.u_hat)?;
    let s = plant.s;
    let grad: Vec<f64> = numerics::gradient(err.values(), err.h()).iter().map(|g| g / s).collect();
    let grad_sq: Vec<f64> = grad.iter().map(|g| g * g).collect();
    Ok(ErrorNorms {
        l2: err.l2_norm(s),
        grad_l2: numerics::trapezoid(&grad_sq, s).sqrt(),
        interface_slope: err.slope_at_end() / s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::bessel_i1;
    use crate::params::{derive_physical, MaterialConstants};
    use approx::assert_relative_eq;

    fn paraffin() -> PhysicalParams {
        derive_physical(&MaterialConstants::paraffin()).unwrap()
    }

    #[test]
    fn gain_at_interface_and_zero_lambda() {
        assert_relative_eq!(observer_gain(1.5, 1.5, 0.1, 1e-3), -0.1 * 1.5 / 2.0, max_relative = 1e-15);
        assert_eq!(observer_gain(0.3, 1.0, 0.0, 1e-3), 0.0);
    }

    #[test]
    fn gain_matches_bessel_series() {
        let alpha = paraffin().alpha();
        let z = (0.1_f64 / alpha).sqrt();
        // power series Σ (z/2)^{2k+1} / (k!(k+1)!)
        let mut term = z / 2.0;
        let mut sum = term;
        for k in 1..80 {
            term *= (z / 2.0) * (z / 2.0) / (k as f64 * (k + 1) as f64);
            sum += term;
        }
        assert_relative_eq!(bessel_i1(z).unwrap(), sum, max_relative = 1e-12);
        assert_relative_eq!(observer_gain(0.0, 1.0, 0.1, alpha), -0.1 * sum / z, max_relative = 1e-12);
    }

    fn pair(nodes: usize, s0: f64, a: f64, b: f64) -> (PhysicalParams, PlantState, ObserverState) {
        let phys = paraffin();
        let plant = PlantState::immobilize(|x| a * (1.0 - x / s0), s0, nodes, &phys).unwrap();
        let obs = ObserverState::new(|x| b * (1.0 - x / s0), s0, nodes).unwrap();
        (phys, plant, obs)
    }

    #[test]
    fn perfect_initialization_tracks_plant() {
        for injection in [Injection::Implicit, Injection::Explicit] {
            let (phys, mut plant, mut obs) = pair(61, 0.1, 1.0, 1.0);
            for _ in 0..200 {
                let next = plant.step(0.05, 0.5, &phys).unwrap();
                obs = obs
                    .step(plant.measure(), next.measure(), 0.1, 0.05, 0.5, &phys, injection)
                    .unwrap();
                plant = next;
            }
            let gap = plant.u.sub(&obs.u_hat).unwrap().max_abs();
            assert!(gap < 1e-10, "{injection:?}: gap {gap}");
        }
    }

    #[test]
    fn zero_gain_is_open_loop_copy() {
        let (phys, mut plant, mut obs) = pair(41, 0.5, 2.0, 2.0);
        for _ in 0..50 {
            let next = plant.step(0.02, 0.5, &phys).unwrap();
            obs = obs
                .step(plant.measure(), next.measure(), 0.0, 0.02, 0.5, &phys, Injection::Implicit)
                .unwrap();
            plant = next;
        }
        assert_eq!(plant.u.values(), obs.u_hat.values());
    }

    #[test]
    fn implicit_injection_reduces_error() {
        let (phys, mut plant, mut obs) = pair(61, 0.1, 1.0, 10.0);
        let e0 = error_norms(&plant, &obs).unwrap().l2;
        for _ in 0..400 {
            let next = plant.step(0.05, 0.5, &phys).unwrap();
            obs = obs
                .step(plant.measure(), next.measure(), 0.1, 0.05, 0.5, &phys, Injection::Implicit)
                .unwrap();
            plant = next;
        }
        let e1 = error_norms(&plant, &obs).unwrap().l2;
        assert!(e1 < 1e-3 * e0, "{e0} -> {e1}");
    }

    #[test]
    fn error_norms_of_linear_profile() {
        let phys = paraffin();
        let n = 201;
        let plant = PlantState::immobilize(|x| 1.0 - x / 2.0, 2.0, n, &phys).unwrap();
        let obs = ObserverState::new(|_| 0.0, 2.0, n).unwrap();
        let e = error_norms(&plant, &obs).unwrap();
        let h = 1.0 / (n - 1) as f64;
        assert!((e.l2 - (2.0_f64 / 3.0).sqrt()).abs() < h * h);
        assert_relative_eq!(e.interface_slope, -0.5, max_relative = 1e-12);
        assert_relative_eq!(e.grad_l2, (2.0_f64 * 0.25).sqrt(), max_relative = 1e-12);

        let same = ObserverState {
            u_hat: plant.u.clone(),
            t: 0.0,
        };
        let z = error_norms(&plant, &same).unwrap();
        assert_eq!((z.l2, z.grad_l2, z.interface_slope), (0.0, 0.0, 0.0));
    }
}
