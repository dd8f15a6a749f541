//! One-phase Stefan plant on the immobilized grid ξ = x/s(t).
//!
//! In ξ the heat equation reads u_t = (α/s²) u_ξξ + (ξ ṡ/s) u_ξ. Each step treats
//! diffusion implicitly and advection explicitly (upwinded), with s and ṡ frozen at
//! the old level. The interface then moves by explicit Euler.

use serde::Serialize;

use crate::error::{BreachKind, Error, Result};
use crate::numerics::{self, Profile};
use crate::params::PhysicalParams;

/// Interface position and velocity, the only quantities the observer sees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Measurement {
    pub s: f64,
    pub sdot: f64,
}

impl Measurement {
    /// Physical temperature slope at the interface, T_x(s) = −ṡ/β.
    pub fn interface_slope(&self, beta: f64) -> f64 {
        -self.sdot / beta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    /// T − Tm on the unit grid; the last node is pinned to zero.
    pub u: Profile,
    pub s: f64,
    pub sdot: f64,
    pub t: f64,
}

impl PlantState {
    /// Samples `temperature(x)` (giving T0(x) − Tm) at x = ξ s0.
    pub fn immobilize(
        temperature: impl Fn(f64) -> f64,
        s0: f64,
        nodes: usize,
        phys: &PhysicalParams,
    ) -> Result<Self> {
        if !(s0 > 0.0 && s0 < phys.length()) {
            return Err(Error::Breach {
                kind: BreachKind::InterfaceOutOfDomain,
                time: 0.0,
                value: s0,
            });
        }
        let mut values = Profile::from_fn(nodes, |xi| temperature(xi * s0))?.into_values();
        *values.last_mut().expect("at least three nodes") = 0.0;
        let u = Profile::new(values)?;
        let sdot = interface_velocity(u.values(), s0, phys.beta());
        Ok(Self { u, s: s0, sdot, t: 0.0 })
    }

    pub fn measure(&self) -> Measurement {
        Measurement {
            s: self.s,
            sdot: self.sdot,
        }
    }

    /// Advances one step under the held boundary flux `q` [W/cm²].
    pub fn step(&self, q: f64, dt: f64, phys: &PhysicalParams) -> Result<PlantState> {
        if !q.is_finite() {
            return Err(Error::Numerical {
                time: self.t,
                message: format!("non-finite input q = {q}"),
            });
        }
        let sys = assemble(self.u.values(), self.s, self.sdot, phys, q, dt);
        let u_next = sys.solve()?;
        let t = self.t + dt;
        let s = self.s + dt * self.sdot;
        check_interface(s, t, phys)?;
        check_finite(&u_next, t)?;
        let sdot = interface_velocity(&u_next, s, phys.beta());
        Ok(PlantState {
            u: Profile::new(u_next)?,
            s,
            sdot,
            t,
        })
    }

    /// (1/α) ∫₀^s u dx + s/β, whose time derivative equals q/k.
    pub fn energy(&self, phys: &PhysicalParams) -> f64 {
        self.u.integral(self.s) / phys.alpha() + self.s / phys.beta()
    }
}

/// ṡ = −(β/s) u_ξ(1) with the second-order one-sided stencil.
pub fn interface_velocity(u: &[f64], s: f64, beta: f64) -> f64 {
    let h = 1.0 / (u.len() - 1) as f64;
    -beta / s * numerics::slope_at_end(u, h)
}

pub(crate) fn check_interface(s: f64, t: f64, phys: &PhysicalParams) -> Result<()> {
    if s.is_nan() {
        return Err(Error::Numerical {
            time: t,
            message: "interface position is NaN".into(),
        });
    }
    if s <= 0.0 || s >= phys.length() {
        return Err(Error::Breach {
            kind: BreachKind::InterfaceOutOfDomain,
            time: t,
            value: s,
        });
    }
    Ok(())
}

pub(crate) fn check_finite(values: &[f64], t: f64) -> Result<()> {
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numerical {
            time: t,
            message: format!("non-finite temperature at node {i}"),
        });
    }
    Ok(())
}

/// Tridiagonal system of one semi-implicit step, before any injection source.
pub(crate) struct StepSystem {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl StepSystem {
    pub fn solve(&self) -> Result<Vec<f64>> {
        numerics::solve_tridiagonal(&self.lower, &self.diag, &self.upper, &self.rhs)
    }
}

/// Builds the implicit-diffusion system with explicit advection and the Neumann
/// ghost node u_ξ(0) = −s q/k folded into row 0.
pub(crate) fn assemble(u: &[f64], s: f64, sdot: f64, phys: &PhysicalParams, q: f64, dt: f64) -> StepSystem {
    let n = u.len();
    let last = n - 1;
    let h = 1.0 / last as f64;
    let r = dt * phys.alpha() / (s * s * h * h);
    let g0 = -s * q / phys.k();
    let vel = sdot / s;

    // lower[i] couples row i + 1 to node i; upper[i] couples row i to node i + 1
    let mut lower = vec![0.0; last];
    let mut diag = vec![1.0 + 2.0 * r; n];
    let mut upper = vec![0.0; last];
    let mut rhs = vec![0.0; n];

    // ghost node u_{-1} = u_1 − 2h g0; advection vanishes at ξ = 0
    upper[0] = -2.0 * r;
    rhs[0] = u[0] - 2.0 * r * h * g0;

    for i in 1..last {
        lower[i - 1] = -r;
        upper[i] = -r;
        let xi = i as f64 * h;
        let v = xi * vel;
        // u_t = v u_ξ carries information from +ξ when v ≥ 0
        let slope = if v >= 0.0 {
            (u[i + 1] - u[i]) / h
        } else {
            (u[i] - u[i - 1]) / h
        };
        rhs[i] = u[i] + dt * v * slope;
    }

    diag[last] = 1.0;
    lower[last - 1] = 0.0;
    rhs[last] = 0.0;

    StepSystem {
        lower,
        diag,
        upper,
        rhs,
    }
}
