//! Backstepping transforms, Lyapunov monitor and validity margins.
//!
//! Nothing here feeds back into the closed loop; these objects only check the
//! analysis against the simulated trajectories.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::numerics::{self, Profile};
use crate::observer::{observer_gain, ObserverState};
use crate::params::{ControllerConfig, PhysicalParams, Quadrature, TriggerDerived};
use crate::plant::PlantState;

/// Constants of the controller-side kernels φ and ψ, plus what the observer-side
/// kernels P and Q need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformConstants {
    pub alpha: f64,
    pub beta: f64,
    pub gain: f64,
    pub lambda: f64,
    pub epsilon: f64,
    /// ν = βε/(2α)
    pub nu: f64,
    /// ω = √((4αc − (εβ)²)/(4α²))
    pub omega: f64,
    /// ζ = −(2αc − (εβ)²)/(2αβω)
    pub zeta: f64,
    /// R = 2√(αc)/β
    pub r: f64,
}

const PSI_CHECK_POINTS: usize = 1000;

impl TransformConstants {
    pub fn new(phys: &PhysicalParams, ctrl: &ControllerConfig) -> Result<Self> {
        let (alpha, beta, c, eps) = (phys.alpha(), phys.beta(), ctrl.gain, ctrl.epsilon);
        let r = 2.0 * (alpha * c).sqrt() / beta;
        if !(eps > 0.0 && eps < r) {
            return Err(Error::config(
                "controller.epsilon",
                format!("kernel constants need 0 < ε < {r:.6e}, got {eps}"),
            ));
        }
        let eb2 = (eps * beta).powi(2);
        let omega = ((4.0 * alpha * c - eb2) / (4.0 * alpha * alpha)).sqrt();
        let tc = Self {
            alpha,
            beta,
            gain: c,
            lambda: ctrl.observer_gain,
            epsilon: eps,
            nu: beta * eps / (2.0 * alpha),
            omega,
            zeta: -(2.0 * alpha * c - eb2) / (2.0 * alpha * beta * omega),
            r,
        };
        if eps < (alpha * c).sqrt() / beta {
            let lhs = tc.zeta * tc.zeta + eps * eps;
            if lhs >= r * r {
                return Err(Error::Consistency(format!("ζ² + ε² = {lhs:.6e} is not below 4αc/β² = {:.6e}", r * r)));
            }
            let worst = tc.psi_bound(phys.length());
            if worst >= r {
                return Err(Error::Consistency(format!("max |ψ(−x)| = {worst:.6e} is not below R = {r:.6e}")));
            }
        }
        Ok(tc)
    }

    /// φ(x) = (c/β) x − ε.
    pub fn phi(&self, x: f64) -> f64 {
        self.gain / self.beta * x - self.epsilon
    }

    /// ψ(x) = e^{νx} (ζ sin ωx + ε cos ωx).
    pub fn psi(&self, x: f64) -> f64 {
        (self.nu * x).exp() * (self.zeta * (self.omega * x).sin() + self.epsilon * (self.omega * x).cos())
    }

    /// max |ψ(−x)| over a uniform grid on [0, length].
    pub fn psi_bound(&self, length: f64) -> f64 {
        (0..PSI_CHECK_POINTS)
            .map(|i| self.psi(-length * i as f64 / (PSI_CHECK_POINTS - 1) as f64).abs())
            .fold(0.0, f64::max)
    }

    fn kernel_arg(&self, x: f64, y: f64) -> f64 {
        (self.lambda * (y * y - x * x) / self.alpha).max(0.0)
    }

    /// P(x, y) = (λ/α) y I₁(z)/z, z = √(λ(y² − x²)/α).
    pub fn p_kernel(&self, x: f64, y: f64) -> f64 {
        self.lambda / self.alpha * y * numerics::ratio_i1_sqrt(self.kernel_arg(x, y))
    }

    /// Q(x, y) = (λ/α) y J₁(z)/z.
    pub fn q_kernel(&self, x: f64, y: f64) -> f64 {
        self.lambda / self.alpha * y * numerics::ratio_j1_sqrt(self.kernel_arg(x, y))
    }
}

/// ∫_{x_i}^{s} K(x_i, y) v(y) dy at every node, by the trapezoid rule on the grid.
fn volterra(values: &[f64], s: f64, kernel: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let n = values.len();
    let dx = s / (n - 1) as f64;
    (0..n)
        .map(|i| {
            let x = i as f64 * dx;
            let mut acc = 0.0;
            for j in i..n {
                let w = if j == i || j == n - 1 { 0.5 } else { 1.0 };
                acc += w * kernel(x, j as f64 * dx) * values[j];
            }
            acc * dx
        })
        .collect()
}

/// ũ = w̃ + ∫_x^s P(x, y) w̃(y) dy.
pub fn transform_error_direct(w_tilde: &Profile, s: f64, tc: &TransformConstants) -> Result<Profile> {
    let v = w_tilde.values();
    let integral = volterra(v, s, |x, y| tc.p_kernel(x, y));
    Profile::new(v.iter().zip(&integral).map(|(a, b)| a + b).collect())
}

/// w̃ = ũ − ∫_x^s Q(x, y) ũ(y) dy.
pub fn transform_error_inverse(u_tilde: &Profile, s: f64, tc: &TransformConstants) -> Result<Profile> {
    let v = u_tilde.values();
    let integral = volterra(v, s, |x, y| tc.q_kernel(x, y));
    Profile::new(v.iter().zip(&integral).map(|(a, b)| a - b).collect())
}

/// ŵ = û − (β/α) ∫_x^s φ(x − y) û(y) dy − φ(x − s) X.
pub fn transform_controller_direct(u_hat: &Profile, x_err: f64, s: f64, tc: &TransformConstants) -> Result<Profile> {
    let v = u_hat.values();
    let integral = volterra(v, s, |x, y| tc.phi(x - y));
    let k = tc.beta / tc.alpha;
    Profile::new(
        (0..v.len())
            .map(|i| {
                let x = u_hat.xi(i) * s;
                v[i] - k * integral[i] - tc.phi(x - s) * x_err
            })
            .collect(),
    )
}

/// û = ŵ − (β/α) ∫_x^s ψ(x − y) ŵ(y) dy − ψ(x − s) X.
pub fn transform_controller_inverse(w_hat: &Profile, x_err: f64, s: f64, tc: &TransformConstants) -> Result<Profile> {
    let v = w_hat.values();
    let integral = volterra(v, s, |x, y| tc.psi(x - y));
    let k = tc.beta / tc.alpha;
    Profile::new(
        (0..v.len())
            .map(|i| {
                let x = w_hat.xi(i) * s;
                v[i] - k * integral[i] - tc.psi(x - s) * x_err
            })
            .collect(),
    )
}

/// f(x, s) = p(x, s) − (β/α) ∫_x^s φ(x − y) p(y, s) dy + β φ(x − s), by a
/// `panels`-panel trapezoid rule.
pub fn f_kernel(x: f64, s: f64, tc: &TransformConstants, panels: usize) -> f64 {
    let p = |y: f64| observer_gain(y, s, tc.lambda, tc.alpha);
    let integral = numerics::trapezoid_fn(|y| tc.phi(x - y) * p(y), x, s, panels);
    p(x) - tc.beta / tc.alpha * integral + tc.beta * tc.phi(x - s)
}

/// f(·, s) on `nodes` uniform points of [0, s]. Since φ is affine, the inner
/// integral splits into two cumulative sums and the whole profile costs O(nodes).
pub fn f_profile(s: f64, tc: &TransformConstants, nodes: usize) -> Vec<f64> {
    let n = nodes.max(2);
    let dy = s / (n - 1) as f64;
    let ys: Vec<f64> = (0..n).map(|j| j as f64 * dy).collect();
    let p: Vec<f64> = ys.iter().map(|&y| observer_gain(y, s, tc.lambda, tc.alpha)).collect();
    // tail[i] = ∫_{y_i}^s p, tail_y[i] = ∫_{y_i}^s y p
    let mut tail = vec![0.0; n];
    let mut tail_y = vec![0.0; n];
    for i in (0..n - 1).rev() {
        tail[i] = tail[i + 1] + 0.5 * dy * (p[i] + p[i + 1]);
        tail_y[i] = tail_y[i + 1] + 0.5 * dy * (ys[i] * p[i] + ys[i + 1] * p[i + 1]);
    }
    let cb = tc.gain / tc.beta;
    (0..n)
        .map(|i| {
            let x = ys[i];
            let inner = (cb * x - tc.epsilon) * tail[i] - cb * tail_y[i];
            p[i] - tc.beta / tc.alpha * inner + tc.beta * tc.phi(x - s)
        })
        .collect()
}

/// f_max = √(max over s ∈ [0, L] of ∫₀^s f²(x, s) dx).
pub fn f_max(phys: &PhysicalParams, tc: &TransformConstants, quad: Quadrature, exec: Execution) -> f64 {
    let ns = quad.s_points.max(2);
    let length = phys.length();
    let energies = exec.map_range(ns, |i| {
        let s = length * i as f64 / (ns - 1) as f64;
        let f = f_profile(s, tc, quad.y_points);
        let sq: Vec<f64> = f.iter().map(|v| v * v).collect();
        numerics::trapezoid(&sq, s)
    });
    energies.into_iter().fold(0.0, f64::max).sqrt()
}

/// Weights of the Lyapunov functional V₁ and of W = V e^{−ξ s}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovConfig {
    pub a_scale: f64,
    /// B = 4L²f_max²/α² + εβ/(2c) + b*
    pub b: f64,
    /// ξ = max{cL/β, (β/(αε))(ε² + c/β)}
    pub xi: f64,
    pub b_star: f64,
}

impl LyapunovConfig {
    pub fn new(phys: &PhysicalParams, ctrl: &ControllerConfig, derived: &TriggerDerived) -> Self {
        let (alpha, beta, length, c, eps) = (phys.alpha(), phys.beta(), phys.length(), ctrl.gain, ctrl.epsilon);
        let b = 4.0 * length * length * derived.f_max * derived.f_max / (alpha * alpha)
            + eps * beta / (2.0 * c)
            + derived.b_star;
        let xi = (c * length / beta).max(beta / (alpha * eps) * (eps * eps + c / beta));
        Self {
            a_scale: derived.a_scale,
            b,
            xi,
            b_star: derived.b_star,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovValues {
    pub v1: f64,
    pub v: f64,
    pub w: f64,
    pub log_w: f64,
    /// ‖w̃‖, the observer-error target norm.
    pub w_tilde_norm: f64,
}

/// V₁ = ½‖ŵ‖² + (εα/2β)X² + ½‖w̃‖² + (B/2)‖w̃_x‖², V = A V₁ + m, W = V e^{−ξ s}.
pub fn lyapunov(
    plant: &PlantState,
    obs: &ObserverState,
    m: f64,
    setpoint: f64,
    tc: &TransformConstants,
    cfg: &LyapunovConfig,
) -> Result<LyapunovValues> {
    let s = plant.s;
    let x_err = s - setpoint;
    let u_tilde = plant.u.sub(&obs.u_hat)?;
    let w_tilde = transform_error_inverse(&u_tilde, s, tc)?;
    let w_hat = transform_controller_direct(&obs.u_hat, x_err, s, tc)?;
    let grad: Vec<f64> = numerics::gradient(w_tilde.values(), w_tilde.h())
        .iter()
        .map(|g| (g / s) * (g / s))
        .collect();
    let w_tilde_norm = w_tilde.l2_norm(s);
    let v1 = 0.5 * w_hat.l2_norm(s).powi(2)
        + tc.epsilon * tc.alpha / (2.0 * tc.beta) * x_err * x_err
        + 0.5 * w_tilde_norm * w_tilde_norm
        + 0.5 * cfg.b * numerics::trapezoid(&grad, s);
    let v = cfg.a_scale * v1 + m;
    let log_w = v.ln() - cfg.xi * s;
    Ok(LyapunovValues {
        v1,
        v,
        w: log_w.exp(),
        log_w,
        w_tilde_norm,
    })
}

/// Least-squares slope of y against t; `None` with fewer than two distinct times.
pub fn fit_slope(t: &[f64], y: &[f64]) -> Option<f64> {
    let n = t.len().min(y.len());
    if n < 2 {
        return None;
    }
    let tm = t[..n].iter().sum::<f64>() / n as f64;
    let ym = y[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for i in 0..n {
        sxy += (t[i] - tm) * (y[i] - ym);
        sxx += (t[i] - tm) * (t[i] - tm);
    }
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Worst-case validity margins over a run; every field is `None` until the first sample.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ValidityReport {
    pub samples: u64,
    /// min T − Tm over the grid and time
    pub min_temperature: Option<f64>,
    /// min T(0, t) − Tm
    pub min_boundary_temperature: Option<f64>,
    pub min_s: Option<f64>,
    /// L − max s
    pub length_margin: Option<f64>,
    pub max_s: Option<f64>,
    pub min_sdot: Option<f64>,
    /// min per-step Δs
    pub min_step_ds: Option<f64>,
    /// min held input q_j
    pub min_input: Option<f64>,
    /// max ũ over the grid (expected ≤ 0)
    pub max_error: Option<f64>,
    /// min ũ_x(s) (expected ≥ 0)
    pub min_error_slope: Option<f64>,
    /// min û over the grid (expected ≥ 0)
    pub min_estimate: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct ValidityMonitor {
    report: ValidityReport,
    length: f64,
}

fn lower(slot: &mut Option<f64>, v: f64) {
    *slot = Some(slot.map_or(v, |old| old.min(v)));
}

fn upper(slot: &mut Option<f64>, v: f64) {
    *slot = Some(slot.map_or(v, |old| old.max(v)));
}

impl ValidityMonitor {
    pub fn new(length: f64) -> Self {
        Self {
            report: ValidityReport::default(),
            length,
        }
    }

    pub fn observe(&mut self, plant: &PlantState, obs: &ObserverState) {
        let r = &mut self.report;
        r.samples += 1;
        lower(&mut r.min_temperature, plant.u.min());
        lower(&mut r.min_boundary_temperature, plant.u.values()[0]);
        lower(&mut r.min_s, plant.s);
        upper(&mut r.max_s, plant.s);
        lower(&mut r.length_margin, self.length - plant.s);
        lower(&mut r.min_sdot, plant.sdot);
        lower(&mut r.min_estimate, obs.u_hat.min());
        if let Ok(err) = plant.u.sub(&obs.u_hat) {
            upper(&mut r.max_error, err.values().iter().copied().fold(f64::NEG_INFINITY, f64::max));
            lower(&mut r.min_error_slope, err.slope_at_end() / plant.s);
        }
    }

    pub fn observe_step(&mut self, ds: f64) {
        lower(&mut self.report.min_step_ds, ds);
    }

    pub fn observe_input(&mut self, q: f64) {
        lower(&mut self.report.min_input, q);
    }

    pub fn report(&self) -> ValidityReport {
        self.report
    }
}
