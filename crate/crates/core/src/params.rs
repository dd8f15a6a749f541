//! Physical, controller and trigger parameters, and the chain of constants derived
//! from them.
//!
//! All quantities use the cm–s–°C–J–kg system. Material data quoted per metre or
//! per gram must be converted before it reaches [`MaterialConstants`].

use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, TransformConstants};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::observer::observer_gain;

/// Raw material constants as supplied by the user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialConstants {
    /// Thermal conductivity [W·cm⁻¹·°C⁻¹].
    pub k: f64,
    /// Density [kg·cm⁻³].
    pub rho: f64,
    /// Heat capacity [J·kg⁻¹·°C⁻¹].
    pub cp: f64,
    /// Latent heat of fusion [J·kg⁻¹].
    pub latent_heat: f64,
    /// Domain length L [cm].
    pub length: f64,
    /// Melting temperature [°C].
    pub melt_temp: f64,
}

impl Default for MaterialConstants {
    fn default() -> Self {
        Self::paraffin()
    }
}

impl MaterialConstants {
    /// Paraffin cylinder of length 3 cm, converted from the usual per-metre and
    /// per-gram tabulation (k = 0.220 W/m/°C, ρ = 790 kg/m³, Cp = 2.38 J/g/°C,
    /// ΔH = 210 J/g, Tm = 37 °C).
    pub fn paraffin() -> Self {
        Self {
            k: 0.220 / 100.0,
            rho: 790.0 / 1.0e6,
            cp: 2.38 * 1000.0,
            latent_heat: 210.0 * 1000.0,
            length: 3.0,
            melt_temp: 37.0,
        }
    }
}

/// Material constants with the two derived diffusivities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalParams {
    raw: MaterialConstants,
    alpha: f64,
    beta: f64,
}

impl PhysicalParams {
    pub fn raw(&self) -> &MaterialConstants {
        &self.raw
    }
    /// Thermal diffusivity α = k/(ρ Cp) [cm²/s].
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    /// Interface coefficient β = k/(ρ ΔH) [cm²/(s·°C)].
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn k(&self) -> f64 {
        self.raw.k
    }
    pub fn length(&self) -> f64 {
        self.raw.length
    }
    pub fn melt_temp(&self) -> f64 {
        self.raw.melt_temp
    }
}

pub fn derive_physical(raw: &MaterialConstants) -> Result<PhysicalParams> {
    let fields = [
        ("k", raw.k),
        ("rho", raw.rho),
        ("cp", raw.cp),
        ("latent_heat", raw.latent_heat),
        ("length", raw.length),
        ("melt_temp", raw.melt_temp),
    ];
    for (name, v) in fields {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::config(format!("physical.{name}"), format!("must be positive, got {v}")));
        }
    }
    Ok(PhysicalParams {
        raw: *raw,
        alpha: raw.k / (raw.rho * raw.cp),
        beta: raw.k / (raw.rho * raw.latent_heat),
    })
}

/// Feedback and observer design parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    /// Control gain c [1/s].
    pub gain: f64,
    /// Observer gain parameter λ [1/s].
    pub observer_gain: f64,
    /// Transform parameter ε [°C/cm]; only the analysis objects depend on it.
    pub epsilon: f64,
    /// Interface setpoint s_r [cm].
    pub setpoint: f64,
}

impl Default for ControllerConfig {
    /// c = 3e-4 1/s, λ = 0.1 1/s, ε = 0.1 °C/cm (10 °C/m), s_r = 2 cm.
    fn default() -> Self {
        Self {
            gain: 3.0e-4,
            observer_gain: 0.1,
            epsilon: 0.1,
            setpoint: 2.0,
        }
    }
}

impl ControllerConfig {
    pub fn check(&self, phys: &PhysicalParams) -> Result<()> {
        if !(self.gain.is_finite() && self.gain > 0.0) {
            return Err(Error::config("controller.gain", "must be positive"));
        }
        if !(self.observer_gain.is_finite() && self.observer_gain > 0.0) {
            return Err(Error::config("controller.observer_gain", "must be positive"));
        }
        let cap = 2.0 * (phys.alpha() * self.gain).sqrt() / phys.beta();
        if !(self.epsilon > 0.0 && self.epsilon < cap) {
            return Err(Error::config(
                "controller.epsilon",
                format!("must lie in (0, 2√(αc)/β) = (0, {cap:.6e}), got {}", self.epsilon),
            ));
        }
        if !(self.setpoint.is_finite() && self.setpoint > 0.0) {
            return Err(Error::config("controller.setpoint", "must be positive"));
        }
        Ok(())
    }
}

/// Initial temperature shape as a function of ξ = x/s0, giving T − Tm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialProfile {
    /// amplitude · (1 − ξ)
    Linear { amplitude: f64 },
    /// Σ coefficients[k] ξ^k
    Polynomial { coefficients: Vec<f64> },
    /// Samples on a uniform grid over [0, s0], linearly interpolated.
    Samples { values: Vec<f64> },
}

impl InitialProfile {
    pub fn eval(&self, xi: f64) -> f64 {
        let xi = xi.clamp(0.0, 1.0);
        match self {
            InitialProfile::Linear { amplitude } => amplitude * (1.0 - xi),
            InitialProfile::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * xi + c)
            }
            InitialProfile::Samples { values } => {
                let n = values.len();
                if n == 0 {
                    return 0.0;
                }
                if n == 1 {
                    return values[0];
                }
                let pos = xi * (n - 1) as f64;
                let i = (pos.floor() as usize).min(n - 2);
                let frac = pos - i as f64;
                values[i] * (1.0 - frac) + values[i + 1] * frac
            }
        }
    }

    fn check(&self, field: &str) -> Result<()> {
        let ok = match self {
            InitialProfile::Linear { amplitude } => amplitude.is_finite(),
            InitialProfile::Polynomial { coefficients } => {
                !coefficients.is_empty() && coefficients.iter().all(|c| c.is_finite())
            }
            InitialProfile::Samples { values } => values.len() >= 2 && values.iter().all(|c| c.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(field, "profile needs finite coefficients (at least two samples)"))
        }
    }
}

/// Initial interface, plant and observer profiles, and the optional sandwich slopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialData {
    /// Initial interface position s0 [cm].
    pub s0: f64,
    /// Plant initial temperature T0 − Tm.
    pub temperature: InitialProfile,
    /// Observer initial temperature T̂0 − Tm.
    pub estimate: InitialProfile,
    /// Lipschitz slope H; estimated from samples when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    /// Lower observer slope Ĥℓ; estimated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate_lower: Option<f64>,
    /// Upper observer slope Ĥu; estimated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate_upper: Option<f64>,
}

/// Slope bounds H, Ĥℓ, Ĥu of the initial-data sandwich conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichBounds {
    pub lipschitz: f64,
    pub lower: f64,
    pub upper: f64,
}

const VALIDATION_SAMPLES: usize = 1001;

impl Default for InitialData {
    /// s0 = 0.1 cm, T0 − Tm = 1 − x/s0, T̂0 − Tm = 10 (1 − x/s0).
    fn default() -> Self {
        Self {
            s0: 0.1,
            temperature: InitialProfile::Linear { amplitude: 1.0 },
            estimate: InitialProfile::Linear { amplitude: 10.0 },
            lipschitz: None,
            estimate_lower: None,
            estimate_upper: None,
        }
    }
}

impl InitialData {
    pub fn check(&self, phys: &PhysicalParams) -> Result<()> {
        if !(self.s0 > 0.0 && self.s0 < phys.length()) {
            return Err(Error::config(
                "initial.s0",
                format!("must lie in (0, L = {}), got {}", phys.length(), self.s0),
            ));
        }
        self.temperature.check("initial.temperature")?;
        self.estimate.check("initial.estimate")
    }

    /// Ratios u(ξ)/(s0 (1 − ξ)) over the validation samples, excluding ξ = 1.
    fn slope_ratios<'a>(&'a self, profile: &'a InitialProfile) -> impl Iterator<Item = f64> + 'a {
        let n = VALIDATION_SAMPLES;
        (0..n - 1).map(move |i| {
            let xi = i as f64 / (n - 1) as f64;
            profile.eval(xi) / (self.s0 * (1.0 - xi))
        })
    }

    pub fn bounds(&self) -> SandwichBounds {
        let lipschitz = self
            .lipschitz
            .unwrap_or_else(|| self.slope_ratios(&self.temperature).fold(f64::NEG_INFINITY, f64::max));
        let lower = self
            .estimate_lower
            .unwrap_or_else(|| self.slope_ratios(&self.estimate).fold(f64::INFINITY, f64::min));
        let upper = self
            .estimate_upper
            .unwrap_or_else(|| self.slope_ratios(&self.estimate).fold(f64::NEG_INFINITY, f64::max));
        SandwichBounds { lipschitz, lower, upper }
    }
}

/// Dynamic-trigger design parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TriggerConfig {
    /// Decay rate η [1/s].
    pub eta: f64,
    /// Threshold scale γ.
    pub gamma: f64,
    /// Dwell-time parameter δ ∈ (0, 1/(1+c)).
    pub delta: f64,
    /// Initial dynamic variable m(0).
    pub m0: f64,
    /// Lyapunov scale A; must exceed the computed minimum.
    pub a_scale: f64,
    /// Gradient-weight margin b*; defaults to 2 μ₃/(A α).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_star: Option<f64>,
}

impl Default for TriggerConfig {
    /// η = 1.325e-2 1/s, γ = 1e3, δ = 0.5, m(0) = 1e-8, A = 4.42e-3 (cm units).
    fn default() -> Self {
        Self {
            eta: 1.325e-2,
            gamma: 1.0e3,
            delta: 0.5,
            m0: 1.0e-8,
            a_scale: 4.42e-3,
            b_star: None,
        }
    }
}

impl TriggerConfig {
    pub fn check(&self, gain: f64) -> Result<()> {
        for (name, v) in [("eta", self.eta), ("gamma", self.gamma), ("m0", self.m0), ("a_scale", self.a_scale)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("trigger.{name}"), format!("must be positive, got {v}")));
            }
        }
        let cap = 1.0 / (1.0 + gain);
        if !(self.delta > 0.0 && self.delta < cap) {
            return Err(Error::config(
                "trigger.delta",
                format!("must lie in (0, 1/(1+c)) = (0, {cap}), got {}", self.delta),
            ));
        }
        if let Some(b) = self.b_star {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::config("trigger.b_star", "must be positive"));
            }
        }
        Ok(())
    }
}

/// Grid sizes for the nested kernel quadratures (Υ and f_max).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Quadrature {
    pub s_points: usize,
    pub y_points: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            s_points: 256,
            y_points: 512,
        }
    }
}

impl Quadrature {
    pub fn refined(self) -> Self {
        Self {
            s_points: 2 * self.s_points,
            y_points: 2 * self.y_points,
        }
    }
}

/// Υ = max over s ∈ [0, L] of |1 − (1/α) ∫₀^s p(y, s) dy|, by trapezoid quadrature.
///
/// The integrand grows with s, and refining either grid only moves the value
/// towards the exact maximum at s = L.
pub fn compute_upsilon(alpha: f64, lambda: f64, length: f64, quad: Quadrature, exec: Execution) -> f64 {
    let ns = quad.s_points.max(2);
    let ny = quad.y_points.max(2);
    let values = exec.map_range(ns, |i| {
        let s = length * i as f64 / (ns - 1) as f64;
        let integral = crate::numerics::trapezoid_fn(|y| observer_gain(y, s, lambda, alpha), 0.0, s, ny - 1);
        (1.0 - integral / alpha).abs()
    });
    values.into_iter().fold(1.0, f64::max)
}

/// θ₀..θ₃ bounding the growth of d²: θ₀ = 4c², θ₁ = 4c⁴L/α², θ₂ = 4c⁴/β², θ₃ = 4c²Υ².
pub fn compute_thetas(c: f64, length: f64, alpha: f64, beta: f64, upsilon: f64) -> [f64; 4] {
    let c2 = c * c;
    let c4 = c2 * c2;
    [
        4.0 * c2,
        4.0 * c4 * length / (alpha * alpha),
        4.0 * c4 / (beta * beta),
        4.0 * c2 * upsilon * upsilon,
    ]
}

/// μᵢ = θᵢ / (γ (1 − δ)) for i = 1, 2, 3.
pub fn compute_mus(thetas: &[f64; 4], gamma: f64, delta: f64) -> Result<[f64; 3]> {
    if !(gamma > 0.0) {
        return Err(Error::config("trigger.gamma", "must be positive"));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::config("trigger.delta", format!("must lie in [0, 1), got {delta}")));
    }
    let scale = gamma * (1.0 - delta);
    Ok([thetas[1] / scale, thetas[2] / scale, thetas[3] / scale])
}

/// Lower bound on the Lyapunov scale A (the larger of the two bracketed terms).
#[allow(clippy::too_many_arguments)]
pub fn min_a(mu1: f64, mu2: f64, length: f64, alpha: f64, beta: f64, epsilon: f64, c: f64, zeta: f64) -> f64 {
    let zz = zeta * zeta + epsilon * epsilon;
    let first = 96.0 * mu1 * length * length / alpha * (1.0 + beta * beta * zz * length * length / (alpha * alpha));
    let second = 4.0 * beta * (3.0 * mu1 * zz * length + mu2) / (epsilon * alpha * c);
    first.max(second)
}

/// σ = 4 A α L.
pub fn compute_sigma(a: f64, alpha: f64, length: f64) -> f64 {
    4.0 * a * alpha * length
}

/// R = 2√(αc)/β, the bound on |ψ(−x)|.
pub fn r_bound(alpha: f64, beta: f64, c: f64) -> f64 {
    2.0 * (alpha * c).sqrt() / beta
}

fn h_coefficients(alpha: f64, beta: f64, c: f64, length: f64) -> (f64, f64, f64) {
    let r = r_bound(alpha, beta, c);
    let r2 = r * r;
    let c0 = alpha * c / (4.0 * beta);
    let c1 = 4.0 * beta * beta * r2 * length / alpha + 7.0 * alpha / (16.0 * length);
    let c2 = 4.0 * beta + beta.powi(3) * r2 * length * length / (2.0 * alpha * alpha);
    (c0, c1, c2)
}

/// The downward-opening quadratic h(ε) whose positive root caps ε.
pub fn h_quadratic(epsilon: f64, alpha: f64, beta: f64, c: f64, length: f64) -> f64 {
    let (c0, c1, c2) = h_coefficients(alpha, beta, c, length);
    c0 - c1 * epsilon - c2 * epsilon * epsilon
}

/// Positive root ε* of h.
pub fn epsilon_star(alpha: f64, beta: f64, c: f64, length: f64) -> f64 {
    let (c0, c1, c2) = h_coefficients(alpha, beta, c, length);
    // 2c0 / (c1 + √(c1² + 4 c2 c0)) avoids cancellation in the textbook form
    2.0 * c0 / (c1 + (c1 * c1 + 4.0 * c2 * c0).sqrt())
}

/// The three candidate upper bounds on ε and their minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonBounds {
    /// √(αc)/β
    pub diffusive: f64,
    /// α / (8 β L (8 + β²R²L²/α²))
    pub structural: f64,
    /// positive root of h
    pub root: f64,
    pub r: f64,
    pub min: f64,
}

pub fn epsilon_bounds(alpha: f64, beta: f64, c: f64, length: f64) -> EpsilonBounds {
    let r = r_bound(alpha, beta, c);
    let diffusive = (alpha * c).sqrt() / beta;
    let structural =
        alpha / 8.0 / (beta * length * (8.0 + beta * beta * r * r * length * length / (alpha * alpha)));
    let root = epsilon_star(alpha, beta, c, length);
    EpsilonBounds {
        diffusive,
        structural,
        root,
        r,
        min: diffusive.min(structural).min(root),
    }
}

/// Coefficients of the Φ comparison ODE and the resulting minimal dwell time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DwellTime {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub tau: f64,
    pub max_dwell: f64,
}

/// ∫₀¹ ds / (a1 s² + a2 s + a3) in closed form, for a1, a2 ≥ 0 and a3 > 0.
///
/// With D = a2² − 4 a1 a3 and S = a2 + 2 a3:
/// two real roots give (2/√D) atanh(√D/S), a double root gives 2/S, and complex
/// roots give (2/√−D) atan(√−D/S).
pub fn dwell_integral(a1: f64, a2: f64, a3: f64) -> f64 {
    let disc = a2 * a2 - 4.0 * a1 * a3;
    let span = a2 + 2.0 * a3;
    let root = disc.abs().sqrt();
    let x = root / span;
    if x < 1e-5 {
        // atanh(x)/x and atan(x)/x share the series 1 ± x²/3 + x⁴/5
        let x2 = if disc >= 0.0 { x * x } else { -x * x };
        return 2.0 / span * (1.0 + x2 / 3.0 + x2 * x2 / 5.0);
    }
    if disc > 0.0 {
        2.0 / root * x.atanh()
    } else {
        2.0 / root * x.atan()
    }
}

pub fn min_dwell_time(theta0: f64, gamma: f64, sigma: f64, eta: f64, delta: f64, c: f64) -> Result<DwellTime> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::config("trigger.delta", format!("must lie in (0, 1), got {delta}")));
    }
    let a1 = gamma * delta * sigma;
    let a2 = 1.0 + theta0 + 2.0 * gamma * (1.0 - delta) * sigma + eta;
    let a3 = (1.0 + theta0 + gamma * (1.0 - delta) * sigma + eta) * (1.0 - delta) / delta;
    let tau = dwell_integral(a1, a2, a3);
    let max_dwell = 1.0 / c;
    if tau >= max_dwell {
        return Err(Error::Consistency(format!(
            "minimal dwell time τ = {tau} s is not below the maximal dwell 1/c = {max_dwell} s; \
             δ = {delta} must satisfy δ < 1/(1+c)"
        )));
    }
    Ok(DwellTime {
        a1,
        a2,
        a3,
        tau,
        max_dwell,
    })
}

/// Every constant the trigger and the Lyapunov monitor need.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriggerDerived {
    pub thetas: [f64; 4],
    pub upsilon: f64,
    /// Relative change of Υ when both quadrature grids are doubled.
    pub upsilon_refinement: f64,
    pub mus: [f64; 3],
    pub a_scale: f64,
    pub a_min: f64,
    pub sigma: f64,
    pub dwell: DwellTime,
    pub epsilon_bounds: EpsilonBounds,
    pub f_max: f64,
    pub f_max_refinement: f64,
    pub b_star: f64,
    pub transform: TransformConstants,
    pub warnings: Vec<String>,
}

const REFINEMENT_TOL: f64 = 1e-6;

/// Runs the whole derivation chain: Υ → θ → μ → A_min → σ → (a₁, a₂, a₃, τ), plus ε bounds and f_max.
pub fn derive_trigger(
    phys: &PhysicalParams,
    ctrl: &ControllerConfig,
    trig: &TriggerConfig,
    quad: Quadrature,
    exec: Execution,
) -> Result<TriggerDerived> {
    ctrl.check(phys)?;
    trig.check(ctrl.gain)?;
    let (alpha, beta, length, c) = (phys.alpha(), phys.beta(), phys.length(), ctrl.gain);
    let mut warnings = Vec::new();

    let upsilon = compute_upsilon(alpha, ctrl.observer_gain, length, quad, exec);
    let upsilon_fine = compute_upsilon(alpha, ctrl.observer_gain, length, quad.refined(), exec);
    let upsilon_refinement = ((upsilon_fine - upsilon) / upsilon_fine).abs();
    if upsilon_refinement >= REFINEMENT_TOL {
        warnings.push(format!(
            "Υ moved by {upsilon_refinement:.2e} (relative) under grid doubling; increase quadrature resolution"
        ));
    }

    let thetas = compute_thetas(c, length, alpha, beta, upsilon);
    let mus = compute_mus(&thetas, trig.gamma, trig.delta)?;
    let transform = TransformConstants::new(phys, ctrl)?;
    let a_min = min_a(mus[0], mus[1], length, alpha, beta, ctrl.epsilon, c, transform.zeta);
    if trig.a_scale <= a_min {
        warnings.push(format!(
            "A = {:.6e} does not exceed the computed minimum {a_min:.6e}",
            trig.a_scale
        ));
    }
    let sigma = compute_sigma(trig.a_scale, alpha, length);
    let dwell = min_dwell_time(thetas[0], trig.gamma, sigma, trig.eta, trig.delta, c)?;

    let eps = epsilon_bounds(alpha, beta, c, length);
    for (name, bound) in [
        ("√(αc)/β", eps.diffusive),
        ("α/(8βL(8+β²R²L²/α²))", eps.structural),
        ("ε* (root of h)", eps.root),
    ] {
        if ctrl.epsilon >= bound {
            warnings.push(format!("ε = {:.6e} violates the bound {name} = {bound:.6e}", ctrl.epsilon));
        }
    }

    let f_max = diagnostics::f_max(phys, &transform, quad, exec);
    let f_fine = diagnostics::f_max(phys, &transform, quad.refined(), exec);
    let f_max_refinement = if f_fine > 0.0 { ((f_fine - f_max) / f_fine).abs() } else { 0.0 };
    if f_max_refinement >= REFINEMENT_TOL {
        warnings.push(format!(
            "f_max moved by {f_max_refinement:.2e} (relative) under grid doubling"
        ));
    }

    let b_floor = mus[2] / (trig.a_scale * alpha);
    let b_star = trig.b_star.unwrap_or(2.0 * b_floor);
    if b_star <= b_floor {
        warnings.push(format!("b* = {b_star:.6e} does not exceed μ₃/(Aα) = {b_floor:.6e}"));
    }

    Ok(TriggerDerived {
        thetas,
        upsilon,
        upsilon_refinement,
        mus,
        a_scale: trig.a_scale,
        a_min,
        sigma,
        dwell,
        epsilon_bounds: eps,
        f_max,
        f_max_refinement,
        b_star,
        transform,
        warnings,
    })
}

/// One initial-data condition with its worst-case margin (positive means satisfied).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub description: &'static str,
    pub passed: bool,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub bounds: SandwichBounds,
    pub checks: Vec<ConditionCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&ConditionCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "slope bounds: H = {:.6e}, Ĥℓ = {:.6e}, Ĥu = {:.6e}\n",
            self.bounds.lipschitz, self.bounds.lower, self.bounds.upper
        ));
        for c in &self.checks {
            out.push_str(&format!(
                "[{}] {:<22} margin {:>+.6e}  {}\n",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.margin,
                c.description
            ));
        }
        out.push_str(if self.passed() { "overall: pass\n" } else { "overall: FAIL\n" });
        out
    }
}

const SAMPLE_TOL: f64 = 1e-12;

/// Checks the initial data against the well-posedness and positivity conditions.
pub fn validate_initial_data(
    init: &InitialData,
    ctrl: &ControllerConfig,
    phys: &PhysicalParams,
) -> ValidationReport {
    let bounds = init.bounds();
    let (alpha, beta, length) = (phys.alpha(), phys.beta(), phys.length());
    let s0 = init.s0;
    let n = VALIDATION_SAMPLES;
    let xis: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let t0: Vec<f64> = xis.iter().map(|&x| init.temperature.eval(x)).collect();
    let t0_hat: Vec<f64> = xis.iter().map(|&x| init.estimate.eval(x)).collect();
    let dist: Vec<f64> = xis.iter().map(|&x| s0 * (1.0 - x)).collect();
    let scale = t0.iter().chain(&t0_hat).fold(1.0_f64, |a, v| a.max(v.abs()));
    let tol = SAMPLE_TOL * scale;
    let min_over = |f: &dyn Fn(usize) -> f64| (0..n).map(f).fold(f64::INFINITY, f64::min);

    let mut checks = Vec::new();

    let interface = (s0).min(length - s0);
    checks.push(ConditionCheck {
        name: "interface_in_domain",
        description: "0 < s0 < L",
        passed: interface > 0.0,
        margin: interface,
    });

    let above = min_over(&|i| t0[i]);
    checks.push(ConditionCheck {
        name: "above_melting",
        description: "T0(x) ≥ Tm on [0, s0]",
        passed: above >= -tol,
        margin: above,
    });

    let boundary = -t0[n - 1].abs().max(t0_hat[n - 1].abs());
    checks.push(ConditionCheck {
        name: "interface_at_melting",
        description: "T0(s0) = T̂0(s0) = Tm",
        passed: boundary >= -tol,
        margin: boundary,
    });

    let dx = s0 / (n - 1) as f64;
    let max_slope = (1..n).map(|i| ((t0[i] - t0[i - 1]) / dx).abs()).fold(0.0, f64::max);
    checks.push(ConditionCheck {
        name: "differentiable",
        description: "T0 has bounded finite-difference slopes",
        passed: max_slope.is_finite(),
        margin: if max_slope.is_finite() { 1.0 / (1.0 + max_slope) } else { -1.0 },
    });

    let lip = min_over(&|i| (bounds.lipschitz * dist[i] - t0[i]).min(t0[i]));
    checks.push(ConditionCheck {
        name: "lipschitz",
        description: "0 ≤ T0(x) − Tm ≤ H (s0 − x)",
        passed: lip >= -tol,
        margin: lip,
    });

    let sandwich_samples =
        min_over(&|i| (t0_hat[i] - bounds.lower * dist[i]).min(bounds.upper * dist[i] - t0_hat[i]));
    let ordering = (bounds.lower - bounds.lipschitz).min(bounds.upper - bounds.lower);
    let strict = bounds.lower - bounds.lipschitz > SAMPLE_TOL * bounds.lipschitz.abs().max(1.0);
    checks.push(ConditionCheck {
        name: "observer_sandwich",
        description: "Tm + Ĥℓ(s0−x) ≤ T̂0 ≤ Tm + Ĥu(s0−x), Ĥu ≥ Ĥℓ > H",
        passed: sandwich_samples >= -tol && strict && bounds.upper >= bounds.lower,
        margin: sandwich_samples.min(ordering),
    });

    let lambda_cap = 4.0 * alpha / (s0 * s0) * (bounds.lower - bounds.lipschitz) / bounds.upper;
    let lambda_margin = lambda_cap - ctrl.observer_gain;
    checks.push(ConditionCheck {
        name: "observer_gain_bound",
        description: "λ < 4α/s0² · (Ĥℓ − H)/Ĥu",
        passed: lambda_margin > 0.0,
        margin: lambda_margin,
    });

    let lower_setpoint = s0 + beta * s0 * s0 / (2.0 * alpha) * bounds.upper;
    let window = (length - ctrl.setpoint).min(ctrl.setpoint - lower_setpoint);
    checks.push(ConditionCheck {
        name: "setpoint_window",
        description: "L > s_r > s0 + β s0² Ĥu / (2α)",
        passed: window > 0.0,
        margin: window,
    });

    ValidationReport { bounds, checks }
}

/// Factors converting the cm-based trigger constants to metre-based values.
pub mod si {
    pub const MU1: f64 = 1.0e6;
    pub const MU2: f64 = 1.0e8;
    pub const MU3: f64 = 1.0;
    pub const SIGMA: f64 = 1.0;
    pub const A: f64 = 1.0e6;
    pub const EPSILON: f64 = 1.0e2;
    pub const M: f64 = 1.0e4;
}

/// Human-readable listing of every derived constant with its formula.
pub fn derivation_report(
    phys: &PhysicalParams,
    ctrl: &ControllerConfig,
    trig: &TriggerConfig,
    derived: &TriggerDerived,
) -> String {
    let mut out = String::new();
    let mut line = |name: &str, value: f64, si: Option<f64>, formula: &str| {
        let si = si.map(|v| format!("{v:.6e}")).unwrap_or_default();
        out.push_str(&format!("{name:<10} {value:>14.6e}  {si:>13}  {formula}\n"));
    };
    let raw = phys.raw();
    line("k", raw.k, None, "W/(cm·°C)");
    line("rho", raw.rho, None, "kg/cm³");
    line("cp", raw.cp, None, "J/(kg·°C)");
    line("dH", raw.latent_heat, None, "J/kg");
    line("L", raw.length, None, "cm");
    line("Tm", raw.melt_temp, None, "°C");
    line("alpha", phys.alpha(), None, "α = k/(ρ Cp) [cm²/s]");
    line("beta", phys.beta(), None, "β = k/(ρ ΔH) [cm²/(s·°C)]");
    line("c", ctrl.gain, None, "control gain [1/s]");
    line("lambda", ctrl.observer_gain, None, "observer gain [1/s]");
    line("epsilon", ctrl.epsilon, Some(ctrl.epsilon * si::EPSILON), "transform parameter ε [°C/cm]");
    line("s_r", ctrl.setpoint, None, "setpoint [cm]");
    line("eta", trig.eta, None, "η [1/s]");
    line("gamma", trig.gamma, None, "γ");
    line("delta", trig.delta, None, "δ, must be < 1/(1+c)");
    line("m0", trig.m0, Some(trig.m0 * si::M), "m(0)");
    let t = &derived.thetas;
    line("Upsilon", derived.upsilon, None, "max_s |1 − (1/α)∫₀^s p(y,s) dy|");
    line("theta0", t[0], None, "4c²");
    line("theta1", t[1], None, "4c⁴L/α²");
    line("theta2", t[2], None, "4c⁴/β²");
    line("theta3", t[3], None, "4c²Υ²");
    line("mu1", derived.mus[0], Some(derived.mus[0] * si::MU1), "θ₁/(γ(1−δ))");
    line("mu2", derived.mus[1], Some(derived.mus[1] * si::MU2), "θ₂/(γ(1−δ))");
    line("mu3", derived.mus[2], Some(derived.mus[2] * si::MU3), "θ₃/(γ(1−δ))");
    let tc = &derived.transform;
    line("nu", tc.nu, None, "βε/(2α)");
    line("omega", tc.omega, None, "√((4αc − (εβ)²)/(4α²))");
    line("zeta", tc.zeta, None, "−(2αc − (εβ)²)/(2αβω)");
    line("A_min", derived.a_min, Some(derived.a_min * si::A), "max of the two lower bounds on A");
    line("A", derived.a_scale, Some(derived.a_scale * si::A), "Lyapunov scale");
    line("sigma", derived.sigma, Some(derived.sigma * si::SIGMA), "4AαL");
    line("a1", derived.dwell.a1, None, "γδσ");
    line("a2", derived.dwell.a2, None, "1 + θ₀ + 2γ(1−δ)σ + η");
    line("a3", derived.dwell.a3, None, "(1 + θ₀ + γ(1−δ)σ + η)(1−δ)/δ");
    line("tau", derived.dwell.tau, None, "∫₀¹ ds/(a₁s² + a₂s + a₃) [s]");
    line("max_dwell", derived.dwell.max_dwell, None, "1/c [s]");
    let eb = &derived.epsilon_bounds;
    line("R", eb.r, Some(eb.r * si::EPSILON), "2√(αc)/β");
    line("eps_b1", eb.diffusive, Some(eb.diffusive * si::EPSILON), "√(αc)/β");
    line("eps_b2", eb.structural, Some(eb.structural * si::EPSILON), "α/(8βL(8 + β²R²L²/α²))");
    line("eps_star", eb.root, Some(eb.root * si::EPSILON), "positive root of h(ε)");
    line("f_max", derived.f_max, None, "√(max_s ∫₀^s f²(x,s) dx)");
    line("b_star", derived.b_star, None, "default 2μ₃/(Aα)");
    out.push_str(&format!(
        "\nquadrature refinement: Υ {:.2e}, f_max {:.2e} (relative change under grid doubling)\n",
        derived.upsilon_refinement, derived.f_max_refinement
    ));
    if derived.warnings.is_empty() {
        out.push_str("warnings: none\n");
    } else {
        out.push_str("warnings:\n");
        for w in &derived.warnings {
            out.push_str(&format!("  - {w}\n"));
        }
    }
    out
}
