//! Special functions and low-level kernels shared by the solver and the diagnostics.
//!
//! Everything here is a pure function. Profiles live on the uniform immobilized
//! grid ξ ∈ [0, 1]; physical integrals over [0, s] are `s · ∫₀¹ · dξ`.

use crate::error::{Error, Result};

/// Largest argument accepted by the Bessel routines before `e^z` overflows.
pub const BESSEL_MAX_ARG: f64 = 700.0;

const SERIES_TOL: f64 = 1e-16;
const SERIES_MAX_TERMS: usize = 60;
const I1_SERIES_LIMIT: f64 = 30.0;
const J1_SERIES_LIMIT: f64 = 12.0;

/// Samples of a scalar field on the uniform grid ξ_i = i/(n-1).
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    values: Vec<f64>,
}

impl Profile {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::Dimension(format!(
                "profile needs at least 3 nodes, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Dimension(format!("non-finite profile value at node {i}")));
        }
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n])
    }

    /// Samples `f(ξ)` at every grid node.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::Dimension(format!("profile needs at least 3 nodes, got {n}")));
        }
        let h = 1.0 / (n - 1) as f64;
        Self::new((0..n).map(|i| f(i as f64 * h)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Grid spacing 1/(n-1).
    pub fn h(&self) -> f64 {
        1.0 / (self.values.len() - 1) as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn xi(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    /// Integral over the physical interval [0, length].
    pub fn integral(&self, length: f64) -> f64 {
        trapezoid(&self.values, length)
    }

    /// Physical L2 norm over [0, length].
    pub fn l2_norm(&self, length: f64) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        trapezoid(&sq, length).max(0.0).sqrt()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// One-sided second-order slope ∂ξ at ξ = 1.
    pub fn slope_at_end(&self) -> f64 {
        slope_at_end(&self.values, self.h())
    }

    pub fn sub(&self, other: &Profile) -> Result<Profile> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "profile lengths differ: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(Profile {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }
}

/// Modified Bessel function of the first kind, order one.
pub fn bessel_i1(z: f64) -> Result<f64> {
    if !(0.0..=BESSEL_MAX_ARG).contains(&z) {
        return Err(Error::Domain {
            function: "bessel_i1",
            value: z,
        });
    }
    if z <= I1_SERIES_LIMIT {
        Ok(0.5 * z * i1_ratio_series(z * z))
    } else {
        Ok(i1_large(z))
    }
}

/// Bessel function of the first kind, order one.
pub fn bessel_j1(z: f64) -> Result<f64> {
    if !(0.0..=BESSEL_MAX_ARG).contains(&z) {
        return Err(Error::Domain {
            function: "bessel_j1",
            value: z,
        });
    }
    if z <= J1_SERIES_LIMIT {
        Ok(0.5 * z * j1_ratio_series(z * z))
    } else {
        Ok(j1_bessel_integral(z))
    }
}

/// `I₁(√w)/√w`, with the removable singularity at w = 0 (value 1/2).
pub fn ratio_i1_sqrt(w: f64) -> f64 {
    let w = w.max(0.0);
    if w <= I1_SERIES_LIMIT * I1_SERIES_LIMIT {
        0.5 * i1_ratio_series(w)
    } else {
        let z = w.sqrt().min(BESSEL_MAX_ARG);
        i1_large(z) / z
    }
}

/// `J₁(√w)/√w`, with value 1/2 at w = 0.
pub fn ratio_j1_sqrt(w: f64) -> f64 {
    let w = w.max(0.0);
    if w <= J1_SERIES_LIMIT * J1_SERIES_LIMIT {
        0.5 * j1_ratio_series(w)
    } else {
        let z = w.sqrt().min(BESSEL_MAX_ARG);
        j1_bessel_integral(z) / z
    }
}

// Σ (w/4)^k / (k! (k+1)!)  ==  2 I₁(√w)/√w
fn i1_ratio_series(w: f64) -> f64 {
    let x = 0.25 * w;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..SERIES_MAX_TERMS {
        term *= x / (k as f64 * (k + 1) as f64);
        sum += term;
        if term < SERIES_TOL * sum {
            break;
        }
    }
    sum
}

fn j1_ratio_series(w: f64) -> f64 {
    let x = -0.25 * w;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..SERIES_MAX_TERMS {
        term *= x / (k as f64 * (k + 1) as f64);
        sum += term;
        if term.abs() < SERIES_TOL * sum.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    sum
}

// Hankel expansion e^z/√(2πz) Σ (-1)^k a_k(1) / z^k, stopped at the smallest term.
fn i1_large(z: f64) -> f64 {
    let mut term = 1.0_f64;
    let mut sum = 1.0;
    for k in 1..40 {
        let odd = (2 * k - 1) as f64;
        let next = -term * (4.0 - odd * odd) / (8.0 * k as f64 * z);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < SERIES_TOL * sum.abs() {
            break;
        }
    }
    z.exp() / (2.0 * std::f64::consts::PI * z).sqrt() * sum
}

// J₁(z) = (1/π) ∫₀^π cos(θ − z sin θ) dθ. The integrand is a smooth even periodic
// function, so the trapezoid rule converges geometrically once the panel count
// exceeds z by a margin.
fn j1_bessel_integral(z: f64) -> f64 {
    let panels = (1.2 * z).ceil() as usize + 40;
    let dt = std::f64::consts::PI / panels as f64;
    let f = |theta: f64| (theta - z * theta.sin()).cos();
    let mut sum = 0.5 * (f(0.0) + f(std::f64::consts::PI));
    for i in 1..panels {
        sum += f(i as f64 * dt);
    }
    sum * dt / std::f64::consts::PI
}

/// Composite trapezoid of uniformly spaced samples on [0, 1], scaled to a physical length.
pub fn trapezoid(values: &[f64], length: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let h = 1.0 / (n - 1) as f64;
    let inner: f64 = values[1..n - 1].iter().sum();
    length * h * (inner + 0.5 * (values[0] + values[n - 1]))
}

/// Trapezoid of `f` on [a, b] with `panels` panels.
pub fn trapezoid_fn(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut sum = 0.5 * (f(a) + f(b));
    for i in 1..panels {
        sum += f(a + i as f64 * h);
    }
    sum * h
}

/// Composite Simpson rule on [a, b]; `panels` is rounded up to even.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let panels = (panels.max(2) + 1) & !1;
    let h = (b - a) / panels as f64;
    let mut sum = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// One-sided second-order derivative at the last node: (3u_N − 4u_{N−1} + u_{N−2}) / 2h.
pub fn slope_at_end(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h)
}

/// Centred derivative in the interior, second-order one-sided at both ends.
pub fn gradient(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
    for i in 1..n - 1 {
        out[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    out[n - 1] = slope_at_end(values, h);
    out
}

/// Thomas algorithm for a tridiagonal system.
///
/// `lower[i]` multiplies `x[i]` in row `i + 1`; `upper[i]` multiplies `x[i + 1]` in row `i`.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 || lower.len() + 1 != n || upper.len() + 1 != n || rhs.len() != n {
        return Err(Error::Dimension(format!(
            "tridiagonal sizes: lower {}, diag {}, upper {}, rhs {}",
            lower.len(),
            n,
            upper.len(),
            rhs.len()
        )));
    }
    debug_assert!(
        (0..n).all(|i| {
            let off = if i > 0 { lower[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { upper[i].abs() } else { 0.0 };
            diag[i].abs() >= off * (1.0 - 1e-12)
        }),
        "tridiagonal system is not diagonally dominant"
    );

    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let pivot_tol = f64::EPSILON * diag.iter().fold(0.0_f64, |a, v| a.max(v.abs()));

    let mut pivot = diag[0];
    if pivot.abs() <= pivot_tol {
        return Err(Error::SingularSystem { row: 0 });
    }
    if n > 1 {
        c[0] = upper[0] / pivot;
    }
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i - 1] * c[i - 1];
        if pivot.abs() <= pivot_tol {
            return Err(Error::SingularSystem { row: i });
        }
        if i + 1 < n {
            c[i] = upper[i] / pivot;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Independent oracle: plain power series, summed to a fixed number of terms.
    fn i1_oracle(z: f64, terms: usize) -> f64 {
        let mut sum = 0.0;
        let mut fact_k = 1.0;
        for k in 0..terms {
            if k > 0 {
                fact_k *= k as f64;
            }
            let fact_k1 = fact_k * (k + 1) as f64;
            sum += (z / 2.0).powi(2 * k as i32 + 1) / (fact_k * fact_k1);
        }
        sum
    }

    fn j1_oracle(z: f64, terms: usize) -> f64 {
        let mut sum = 0.0;
        let mut fact_k = 1.0;
        for k in 0..terms {
            if k > 0 {
                fact_k *= k as f64;
            }
            let fact_k1 = fact_k * (k + 1) as f64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * (z / 2.0).powi(2 * k as i32 + 1) / (fact_k * fact_k1);
        }
        sum
    }

    #[test]
    fn i1_at_zero_and_small_argument() {
        assert_eq!(bessel_i1(0.0).unwrap(), 0.0);
        assert!((bessel_i1(1e-8).unwrap() / 1e-8 - 0.5).abs() < 1e-10);
    }

    #[test]
    fn i1_matches_series_oracle() {
        let a = i1_oracle(1.0, 30);
        let b = i1_oracle(1.0, 20);
        assert_relative_eq!(a, b, max_relative = 1e-15);
        assert_relative_eq!(bessel_i1(1.0).unwrap(), a, max_relative = 1e-13);
        assert_relative_eq!(bessel_i1(5.0).unwrap(), i1_oracle(5.0, 40), max_relative = 1e-13);
    }

    #[test]
    fn i1_reference_values() {
        // High-precision reference values (30-digit arithmetic).
        let cases = [
            (0.5, 0.257_894_305_390_896_3),
            (10.0, 2670.988_303_701_254_7),
            (20.0, 42_454_973.385_127_77),
            (27.7, 80_101_056_864.567_23),
            (30.0, 768_532_038_938.956_9),
            (31.0, 2_055_972_795_294.564_7),
            (45.0, 2.060_133_462_081_577e18),
            (100.0, 1.068_369_390_338_162_5e42),
            (300.0, 4.468_381_385_036_954e128),
        ];
        for (z, want) in cases {
            assert_relative_eq!(bessel_i1(z).unwrap(), want, max_relative = 1e-12);
        }
    }

    #[test]
    fn j1_reference_values() {
        let cases = [
            (0.5, 0.242_268_457_674_873_9),
            (1.0, 0.440_050_585_744_933_5),
            (10.0, 0.043_472_746_168_861_44),
            (12.0, -0.223_447_104_490_627_6),
            (13.0, -0.070_318_052_121_778_37),
            (20.0, 0.066_833_124_175_850_05),
            (27.7, 0.147_828_889_355_417_7),
            (50.0, -0.097_511_828_125_175_14),
        ];
        for (z, want) in cases {
            assert!((bessel_j1(z).unwrap() - want).abs() < 1e-13, "J1({z})");
        }
        assert_relative_eq!(bessel_j1(1.0).unwrap(), j1_oracle(1.0, 30), max_relative = 1e-14);
    }

    #[test]
    fn j1_first_zero_bracketed() {
        assert!(j1_oracle(3.8, 40) > 0.0 && j1_oracle(3.9, 40) < 0.0);
        assert!(bessel_j1(3.8).unwrap() > 0.0);
        assert!(bessel_j1(3.9).unwrap() < 0.0);
        assert_eq!(bessel_j1(0.0).unwrap(), 0.0);
        assert!((bessel_j1(1e-8).unwrap() / 1e-8 - 0.5).abs() < 1e-10);
    }

    #[test]
    fn bessel_domain_errors() {
        assert!(matches!(bessel_i1(-1.0), Err(Error::Domain { .. })));
        assert!(matches!(bessel_i1(701.0), Err(Error::Domain { .. })));
        assert!(matches!(bessel_j1(f64::NAN), Err(Error::Domain { .. })));
    }

    #[test]
    fn ratio_forms() {
        assert_eq!(ratio_i1_sqrt(0.0), 0.5);
        assert_eq!(ratio_j1_sqrt(0.0), 0.5);
        assert!((ratio_i1_sqrt(1e-14) - 0.5).abs() < 1e-10);
        assert_relative_eq!(ratio_i1_sqrt(1.0), i1_oracle(1.0, 30), max_relative = 1e-14);
        assert_relative_eq!(ratio_i1_sqrt(2500.0), bessel_i1(50.0).unwrap() / 50.0, max_relative = 1e-14);
        assert_relative_eq!(ratio_j1_sqrt(400.0), bessel_j1(20.0).unwrap() / 20.0, max_relative = 1e-12);
        // continuity across the series / large-argument switch
        let lo = ratio_i1_sqrt(900.0);
        let hi = ratio_i1_sqrt(900.0 * (1.0 + 1e-12));
        assert_relative_eq!(lo, hi, max_relative = 1e-10);
    }

    #[test]
    fn trapezoid_cases() {
        assert_relative_eq!(trapezoid(&[1.0; 11], 2.5), 2.5, max_relative = 1e-15);
        let lin: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        assert_relative_eq!(trapezoid(&lin, 1.0), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn trapezoid_sine_is_second_order() {
        // Richardson-extrapolated oracle for ∫₀¹ sin(πξ) dξ = 2/π.
        let t = |n: usize| {
            let v: Vec<f64> = (0..n).map(|i| (std::f64::consts::PI * i as f64 / (n - 1) as f64).sin()).collect();
            trapezoid(&v, 1.0)
        };
        let coarse = t(33);
        let fine = t(65);
        let extrapolated = (4.0 * fine - coarse) / 3.0;
        let exact = 2.0 / std::f64::consts::PI;
        assert!((extrapolated - exact).abs() < 1e-6);
        let ratio = (coarse - exact).abs() / (fine - exact).abs();
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn tridiagonal_identity_and_dense() {
        let x = solve_tridiagonal(&[0.0, 0.0], &[1.0, 1.0, 1.0], &[0.0, 0.0], &[3.0, -1.0, 2.0]).unwrap();
        assert_eq!(x, vec![3.0, -1.0, 2.0]);

        // [[4,1,0],[1,4,1],[0,1,4]] x = b, dense Gaussian elimination oracle
        let a = [[4.0, 1.0, 0.0], [1.0, 4.0, 1.0], [0.0, 1.0, 4.0]];
        let b = [1.0, 2.0, 3.0];
        let mut m = a;
        let mut r = b;
        for k in 0..3 {
            for i in k + 1..3 {
                let f = m[i][k] / m[k][k];
                for j in k..3 {
                    m[i][j] -= f * m[k][j];
                }
                r[i] -= f * r[k];
            }
        }
        let mut want = [0.0; 3];
        for i in (0..3).rev() {
            let s: f64 = (i + 1..3).map(|j| m[i][j] * want[j]).sum();
            want[i] = (r[i] - s) / m[i][i];
        }
        let got = solve_tridiagonal(&[1.0, 1.0], &[4.0, 4.0, 4.0], &[1.0, 1.0], &b).unwrap();
        for i in 0..3 {
            assert_relative_eq!(got[i], want[i], max_relative = 1e-14);
        }
    }

    #[test]
    fn tridiagonal_errors() {
        assert!(matches!(
            solve_tridiagonal(&[0.0], &[0.0, 1.0], &[0.0], &[1.0, 1.0]),
            Err(Error::SingularSystem { row: 0 })
        ));
        assert!(matches!(
            solve_tridiagonal(&[0.0], &[1.0], &[], &[1.0]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn gradient_exact_for_quadratics() {
        let n = 21;
        let h = 1.0 / (n - 1) as f64;
        let v: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(2)).collect();
        let g = gradient(&v, h);
        for (i, gi) in g.iter().enumerate() {
            assert_relative_eq!(*gi, 2.0 * i as f64 * h, epsilon = 1e-12);
        }
    }

    #[test]
    fn profile_rejects_short_or_nan() {
        assert!(Profile::new(vec![1.0, 2.0]).is_err());
        assert!(Profile::new(vec![1.0, f64::NAN, 2.0]).is_err());
        let p = Profile::from_fn(5, |x| 1.0 - x).unwrap();
        assert_eq!(p.h(), 0.25);
        assert_relative_eq!(p.l2_norm(2.0), (2.0f64 / 3.0).sqrt(), max_relative = 0.02);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn i1_positive(z in 1e-6f64..600.0) {
                prop_assert!(bessel_i1(z).unwrap() > 0.0);
            }

            #[test]
            fn j1_bounded(z in 0.0f64..200.0) {
                prop_assert!(bessel_j1(z).unwrap().abs() <= 1.0);
            }

            #[test]
            fn ratio_i1_monotone(w in 0.0f64..5000.0, dw in 1e-3f64..10.0) {
                prop_assert!(ratio_i1_sqrt(w + dw) >= ratio_i1_sqrt(w));
            }

            #[test]
            fn trapezoid_linear_and_exact_for_affine(
                a in -5.0f64..5.0, b in -5.0f64..5.0, k in -3.0f64..3.0, n in 3usize..50,
            ) {
                let f: Vec<f64> = (0..n).map(|i| a + b * i as f64 / (n - 1) as f64).collect();
                let g: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
                let combo: Vec<f64> = f.iter().zip(&g).map(|(x, y)| k * x + y).collect();
                prop_assert!((trapezoid(&f, 1.0) - (a + b / 2.0)).abs() < 1e-12);
                let lhs = trapezoid(&combo, 1.0);
                let rhs = k * trapezoid(&f, 1.0) + trapezoid(&g, 1.0);
                prop_assert!((lhs - rhs).abs() < 1e-11);
            }

            #[test]
            fn tridiagonal_residual(seed in 0u64..1000) {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let n = 100;
                let lower: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
                let upper: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
                let diag: Vec<f64> = (0..n).map(|_| 2.0 + rng.random_range(0.0..1.0)).collect();
                let rhs: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
                let x = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
                let bnorm = rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                for i in 0..n {
                    let mut ax = diag[i] * x[i];
                    if i > 0 { ax += lower[i - 1] * x[i - 1]; }
                    if i + 1 < n { ax += upper[i] * x[i + 1]; }
                    prop_assert!((ax - rhs[i]).abs() < 1e-10 * bnorm);
                }
            }
        }
    }
}
