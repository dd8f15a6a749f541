//! Backstepping transform pairs and kernel bounds.

use proptest::prelude::*;

use stefan_core::diagnostics::{self, TransformConstants};
use stefan_core::numerics::Profile;
use stefan_core::params::{derive_physical, ControllerConfig, MaterialConstants, PhysicalParams};

fn setup() -> (PhysicalParams, TransformConstants) {
    let phys = derive_physical(&MaterialConstants::paraffin()).unwrap();
    let tc = TransformConstants::new(&phys, &ControllerConfig::default()).unwrap();
    (phys, tc)
}

#[test]
fn kernel_bounds_hold_at_reference_gain() {
    let (phys, tc) = setup();
    let r2 = 4.0 * phys.alpha() * tc.gain / (phys.beta() * phys.beta());
    assert!(tc.zeta * tc.zeta + tc.epsilon * tc.epsilon < r2);
    assert!(tc.psi_bound(phys.length()) < tc.r);
    assert_eq!(tc.psi(0.0), tc.epsilon);
    assert_eq!(tc.phi(0.0), -tc.epsilon);
}

#[test]
fn inadmissible_epsilon_is_rejected() {
    let phys = derive_physical(&MaterialConstants::paraffin()).unwrap();
    let ctrl = ControllerConfig {
        epsilon: 100.0,
        ..ControllerConfig::default()
    };
    assert!(TransformConstants::new(&phys, &ctrl).is_err());
}

#[test]
fn error_kernels_agree_at_the_diagonal() {
    // P(x, x) = Q(x, x) = λx/(2α)
    let (phys, tc) = setup();
    for x in [0.0, 0.3, 1.0, 2.5] {
        let want = tc.lambda * x / (2.0 * phys.alpha());
        assert!((tc.p_kernel(x, x) - want).abs() <= 1e-12 * want.max(1.0));
        assert!((tc.q_kernel(x, x) - want).abs() <= 1e-12 * want.max(1.0));
    }
}

#[test]
fn round_trip_error_is_second_order() {
    let (_, tc) = setup();
    let f = |xi: f64| (1.0 - xi) * (1.0 + 2.0 * xi);
    let err = |nodes: usize| {
        let w = Profile::from_fn(nodes, f).unwrap();
        let u = diagnostics::transform_error_direct(&w, 0.4, &tc).unwrap();
        diagnostics::transform_error_inverse(&u, 0.4, &tc).unwrap().sub(&w).unwrap().max_abs()
    };
    let (e1, e2, e3) = (err(41), err(81), err(161));
    assert!(e1 / e2 > 3.5 && e2 / e3 > 3.5, "{e1:e} {e2:e} {e3:e}");
}

proptest! {
    #[test]
    fn controller_pair_round_trips(
        a in -5.0f64..5.0,
        b in -5.0f64..5.0,
        x_err in -2.0f64..0.0,
        s in 0.1f64..0.5,
    ) {
        let (_, tc) = setup();
        let h = 1.0 / 60.0;
        let u = Profile::from_fn(61, |xi| a * (1.0 - xi) + b * (1.0 - xi * xi)).unwrap();
        let w = diagnostics::transform_controller_direct(&u, x_err, s, &tc).unwrap();
        let back = diagnostics::transform_controller_inverse(&w, x_err, s, &tc).unwrap();
        let scale = 1.0 + a.abs() + b.abs() + x_err.abs();
        prop_assert!(back.sub(&u).unwrap().max_abs() < 10.0 * h * h * scale);
    }

    #[test]
    fn error_pair_round_trips(a in -5.0f64..5.0, s in 0.1f64..0.5) {
        let (_, tc) = setup();
        let h = 1.0 / 60.0;
        let w = Profile::from_fn(61, |xi| a * (1.0 - xi * xi * xi)).unwrap();
        let u = diagnostics::transform_error_direct(&w, s, &tc).unwrap();
        let back = diagnostics::transform_error_inverse(&u, s, &tc).unwrap();
        prop_assert!(back.sub(&w).unwrap().max_abs() < 10.0 * h * h * (1.0 + a.abs()));
    }
}
