mod common;

use calderon_lab::admittivity::{Admittivity, AffineComplex, AnisotropyField};
use calderon_lab::green::{asymptotic_exponent_fit, pointwise_bound_report, GreenSolver};
use calderon_lab::scalar::Vec3;
use calderon_lab::Error;

#[test]
fn flux_is_normalized_and_trace_vanishes() {
    let m = common::mesh(16);
    let adm = common::layered();
    let s = GreenSolver::new(&adm, &m).unwrap();
    let g = s.compute_green(Vec3::new(0.49, 0.51, -0.375)).unwrap();
    assert!(s.boundary_max(&g).unwrap() <= 1e-9);
    for rho in [0.03, 0.05, 0.07, 0.1] {
        let f = g.pole_flux(&m, &adm, rho).unwrap();
        assert!((f - 1.0).norm() < 5e-4, "rho {rho}: flux {f}");
    }
}

#[test]
fn green_function_is_reciprocal_in_the_pole_region() {
    let m = common::mesh(16);
    let adm = common::layered();
    let s = GreenSolver::new(&adm, &m).unwrap();
    let pairs = [
        (Vec3::new(0.3, 0.4, -0.5), Vec3::new(0.6, 0.55, -0.45)),
        (Vec3::new(0.35, 0.35, -0.55), Vec3::new(0.65, 0.6, -0.6)),
        (Vec3::new(0.45, 0.3, -0.4), Vec3::new(0.5, 0.7, -0.5)),
        (Vec3::new(0.3, 0.65, -0.6), Vec3::new(0.7, 0.35, -0.45)),
        (Vec3::new(0.4, 0.5, -0.65), Vec3::new(0.62, 0.48, -0.42)),
    ];
    for (x, y) in pairs {
        let gy = s.compute_green(y).unwrap();
        let gx = s.compute_green(x).unwrap();
        let a = gy.value(&m, x).unwrap();
        let b = gx.value(&m, y).unwrap();
        assert!((a - b).norm() <= 5e-2 * a.norm(), "{x:?} {y:?}: {a} vs {b}");
    }
}

#[test]
fn bound_constants_are_stable_under_refinement() {
    let adm = common::layered();
    let y = Vec3::new(0.5, 0.5, -0.4);
    let samples: Vec<Vec3> = (0..6)
        .flat_map(|i| {
            (0..6).flat_map(move |j| {
                (0..5).map(move |k| Vec3::new(0.15 + 0.14 * i as f64, 0.15 + 0.14 * j as f64, -0.6 + 0.35 * k as f64))
            })
        })
        .collect();
    let mut reps = Vec::new();
    for res in [16, 32] {
        let m = common::mesh(res);
        let s = GreenSolver::new(&adm, &m).unwrap();
        let g = s.compute_green(y).unwrap();
        reps.push(pointwise_bound_report(&m, &g, &samples).unwrap());
    }
    for (a, b) in
        [(reps[0].value_constant, reps[1].value_constant), (reps[0].gradient_constant, reps[1].gradient_constant)]
    {
        assert!(a.is_finite() && b.is_finite() && a > 0.0);
        assert!(a.max(b) / a.min(b) <= 2.0, "{a} vs {b}");
    }
}

#[test]
fn remainder_decays_toward_the_interface() {
    let adm =
        Admittivity::new(vec![AffineComplex::one(), AffineComplex::constant(3.0, 0.0)], AnisotropyField::identity());
    let m = common::mesh(16);
    let mut s = GreenSolver::new(&adm, &m).unwrap();
    s.refinement = 16;
    let rep = asymptotic_exponent_fit(&s, 1, &[1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0]).unwrap();
    assert!(rep.value_monotone && rep.gradient_monotone);
    assert!(rep.theta1 > 0.0 && rep.theta2 > 0.0);
}

#[test]
fn ladder_below_resolution_is_rejected() {
    let adm = common::layered();
    let m = common::mesh(16);
    let s = GreenSolver::new(&adm, &m).unwrap();
    let floor = 4.0 * s.effective_pitch();
    assert!(matches!(asymptotic_exponent_fit(&s, 1, &[floor / 2.0, 1.0 / 32.0]), Err(Error::LadderTooFine { .. })));
    assert!(matches!(s.compute_green(Vec3::new(0.5, 0.5, 0.5)), Err(Error::PoleOutsideRegion(_))));
}
