mod common;

use calderon_lab::admittivity::AffineComplex;
use calderon_lab::dtn::PairSolver;
use calderon_lab::fem::FemSystem;
use calderon_lab::fit::loglog_slope;
use calderon_lab::green::GreenField;
use calderon_lab::mesh::{DiscreteField, View};
use calderon_lab::probes::{
    misfit, peeling_split, pole_grid, singular_solution_field, three_sphere_check, three_sphere_delta, PeelingVariant,
    PoleGradient, ProbeContext,
};
use calderon_lab::scalar::Vec3;
use calderon_lab::{Complex64, Error};
use std::f64::consts::PI;

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm())
}

#[test]
fn identical_pair_gives_zero_probes() {
    let m = common::mesh(16);
    let a = common::layered();
    let ctx = ProbeContext::new(&a, &a, &m).unwrap();
    let y = Vec3::new(0.4, 0.45, -0.5);
    let z = Vec3::new(0.6, 0.55, -0.55);
    assert_eq!(ctx.eval_sk(0, y, z).unwrap(), Complex64::new(0.0, 0.0));
    assert_eq!(ctx.eval_sk_mixed(0, y, z, 2, 2, m.h / 2.0).unwrap(), Complex64::new(0.0, 0.0));
    let (by, bz) = common::grid_boxes();
    let r = misfit(&ctx, &pole_grid(&by, 2), &pole_grid(&bz, 2), false).unwrap();
    assert!(r.j <= 1e-16, "J = {:e}", r.j);
    let p = peeling_split(&ctx, 1, &[0.75 / 4.0], PeelingVariant::Value).unwrap();
    assert_eq!(p.rungs[0].i1, Complex64::new(0.0, 0.0));
    assert_eq!(p.rungs[0].i2, Complex64::new(0.0, 0.0));
}

#[test]
fn volume_boundary_and_dtn_forms_agree() {
    let m = common::mesh(16);
    let a1 = common::layered();
    let a2 = common::perturbed(0.1);
    let ctx = ProbeContext::new(&a1, &a2, &m).unwrap();
    let y = Vec3::new(0.4, 0.45, -0.5);
    let z = Vec3::new(0.6, 0.55, -0.55);
    let s = ctx.eval_sk(0, y, z).unwrap();
    let g1 = ctx.green1.compute_green(y).unwrap();
    let g2 = ctx.green2.compute_green(z).unwrap();
    let pair = PairSolver::new(&a1, &a2, &m).unwrap();
    let trace =
        |g: &GreenField| -> Vec<Complex64> { pair.first.space.nodes.iter().map(|&n| g.regular.values[n]).collect() };
    let d = pair.first.dtn().unwrap().sub(&pair.second.dtn().unwrap()).unwrap();
    assert!(rel(s, d.pair(&trace(&g2), &trace(&g1))) <= 1e-6);
    let (by, bz) = common::grid_boxes();
    let r = misfit(&ctx, &pole_grid(&by, 2), &pole_grid(&bz, 2), true).unwrap();
    assert!(r.form_mismatch().unwrap() <= 1e-6);
    assert!(r.j > 0.0);
}

#[test]
fn mixed_derivative_swap_and_difference_consistency() {
    let m = common::mesh(16);
    let a1 = common::layered();
    let a2 = common::perturbed(0.1);
    let mut ctx = ProbeContext::new(&a1, &a2, &m).unwrap();
    let y = Vec3::new(0.4, 0.45, -0.5);
    let z = Vec3::new(0.6, 0.55, -0.55);
    let step = m.h / 2.0;
    let a = ctx.eval_sk_mixed(0, y, z, 2, 0, step).unwrap();
    let swapped = ProbeContext::new(&a2, &a1, &m).unwrap().eval_sk_mixed(0, z, y, 0, 2, step).unwrap();
    assert!(rel(a, -swapped) <= 1e-6, "{a} vs {swapped}");

    ctx.green1.max_cutoff = 0.15;
    ctx.green2.max_cutoff = 0.15;
    let g2 = ctx.green2.compute_green(z).unwrap();
    let (plus, minus) = ctx.shifted_fields(&ctx.green1, y, 2, step).unwrap();
    let by_fields = ctx
        .sk_from_fields(0, PoleGradient::Difference { plus: &plus, minus: &minus, step }, PoleGradient::Field(&g2))
        .unwrap();
    let e = Vec3::unit(2).scale(step);
    let by_values = (ctx.eval_sk(0, y + e, z).unwrap() - ctx.eval_sk(0, y - e, z).unwrap()) / (2.0 * step);
    assert!(rel(by_fields, by_values) <= 1e-10);
    let coarse =
        (ctx.eval_sk(0, y + e.scale(2.0), z).unwrap() - ctx.eval_sk(0, y - e.scale(2.0), z).unwrap()) / (4.0 * step);
    assert!(rel(coarse, by_values) <= 0.1);
}

#[test]
fn misfit_is_quadratic_in_the_perturbation() {
    let m = common::mesh(16);
    let a1 = common::layered();
    let (by, bz) = common::grid_boxes();
    let ts = [1e-2, 1e-3, 1e-4];
    let js: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let a2 = common::perturbed(t);
            let ctx = ProbeContext::new(&a1, &a2, &m).unwrap();
            misfit(&ctx, &pole_grid(&by, 2), &pole_grid(&bz, 2), false).unwrap().j
        })
        .collect();
    let slope = loglog_slope(&ts, &js);
    assert!((slope - 2.0).abs() <= 0.1, "slope {slope}");
}

#[test]
fn singular_solution_field_solves_the_equation() {
    let m = common::mesh(16);
    let a1 = common::layered();
    let a2 = common::perturbed(0.1);
    let ctx = ProbeContext::new(&a1, &a2, &m).unwrap();
    let y = Vec3::new(0.4, 0.45, -0.5);
    let z = Vec3::new(0.6, 0.55, -0.55);
    let g2 = ctx.green2.compute_green(z).unwrap();
    let f = singular_solution_field(&m, &ctx.green1, &a2, 0, &g2, ctx.refinement()).unwrap();
    assert!(f.nodes_checked > 0);
    assert!(f.interior_residual <= 1e-6);
    let direct = ctx.eval_sk(0, y, z).unwrap();
    let field = f.field.value_at(&m, View::Augmented, y).unwrap();
    assert!(rel(direct, field) <= 0.05, "{direct} vs {field}");
}

#[test]
fn peeling_split_is_additive() {
    let m = common::mesh(16);
    let a1 = common::homogeneous();
    let mut a2 = common::homogeneous();
    a2.gammas[0] = AffineComplex::constant(1.2, 0.0);
    let ctx = ProbeContext::new(&a1, &a2, &m).unwrap();
    let r0 = 0.75;
    let rep = peeling_split(&ctx, 1, &[r0 / 4.0, r0 / 8.0], PeelingVariant::Value).unwrap();
    for g in &rep.rungs {
        assert!((g.i1 + g.i2 - g.s).norm() <= 1e-15 * g.s.norm());
        assert!(g.cells_i1 > 0 && g.i1.norm() > 0.0);
    }
    assert!(rep.rungs[1].i1.norm() > rep.rungs[0].i1.norm());
    assert!(matches!(peeling_split(&ctx, 1, &[1e-3], PeelingVariant::Value), Err(Error::LadderTooFine { .. })));
}

#[test]
fn pole_checks_reject_bad_poles() {
    let m = common::mesh(16);
    let a = common::layered();
    let ctx = ProbeContext::new(&a, &a, &m).unwrap();
    assert!(matches!(
        ctx.eval_sk(0, Vec3::new(0.5, 0.5, -0.05), Vec3::new(0.5, 0.5, -0.5)),
        Err(Error::PoleTooClose { .. })
    ));
    let bad = vec![(Vec3::new(0.5, 0.5, 0.5), 1.0)];
    assert!(matches!(misfit(&ctx, &bad, &bad, false), Err(Error::GridOutsidePoleRegion)));
}

#[test]
fn three_sphere_for_a_linear_solution() {
    let m = common::mesh(16);
    let x0 = Vec3::new(0.5, 0.5, 0.5);
    let radii = [0.1, 0.15, 0.3];
    let v = DiscreteField::interpolate(&m, View::Base, |x| Complex64::new(x[0] - x0[0], 0.0));
    let a = common::homogeneous();
    let sys = FemSystem::new(&a, &m, View::Base).unwrap();
    let rep = three_sphere_check(&m, View::Base, &v, x0, radii, 1.0, 1.0, Some(&sys)).unwrap();
    for (n, r) in rep.norms.iter().zip(radii) {
        let exact = (4.0 * PI / 15.0 * r.powi(5)).sqrt();
        assert!((n - exact).abs() <= 1e-6 * exact);
    }
    assert!((rep.delta - three_sphere_delta(radii, 1.0, 1.0)).abs() < 1e-15);
    assert!(rep.c_min.is_finite() && rep.c_min <= 10.0);

    let zero = DiscreteField::zeros(&m);
    let z = three_sphere_check(&m, View::Base, &zero, x0, radii, 1.0, 1.0, None).unwrap();
    assert!(z.trivial && z.c_min == 0.0);
    assert!(matches!(
        three_sphere_check(&m, View::Base, &v, x0, [0.2, 0.15, 0.3], 1.0, 1.0, None),
        Err(Error::RadiiOrdering)
    ));
    assert!(matches!(
        three_sphere_check(&m, View::Base, &v, x0, [0.1, 0.2, 0.6], 1.0, 1.0, None),
        Err(Error::BallOutsideDomain)
    ));
}
