mod common;

use calderon_lab::admittivity::{Admittivity, AffineComplex, AnisotropyField};
use calderon_lab::fem::FemSystem;
use calderon_lab::mesh::{DiscreteField, View};
use calderon_lab::scalar::{Mat3, Vec3};
use calderon_lab::Complex64;

#[test]
fn linear_data_is_reproduced_for_constant_anisotropic_coefficients() {
    let m = common::mesh(8);
    let a = Mat3([[1.5, 0.2, 0.1], [0.2, 1.0, -0.1], [0.1, -0.1, 0.8]]);
    let adm = Admittivity::new(
        vec![AffineComplex::constant(2.0, 0.5), AffineComplex::constant(2.0, 0.5)],
        AnisotropyField::Constant(a),
    );
    let exact = |x: Vec3| Complex64::new(0.3 + x[0] - 2.0 * x[1], 0.5 * x[2]);
    let sys = FemSystem::new(&adm, &m, View::Base).unwrap();
    let g = DiscreteField::interpolate(&m, View::Base, exact);
    let u = sys.solve_dirichlet(&m, &g).unwrap();
    let err = m.base.active.iter().map(|&n| (u.values[n] - exact(m.node_pos(n))).norm()).fold(0.0, f64::max);
    assert!(err <= 1e-10, "{err:e}");
}

#[test]
fn affine_gamma_with_transverse_data() {
    let m = common::mesh(16);
    let gamma = AffineComplex { s_r: 1.0, s_i: 0.2, g_r: Vec3::new(1.0, 0.0, 0.0), g_i: Vec3::new(0.3, 0.0, 0.0) };
    let adm = Admittivity::new(vec![gamma; 2], AnisotropyField::identity());
    let sys = FemSystem::new(&adm, &m, View::Base).unwrap();
    let g = DiscreteField::interpolate(&m, View::Base, |x| Complex64::new(x[1], 0.0));
    let u = sys.solve_dirichlet(&m, &g).unwrap();
    let err = m.base.active.iter().map(|&n| (u.values[n] - m.node_pos(n)[1]).norm()).fold(0.0, f64::max);
    assert!(err <= 1e-9, "{err:e}");
}
