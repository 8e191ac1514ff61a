use calderon_lab::fundamental::FrozenCoefficients;
use calderon_lab::scalar::{Mat3, Vec3};
use calderon_lab::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn det(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// `dᵀ A⁻¹ d` by Cramer's rule.
fn inverse_form(m: &[[f64; 3]; 3], d: [f64; 3]) -> f64 {
    let dm = det(m);
    let mut s = 0.0;
    for i in 0..3 {
        let mut mi = *m;
        for r in 0..3 {
            mi[r][i] = d[r];
        }
        s += d[i] * det(&mi) / dm;
    }
    s
}

fn spd() -> impl Strategy<Value = [[f64; 3]; 3]> {
    prop::array::uniform9(-0.5..0.5f64).prop_map(|b| {
        let mut a = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] = (0..3).map(|k| b[3 * i + k] * b[3 * j + k]).sum::<f64>() + if i == j { 0.5 } else { 0.0 };
            }
        }
        a
    })
}

proptest! {
    #[test]
    fn single_phase_kernel_matches_anisotropic_newton_potential(
        a in spd(),
        re in 0.5..3.0f64,
        im in -1.0..1.0f64,
        x in prop::array::uniform3(-1.0..1.0f64),
        y in prop::array::uniform3(-1.0..1.0f64),
    ) {
        let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
        prop_assume!(d.iter().map(|v| v * v).sum::<f64>() > 1e-4);
        let gamma = Complex64::new(re, im);
        let fc = FrozenCoefficients::single_phase(gamma, Mat3(a), Vec3::zero()).unwrap();
        let h = fc.value(Vec3(x), Vec3(y)).unwrap();
        let expect = 1.0 / (4.0 * PI * gamma * det(&a).sqrt() * inverse_form(&a, d).sqrt());
        prop_assert!((h - expect).norm() <= 1e-12 * expect.norm(), "{} vs {}", h, expect);
    }

    #[test]
    fn two_phase_kernel_is_symmetric_under_swapping_points_in_one_phase(
        a in spd(),
        g1 in 0.5..3.0f64,
        g2 in 0.5..3.0f64,
        x in prop::array::uniform3(-1.0..1.0f64),
        y in prop::array::uniform3(-1.0..1.0f64),
    ) {
        let fc = FrozenCoefficients::new(
            Complex64::new(g1, 0.0),
            Complex64::new(g2, 0.0),
            Mat3(a),
            Vec3::zero(),
            Vec3::unit(2),
        )
        .unwrap();
        let (x, y) = (Vec3(x), Vec3(y));
        prop_assume!(x[2].abs() > 1e-3 && y[2].abs() > 1e-3 && (x - y).norm() > 1e-2);
        let h1 = fc.value(x, y).unwrap();
        let h2 = fc.value(y, x).unwrap();
        prop_assert!((h1 - h2).norm() <= 1e-10 * h1.norm(), "{} vs {}", h1, h2);
    }
}
