use calderon_lab::admittivity::{Admittivity, AffineComplex, AnisotropyField};
use calderon_lab::experiments::sampler::PairDraw;
use calderon_lab::fit::loglog_slope;
use calderon_lab::green::Cutoff;
use calderon_lab::io::{field_bytes, field_from_bytes};
use calderon_lab::mesh::DiscreteField;
use calderon_lab::probes::three_sphere_delta;
use calderon_lab::scalar::Vec3;
use calderon_lab::Complex64;
use proptest::prelude::*;

fn affine() -> impl Strategy<Value = AffineComplex> {
    (-2.0..2.0f64, -2.0..2.0f64, prop::array::uniform6(-1.0..1.0f64)).prop_map(|(s_r, s_i, g)| AffineComplex {
        s_r,
        s_i,
        g_r: Vec3::new(g[0], g[1], g[2]),
        g_i: Vec3::new(g[3], g[4], g[5]),
    })
}

proptest! {
    #[test]
    fn three_sphere_delta_in_unit_interval_iff_radii_straddle(
        r1 in 0.01..1.0f64,
        f2 in 1.01..5.0f64,
        f3 in 1.01..5.0f64,
        s in 0.2..3.0f64,
        lambda in 0.2..4.0f64,
    ) {
        let r = [r1, r1 * f2, r1 * f2 * f3];
        let d = three_sphere_delta(r, s, lambda);
        let a = 2.0 * r[1] / lambda;
        let inside = r[0] < a && a < r[2];
        let strict = (a / r[0] - 1.0).abs() > 1e-9 && (a / r[2] - 1.0).abs() > 1e-9;
        prop_assume!(strict);
        prop_assert_eq!(d > 0.0 && d < 1.0, inside);
    }

    #[test]
    fn pair_draw_is_affine_in_t(
        base in prop::collection::vec(affine(), 3),
        dir in prop::collection::vec(affine(), 3),
        t in -3.0..3.0f64,
        x in prop::array::uniform3(-1.0..1.0f64),
    ) {
        let draw = PairDraw { first: Admittivity::new(base, AnisotropyField::identity()), direction: dir };
        let x = Vec3::new(x[0], x[1], x[2]);
        let (a0, a1, at) = (draw.at(0.0), draw.at(1.0), draw.at(t));
        prop_assert_eq!(&a0, &draw.first);
        for m in 0..3 {
            let expect = a0.gammas[m].eval(x) + (a1.gammas[m].eval(x) - a0.gammas[m].eval(x)) * t;
            prop_assert!((at.gammas[m].eval(x) - expect).norm() <= 1e-12 * (1.0 + expect.norm()));
        }
        let back = PairDraw::from_pair(&a0, &a1);
        let close = back.direction.iter().zip(&draw.direction).all(|(p, q)| {
            (p.s_r - q.s_r).abs() < 1e-12 && (p.s_i - q.s_i).abs() < 1e-12
        });
        prop_assert!(close);
    }

    #[test]
    fn loglog_slope_recovers_power_laws(p in -4.0..4.0f64, c in 0.01..100.0f64, x0 in 0.01..1.0f64) {
        let xs: Vec<f64> = (0..5).map(|k| x0 * 2f64.powi(k)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| c * x.powf(p)).collect();
        prop_assert!((loglog_slope(&xs, &ys) - p).abs() <= 1e-9);
    }

    #[test]
    fn cutoff_is_bounded_and_monotone(radius in 0.01..1.0f64, f1 in 0.0..1.5f64, f2 in 0.0..1.5f64) {
        let c = Cutoff { center: Vec3::zero(), radius };
        let v1 = c.value(Vec3::new(f1 * radius, 0.0, 0.0));
        let v2 = c.value(Vec3::new(0.0, f2 * radius, 0.0));
        prop_assert!((0.0..=1.0).contains(&v1) && (0.0..=1.0).contains(&v2));
        if f1 <= f2 {
            prop_assert!(v1 >= v2);
        }
        if f1 <= 0.65 {
            prop_assert_eq!(v1, 1.0);
        }
        if f1 >= 1.0 {
            prop_assert_eq!(v1, 0.0);
        }
    }

    #[test]
    fn field_bytes_round_trip_row_major(
        dims in prop::array::uniform3(1usize..5),
        seed in prop::collection::vec(-1e3..1e3f64, 128),
    ) {
        let [nx, ny, nz] = dims;
        let n = nx * ny * nz;
        let values: Vec<Complex64> = (0..n).map(|q| Complex64::new(seed[q % 128], seed[(q * 7 + 3) % 128])).collect();
        let u = DiscreteField { dims, values };
        let bytes = field_bytes(&u);
        prop_assert_eq!(bytes.len(), n * 16);
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    let off = ((i * ny + j) * nz + k) * 16;
                    let re = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
                    let im = f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap());
                    prop_assert_eq!(Complex64::new(re, im), u.values[i + nx * (j + ny * k)]);
                }
            }
        }
        prop_assert_eq!(field_from_bytes(dims, &bytes).unwrap(), u);
    }
}
