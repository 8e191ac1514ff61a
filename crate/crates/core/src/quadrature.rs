//! Gauss–Legendre rules and product rules on boxes, spheres and balls.

use crate::scalar::{Real, Vec3};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1, "at least one node");
    let mut x = vec![0.0f64; n];
    let mut w = vec![0.0f64; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, 0.0f64);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j as f64 + 1.0) * z * p1 - j as f64 * p2) / (j as f64 + 1.0);
            }
            dp = nf * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x.into_iter().map(T::lit).collect(), w.into_iter().map(T::lit).collect())
}

/// Gauss rule mapped to `[a, b]`.
pub fn gauss_interval<T: Real>(n: usize, a: T, b: T) -> Vec<(T, T)> {
    let (x, w) = gauss_legendre::<T>(n);
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    x.iter().zip(&w).map(|(&xi, &wi)| (mid + half * xi, half * wi)).collect()
}

/// Tensor-product Gauss rule with `n` points per axis on the box `[lo, hi]`.
pub fn gauss_box<T: Real>(n: usize, lo: Vec3<T>, hi: Vec3<T>) -> Vec<(Vec3<T>, T)> {
    let r: Vec<Vec<(T, T)>> = (0..3).map(|a| gauss_interval(n, lo[a], hi[a])).collect();
    let mut out = Vec::with_capacity(n * n * n);
    for &(z, wz) in &r[2] {
        for &(y, wy) in &r[1] {
            for &(x, wx) in &r[0] {
                out.push((Vec3::new(x, y, z), wx * wy * wz));
            }
        }
    }
    out
}

/// Product rule on the sphere `|x − c| = r`: Gauss in `cos θ`, trapezoid in `φ`.
/// Returns points, outward unit normals and weights.
pub fn sphere_rule<T: Real>(c: Vec3<T>, r: T, n_theta: usize, n_phi: usize) -> Vec<(Vec3<T>, Vec3<T>, T)> {
    let (ct, wt) = gauss_legendre::<T>(n_theta);
    let two_pi = T::PI() + T::PI();
    let dphi = two_pi / T::lit(n_phi as f64);
    let mut out = Vec::with_capacity(n_theta * n_phi);
    for (&u, &wu) in ct.iter().zip(&wt) {
        let s = (T::one() - u * u).max(T::zero()).sqrt();
        for k in 0..n_phi {
            let phi = dphi * T::lit(k as f64);
            let n = Vec3::new(s * phi.cos(), s * phi.sin(), u);
            out.push((c + n.scale(r), n, wu * dphi * r * r));
        }
    }
    out
}

/// Product rule on the ball `|x − c| ≤ r`.
pub fn ball_rule<T: Real>(c: Vec3<T>, r: T, n_r: usize, n_theta: usize, n_phi: usize) -> Vec<(Vec3<T>, T)> {
    let radial = gauss_interval(n_r, T::zero(), r);
    let mut out = Vec::with_capacity(n_r * n_theta * n_phi);
    for &(rho, wr) in &radial {
        for (p, _, w) in sphere_rule(c, rho, n_theta, n_phi) {
            out.push((p, w * wr));
        }
    }
    out
}
