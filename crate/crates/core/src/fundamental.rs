//! Closed-form kernels: the Laplace fundamental solution `Γ`, the anisotropic
//! map `L̃ = R √(A⁻¹)` and the two-phase fundamental solution `H`.

use crate::error::{Error, Result};
use crate::quadrature::sphere_rule;
use crate::scalar::{Mat3, Real, Vec3};
use num_complex::Complex;
use serde::Serialize;

fn four_pi<T: Real>() -> T {
    T::lit(4.0) * T::PI()
}

/// `Γ(x, y) = 1 / (4π|x − y|)`, normalized so that `−ΔΓ = δ_y`.
pub fn gamma<T: Real>(x: Vec3<T>, y: Vec3<T>) -> Result<T> {
    let r = (x - y).norm();
    if r == T::zero() {
        return Err(Error::CoincidentPoints);
    }
    Ok(T::one() / (four_pi::<T>() * r))
}

/// `∇ₓΓ(x, y)`.
pub fn gamma_grad<T: Real>(x: Vec3<T>, y: Vec3<T>) -> Result<Vec3<T>> {
    let d = x - y;
    let r = d.norm();
    if r == T::zero() {
        return Err(Error::CoincidentPoints);
    }
    Ok(d.scale(-T::one() / (four_pi::<T>() * r * r * r)))
}

/// `∂_{x_i}∂_{y_j}Γ(x, y)`.
pub fn gamma_mixed<T: Real>(x: Vec3<T>, y: Vec3<T>) -> Result<Mat3<T>> {
    let d = x - y;
    let r = d.norm();
    if r == T::zero() {
        return Err(Error::CoincidentPoints);
    }
    let r3 = r * r * r;
    let r5 = r3 * r * r;
    let c = T::one() / four_pi::<T>();
    Ok(Mat3::identity().scale(c / r3).sub(&Mat3::outer(d, d).scale(T::lit(3.0) * c / r5)))
}

/// Value, gradient and Hessian of `g(d) = 1/(4π|d|)`.
fn kernel<T: Real>(d: Vec3<T>) -> (T, Vec3<T>, Mat3<T>) {
    let r = d.norm();
    let c = T::one() / four_pi::<T>();
    let r3 = r * r * r;
    let r5 = r3 * r * r;
    let v = c / r;
    let g = d.scale(-c / r3);
    let h = Mat3::outer(d, d).scale(T::lit(3.0) * c / r5).sub(&Mat3::identity().scale(c / r3));
    (v, g, h)
}

/// `L̃ = R √(A⁻¹)` together with the reflected map and `|J| = det √(A⁻¹)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnisotropicMap<T: Real = f64> {
    pub ltilde: Mat3<T>,
    pub lstar: Mat3<T>,
    pub j: Mat3<T>,
    pub rotation: Mat3<T>,
    pub det_j: T,
}

impl<T: Real> AnisotropicMap<T> {
    /// Builds the map for a symmetric positive-definite `A0`.
    pub fn build(a0: &Mat3<T>) -> Result<Self> {
        let scale = T::one() + a0.max_abs();
        if a0.asymmetry() > T::lit(1e-12) * scale {
            return Err(Error::NotSpd);
        }
        let (vals, q) = a0.sym_eigen();
        if !(vals[0] > T::zero()) {
            return Err(Error::NotSpd);
        }
        let clip = T::lit(1e-14);
        let sq = vals.map(|v| v.max(clip).sqrt());
        let sqrt_a = q.matmul(&Mat3::diag(sq)).matmul(&q.transpose());
        let j = q.matmul(&Mat3::diag(sq.map(|s| T::one() / s))).matmul(&q.transpose());
        let v = sqrt_a.col(2);
        let v = v.scale(T::one() / v.norm());
        let rotation = rotation_to_e3(v);
        let ltilde = rotation.matmul(&j);
        let mut lstar = ltilde;
        for c in 0..3 {
            lstar.0[2][c] = -lstar.0[2][c];
        }
        Ok(Self { ltilde, lstar, j, rotation, det_j: j.det() })
    }
}

/// Rotation taking the unit vector `v` to `e₃`, identity on the orthogonal
/// complement of `span{v, e₃}`.
pub fn rotation_to_e3<T: Real>(v: Vec3<T>) -> Mat3<T> {
    let e3 = Vec3::unit(2);
    let k = v.cross(e3);
    let c = v.dot(e3);
    if k.norm() <= T::lit(1e-15) {
        return if c > T::zero() { Mat3::identity() } else { Mat3::diag([T::one(), -T::one(), -T::one()]) };
    }
    let kx = Mat3([[T::zero(), -k[2], k[1]], [k[2], T::zero(), -k[0]], [-k[1], k[0], T::zero()]]);
    Mat3::identity().add(&kx).add(&kx.matmul(&kx).scale(T::one() / (T::one() + c)))
}

/// Right-handed orthonormal frame with third row `n`.
pub fn frame_with_normal<T: Real>(n: Vec3<T>) -> Mat3<T> {
    let n = n.scale(T::one() / n.norm());
    let mut a = 0;
    for i in 1..3 {
        if n[i].abs() < n[a].abs() {
            a = i;
        }
    }
    let t = Vec3::<T>::unit(a);
    let e1 = t - n.scale(t.dot(n));
    let e1 = e1.scale(T::one() / e1.norm());
    let e2 = n.cross(e1);
    Mat3::from_rows([e1, e2, n])
}

/// Which side of the frozen interface a point lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Upper,
    Lower,
    Cross,
}

/// Frozen two-phase coefficients `γ` on `{ξ₃ < 0}`, `γ̃` on `{ξ₃ > 0}` and
/// constant `A`, in the frame placing the interface point at the origin with
/// `e₃` pointing into the `γ̃` side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrozenCoefficients<T: Real = f64> {
    pub gamma_minus: Complex<T>,
    pub gamma_plus: Complex<T>,
    pub a0: Mat3<T>,
    pub origin: Vec3<T>,
    /// Rows form the frame; the third row is the unit normal into the `γ̃` side.
    pub frame: Mat3<T>,
    /// Map built from the frame-rotated anisotropy `Q A Qᵀ`.
    pub map: AnisotropicMap<T>,
}

/// `H` at a pair of points: value, `∇ₓ`, `∇_y`, and mixed `∂ₓ∂_y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HOrder {
    Value,
    GradientX,
    GradientY,
    MixedXY,
}

/// Output of [`FrozenCoefficients::eval`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HValue<T: Real = f64> {
    Value(Complex<T>),
    Vector([Complex<T>; 3]),
    Matrix([[Complex<T>; 3]; 3]),
}

impl<T: Real> FrozenCoefficients<T> {
    pub fn new(
        gamma_minus: Complex<T>,
        gamma_plus: Complex<T>,
        a0: Mat3<T>,
        origin: Vec3<T>,
        normal_plus: Vec3<T>,
    ) -> Result<Self> {
        let s = gamma_minus + gamma_plus;
        if s.norm() <= T::lit(1e-14) || gamma_minus.norm() == T::zero() || gamma_plus.norm() == T::zero() {
            return Err(Error::InvalidInput("γ, γ̃ and γ + γ̃ must be nonzero".into()));
        }
        let frame = frame_with_normal(normal_plus);
        let a_frame = frame.matmul(&a0).matmul(&frame.transpose());
        let map = AnisotropicMap::build(&a_frame)?;
        Ok(Self { gamma_minus, gamma_plus, a0, origin, frame, map })
    }

    /// Single-phase kernel `Γ(L̃x, L̃y) |J| / γ` for constant `γ A`.
    pub fn single_phase(gamma: Complex<T>, a0: Mat3<T>, origin: Vec3<T>) -> Result<Self> {
        Self::new(gamma, gamma, a0, origin, Vec3::unit(2))
    }

    pub fn is_single_phase(&self) -> bool {
        self.gamma_minus == self.gamma_plus
    }

    /// Frame coordinates of a global point.
    pub fn to_frame(&self, x: Vec3<T>) -> Vec3<T> {
        self.frame.mul_vec(x - self.origin)
    }

    /// Complex coefficient `σ₀(x)` as (real, imaginary) matrices.
    pub fn sigma0(&self, x: Vec3<T>) -> (Mat3<T>, Mat3<T>) {
        let g =
            if self.is_single_phase() || self.to_frame(x)[2] > T::zero() { self.gamma_plus } else { self.gamma_minus };
        (self.a0.scale(g.re), self.a0.scale(g.im))
    }

    /// Branch and the complex weights of `Γ(L̃ξ, L̃η)` and `Γ(L̃ξ, L*η)`.
    fn weights(&self, xi3: T, eta3: T) -> Result<(Branch, Complex<T>, Complex<T>)> {
        let (g, gt) = (self.gamma_minus, self.gamma_plus);
        let one = Complex::new(T::one(), T::zero());
        if self.is_single_phase() {
            return Ok((Branch::Upper, one / gt, Complex::new(T::zero(), T::zero())));
        }
        if xi3 == T::zero() || eta3 == T::zero() {
            return Err(Error::OnInterface);
        }
        let s = g + gt;
        Ok(if xi3 > T::zero() && eta3 > T::zero() {
            (Branch::Upper, one / gt, (gt - g) / (gt * s))
        } else if xi3 < T::zero() && eta3 < T::zero() {
            (Branch::Lower, one / g, (g - gt) / (g * s))
        } else {
            (Branch::Cross, Complex::new(T::lit(2.0), T::zero()) / s, Complex::new(T::zero(), T::zero()))
        })
    }

    pub fn branch(&self, x: Vec3<T>, y: Vec3<T>) -> Result<Branch> {
        Ok(self.weights(self.to_frame(x)[2], self.to_frame(y)[2])?.0)
    }

    /// Evaluates `H(x, y)` or one of its derivatives in global coordinates.
    pub fn eval(&self, x: Vec3<T>, y: Vec3<T>, order: HOrder) -> Result<HValue<T>> {
        let xi = self.to_frame(x);
        let eta = self.to_frame(y);
        if (xi - eta).norm() == T::zero() {
            return Err(Error::CoincidentPoints);
        }
        let (_, c1, c2) = self.weights(xi[2], eta[2])?;
        let l = &self.map.ltilde;
        let ls = &self.map.lstar;
        let a = l.mul_vec(xi);
        let dj = self.map.det_j;
        let mut terms: Vec<(Complex<T>, Mat3<T>, Vec3<T>)> = vec![(c1 * dj, *l, a - l.mul_vec(eta))];
        if c2.norm() != T::zero() {
            let d2 = a - ls.mul_vec(eta);
            if d2.norm() == T::zero() {
                return Err(Error::CoincidentPoints);
            }
            terms.push((c2 * dj, *ls, d2));
        }
        let q = &self.frame;
        let zero = Complex::new(T::zero(), T::zero());
        Ok(match order {
            HOrder::Value => {
                let mut s = zero;
                for (c, _, d) in &terms {
                    s = s + *c * kernel(*d).0;
                }
                HValue::Value(s)
            }
            HOrder::GradientX | HOrder::GradientY => {
                let mut out = [zero; 3];
                for (c, b, d) in &terms {
                    let g = kernel(*d).1;
                    let local = match order {
                        HOrder::GradientX => l.transpose().mul_vec(g),
                        _ => -b.transpose().mul_vec(g),
                    };
                    let glob = q.transpose().mul_vec(local);
                    for i in 0..3 {
                        out[i] = out[i] + *c * glob[i];
                    }
                }
                HValue::Vector(out)
            }
            HOrder::MixedXY => {
                let mut out = [[zero; 3]; 3];
                for (c, b, d) in &terms {
                    let h = kernel(*d).2;
                    let local = l.transpose().matmul(&h).matmul(b).scale(-T::one());
                    let glob = q.transpose().matmul(&local).matmul(q);
                    for i in 0..3 {
                        for j in 0..3 {
                            out[i][j] = out[i][j] + *c * glob.0[i][j];
                        }
                    }
                }
                HValue::Matrix(out)
            }
        })
    }

    pub fn value(&self, x: Vec3<T>, y: Vec3<T>) -> Result<Complex<T>> {
        match self.eval(x, y, HOrder::Value)? {
            HValue::Value(v) => Ok(v),
            _ => unreachable!(),
        }
    }

    pub fn grad_x(&self, x: Vec3<T>, y: Vec3<T>) -> Result<[Complex<T>; 3]> {
        match self.eval(x, y, HOrder::GradientX)? {
            HValue::Vector(v) => Ok(v),
            _ => unreachable!(),
        }
    }

    pub fn grad_y(&self, x: Vec3<T>, y: Vec3<T>) -> Result<[Complex<T>; 3]> {
        match self.eval(x, y, HOrder::GradientY)? {
            HValue::Vector(v) => Ok(v),
            _ => unreachable!(),
        }
    }

    pub fn mixed(&self, x: Vec3<T>, y: Vec3<T>) -> Result<[[Complex<T>; 3]; 3]> {
        match self.eval(x, y, HOrder::MixedXY)? {
            HValue::Matrix(v) => Ok(v),
            _ => unreachable!(),
        }
    }

    /// Conormal flux `−∮ σ₀∇ₓH·ν dS` through the sphere `|x − y| = radius`.
    pub fn pole_flux(&self, y: Vec3<T>, radius: T, n_theta: usize, n_phi: usize) -> Result<Complex<T>> {
        let mut s = Complex::new(T::zero(), T::zero());
        for (p, n, w) in sphere_rule(y, radius, n_theta, n_phi) {
            if self.to_frame(p)[2] == T::zero() && !self.is_single_phase() {
                continue;
            }
            let g = self.grad_x(p, y)?;
            let (sr, si) = self.sigma0(p);
            let an = sr.mul_vec(n);
            let bn = si.mul_vec(n);
            for i in 0..3 {
                s = s - g[i] * Complex::new(an[i], bn[i]) * w;
            }
        }
        Ok(s)
    }

    /// Transmission diagnostics at interface-adjacent samples `(x_tangential, y)`.
    pub fn transmission_residuals(&self, samples: &[(Vec3<T>, Vec3<T>)], delta: T) -> Result<TransmissionReport> {
        let n = self.frame.row(2);
        let mut rep = TransmissionReport::default();
        for &(xp, y) in samples {
            let xi = self.to_frame(xp);
            let on_plane = xp - n.scale(xi[2]);
            let up = on_plane + n.scale(delta);
            let dn = on_plane - n.scale(delta);
            let hu = self.value(up, y)?;
            let hd = self.value(dn, y)?;
            let scale = hu.norm().max(hd.norm()).max(T::lit(1e-300));
            rep.value_jump = rep.value_jump.max(((hu - hd).norm() / scale).to_f64_lossless());
            let (sru, siu) = self.sigma0(up);
            let (srd, sid) = self.sigma0(dn);
            let gu = self.grad_x(up, y)?;
            let gd = self.grad_x(dn, y)?;
            let flux = |sr: Mat3<T>, si: Mat3<T>, g: [Complex<T>; 3]| {
                let (a, b) = (sr.mul_vec(n), si.mul_vec(n));
                (0..3).fold(Complex::new(T::zero(), T::zero()), |s, i| s + g[i] * Complex::new(a[i], b[i]))
            };
            let fu = flux(sru, siu, gu);
            let fd = flux(srd, sid, gd);
            let fs = fu.norm().max(fd.norm()).max(T::lit(1e-300));
            rep.flux_jump = rep.flux_jump.max(((fu - fd).norm() / fs).to_f64_lossless());
            for x in [up + n.scale(T::lit(10.0) * delta), dn - n.scale(T::lit(10.0) * delta)] {
                let r = self.divergence_fd(x, y, delta)?;
                let s = self.value(x, y)?.norm() / (delta * delta);
                rep.pde_residual = rep.pde_residual.max((r.norm() / s).to_f64_lossless());
            }
        }
        Ok(rep)
    }

    /// Finite-difference `div(σ₀∇H)` at `x`.
    fn divergence_fd(&self, x: Vec3<T>, y: Vec3<T>, h: T) -> Result<Complex<T>> {
        let (sr, si) = self.sigma0(x);
        let mut s = Complex::new(T::zero(), T::zero());
        for k in 0..3 {
            let e = Vec3::unit(k).scale(h);
            let gp = self.grad_x(x + e, y)?;
            let gm = self.grad_x(x - e, y)?;
            for i in 0..3 {
                let c = Complex::new(sr.0[k][i], si.0[k][i]);
                s = s + c * (gp[i] - gm[i]) / (T::lit(2.0) * h);
            }
        }
        Ok(s)
    }
}

/// Maximum relative residuals over the samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct TransmissionReport {
    pub value_jump: f64,
    pub flux_jump: f64,
    pub pde_residual: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gamma_examples() {
        let o = Vec3::zero();
        assert!((gamma(Vec3::new(1.0, 0.0, 0.0), o).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((gamma(Vec3::new(0.0, 0.5, 0.0), o).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert_eq!(gamma(o, o), Err(Error::CoincidentPoints));
    }

    #[test]
    fn map_diagonal_case() {
        let m = AnisotropicMap::<f64>::build(&Mat3::diag([4.0, 1.0, 1.0])).unwrap();
        assert!(m.ltilde.sub(&Mat3::diag([0.5, 1.0, 1.0])).max_abs() < 1e-14);
        assert!((m.det_j - 0.5).abs() < 1e-14);
        let id = AnisotropicMap::build(&Mat3::<f64>::identity()).unwrap();
        assert!(id.ltilde.sub(&Mat3::identity()).max_abs() < 1e-15);
        assert_eq!(AnisotropicMap::build(&Mat3::diag([1.0, -1.0, 1.0])), Err(Error::NotSpd));
    }

    #[test]
    fn h_examples() {
        let fc = FrozenCoefficients::new(
            Complex::new(2.0, 0.0),
            Complex::new(2.0, 0.0),
            Mat3::identity(),
            Vec3::zero(),
            Vec3::unit(2),
        )
        .unwrap();
        let v = fc.value(Vec3::new(1.0, 0.0, 0.3), Vec3::new(0.0, 0.0, 0.3)).unwrap();
        assert!((v.re - 1.0 / (8.0 * PI)).abs() < 1e-15);
        let fc = FrozenCoefficients::new(
            Complex::new(1.0, 0.0),
            Complex::new(3.0, 0.0),
            Mat3::identity(),
            Vec3::zero(),
            Vec3::unit(2),
        )
        .unwrap();
        let v = fc.value(Vec3::new(0.0, 0.0, 0.5), Vec3::new(0.0, 0.0, -0.5)).unwrap();
        assert!((v.re - 0.5 / (4.0 * PI)).abs() < 1e-15);
        let x = Vec3::new(0.1, 0.2, -0.3);
        let y = Vec3::new(-0.2, 0.1, -0.4);
        let ys = Vec3::new(-0.2, 0.1, 0.4);
        let v = fc.value(x, y).unwrap();
        let expect = gamma(x, y).unwrap() - 0.5 * gamma(x, ys).unwrap();
        assert!((v.re - expect).abs() < 1e-15);
        assert_eq!(fc.value(Vec3::new(0.1, 0.0, 0.0), y), Err(Error::OnInterface));
    }
}
