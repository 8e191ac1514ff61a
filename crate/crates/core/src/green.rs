//! Green function of `div(σ∇·)` on the augmented domain by the splitting
//! `G = χH + W`, with `χ` a smooth radial cutoff around the pole and `W` a
//! discrete solution with a regular source.

use crate::admittivity::Admittivity;
use crate::error::{Error, Result};
use crate::fem::{assemble_load, to_field, CellRule, FemSystem};
use crate::fit::loglog_slope;
use crate::fundamental::FrozenCoefficients;
use crate::mesh::{DiscreteField, StructuredMesh, View};
use crate::quadrature::sphere_rule;
use crate::scalar::{Mat3, Vec3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// Radial cutoff: `1` for `ρ ≤ 0.65c`, `0` for `ρ ≥ c`, quintic `C²` blend between.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cutoff {
    pub center: Vec3,
    pub radius: f64,
}

impl Cutoff {
    /// Radius of the ball where `χ ≡ 1`.
    pub fn inner(&self) -> f64 {
        0.65 * self.radius
    }

    fn t(&self, rho: f64) -> f64 {
        ((rho - self.inner()) / (self.radius - self.inner())).clamp(0.0, 1.0)
    }

    /// `χ`, `χ'(ρ)`, `χ''(ρ)`.
    pub fn radial(&self, rho: f64) -> (f64, f64, f64) {
        let t = self.t(rho);
        let k = 1.0 / (self.radius - self.inner());
        let s = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        let ds = 30.0 * t * t * (1.0 - t) * (1.0 - t);
        let dds = 60.0 * t - 180.0 * t * t + 120.0 * t * t * t;
        (1.0 - s, -ds * k, -dds * k * k)
    }

    pub fn value(&self, x: Vec3) -> f64 {
        self.radial((x - self.center).norm()).0
    }

    pub fn grad(&self, x: Vec3) -> Vec3 {
        let d = x - self.center;
        let rho = d.norm();
        if rho == 0.0 {
            return Vec3::zero();
        }
        d.scale(self.radial(rho).1 / rho)
    }

    pub fn hessian(&self, x: Vec3) -> Mat3 {
        let d = x - self.center;
        let rho = d.norm();
        if rho < self.inner() || rho > self.radius {
            return Mat3::zero();
        }
        let (_, d1, d2) = self.radial(rho);
        let n = d.scale(1.0 / rho);
        let nn = Mat3::outer(n, n);
        nn.scale(d2).add(&Mat3::identity().sub(&nn).scale(d1 / rho))
    }

    /// Whether `χ` is non-constant somewhere on the box `[lo, lo + h]³`.
    pub fn touches_annulus(&self, lo: Vec3, h: f64) -> bool {
        let (near, far) = box_distance_range(self.center, lo, h);
        near < self.radius && far > self.inner()
    }
}

/// Nearest and farthest distance from `p` to the cube `[lo, lo + h]³`.
pub fn box_distance_range(p: Vec3, lo: Vec3, h: f64) -> (f64, f64) {
    let mut near = 0.0;
    let mut far = 0.0;
    for a in 0..3 {
        let (l, u) = (lo[a], lo[a] + h);
        let dn = (l - p[a]).max(p[a] - u).max(0.0);
        let df = (p[a] - l).abs().max((u - p[a]).abs());
        near += dn * dn;
        far += df * df;
    }
    (near.sqrt(), far.sqrt())
}

/// Which use of the splitting a pole serves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Regime {
    /// Pole in the slab, `σ₀ = I`, `H = Γ`.
    Slab,
    /// Pole near the flat portion on `∂Ω_m`, two-phase `H` frozen there.
    Interface { boundary: usize },
    /// Pole inside a layer, single-phase `H` frozen at the pole.
    Interior,
}

/// Description of one Green solve.
#[derive(Clone, Copy, Debug)]
pub struct PoleSpec {
    pub pole: Vec3,
    pub kernel: FrozenCoefficients,
    pub cutoff: f64,
    pub regime: Regime,
}

/// `G(·, y) = χH(·, y) + W`.
#[derive(Clone, Debug)]
pub struct GreenField {
    pub pole: Vec3,
    pub kernel: FrozenCoefficients,
    pub cutoff: Cutoff,
    pub regime: Regime,
    /// Discrete part `W` on the augmented view.
    pub regular: DiscreteField,
    /// Relative residual of the discrete solve.
    pub residual: f64,
}

impl GreenField {
    fn singular_value(&self, x: Vec3) -> Result<Complex64> {
        let chi = self.cutoff.value(x);
        if chi == 0.0 {
            return Ok(C0);
        }
        Ok(self.kernel.value(x, self.pole)? * chi)
    }

    /// `∇ₓ(χH)`.
    pub fn singular_grad(&self, x: Vec3) -> Result<[Complex64; 3]> {
        let chi = self.cutoff.value(x);
        if chi == 0.0 {
            return Ok([C0; 3]);
        }
        let g = self.kernel.grad_x(x, self.pole)?;
        let dchi = self.cutoff.grad(x);
        let hv = if dchi.max_abs() > 0.0 { self.kernel.value(x, self.pole)? } else { C0 };
        Ok(std::array::from_fn(|i| g[i] * chi + hv * dchi[i]))
    }

    /// `G(x, y)`.
    pub fn value(&self, mesh: &StructuredMesh, x: Vec3) -> Result<Complex64> {
        let w = self.regular.value_at(mesh, View::Augmented, x).ok_or(Error::OutsideDomain(x.0))?;
        Ok(self.singular_value(x)? + w)
    }

    /// `G(x, y) − H(x, y)`.
    pub fn remainder(&self, mesh: &StructuredMesh, x: Vec3) -> Result<Complex64> {
        let w = self.regular.value_at(mesh, View::Augmented, x).ok_or(Error::OutsideDomain(x.0))?;
        let chi = self.cutoff.value(x);
        if chi == 1.0 {
            return Ok(w);
        }
        Ok(w + self.kernel.value(x, self.pole)? * (chi - 1.0))
    }

    /// Pointwise gradient of `W`, recovered within the layer containing `x`.
    pub fn regular_grad(&self, mesh: &StructuredMesh, x: Vec3) -> Result<[Complex64; 3]> {
        self.regular.layer_recovered_grad_at(mesh, View::Augmented, x).ok_or(Error::OutsideDomain(x.0))
    }

    /// Pointwise `∇ₓG`: analytic singular part plus recovered gradient of `W`.
    pub fn grad(&self, mesh: &StructuredMesh, x: Vec3) -> Result<[Complex64; 3]> {
        let s = self.singular_grad(x)?;
        let r = self.regular_grad(mesh, x)?;
        Ok(std::array::from_fn(|i| s[i] + r[i]))
    }

    /// `∇ₓ(G − H)` pointwise.
    pub fn remainder_grad(&self, mesh: &StructuredMesh, x: Vec3) -> Result<[Complex64; 3]> {
        let r = self.regular_grad(mesh, x)?;
        let chi = self.cutoff.value(x);
        if chi == 1.0 {
            return Ok(r);
        }
        let g = self.kernel.grad_x(x, self.pole)?;
        let hv = self.kernel.value(x, self.pole)?;
        let dchi = self.cutoff.grad(x);
        Ok(std::array::from_fn(|i| r[i] + g[i] * (chi - 1.0) + hv * dchi[i]))
    }

    /// `∇ₓG` for quadrature inside cell `c`: analytic singular part plus the
    /// element gradient of `W`.
    pub fn grad_in_cell(&self, mesh: &StructuredMesh, c: usize, x: Vec3, xi: [f64; 3]) -> Result<[Complex64; 3]> {
        let w = self.regular.grad_in_cell(mesh, c, xi);
        let s = self.singular_grad(x)?;
        Ok(std::array::from_fn(|i| s[i] + w[i]))
    }

    /// Whether `χ ≡ 0` on cell `c`.
    pub fn cell_is_regular(&self, mesh: &StructuredMesh, c: usize) -> bool {
        box_distance_range(self.pole, mesh.cell_origin(c), mesh.h).0 >= self.cutoff.radius
    }

    /// Conormal flux `−∮ σ∇G·ν` through the sphere of radius `rho` around the pole.
    pub fn pole_flux(&self, mesh: &StructuredMesh, adm: &Admittivity, rho: f64) -> Result<Complex64> {
        let mut s = C0;
        for (p, n, w) in sphere_rule(self.pole, rho, 24, 48) {
            let layer = mesh.domain.layer_of_interior_point(p).ok_or(Error::OutsideDomain(p.0))?;
            let sig = adm.sigma_at(layer, p);
            let g = self.grad(mesh, p)?;
            for i in 0..3 {
                for j in 0..3 {
                    s -= sig.entry(i, j) * g[j] * n[i] * w;
                }
            }
        }
        Ok(s)
    }

    /// Values of `G` on the active nodes of the base view (local numbering).
    pub fn base_trace(&self, mesh: &StructuredMesh) -> Result<DiscreteField> {
        let mut f = DiscreteField::zeros(mesh);
        for &n in &mesh.base.active {
            let x = mesh.node_pos(n);
            f.values[n] = self.regular.values[n] + self.singular_value(x)?;
        }
        Ok(f)
    }
}

/// Green solver for one admittivity, sharing one factorization across poles.
pub struct GreenSolver<'a> {
    pub mesh: &'a StructuredMesh,
    pub adm: &'a Admittivity,
    pub sys: FemSystem,
    /// Subdivisions per axis of the quadrature in the cell containing the pole.
    pub refinement: usize,
    /// Upper bound on cutoff radii.
    pub max_cutoff: f64,
}

impl<'a> GreenSolver<'a> {
    pub fn new(adm: &'a Admittivity, mesh: &'a StructuredMesh) -> Result<Self> {
        let sys = FemSystem::new(adm, mesh, View::Augmented)?;
        Ok(Self { mesh, adm, sys, refinement: 8, max_cutoff: f64::INFINITY })
    }

    /// Effective near-pole resolution `h / refinement`.
    pub fn effective_pitch(&self) -> f64 {
        self.mesh.h / self.refinement as f64
    }

    /// Distance from `y` to the boundary nodes of `Ω̃_0`.
    pub fn dist_to_outer_boundary(&self, y: Vec3) -> f64 {
        let m = self.mesh;
        let mut d = f64::INFINITY;
        for &n in &m.augmented.active {
            if m.is_dirichlet(n, View::Augmented) {
                d = d.min((m.node_pos(n) - y).norm());
            }
        }
        d
    }

    /// Pole spec for `y` in the pole region (`σ₀ = I`, `H = Γ`).
    pub fn slab_pole(&self, y: Vec3) -> Result<PoleSpec> {
        let dom = &self.mesh.domain;
        if !dom.in_pole_region(y) {
            return Err(Error::PoleOutsideRegion(y.0));
        }
        let c = (0.9 * dom.slab.dist_to_surface(y)).min(self.max_cutoff);
        let kernel = FrozenCoefficients::single_phase(Complex64::new(1.0, 0.0), Mat3::identity(), y)?;
        Ok(PoleSpec { pole: y, kernel, cutoff: c, regime: Regime::Slab })
    }

    /// Pole spec with a two-phase kernel frozen at `p` on the flat portion of
    /// `∂Ω_m`: `γ` from the outer layer (or slab for `m = 0`), `γ̃` from the
    /// inner layer, `e₃` along the inward normal.
    pub fn interface_pole(&self, m: usize, p: Vec3, y: Vec3, cutoff: f64) -> Result<PoleSpec> {
        let portion = self
            .mesh
            .domain
            .base
            .portions
            .get(m)
            .ok_or_else(|| Error::InvalidInput(format!("no portion on boundary {m}")))?;
        let inward = -portion.normal;
        let outer = self.adm.affine(m).eval(p);
        let inner = self.adm.affine(m + 1).eval(p);
        let a = self.adm.anisotropy_at(m + 1, p);
        let kernel = FrozenCoefficients::new(outer, inner, a, p, inward)?;
        if kernel.to_frame(y)[2] == 0.0 {
            return Err(Error::OnInterface);
        }
        Ok(PoleSpec { pole: y, kernel, cutoff, regime: Regime::Interface { boundary: m } })
    }

    /// Pole spec with a single-phase kernel frozen at the pole.
    pub fn interior_pole(&self, y: Vec3, cutoff: f64) -> Result<PoleSpec> {
        let layer = self.mesh.domain.layer_of_interior_point(y).ok_or(Error::OutsideDomain(y.0))?;
        let kernel =
            FrozenCoefficients::single_phase(self.adm.gamma_at(layer, y), self.adm.anisotropy_at(layer, y), y)?;
        Ok(PoleSpec { pole: y, kernel, cutoff, regime: Regime::Interior })
    }

    /// Green function with pole `y` in the pole region.
    pub fn compute_green(&self, y: Vec3) -> Result<GreenField> {
        Ok(self.solve(&[self.slab_pole(y)?])?.pop().expect("one field"))
    }

    fn coefficient_differs(&self, c: usize, kernel: &FrozenCoefficients) -> bool {
        let m = self.mesh;
        let layer = m.layer(c);
        let o = m.cell_origin(c);
        let mut pts: Vec<Vec3> = crate::mesh::CORNERS
            .iter()
            .map(|k| o + Vec3::new(k[0] as f64, k[1] as f64, k[2] as f64).scale(m.h))
            .collect();
        pts.push(m.cell_center(c));
        pts.iter().any(|&x| {
            let s = self.adm.sigma_at(layer, x);
            let center = m.cell_center(c);
            let (r0, i0) = kernel.sigma0(center);
            s.re.sub(&r0).max_abs() != 0.0 || s.im.sub(&i0).max_abs() != 0.0
        })
    }

    fn cell_rule(&self, spec: &PoleSpec, c: usize) -> CellRule {
        let m = self.mesh;
        let (near, _) = box_distance_range(spec.pole, m.cell_origin(c), m.h);
        let s = if near <= 0.0 { self.refinement } else { ((m.h / near).ceil() as usize).clamp(1, self.refinement) };
        let ann = Cutoff { center: spec.pole, radius: spec.cutoff }.touches_annulus(m.cell_origin(c), m.h);
        let s = if ann { s.max((2.0 * m.h / spec.cutoff).ceil() as usize).min(self.refinement) } else { s };
        CellRule { subdivisions: s, points: if near < 2.0 * m.h || ann { 3 } else { 2 } }
    }

    /// Weak load of `W` for `spec`.
    fn load(&self, spec: &PoleSpec) -> Vec<Complex64> {
        let m = self.mesh;
        let cut = Cutoff { center: spec.pole, radius: spec.cutoff };
        let k = spec.kernel;
        let y = spec.pole;
        if k.is_single_phase() {
            let cells: Vec<usize> = m
                .cells_in(View::Augmented)
                .filter(|&c| box_distance_range(y, m.cell_origin(c), m.h).0 < spec.cutoff)
                .collect();
            let differs: Vec<bool> = cells.iter().map(|&c| self.coefficient_differs(c, &k)).collect();
            let flagged: std::collections::HashMap<usize, bool> = cells.iter().copied().zip(differs).collect();
            let (s0r, s0i) = k.sigma0(y);
            let annulus_subdivisions =
                ((4.0 * m.h / (spec.cutoff - cut.inner())).ceil() as usize).clamp(2, self.refinement);
            assemble_load(
                m,
                View::Augmented,
                cells.iter().copied(),
                &|c| {
                    if flagged[&c] {
                        self.cell_rule(spec, c)
                    } else if cut.touches_annulus(m.cell_origin(c), m.h) {
                        CellRule { subdivisions: annulus_subdivisions, points: 3 }
                    } else {
                        CellRule { subdivisions: 1, points: 1 }
                    }
                },
                &|c, x| {
                    let mut flux = [C0; 3];
                    let mut dens = C0;
                    let rho = (x - y).norm();
                    if rho == 0.0 {
                        return (flux, dens);
                    }
                    let in_annulus = rho > cut.inner() && rho < spec.cutoff;
                    if in_annulus {
                        let h = k.value(x, y).expect("off pole");
                        let gh = k.grad_x(x, y).expect("off pole");
                        let dchi = cut.grad(x);
                        let hess = cut.hessian(x);
                        let ar = s0r.mul_vec(dchi);
                        let ai = s0i.mul_vec(dchi);
                        let mut tr_r = 0.0;
                        let mut tr_i = 0.0;
                        for i in 0..3 {
                            for j in 0..3 {
                                tr_r += s0r.0[i][j] * hess.0[j][i];
                                tr_i += s0i.0[i][j] * hess.0[j][i];
                            }
                        }
                        let mut sdot = C0;
                        for i in 0..3 {
                            sdot += Complex64::new(ar[i], ai[i]) * gh[i];
                        }
                        dens = sdot * 2.0 + h * Complex64::new(tr_r, tr_i);
                    }
                    if flagged[&c] {
                        let chi = cut.value(x);
                        if chi > 0.0 {
                            let layer = m.layer(c);
                            let s = self.adm.sigma_at(layer, x);
                            let dr = s.re.sub(&s0r);
                            let di = s.im.sub(&s0i);
                            let gh = k.grad_x(x, y).expect("off pole");
                            let hv = if in_annulus { k.value(x, y).expect("off pole") } else { C0 };
                            let dchi = cut.grad(x);
                            let gchi: [Complex64; 3] = std::array::from_fn(|i| gh[i] * chi + hv * dchi[i]);
                            for i in 0..3 {
                                for j in 0..3 {
                                    flux[i] -= Complex64::new(dr.0[i][j], di.0[i][j]) * gchi[j];
                                }
                            }
                        }
                    }
                    (flux, dens)
                },
            )
        } else {
            assemble_load(m, View::Augmented, m.cells_in(View::Augmented), &|c| self.cell_rule(spec, c), &|c, x| {
                let rho = (x - y).norm();
                if rho == 0.0 {
                    return ([C0; 3], C0);
                }
                let chi = cut.value(x);
                let dchi = cut.grad(x);
                let gh = k.grad_x(x, y).expect("off pole and interface");
                let hv = k.value(x, y).expect("off pole and interface");
                let (s0r, s0i) = k.sigma0(x);
                let s = self.adm.sigma_at(m.layer(c), x);
                let dr = s.re.sub(&s0r);
                let di = s.im.sub(&s0i);
                let outer: [Complex64; 3] = std::array::from_fn(|i| gh[i] * (1.0 - chi) - hv * dchi[i]);
                let inner: [Complex64; 3] = std::array::from_fn(|i| gh[i] * chi + hv * dchi[i]);
                let mut flux = [C0; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        flux[i] += Complex64::new(s0r.0[i][j], s0i.0[i][j]) * outer[j]
                            - Complex64::new(dr.0[i][j], di.0[i][j]) * inner[j];
                    }
                }
                (flux, C0)
            })
        }
    }

    /// Solves for several poles sharing the factorization.
    pub fn solve(&self, specs: &[PoleSpec]) -> Result<Vec<GreenField>> {
        for s in specs {
            if !(s.cutoff > 0.0) {
                return Err(Error::InvalidInput("cutoff radius must be positive".into()));
            }
            let d = self.dist_to_outer_boundary(s.pole);
            if s.cutoff >= d {
                return Err(Error::InvalidInput(format!(
                    "cutoff radius {} reaches the outer boundary (distance {d})",
                    s.cutoff
                )));
            }
        }
        let loads: Vec<Vec<Complex64>> = specs.par_iter().map(|s| self.load(s)).collect();
        let n = self.sys.n_local();
        let mut out = Vec::with_capacity(specs.len());
        for (chunk_specs, chunk_loads) in specs.chunks(16).zip(loads.chunks(16)) {
            let cases: Vec<(Vec<Complex64>, Option<Vec<Complex64>>)> =
                chunk_loads.iter().map(|l| (vec![C0; n], Some(l.clone()))).collect();
            let sols = self.sys.solve_many(&cases)?;
            for (s, sol) in chunk_specs.iter().zip(sols) {
                out.push(GreenField {
                    pole: s.pole,
                    kernel: s.kernel,
                    cutoff: Cutoff { center: s.pole, radius: s.cutoff },
                    regime: s.regime,
                    regular: to_field(self.mesh, View::Augmented, &sol.local),
                    residual: sol.residual,
                });
            }
        }
        Ok(out)
    }

    /// Maximum of `|G|` over the boundary nodes of `Ω̃_0`.
    pub fn boundary_max(&self, g: &GreenField) -> Result<f64> {
        let m = self.mesh;
        let mut mx: f64 = 0.0;
        for &n in &m.augmented.active {
            if m.is_dirichlet(n, View::Augmented) {
                let x = m.node_pos(n);
                let v = g.regular.values[n] + g.singular_value(x)?;
                mx = mx.max(v.norm());
            }
        }
        Ok(mx)
    }
}

/// Empirical constants of the pointwise bounds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub h: f64,
    pub samples_used: usize,
    pub samples_excluded: usize,
    /// `sup |G|·|x − y|`.
    pub value_constant: f64,
    /// `sup |∇G|·|x − y|²`.
    pub gradient_constant: f64,
}

/// Empirical bound constants of `G` over sample points; points closer than
/// `3h` to the pole are excluded.
pub fn pointwise_bound_report(mesh: &StructuredMesh, g: &GreenField, samples: &[Vec3]) -> Result<BoundReport> {
    let mut rep =
        BoundReport { h: mesh.h, samples_used: 0, samples_excluded: 0, value_constant: 0.0, gradient_constant: 0.0 };
    for &x in samples {
        let r = (x - g.pole).norm();
        if r < 3.0 * mesh.h {
            rep.samples_excluded += 1;
            continue;
        }
        let v = g.value(mesh, x)?;
        let gr = g.grad(mesh, x)?;
        let gn = gr.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        rep.value_constant = rep.value_constant.max(v.norm() * r);
        rep.gradient_constant = rep.gradient_constant.max(gn * r * r);
        rep.samples_used += 1;
    }
    Ok(rep)
}

/// One rung of the asymptotic ladder.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticRung {
    pub r: f64,
    pub x: [f64; 3],
    pub y: [f64; 3],
    pub value: f64,
    pub gradient: f64,
    pub mixed: f64,
}

/// Normalized remainders along a ladder and fitted decay exponents.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub boundary: usize,
    pub interface_point: [f64; 3],
    pub rungs: Vec<AsymptoticRung>,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub value_monotone: bool,
    pub gradient_monotone: bool,
    pub mixed_monotone: bool,
}

/// Remainders `G − H` across the interface on `∂Ω_m`, `m ≥ 1`, along the
/// ladder `ȳ = P − r e₃`, `x̄ = P + r e₃` (frame `e₃` = inward normal).
pub fn asymptotic_exponent_fit(solver: &GreenSolver, m: usize, ladder: &[f64]) -> Result<AsymptoticReport> {
    let mesh = solver.mesh;
    let dom = &mesh.domain;
    if m == 0 || m > dom.base.n_layers() {
        return Err(Error::InvalidInput(format!("interface index {m} out of range")));
    }
    let floor = 4.0 * solver.effective_pitch();
    let limit = dom.r0() / 8.0;
    for &r in ladder {
        if r < floor {
            return Err(Error::LadderTooFine { r, floor });
        }
        if !(r > 0.0 && r < limit) {
            return Err(Error::OffsetOutOfRange { offset: r, limit });
        }
    }
    let portion = dom.base.portions[m];
    let p = portion.center();
    let e3 = -portion.normal;
    let rmax = ladder.iter().cloned().fold(0.0, f64::max);
    let room = solver.dist_to_outer_boundary(p) - rmax;
    let cutoff = (0.9 * room).min(solver.max_cutoff);
    if (Cutoff { center: p, radius: cutoff }).inner() < 2.5 * rmax {
        return Err(Error::InvalidInput("cutoff ball too small for the ladder".into()));
    }
    let mut rungs = Vec::new();
    for &r in ladder {
        let y = p - e3.scale(r);
        let x = p + e3.scale(r);
        let delta = (0.5 * mesh.h).min(0.5 * r);
        let mut specs = vec![solver.interface_pole(m, p, y, cutoff)?];
        for d in 0..3 {
            let e = Vec3::unit(d).scale(delta);
            specs.push(solver.interface_pole(m, p, y + e, cutoff)?);
            specs.push(solver.interface_pole(m, p, y - e, cutoff)?);
        }
        let fields = solver.solve(&specs)?;
        let dist = (x - y).norm();
        let v = fields[0].remainder(mesh, x)?.norm() * dist;
        let g = fields[0].remainder_grad(mesh, x)?;
        let gn = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() * dist * dist;
        let mut mixed = 0.0;
        for d in 0..3 {
            let gp = fields[1 + 2 * d].remainder_grad(mesh, x)?;
            let gm = fields[2 + 2 * d].remainder_grad(mesh, x)?;
            for i in 0..3 {
                mixed += ((gp[i] - gm[i]) / (2.0 * delta)).norm_sqr();
            }
        }
        rungs.push(AsymptoticRung {
            r,
            x: x.0,
            y: y.0,
            value: v,
            gradient: gn,
            mixed: mixed.sqrt() * dist * dist * dist,
        });
    }
    let mut sorted = rungs.clone();
    sorted.sort_by(|a, b| a.r.partial_cmp(&b.r).expect("finite"));
    let dists: Vec<f64> = sorted.iter().map(|r| 2.0 * r.r).collect();
    let fit = |f: &dyn Fn(&AsymptoticRung) -> f64| {
        let v: Vec<f64> = sorted.iter().map(f).collect();
        loglog_slope(&dists, &v)
    };
    let mono = |f: &dyn Fn(&AsymptoticRung) -> f64| sorted.windows(2).all(|w| f(&w[0]) < f(&w[1]));
    Ok(AsymptoticReport {
        boundary: m,
        interface_point: p.0,
        theta1: fit(&|r| r.value),
        theta2: fit(&|r| r.gradient),
        theta3: fit(&|r| r.mixed),
        value_monotone: mono(&|r| r.value),
        gradient_monotone: mono(&|r| r.gradient),
        mixed_monotone: mono(&|r| r.mixed),
        rungs,
    })
}
