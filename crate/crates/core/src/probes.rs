//! Probe functionals built from Green functions: singular solutions `S_k`
//! and their pole derivatives, the misfit functional, the peeling split and
//! the three-sphere check.

use crate::admittivity::Admittivity;
use crate::dtn::ForwardSolver;
use crate::error::{Error, Result};
use crate::fem::{assemble_load, cell_points, to_field, CellRule, FemSystem};
use crate::fit::loglog_slope;
use crate::geometry::Aabb;
use crate::green::{box_distance_range, GreenField, GreenSolver, PoleSpec};
use crate::mesh::{DiscreteField, StructuredMesh, View};
use crate::quadrature::{ball_rule, gauss_box};
use crate::scalar::Vec3;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// Gradient in the pole variable: a Green field or a central difference of two.
#[derive(Clone, Copy)]
pub enum PoleGradient<'g> {
    Field(&'g GreenField),
    Difference { plus: &'g GreenField, minus: &'g GreenField, step: f64 },
}

impl<'g> PoleGradient<'g> {
    fn grad(&self, mesh: &StructuredMesh, c: usize, x: Vec3, xi: [f64; 3]) -> Result<[Complex64; 3]> {
        match self {
            PoleGradient::Field(g) => g.grad_in_cell(mesh, c, x, xi),
            PoleGradient::Difference { plus, minus, step } => {
                let a = plus.grad_in_cell(mesh, c, x, xi)?;
                let b = minus.grad_in_cell(mesh, c, x, xi)?;
                Ok(std::array::from_fn(|i| (a[i] - b[i]) / (2.0 * step)))
            }
        }
    }

    fn fields(&self) -> Vec<&'g GreenField> {
        match self {
            PoleGradient::Field(g) => vec![g],
            PoleGradient::Difference { plus, minus, .. } => vec![plus, minus],
        }
    }
}

/// Quadrature plan for the `S_k` integrand: the assembly rule on cells where
/// every field is purely discrete, refined near poles otherwise.
fn probe_rule(mesh: &StructuredMesh, fields: &[&GreenField], c: usize, refinement: usize) -> CellRule {
    let mut near = f64::INFINITY;
    let mut regular = true;
    for g in fields {
        if !g.cell_is_regular(mesh, c) {
            regular = false;
            near = near.min(box_distance_range(g.pole, mesh.cell_origin(c), mesh.h).0);
        }
    }
    if regular {
        return CellRule { subdivisions: 1, points: 2 };
    }
    let s = if near <= 0.0 { refinement } else { ((2.0 * mesh.h / near).ceil() as usize).clamp(1, refinement) };
    CellRule { subdivisions: s, points: 3 }
}

/// `Σ_b ∫_{cells in bucket b} (σ⁽¹⁾ − σ⁽²⁾)∇G₁·∇G₂` for a cell classifier.
pub fn split_integral(
    mesh: &StructuredMesh,
    adm1: &Admittivity,
    adm2: &Admittivity,
    g1: PoleGradient,
    g2: PoleGradient,
    bucket: &(dyn Fn(usize) -> Option<usize> + Sync),
    n_buckets: usize,
    refinement: usize,
) -> Result<Vec<Complex64>> {
    let mut fields = g1.fields();
    fields.extend(g2.fields());
    let cells: Vec<(usize, usize)> = mesh.cells_in(View::Augmented).filter_map(|c| bucket(c).map(|b| (c, b))).collect();
    let parts: Vec<Result<(usize, Complex64)>> = cells
        .par_iter()
        .map(|&(c, b)| {
            let layer = mesh.layer(c);
            let mut s = C0;
            for (x, w, xi) in cell_points(mesh, c, probe_rule(mesh, &fields, c, refinement)) {
                let s1 = adm1.sigma_at(layer, x);
                let s2 = adm2.sigma_at(layer, x);
                let a = g1.grad(mesh, c, x, xi)?;
                let bg = g2.grad(mesh, c, x, xi)?;
                for i in 0..3 {
                    for j in 0..3 {
                        let d = Complex64::new(s1.re.0[i][j] - s2.re.0[i][j], s1.im.0[i][j] - s2.im.0[i][j]);
                        s += d * a[j] * bg[i] * w;
                    }
                }
            }
            Ok((b, s))
        })
        .collect();
    let mut out = vec![C0; n_buckets];
    for p in parts {
        let (b, s) = p?;
        out[b] += s;
    }
    Ok(out)
}

/// Whether cell `c` belongs to `𝒰_k` (layers `k+1, …`).
pub fn in_u(mesh: &StructuredMesh, c: usize, k: usize) -> bool {
    mesh.cell_active(c, View::Augmented) && mesh.layer(c) > k
}

/// Distance from `y` to `𝒰_k`.
pub fn dist_to_u(mesh: &StructuredMesh, k: usize, y: Vec3) -> f64 {
    let dom = &mesh.domain.base;
    if k >= dom.boxes.len() {
        return f64::INFINITY;
    }
    dom.boxes[k].dist_outside(y)
}

/// Green solvers of an admittivity pair sharing a mesh.
pub struct ProbeContext<'a> {
    pub mesh: &'a StructuredMesh,
    pub adm1: &'a Admittivity,
    pub adm2: &'a Admittivity,
    pub green1: GreenSolver<'a>,
    pub green2: GreenSolver<'a>,
}

impl<'a> ProbeContext<'a> {
    pub fn new(adm1: &'a Admittivity, adm2: &'a Admittivity, mesh: &'a StructuredMesh) -> Result<Self> {
        Ok(Self { mesh, adm1, adm2, green1: GreenSolver::new(adm1, mesh)?, green2: GreenSolver::new(adm2, mesh)? })
    }

    pub fn set_refinement(&mut self, r: usize) {
        self.green1.refinement = r;
        self.green2.refinement = r;
    }

    pub fn refinement(&self) -> usize {
        self.green1.refinement
    }

    fn check_pole(&self, k: usize, y: Vec3) -> Result<()> {
        let d = dist_to_u(self.mesh, k, y);
        let min = 2.0 * self.mesh.h;
        if d < min {
            return Err(Error::PoleTooClose { dist: d, min });
        }
        Ok(())
    }

    /// Pole spec for `y` under either solver (slab regime inside the pole region).
    pub fn pole(&self, solver: &GreenSolver, y: Vec3) -> Result<PoleSpec> {
        solver.auto_pole(y)
    }

    /// `S_k(y, z)`.
    pub fn eval_sk(&self, k: usize, y: Vec3, z: Vec3) -> Result<Complex64> {
        self.check_pole(k, y)?;
        self.check_pole(k, z)?;
        let g1 = self.green1.solve(&[self.pole(&self.green1, y)?])?.pop().expect("one field");
        let g2 = self.green2.solve(&[self.pole(&self.green2, z)?])?.pop().expect("one field");
        self.sk_from_fields(k, PoleGradient::Field(&g1), PoleGradient::Field(&g2))
    }

    pub fn sk_from_fields(&self, k: usize, g1: PoleGradient, g2: PoleGradient) -> Result<Complex64> {
        let mesh = self.mesh;
        Ok(split_integral(
            mesh,
            self.adm1,
            self.adm2,
            g1,
            g2,
            &|c| in_u(mesh, c, k).then_some(0),
            1,
            self.refinement(),
        )?[0])
    }

    /// Green fields at `y ± step e_d` sharing the cutoff of `y`.
    pub fn shifted_fields(
        &self,
        solver: &GreenSolver,
        y: Vec3,
        d: usize,
        step: f64,
    ) -> Result<(GreenField, GreenField)> {
        let mut base = self.pole(solver, y)?;
        let e = Vec3::unit(d).scale(step);
        for p in [y + e, y - e] {
            if let Ok(s) = solver.auto_pole(p) {
                base.cutoff = base.cutoff.min(s.cutoff);
            }
        }
        let mk = |p: Vec3| PoleSpec { pole: p, ..base };
        let mut f = solver.solve(&[mk(y + e), mk(y - e)])?;
        let minus = f.pop().expect("two fields");
        let plus = f.pop().expect("two fields");
        Ok((plus, minus))
    }

    /// `∂_{y_h} ∂_{z_l} S_k(y, z)` by central differences of Green fields.
    pub fn eval_sk_mixed(
        &self,
        k: usize,
        y: Vec3,
        z: Vec3,
        h_idx: usize,
        l_idx: usize,
        step: f64,
    ) -> Result<Complex64> {
        self.check_pole(k, y)?;
        self.check_pole(k, z)?;
        let (p1, m1) = self.shifted_fields(&self.green1, y, h_idx, step)?;
        let (p2, m2) = self.shifted_fields(&self.green2, z, l_idx, step)?;
        self.sk_from_fields(
            k,
            PoleGradient::Difference { plus: &p1, minus: &m1, step },
            PoleGradient::Difference { plus: &p2, minus: &m2, step },
        )
    }
}

impl<'a> GreenSolver<'a> {
    /// Slab regime inside the pole region, otherwise a single-phase kernel
    /// frozen at the pole with the largest admissible cutoff.
    pub fn auto_pole(&self, y: Vec3) -> Result<PoleSpec> {
        if self.mesh.domain.in_pole_region(y) {
            return self.slab_pole(y);
        }
        let c = (0.9 * self.dist_to_outer_boundary(y)).min(self.max_cutoff);
        self.interior_pole(y, c)
    }
}

/// Tensor Gauss grid of `n³` poles on a box, with weights.
pub fn pole_grid(b: &Aabb, n: usize) -> Vec<(Vec3, f64)> {
    gauss_box(n, b.lo, b.hi)
}

/// Result of the misfit functional.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MisfitResult {
    pub poles_y: Vec<[f64; 3]>,
    pub poles_z: Vec<[f64; 3]>,
    pub weights_y: Vec<f64>,
    pub weights_z: Vec<f64>,
    /// `S₀(y_a, z_b)` from the boundary form, row-major over `(a, b)`.
    pub s0: Vec<Complex64>,
    /// Same from the volume form, when requested.
    pub s0_volume: Option<Vec<Complex64>>,
    pub j: f64,
}

impl MisfitResult {
    /// Largest relative difference between the boundary and volume forms.
    pub fn form_mismatch(&self) -> Option<f64> {
        let v = self.s0_volume.as_ref()?;
        Some(
            self.s0
                .iter()
                .zip(v)
                .map(|(a, b)| {
                    let d = a.norm().max(b.norm());
                    if d == 0.0 {
                        0.0
                    } else {
                        (a - b).norm() / d
                    }
                })
                .fold(0.0, f64::max),
        )
    }
}

/// Misfit over pole grids in the pole region.
pub fn misfit(
    ctx: &ProbeContext,
    grid_y: &[(Vec3, f64)],
    grid_z: &[(Vec3, f64)],
    with_volume: bool,
) -> Result<MisfitResult> {
    let mesh = ctx.mesh;
    for (p, _) in grid_y.iter().chain(grid_z) {
        if !mesh.domain.in_pole_region(*p) {
            return Err(Error::GridOutsidePoleRegion);
        }
    }
    let specs1 = grid_y.iter().map(|(p, _)| ctx.green1.slab_pole(*p)).collect::<Result<Vec<_>>>()?;
    let specs2 = grid_z.iter().map(|(p, _)| ctx.green2.slab_pole(*p)).collect::<Result<Vec<_>>>()?;
    let g1 = ctx.green1.solve(&specs1)?;
    let g2 = ctx.green2.solve(&specs2)?;
    let f1 = ForwardSolver::new(ctx.adm1, mesh)?;
    let f2 = ForwardSolver::new(ctx.adm2, mesh)?;
    let trace = |g: &GreenField| -> Vec<Complex64> { f1.space.nodes.iter().map(|&n| g.regular.values[n]).collect() };
    let base_field = |g: &GreenField| -> DiscreteField {
        let mut u = DiscreteField::zeros(mesh);
        for &n in &mesh.base.active {
            u.values[n] = g.regular.values[n];
        }
        u
    };
    let mut t1 = Vec::with_capacity(g1.len());
    for g in &g1 {
        if !ctx.green1.support_outside_base(g) {
            return Err(Error::InvalidInput("cutoff ball of a slab pole reaches Ω".into()));
        }
        let u = base_field(g);
        t1.push((trace(g), f1.neumann(&u)));
    }
    let mut t2 = Vec::with_capacity(g2.len());
    for g in &g2 {
        if !ctx.green2.support_outside_base(g) {
            return Err(Error::InvalidInput("cutoff ball of a slab pole reaches Ω".into()));
        }
        let u = base_field(g);
        t2.push((trace(g), f2.neumann(&u)));
    }
    let dot = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<Complex64>();
    let mut s0 = Vec::with_capacity(g1.len() * g2.len());
    let mut j = 0.0;
    for (a, (tr1, fl1)) in t1.iter().enumerate() {
        for (b, (tr2, fl2)) in t2.iter().enumerate() {
            let s = dot(tr2, fl1) - dot(tr1, fl2);
            j += grid_y[a].1 * grid_z[b].1 * s.norm_sqr();
            s0.push(s);
        }
    }
    let s0_volume = if with_volume {
        let mut v = Vec::with_capacity(s0.len());
        for a in &g1 {
            for b in &g2 {
                v.push(ctx.sk_from_fields(0, PoleGradient::Field(a), PoleGradient::Field(b))?);
            }
        }
        Some(v)
    } else {
        None
    };
    Ok(MisfitResult {
        poles_y: grid_y.iter().map(|p| p.0 .0).collect(),
        poles_z: grid_z.iter().map(|p| p.0 .0).collect(),
        weights_y: grid_y.iter().map(|p| p.1).collect(),
        weights_z: grid_z.iter().map(|p| p.1).collect(),
        s0,
        s0_volume,
        j,
    })
}

impl<'a> GreenSolver<'a> {
    /// Whether the cutoff ball of `g` avoids every cell of `Ω`.
    pub fn support_outside_base(&self, g: &GreenField) -> bool {
        let m = self.mesh;
        m.cells_in(View::Base).all(|c| g.cell_is_regular(m, c))
    }
}

/// Which functional the peeling split decomposes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeelingVariant {
    Value,
    MixedNn,
}

/// One rung of the peeling split.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeelingRung {
    pub r: f64,
    pub w: [f64; 3],
    pub s: Complex64,
    pub i1: Complex64,
    pub i2: Complex64,
    /// Cells assigned to `I₁` (by cell center).
    pub cells_i1: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeelingReport {
    pub interface: usize,
    pub variant: PeelingVariant,
    pub rho: f64,
    pub point: [f64; 3],
    /// Largest distance from a boundary cell center of the `I₁` region to the ball surface.
    pub membership_error: f64,
    pub rungs: Vec<PeelingRung>,
    /// Slope of `log |I₁|` against `log r` (None with fewer than two rungs).
    pub slope_i1: Option<f64>,
}

/// `S_{M−1}(w, w) = I₁ + I₂` at `w = P_M + rν`, `P_M` the center of the flat
/// portion on `∂Ω_{M−1}` and `ν` its outward normal.
pub fn peeling_split(ctx: &ProbeContext, m: usize, ladder: &[f64], variant: PeelingVariant) -> Result<PeelingReport> {
    let mesh = ctx.mesh;
    let dom = &mesh.domain.base;
    if m == 0 || m > dom.boxes.len() {
        return Err(Error::InvalidInput(format!("interface index {m} out of range")));
    }
    let portion = dom.portions[m - 1];
    let p = portion.center();
    let nu = portion.normal;
    let r0 = dom.r0;
    let rho = r0 / 4.0;
    let floor = 4.0 * ctx.green1.effective_pitch();
    for &r in ladder {
        if r < floor {
            return Err(Error::LadderTooFine { r, floor });
        }
        if !(r < r0 / 2.0) {
            return Err(Error::OffsetOutOfRange { offset: r, limit: r0 / 2.0 });
        }
    }
    let ball = |c: usize| (mesh.cell_center(c) - p).norm() < rho && mesh.layer(c) == m;
    let bucket = |c: usize| {
        if !in_u(mesh, c, m - 1) {
            None
        } else if ball(c) {
            Some(0)
        } else {
            Some(1)
        }
    };
    let mut membership_error: f64 = 0.0;
    let cells_i1: Vec<usize> = mesh.cells_in(View::Base).filter(|&c| ball(c)).collect();
    for &c in &cells_i1 {
        let far = box_distance_range(p, mesh.cell_origin(c), mesh.h).1;
        if far > rho {
            membership_error = membership_error.max(far - rho);
        }
    }
    let mut rungs = Vec::new();
    for &r in ladder {
        let w = p + nu.scale(r);
        let parts = match variant {
            PeelingVariant::Value => {
                let g1 = ctx.green1.solve(&[ctx.green1.auto_pole(w)?])?.pop().expect("one field");
                let g2 = ctx.green2.solve(&[ctx.green2.auto_pole(w)?])?.pop().expect("one field");
                split_integral(
                    mesh,
                    ctx.adm1,
                    ctx.adm2,
                    PoleGradient::Field(&g1),
                    PoleGradient::Field(&g2),
                    &bucket,
                    2,
                    ctx.refinement(),
                )?
            }
            PeelingVariant::MixedNn => {
                let axis = portion.face.axis();
                let step = (0.5 * mesh.h).min(0.5 * r);
                let (p1, m1) = ctx.shifted_fields(&ctx.green1, w, axis, step)?;
                let (p2, m2) = ctx.shifted_fields(&ctx.green2, w, axis, step)?;
                split_integral(
                    mesh,
                    ctx.adm1,
                    ctx.adm2,
                    PoleGradient::Difference { plus: &p1, minus: &m1, step },
                    PoleGradient::Difference { plus: &p2, minus: &m2, step },
                    &bucket,
                    2,
                    ctx.refinement(),
                )?
            }
        };
        rungs.push(PeelingRung {
            r,
            w: w.0,
            s: parts[0] + parts[1],
            i1: parts[0],
            i2: parts[1],
            cells_i1: cells_i1.len(),
        });
    }
    let slope_i1 = (rungs.len() >= 2).then(|| {
        let rs: Vec<f64> = rungs.iter().map(|g| g.r).collect();
        let vs: Vec<f64> = rungs.iter().map(|g| g.i1.norm()).collect();
        loglog_slope(&rs, &vs)
    });
    Ok(PeelingReport { interface: m, variant, rho, point: p.0, membership_error, rungs, slope_i1 })
}

/// Outcome of the three-sphere check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThreeSphereReport {
    pub center: [f64; 3],
    pub radii: [f64; 3],
    pub norms: [f64; 3],
    pub s: f64,
    pub lambda: f64,
    pub delta: f64,
    /// `‖v‖_{r₂} / (‖v‖_{r₁}^δ ‖v‖_{r₃}^{1−δ})`; zero when `v` vanishes on the large ball.
    pub c_min: f64,
    pub trivial: bool,
    pub residual: Option<f64>,
}

/// `δ = ((2r₂/λ)^{−s} − r₃^{−s}) / (r₁^{−s} − r₃^{−s})`.
pub fn three_sphere_delta(r: [f64; 3], s: f64, lambda: f64) -> f64 {
    ((2.0 * r[1] / lambda).powf(-s) - r[2].powf(-s)) / (r[0].powf(-s) - r[2].powf(-s))
}

/// `‖v‖_{L²(B_r(x0))}` of the trilinear interpolant by a spherical product rule.
pub fn ball_norm(mesh: &StructuredMesh, view: View, v: &DiscreteField, x0: Vec3, r: f64) -> Result<f64> {
    let mut s = 0.0;
    for (x, w) in ball_rule(x0, r, 16, 16, 32) {
        let val = v.value_at(mesh, view, x).ok_or(Error::BallOutsideDomain)?;
        s += val.norm_sqr() * w;
    }
    Ok(s.sqrt())
}

pub fn three_sphere_check(
    mesh: &StructuredMesh,
    view: View,
    v: &DiscreteField,
    x0: Vec3,
    radii: [f64; 3],
    s: f64,
    lambda: f64,
    system: Option<&FemSystem>,
) -> Result<ThreeSphereReport> {
    let [r1, r2, r3] = radii;
    if !(0.0 < r1 && r1 < r2 && r2 < r3) {
        return Err(Error::RadiiOrdering);
    }
    let bbox = match view {
        View::Augmented => mesh.domain.bbox,
        View::Base => *mesh.domain.base.omega(),
    };
    for a in 0..3 {
        if x0[a] - r3 < bbox.lo[a] || x0[a] + r3 > bbox.hi[a] {
            return Err(Error::BallOutsideDomain);
        }
    }
    let residual = match system {
        Some(sys) => {
            let r = sys.free_residual(mesh, v, None);
            if r > 1e-8 {
                return Err(Error::NotASolution(r));
            }
            Some(r)
        }
        None => None,
    };
    let norms =
        [ball_norm(mesh, view, v, x0, r1)?, ball_norm(mesh, view, v, x0, r2)?, ball_norm(mesh, view, v, x0, r3)?];
    let delta = three_sphere_delta(radii, s, lambda);
    let trivial = norms[2] == 0.0;
    let c_min = if trivial { 0.0 } else { norms[1] / (norms[0].powf(delta) * norms[2].powf(1.0 - delta)) };
    Ok(ThreeSphereReport { center: x0.0, radii, norms, s, lambda, delta, c_min, trivial, residual })
}

/// Discrete field `s_h` solving the first-admittivity system with the load
/// `φ ↦ ∫_{𝒰_k}(σ⁽¹⁾ − σ⁽²⁾)∇G·∇φ` (`G` a second-admittivity Green field), or
/// the symmetric construction with the roles exchanged. Its nodal values
/// approximate `y ↦ S_k(y, z)` (resp. `z ↦ S_k(y, z)`).
#[derive(Clone, Debug)]
pub struct SingularSolutionField {
    pub k: usize,
    pub field: DiscreteField,
    /// Largest relative residual over free nodes of `𝒲_k` at distance ≥ 2h from `𝒰_k`.
    pub interior_residual: f64,
    pub nodes_checked: usize,
}

pub fn singular_solution_field(
    mesh: &StructuredMesh,
    own: &GreenSolver,
    other_adm: &Admittivity,
    k: usize,
    g: &GreenField,
    refinement: usize,
) -> Result<SingularSolutionField> {
    let adm = own.adm;
    let load = assemble_load(
        mesh,
        View::Augmented,
        mesh.cells_in(View::Augmented).filter(|&c| in_u(mesh, c, k)),
        &|c| probe_rule(mesh, &[g], c, refinement),
        &|c, x| {
            let layer = mesh.layer(c);
            let a = adm.sigma_at(layer, x);
            let b = other_adm.sigma_at(layer, x);
            let xi = mesh.local_coords(c, x);
            let gg = g.grad_in_cell(mesh, c, x, xi).unwrap_or([C0; 3]);
            let mut f = [C0; 3];
            for i in 0..3 {
                for j in 0..3 {
                    f[i] += Complex64::new(a.re.0[i][j] - b.re.0[i][j], a.im.0[i][j] - b.im.0[i][j]) * gg[j];
                }
            }
            (f, C0)
        },
    );
    let n = own.sys.n_local();
    let sol = own.sys.solve(vec![C0; n], Some(load))?;
    let field = to_field(mesh, View::Augmented, &sol.local);
    let ku = own.sys.k.matvec(&sol.local);
    let scale = own.sys.k.abs_matvec(&sol.local);
    let vn = &mesh.augmented;
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    let mut checked = 0;
    let top = &mesh.domain.base.boxes;
    for (l, &node) in vn.active.iter().enumerate() {
        if mesh.is_dirichlet(node, View::Augmented) {
            continue;
        }
        let x = mesh.node_pos(node);
        let d = if k < top.len() { top[k].dist_outside(x) } else { f64::INFINITY };
        if d < 2.0 * mesh.h * (1.0 - 1e-9) {
            continue;
        }
        num = num.max(ku[l].norm());
        den = den.max(scale[l]);
        checked += 1;
    }
    let interior_residual = if den == 0.0 { num } else { num / den };
    Ok(SingularSolutionField { k, field, interior_residual, nodes_checked: checked })
}
