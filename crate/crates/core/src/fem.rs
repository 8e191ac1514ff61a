//! Trilinear finite elements: assembly of the block system, Dirichlet and
//! source solves, variational fluxes.

use crate::admittivity::{Admittivity, BlockTensor};
use crate::error::{Error, Result};
use crate::geometry::FlatPortion;
use crate::linalg::{BlockLdlt, Csr};
use crate::mesh::{shape, shape_grad, DiscreteField, StructuredMesh, View};
use crate::quadrature::gauss_box;
use crate::scalar::Vec3;
use num_complex::Complex64;

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// Gauss points of the unit cube with `n` points per axis.
pub fn unit_rule(n: usize) -> Vec<([f64; 3], f64)> {
    gauss_box::<f64>(n, Vec3::zero(), Vec3::new(1.0, 1.0, 1.0)).into_iter().map(|(p, w)| (p.0, w)).collect()
}

/// Element stiffness `∫ 𝒞∇φ_a·∇φ_b` (real and imaginary parts) for cell `c`
/// with a pointwise coefficient, by 2×2×2 Gauss quadrature.
pub fn element_matrices(
    mesh: &StructuredMesh,
    c: usize,
    coef: &dyn Fn(Vec3) -> BlockTensor,
) -> ([[f64; 8]; 8], [[f64; 8]; 8]) {
    let mut kr = [[0.0; 8]; 8];
    let mut ki = [[0.0; 8]; 8];
    let h = mesh.h;
    let o = mesh.cell_origin(c);
    for (xi, w) in unit_rule(2) {
        let x = o + Vec3(xi).scale(h);
        let s = coef(x);
        let g = shape_grad(xi);
        let wt = w * h;
        for a in 0..8 {
            let ar = s.re.mul_vec(g[a]);
            let ai = s.im.mul_vec(g[a]);
            for b in a..8 {
                kr[a][b] += wt * ar.dot(g[b]);
                ki[a][b] += wt * ai.dot(g[b]);
            }
        }
    }
    for a in 0..8 {
        for b in 0..a {
            kr[a][b] = kr[b][a];
            ki[a][b] = ki[b][a];
        }
    }
    (kr, ki)
}

/// Coefficient of cell `c` for an admittivity (slab cells carry `I`).
pub fn cell_coefficient<'a>(
    adm: &'a Admittivity,
    mesh: &StructuredMesh,
    c: usize,
) -> impl Fn(Vec3) -> BlockTensor + 'a {
    let layer = mesh.layer(c);
    move |x| adm.sigma_at(layer, x)
}

/// Coefficient difference `σ⁽¹⁾ − σ⁽²⁾` on cell `c`.
pub fn cell_difference<'a>(
    a1: &'a Admittivity,
    a2: &'a Admittivity,
    mesh: &StructuredMesh,
    c: usize,
) -> impl Fn(Vec3) -> BlockTensor + 'a {
    let layer = mesh.layer(c);
    move |x| {
        let s1 = a1.sigma_at(layer, x);
        let s2 = a2.sigma_at(layer, x);
        BlockTensor { re: s1.re.sub(&s2.re), im: s1.im.sub(&s2.im) }
    }
}

/// Sparsity pattern (27-point stencil) over the active nodes of `view`.
fn pattern(mesh: &StructuredMesh, view: View) -> Csr {
    let vn = mesh.view(view);
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); vn.active.len()];
    for c in mesh.cells_in(view) {
        let nodes = mesh.cell_nodes(c).map(|n| vn.local[n] as usize);
        for &a in &nodes {
            rows[a].extend_from_slice(&nodes);
        }
    }
    for r in rows.iter_mut() {
        r.sort_unstable();
        r.dedup();
    }
    Csr::with_pattern(rows)
}

/// Assembles `∫ 𝒞∇u·∇φ` over the cells of `view` with a per-cell coefficient.
pub fn assemble_with<'a>(
    mesh: &StructuredMesh,
    view: View,
    coef: &dyn Fn(usize) -> Box<dyn Fn(Vec3) -> BlockTensor + 'a>,
) -> Csr {
    let vn = mesh.view(view);
    let mut k = pattern(mesh, view);
    for c in mesh.cells_in(view) {
        let f = coef(c);
        let (er, ei) = element_matrices(mesh, c, &*f);
        let nodes = mesh.cell_nodes(c).map(|n| vn.local[n] as usize);
        for a in 0..8 {
            for b in 0..8 {
                let p = k.pos(nodes[a], nodes[b]);
                k.re[p] += er[a][b];
                k.im[p] += ei[a][b];
            }
        }
    }
    k
}

/// Assembled stiffness of `adm` on `view`.
pub fn assemble(adm: &Admittivity, mesh: &StructuredMesh, view: View) -> Csr {
    assemble_with(mesh, view, &|c| Box::new(cell_coefficient(adm, mesh, c)))
}

/// Assembled stiffness of `σ⁽¹⁾ − σ⁽²⁾` on `view`.
pub fn assemble_difference(a1: &Admittivity, a2: &Admittivity, mesh: &StructuredMesh, view: View) -> Csr {
    assemble_with(mesh, view, &|c| Box::new(cell_difference(a1, a2, mesh, c)))
}

/// Assembled and factorized Dirichlet system on one view.
#[derive(Debug)]
pub struct FemSystem {
    pub view: View,
    /// Stiffness over all active nodes of the view (local numbering).
    pub k: Csr,
    /// Local indices of free (non-Dirichlet) nodes.
    pub free: Vec<usize>,
    /// Local index → position among free nodes (`u32::MAX` for Dirichlet nodes).
    pub free_pos: Vec<u32>,
    factor: BlockLdlt,
    /// Relative residual tolerance of solves.
    pub rtol: f64,
}

/// Solution of one solve together with its achieved relative residual.
#[derive(Clone, Debug)]
pub struct Solution {
    /// Values on the active nodes of the view (local numbering).
    pub local: Vec<Complex64>,
    pub residual: f64,
}

impl FemSystem {
    /// Assembles and factorizes the system of `adm` on `view`.
    pub fn new(adm: &Admittivity, mesh: &StructuredMesh, view: View) -> Result<Self> {
        Self::from_matrix(assemble(adm, mesh, view), mesh, view)
    }

    pub fn from_matrix(k: Csr, mesh: &StructuredMesh, view: View) -> Result<Self> {
        let vn = mesh.view(view);
        let mut free = Vec::new();
        let mut free_pos = vec![u32::MAX; vn.active.len()];
        for (l, &g) in vn.active.iter().enumerate() {
            if !mesh.is_dirichlet(g, view) {
                free_pos[l] = free.len() as u32;
                free.push(l);
            }
        }
        let rows: Vec<Vec<(usize, f64, f64)>> = free
            .iter()
            .map(|&l| {
                (k.ptr[l]..k.ptr[l + 1])
                    .filter_map(|p| {
                        let q = free_pos[k.col[p]];
                        (q != u32::MAX).then_some((q as usize, k.re[p], k.im[p]))
                    })
                    .collect()
            })
            .collect();
        let factor = BlockLdlt::factor(free.len(), &rows)?;
        Ok(Self { view, k, free, free_pos, factor, rtol: 1e-10 })
    }

    pub fn n_local(&self) -> usize {
        self.k.n
    }

    /// `K_ff x_f` for free values `x_f`.
    fn apply_free(&self, xf: &[Complex64]) -> Vec<Complex64> {
        let mut full = vec![C0; self.k.n];
        for (i, &l) in self.free.iter().enumerate() {
            full[l] = xf[i];
        }
        let y = self.k.matvec(&full);
        self.free.iter().map(|&l| y[l]).collect()
    }

    /// Solves `K u = load` on free nodes with `u = g` on Dirichlet nodes, for
    /// several cases sharing the factorization. `g` and `load` are local vectors
    /// (entries of `g` at free nodes and of `load` at Dirichlet nodes are ignored).
    pub fn solve_many(&self, cases: &[(Vec<Complex64>, Option<Vec<Complex64>>)]) -> Result<Vec<Solution>> {
        let mut rhs = Vec::with_capacity(cases.len());
        for (g, load) in cases {
            let mut g0 = g.clone();
            for &l in &self.free {
                g0[l] = C0;
            }
            let kg = self.k.matvec(&g0);
            rhs.push(self.free.iter().map(|&l| load.as_ref().map_or(C0, |b| b[l]) - kg[l]).collect::<Vec<_>>());
        }
        let mut xs = self.factor.solve_many(&rhs);
        let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut res = vec![0.0; cases.len()];
        for _ in 0..3 {
            let mut corr_idx = Vec::new();
            let mut corr_rhs = Vec::new();
            for (i, x) in xs.iter().enumerate() {
                let ax = self.apply_free(x);
                let r: Vec<Complex64> = rhs[i].iter().zip(&ax).map(|(b, a)| b - a).collect();
                let nb = norm(&rhs[i]);
                res[i] = if nb == 0.0 { norm(&r) } else { norm(&r) / nb };
                if res[i] > 1e-14 {
                    corr_idx.push(i);
                    corr_rhs.push(r);
                }
            }
            if corr_idx.is_empty() {
                break;
            }
            let corr = self.factor.solve_many(&corr_rhs);
            for (i, d) in corr_idx.into_iter().zip(corr) {
                for (x, dx) in xs[i].iter_mut().zip(d) {
                    *x += dx;
                }
            }
        }
        let mut out = Vec::with_capacity(cases.len());
        for (i, (g, _)) in cases.iter().enumerate() {
            let ax = self.apply_free(&xs[i]);
            let r: Vec<Complex64> = rhs[i].iter().zip(&ax).map(|(b, a)| b - a).collect();
            let nb = norm(&rhs[i]);
            let rel = if nb == 0.0 { norm(&r) } else { norm(&r) / nb };
            if rel > self.rtol {
                return Err(Error::ToleranceNotMet { residual: rel, tol: self.rtol });
            }
            let mut u = g.clone();
            for (p, &l) in self.free.iter().enumerate() {
                u[l] = xs[i][p];
            }
            out.push(Solution { local: u, residual: rel });
        }
        Ok(out)
    }

    pub fn solve(&self, g: Vec<Complex64>, load: Option<Vec<Complex64>>) -> Result<Solution> {
        Ok(self.solve_many(&[(g, load)])?.pop().expect("one case"))
    }

    /// Dirichlet solve with boundary values taken from `g` (a global field).
    pub fn solve_dirichlet(&self, mesh: &StructuredMesh, g: &DiscreteField) -> Result<DiscreteField> {
        let s = self.solve(to_local(mesh, self.view, g), None)?;
        Ok(to_field(mesh, self.view, &s.local))
    }

    /// Solve with a weak load vector (local) and boundary data `g`.
    pub fn solve_with_load(
        &self,
        mesh: &StructuredMesh,
        load: Vec<Complex64>,
        g: &DiscreteField,
    ) -> Result<DiscreteField> {
        let s = self.solve(to_local(mesh, self.view, g), Some(load))?;
        Ok(to_field(mesh, self.view, &s.local))
    }

    /// `K u` as a local vector; at Dirichlet nodes these are the variational
    /// fluxes, at free nodes the discrete residual minus load.
    pub fn apply(&self, mesh: &StructuredMesh, u: &DiscreteField) -> Vec<Complex64> {
        self.k.matvec(&to_local(mesh, self.view, u))
    }

    /// Relative residual of `u` on free nodes for the homogeneous problem.
    pub fn free_residual(&self, mesh: &StructuredMesh, u: &DiscreteField, load: Option<&[Complex64]>) -> f64 {
        let ul = to_local(mesh, self.view, u);
        let ku = self.k.matvec(&ul);
        let scale = self.k.abs_matvec(&ul);
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for &l in &self.free {
            let b = load.map_or(C0, |b| b[l]);
            num = num.max((ku[l] - b).norm());
            den = den.max(scale[l]).max(b.norm());
        }
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }

    /// Variational flux of a solution on the nodes strictly inside `portion`
    /// (which must be `Σ` on the base view).
    pub fn variational_flux(
        &self,
        mesh: &StructuredMesh,
        u: &DiscreteField,
        portion: &FlatPortion,
    ) -> Result<FluxTrace> {
        let r = self.free_residual(mesh, u, None);
        if r > 1e-8 {
            return Err(Error::NotASolution(r));
        }
        let ku = self.apply(mesh, u);
        let vn = mesh.view(self.view);
        let tol = 1e-9 * mesh.h;
        let nodes: Vec<usize> =
            mesh.sigma_nodes.iter().copied().filter(|&n| portion.contains(mesh.node_pos(n), tol)).collect();
        let values = nodes.iter().map(|&n| ku[vn.local[n] as usize]).collect();
        Ok(FluxTrace { nodes, values })
    }
}

/// Dual nodal values of `σ∇u·ν` on `Σ`: `⟨flux, φ⟩ = Σ values[a] φ(nodes[a])`.
#[derive(Clone, Debug, PartialEq)]
pub struct FluxTrace {
    pub nodes: Vec<usize>,
    pub values: Vec<Complex64>,
}

impl FluxTrace {
    /// Bilinear pairing with the trace of `phi`.
    pub fn pair(&self, phi: &DiscreteField) -> Complex64 {
        self.nodes.iter().zip(&self.values).map(|(&n, v)| v * phi.values[n]).sum()
    }
}

/// Global field → local vector of `view`.
pub fn to_local(mesh: &StructuredMesh, view: View, u: &DiscreteField) -> Vec<Complex64> {
    mesh.view(view).active.iter().map(|&n| u.values[n]).collect()
}

/// Local vector of `view` → global field (zero elsewhere).
pub fn to_field(mesh: &StructuredMesh, view: View, local: &[Complex64]) -> DiscreteField {
    let mut f = DiscreteField::zeros(mesh);
    for (l, &n) in mesh.view(view).active.iter().enumerate() {
        f.values[n] = local[l];
    }
    f
}

/// Quadrature plan for a cell: subdivisions per axis and points per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellRule {
    pub subdivisions: usize,
    pub points: usize,
}

/// Quadrature points (physical coordinates, weights, reference coordinates)
/// of cell `c` under `rule`.
pub fn cell_points(mesh: &StructuredMesh, c: usize, rule: CellRule) -> Vec<(Vec3, f64, [f64; 3])> {
    let s = rule.subdivisions.max(1);
    let base = unit_rule(rule.points);
    let o = mesh.cell_origin(c);
    let inv = 1.0 / s as f64;
    let vol = mesh.h * mesh.h * mesh.h * inv * inv * inv;
    let mut out = Vec::with_capacity(base.len() * s * s * s);
    for k in 0..s {
        for j in 0..s {
            for i in 0..s {
                for (xi, w) in &base {
                    let r = [(i as f64 + xi[0]) * inv, (j as f64 + xi[1]) * inv, (k as f64 + xi[2]) * inv];
                    out.push((o + Vec3(r).scale(mesh.h), w * vol, r));
                }
            }
        }
    }
    out
}

/// Local load vector `∫ F·∇φ + f φ` over `cells` of `view`.
pub fn assemble_load(
    mesh: &StructuredMesh,
    view: View,
    cells: impl Iterator<Item = usize>,
    rule: &dyn Fn(usize) -> CellRule,
    source: &dyn Fn(usize, Vec3) -> ([Complex64; 3], Complex64),
) -> Vec<Complex64> {
    let vn = mesh.view(view);
    let mut b = vec![C0; vn.active.len()];
    for c in cells {
        if !mesh.cell_active(c, view) {
            continue;
        }
        let nodes = mesh.cell_nodes(c).map(|n| vn.local[n] as usize);
        let mut be = [C0; 8];
        for (x, w, xi) in cell_points(mesh, c, rule(c)) {
            let (flux, dens) = source(c, x);
            let g = shape_grad(xi);
            let s = shape(xi);
            for a in 0..8 {
                let gv = g[a].scale(1.0 / mesh.h);
                let v = flux[0] * gv[0] + flux[1] * gv[1] + flux[2] * gv[2] + dens * s[a];
                be[a] += v * w;
            }
        }
        for a in 0..8 {
            b[nodes[a]] += be[a];
        }
    }
    b
}

/// Direct Gauss quadrature of `∫ 𝒞∇u·∇v` over cells of `view` (bilinear).
pub fn volume_form(
    mesh: &StructuredMesh,
    view: View,
    coef: &dyn Fn(usize, Vec3) -> BlockTensor,
    u: &DiscreteField,
    v: &DiscreteField,
    cells: &dyn Fn(usize) -> bool,
) -> Complex64 {
    let rule = unit_rule(2);
    let vol = mesh.h * mesh.h * mesh.h;
    let mut s = C0;
    for c in mesh.cells_in(view) {
        if !cells(c) {
            continue;
        }
        let o = mesh.cell_origin(c);
        for (xi, w) in &rule {
            let x = o + Vec3(*xi).scale(mesh.h);
            let t = coef(c, x);
            let gu = u.grad_in_cell(mesh, c, *xi);
            let gv = v.grad_in_cell(mesh, c, *xi);
            for i in 0..3 {
                for j in 0..3 {
                    s += t.entry(i, j) * gu[j] * gv[i] * (w * vol);
                }
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admittivity::{AffineComplex, AnisotropyField};
    use crate::geometry::{DomainSpec, Face, LayeredDomain, PortionSpec};

    fn mesh(res: usize) -> StructuredMesh {
        let spec = DomainSpec {
            boxes: vec![[[0.0; 3], [1.0; 3]], [[0.25; 3], [0.75; 3]]],
            portions: vec![
                PortionSpec { owner: 0, face: Face::ZMinus, lo: [0.125, 0.125], hi: [0.875, 0.875] },
                PortionSpec { owner: 1, face: Face::ZMinus, lo: [0.375, 0.375], hi: [0.625, 0.625] },
            ],
            pitch: 1.0 / 8.0,
        };
        let d = LayeredDomain::build(&spec, 0.25).unwrap().augment(0.25).unwrap();
        StructuredMesh::build(&d, res).unwrap()
    }

    #[test]
    fn element_matrix_symmetric_and_rows_sum_to_zero() {
        let m = mesh(8);
        let adm = Admittivity::new(
            vec![
                AffineComplex { s_r: 1.0, s_i: 0.3, g_r: Vec3::new(0.5, 0.1, 0.0), g_i: Vec3::new(0.0, 0.2, 0.1) },
                AffineComplex::constant(2.0, 0.1),
            ],
            AnisotropyField::identity(),
        );
        let c = m.locate(Vec3::new(0.1, 0.1, 0.1), View::Base).unwrap();
        let (kr, ki) = element_matrices(&m, c, &cell_coefficient(&adm, &m, c));
        for a in 0..8 {
            let sr: f64 = kr[a].iter().sum();
            let si: f64 = ki[a].iter().sum();
            assert!(sr.abs() < 1e-14 && si.abs() < 1e-14);
            for b in 0..8 {
                assert_eq!(kr[a][b], kr[b][a]);
            }
        }
    }

    #[test]
    fn constant_two_is_twice_laplace() {
        let m = mesh(8);
        let one = Admittivity::new(vec![AffineComplex::one(); 2], AnisotropyField::identity());
        let two = Admittivity::new(vec![AffineComplex::constant(2.0, 0.0); 2], AnisotropyField::identity());
        let k1 = assemble(&one, &m, View::Base);
        let k2 = assemble(&two, &m, View::Base);
        for p in 0..k1.re.len() {
            assert!((k2.re[p] - 2.0 * k1.re[p]).abs() < 1e-14);
            assert_eq!(k2.im[p], 0.0);
        }
        assert_eq!(k1.asymmetry(), 0.0);
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let m = mesh(8);
        let adm = Admittivity::new(vec![AffineComplex::constant(1.0, 1.0); 2], AnisotropyField::identity());
        let sys = FemSystem::new(&adm, &m, View::Base).unwrap();
        let u = sys.solve_dirichlet(&m, &DiscreteField::zeros(&m)).unwrap();
        assert_eq!(u.max_abs(), 0.0);
    }
}
