//! Structured hexahedral grid over the augmented domain with two views: the
//! augmented domain `Ω̃_0` and the base domain `Ω`.

use crate::error::{Error, Result};
use crate::geometry::{on_grid, AugmentedDomain};
use crate::scalar::Vec3;
use num_complex::Complex64;

/// Which sub-domain a system lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum View {
    /// `Ω̃_0 = Ω ∪ D_0`.
    Augmented,
    /// `Ω` only.
    Base,
}

/// Classification of a grid node within a view.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeClass {
    Inactive,
    Interior,
    /// On the boundary of the view, outside the closure of `Σ`.
    Boundary,
    /// On `Σ`, strictly inside its rectangle.
    Sigma,
    /// On the edge of the rectangle of `Σ`.
    SigmaEdge,
}

/// Per-view node data.
#[derive(Clone, Debug)]
pub struct ViewNodes {
    pub class: Vec<NodeClass>,
    /// Global ids of active nodes, increasing.
    pub active: Vec<usize>,
    /// Global id → local index (`u32::MAX` if inactive).
    pub local: Vec<u32>,
}

/// Uniform grid of cubes over the bounding box of `Ω̃_0`.
#[derive(Clone, Debug)]
pub struct StructuredMesh {
    pub domain: AugmentedDomain<f64>,
    pub origin: Vec3,
    pub h: f64,
    /// Cells per axis.
    pub cells: [usize; 3],
    /// Layer of each cell (`-1` outside `Ω̃_0`, `0` slab, `m ≥ 1` layer `D_m`).
    pub cell_layer: Vec<i8>,
    pub augmented: ViewNodes,
    pub base: ViewNodes,
    /// Global ids of nodes strictly inside `Σ`, increasing.
    pub sigma_nodes: Vec<usize>,
    /// Cells per axis of the rectangle of `Σ` (tangential axes).
    pub sigma_cells: [usize; 2],
}

/// Corner offsets of local node `a = ax + 2 ay + 4 az`.
pub const CORNERS: [[usize; 3]; 8] =
    [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0], [0, 0, 1], [1, 0, 1], [0, 1, 1], [1, 1, 1]];

/// Trilinear shape values on the unit cube.
pub fn shape(xi: [f64; 3]) -> [f64; 8] {
    let mut s = [0.0; 8];
    for (a, c) in CORNERS.iter().enumerate() {
        let mut v = 1.0;
        for d in 0..3 {
            v *= if c[d] == 1 { xi[d] } else { 1.0 - xi[d] };
        }
        s[a] = v;
    }
    s
}

/// Trilinear shape gradients on the unit cube (reference coordinates).
pub fn shape_grad(xi: [f64; 3]) -> [Vec3; 8] {
    let mut g = [Vec3::zero(); 8];
    for (a, c) in CORNERS.iter().enumerate() {
        let f: [f64; 3] = std::array::from_fn(|d| if c[d] == 1 { xi[d] } else { 1.0 - xi[d] });
        let df: [f64; 3] = std::array::from_fn(|d| if c[d] == 1 { 1.0 } else { -1.0 });
        g[a] = Vec3::new(df[0] * f[1] * f[2], f[0] * df[1] * f[2], f[0] * f[1] * df[2]);
    }
    g
}

impl StructuredMesh {
    /// Builds the grid at `resolution` cells per unit length.
    pub fn build(domain: &AugmentedDomain<f64>, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::ResolutionIncompatible("resolution must be positive".into()));
        }
        let h = 1.0 / resolution as f64;
        let base = &domain.base;
        let mut coords: Vec<f64> = Vec::new();
        for b in &base.boxes {
            coords.extend(b.lo.0);
            coords.extend(b.hi.0);
        }
        for p in &base.portions {
            coords.extend(p.rect.lo);
            coords.extend(p.rect.hi);
        }
        coords.extend(domain.slab.lo.0);
        coords.extend(domain.slab.hi.0);
        if let Some(c) = coords.iter().find(|c| !on_grid(**c, h)) {
            return Err(Error::ResolutionIncompatible(format!("coordinate {c} is not a multiple of 1/{resolution}")));
        }
        let origin = domain.bbox.lo;
        let cells: [usize; 3] = std::array::from_fn(|a| (domain.bbox.extent(a) / h).round() as usize);
        let ncell = cells[0] * cells[1] * cells[2];
        let mut cell_layer = vec![-1i8; ncell];
        for k in 0..cells[2] {
            for j in 0..cells[1] {
                for i in 0..cells[0] {
                    let c = origin + Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5).scale(h);
                    if let Some(m) = domain.layer_of_interior_point(c) {
                        cell_layer[i + cells[0] * (j + cells[1] * k)] = m as i8;
                    }
                }
            }
        }
        let mut mesh = Self {
            domain: domain.clone(),
            origin,
            h,
            cells,
            cell_layer,
            augmented: ViewNodes { class: vec![], active: vec![], local: vec![] },
            base: ViewNodes { class: vec![], active: vec![], local: vec![] },
            sigma_nodes: vec![],
            sigma_cells: [0, 0],
        };
        mesh.augmented = mesh.classify(View::Augmented);
        mesh.base = mesh.classify(View::Base);
        mesh.sigma_nodes = (0..mesh.n_nodes()).filter(|&n| mesh.base.class[n] == NodeClass::Sigma).collect();
        let sig = domain.base.sigma();
        mesh.sigma_cells = [0, 1].map(|s| (sig.rect.side(s) / h).round() as usize);
        Ok(mesh)
    }

    pub fn node_dims(&self) -> [usize; 3] {
        self.cells.map(|c| c + 1)
    }

    pub fn n_nodes(&self) -> usize {
        let d = self.node_dims();
        d[0] * d[1] * d[2]
    }

    pub fn n_cells(&self) -> usize {
        self.cells[0] * self.cells[1] * self.cells[2]
    }

    pub fn node_id(&self, i: usize, j: usize, k: usize) -> usize {
        let d = self.node_dims();
        i + d[0] * (j + d[1] * k)
    }

    pub fn node_ijk(&self, n: usize) -> [usize; 3] {
        let d = self.node_dims();
        [n % d[0], (n / d[0]) % d[1], n / (d[0] * d[1])]
    }

    pub fn node_pos(&self, n: usize) -> Vec3 {
        let [i, j, k] = self.node_ijk(n);
        self.origin + Vec3::new(i as f64, j as f64, k as f64).scale(self.h)
    }

    pub fn cell_id(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.cells[0] * (j + self.cells[1] * k)
    }

    pub fn cell_ijk(&self, c: usize) -> [usize; 3] {
        [c % self.cells[0], (c / self.cells[0]) % self.cells[1], c / (self.cells[0] * self.cells[1])]
    }

    pub fn cell_origin(&self, c: usize) -> Vec3 {
        let [i, j, k] = self.cell_ijk(c);
        self.origin + Vec3::new(i as f64, j as f64, k as f64).scale(self.h)
    }

    pub fn cell_center(&self, c: usize) -> Vec3 {
        self.cell_origin(c) + Vec3::new(0.5, 0.5, 0.5).scale(self.h)
    }

    /// Global node ids of the eight corners of cell `c`.
    pub fn cell_nodes(&self, c: usize) -> [usize; 8] {
        let [i, j, k] = self.cell_ijk(c);
        CORNERS.map(|o| self.node_id(i + o[0], j + o[1], k + o[2]))
    }

    /// Whether cell `c` belongs to `view`.
    pub fn cell_active(&self, c: usize, view: View) -> bool {
        let l = self.cell_layer[c];
        match view {
            View::Augmented => l >= 0,
            View::Base => l >= 1,
        }
    }

    /// Layer of an active cell.
    pub fn layer(&self, c: usize) -> usize {
        self.cell_layer[c].max(0) as usize
    }

    pub fn view(&self, view: View) -> &ViewNodes {
        match view {
            View::Augmented => &self.augmented,
            View::Base => &self.base,
        }
    }

    pub fn cells_in(&self, view: View) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_cells()).filter(move |&c| self.cell_active(c, view))
    }

    fn classify(&self, view: View) -> ViewNodes {
        let d = self.node_dims();
        let n = self.n_nodes();
        let mut class = vec![NodeClass::Inactive; n];
        let sig = self.domain.base.sigma();
        let tol = 1e-9 * self.h;
        for k in 0..d[2] {
            for j in 0..d[1] {
                for i in 0..d[0] {
                    let mut any = false;
                    let mut all = true;
                    for dk in 0..2 {
                        for dj in 0..2 {
                            for di in 0..2 {
                                let (ci, cj, ck) = (i as isize + di - 1, j as isize + dj - 1, k as isize + dk - 1);
                                let inside = ci >= 0
                                    && cj >= 0
                                    && ck >= 0
                                    && (ci as usize) < self.cells[0]
                                    && (cj as usize) < self.cells[1]
                                    && (ck as usize) < self.cells[2]
                                    && self.cell_active(self.cell_id(ci as usize, cj as usize, ck as usize), view);
                                any |= inside;
                                all &= inside;
                            }
                        }
                    }
                    let id = self.node_id(i, j, k);
                    class[id] = if !any {
                        NodeClass::Inactive
                    } else if all {
                        NodeClass::Interior
                    } else {
                        let x = self.node_pos(id);
                        if view == View::Base && sig.contains(x, tol) {
                            if sig.rect.contains_open(sig.tangential_coords(x)) {
                                NodeClass::Sigma
                            } else {
                                NodeClass::SigmaEdge
                            }
                        } else if view == View::Augmented && sig.contains(x, tol) {
                            NodeClass::SigmaEdge
                        } else {
                            NodeClass::Boundary
                        }
                    };
                }
            }
        }
        let active: Vec<usize> = (0..n).filter(|&i| class[i] != NodeClass::Inactive).collect();
        let mut local = vec![u32::MAX; n];
        for (l, &g) in active.iter().enumerate() {
            local[g] = l as u32;
        }
        ViewNodes { class, active, local }
    }

    /// Whether node `n` carries a Dirichlet condition in `view`.
    pub fn is_dirichlet(&self, n: usize, view: View) -> bool {
        !matches!(self.view(view).class[n], NodeClass::Interior | NodeClass::Inactive)
    }

    /// Cell of `view` containing `x` (ties resolved towards an active cell).
    pub fn locate(&self, x: Vec3, view: View) -> Option<usize> {
        let mut cand = [[0usize; 2]; 3];
        let mut cnt = [0usize; 3];
        for a in 0..3 {
            let t = (x[a] - self.origin[a]) / self.h;
            let f = t.floor();
            let base = f as isize;
            let frac = t - f;
            let mut push = |v: isize| {
                if v >= 0 && (v as usize) < self.cells[a] && cnt[a] < 2 {
                    cand[a][cnt[a]] = v as usize;
                    cnt[a] += 1;
                }
            };
            push(base);
            if frac < 1e-9 {
                push(base - 1);
            } else if frac > 1.0 - 1e-9 {
                push(base + 1);
            }
            if cnt[a] == 0 {
                return None;
            }
        }
        for &k in &cand[2][..cnt[2]] {
            for &j in &cand[1][..cnt[1]] {
                for &i in &cand[0][..cnt[0]] {
                    let c = self.cell_id(i, j, k);
                    if self.cell_active(c, view) {
                        return Some(c);
                    }
                }
            }
        }
        None
    }

    /// Reference coordinates of `x` in cell `c`.
    pub fn local_coords(&self, c: usize, x: Vec3) -> [f64; 3] {
        let o = self.cell_origin(c);
        std::array::from_fn(|a| ((x[a] - o[a]) / self.h).clamp(0.0, 1.0))
    }

    /// Stable digest of the grid description.
    pub fn descriptor(&self) -> String {
        format!(
            "origin={:?};h={:e};cells={:?};layers={}",
            self.origin.0,
            self.h,
            self.cells,
            crate::io::sha256_hex(&self.cell_layer.iter().map(|v| *v as u8).collect::<Vec<_>>())
        )
    }
}

/// Complex nodal field over all grid nodes (zero on inactive nodes).
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteField {
    pub dims: [usize; 3],
    pub values: Vec<Complex64>,
}

impl DiscreteField {
    pub fn zeros(mesh: &StructuredMesh) -> Self {
        Self { dims: mesh.node_dims(), values: vec![Complex64::new(0.0, 0.0); mesh.n_nodes()] }
    }

    /// Nodal interpolant of `f` on the active nodes of `view`.
    pub fn interpolate(mesh: &StructuredMesh, view: View, f: impl Fn(Vec3) -> Complex64) -> Self {
        let mut u = Self::zeros(mesh);
        for &n in &mesh.view(view).active {
            u.values[n] = f(mesh.node_pos(n));
        }
        u
    }

    fn cell_values(&self, mesh: &StructuredMesh, c: usize) -> [Complex64; 8] {
        mesh.cell_nodes(c).map(|n| self.values[n])
    }

    /// Trilinear value at `x` using a cell of `view`.
    pub fn value_at(&self, mesh: &StructuredMesh, view: View, x: Vec3) -> Option<Complex64> {
        let c = mesh.locate(x, view)?;
        Some(self.value_in_cell(mesh, c, mesh.local_coords(c, x)))
    }

    pub fn value_in_cell(&self, mesh: &StructuredMesh, c: usize, xi: [f64; 3]) -> Complex64 {
        let v = self.cell_values(mesh, c);
        shape(xi).iter().zip(v.iter()).map(|(s, u)| u * s).sum()
    }

    /// Element gradient at reference point `xi` of cell `c`.
    pub fn grad_in_cell(&self, mesh: &StructuredMesh, c: usize, xi: [f64; 3]) -> [Complex64; 3] {
        let v = self.cell_values(mesh, c);
        let g = shape_grad(xi);
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for a in 0..8 {
            for d in 0..3 {
                out[d] += v[a] * (g[a][d] / mesh.h);
            }
        }
        out
    }

    /// Nodal gradient recovered by averaging the element gradients of the
    /// active cells of `view` sharing each node.
    pub fn recovered_gradient(&self, mesh: &StructuredMesh, view: View) -> [DiscreteField; 3] {
        let mut acc = vec![[Complex64::new(0.0, 0.0); 3]; mesh.n_nodes()];
        let mut cnt = vec![0u32; mesh.n_nodes()];
        for c in mesh.cells_in(view) {
            let nodes = mesh.cell_nodes(c);
            for (a, &n) in nodes.iter().enumerate() {
                let xi = CORNERS[a].map(|v| v as f64);
                let g = self.grad_in_cell(mesh, c, xi);
                for d in 0..3 {
                    acc[n][d] += g[d];
                }
                cnt[n] += 1;
            }
        }
        std::array::from_fn(|d| {
            let mut f = DiscreteField::zeros(mesh);
            for n in 0..mesh.n_nodes() {
                if cnt[n] > 0 {
                    f.values[n] = acc[n][d] / cnt[n] as f64;
                }
            }
            f
        })
    }

    /// Gradient at `x` interpolated from nodal averages of element gradients
    /// over the cells sharing each node within the layer of the cell holding `x`.
    pub fn layer_recovered_grad_at(&self, mesh: &StructuredMesh, view: View, x: Vec3) -> Option<[Complex64; 3]> {
        let c = mesh.locate(x, view)?;
        let layer = mesh.cell_layer[c];
        let [ci, cj, ck] = mesh.cell_ijk(c);
        let xi = mesh.local_coords(c, x);
        let sh = shape(xi);
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (a, off) in CORNERS.iter().enumerate() {
            let mut acc = [Complex64::new(0.0, 0.0); 3];
            let mut cnt = 0.0;
            for dk in 0..2 {
                for dj in 0..2 {
                    for di in 0..2 {
                        let (i, j, k) = (
                            (ci + off[0]) as isize + di - 1,
                            (cj + off[1]) as isize + dj - 1,
                            (ck + off[2]) as isize + dk - 1,
                        );
                        if i < 0 || j < 0 || k < 0 {
                            continue;
                        }
                        let (i, j, k) = (i as usize, j as usize, k as usize);
                        if i >= mesh.cells[0] || j >= mesh.cells[1] || k >= mesh.cells[2] {
                            continue;
                        }
                        let n = mesh.cell_id(i, j, k);
                        if mesh.cell_layer[n] != layer || !mesh.cell_active(n, view) {
                            continue;
                        }
                        let corner = [1 - di as usize, 1 - dj as usize, 1 - dk as usize].map(|v| v as f64);
                        let g = self.grad_in_cell(mesh, n, corner);
                        for d in 0..3 {
                            acc[d] += g[d];
                        }
                        cnt += 1.0;
                    }
                }
            }
            for d in 0..3 {
                out[d] += acc[d] * (sh[a] / cnt);
            }
        }
        Some(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn add_scaled(&mut self, o: &DiscreteField, s: Complex64) {
        for (a, b) in self.values.iter_mut().zip(&o.values) {
            *a += b * s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainSpec, Face, LayeredDomain, PortionSpec};

    fn domain(depth: f64) -> AugmentedDomain<f64> {
        let spec = DomainSpec {
            boxes: vec![[[0.0; 3], [1.0; 3]], [[0.25; 3], [0.75; 3]]],
            portions: vec![
                PortionSpec { owner: 0, face: Face::ZMinus, lo: [0.125, 0.125], hi: [0.875, 0.875] },
                PortionSpec { owner: 1, face: Face::ZMinus, lo: [0.375, 0.375], hi: [0.625, 0.625] },
            ],
            pitch: 1.0 / 16.0,
        };
        LayeredDomain::build(&spec, 0.25).unwrap().augment(depth).unwrap()
    }

    #[test]
    fn cell_counts() {
        let m = StructuredMesh::build(&domain(0.25), 16).unwrap();
        assert_eq!(m.cells, [16, 16, 20]);
        assert_eq!(m.n_nodes(), 17 * 17 * 21);
    }

    #[test]
    fn incompatible_resolution() {
        assert!(matches!(StructuredMesh::build(&domain(0.25), 10), Err(Error::ResolutionIncompatible(_))));
    }

    #[test]
    fn sigma_node_count_matches_closed_form() {
        for res in [8, 16, 32] {
            let m = StructuredMesh::build(&domain(0.25), res).unwrap();
            let side = (0.75 * res as f64) as usize;
            assert_eq!(m.sigma_nodes.len(), (side - 1) * (side - 1));
            let edges = m.base.class.iter().filter(|c| **c == NodeClass::SigmaEdge).count();
            assert_eq!(edges, 4 * side);
            for &n in &m.sigma_nodes {
                assert_eq!(m.augmented.class[n], NodeClass::Interior);
            }
        }
    }

    #[test]
    fn layer_partition_tiles_cells() {
        let m = StructuredMesh::build(&domain(0.25), 16).unwrap();
        let count = |l: i8| m.cell_layer.iter().filter(|v| **v == l).count();
        assert_eq!(count(2), 8 * 8 * 8);
        assert_eq!(count(1), 16 * 16 * 16 - 512);
        assert_eq!(count(0), 12 * 12 * 4);
    }

    #[test]
    fn interpolation_reproduces_trilinear() {
        let m = StructuredMesh::build(&domain(0.25), 8).unwrap();
        let f = |x: Vec3| Complex64::new(1.0 + x[0] * x[1] - 2.0 * x[2], x[0] * x[1] * x[2]);
        let u = DiscreteField::interpolate(&m, View::Augmented, f);
        let x = Vec3::new(0.31, 0.77, 0.52);
        assert!((u.value_at(&m, View::Augmented, x).unwrap() - f(x)).norm() < 1e-14);
        let c = m.locate(x, View::Base).unwrap();
        let g = u.grad_in_cell(&m, c, m.local_coords(c, x));
        assert!((g[0] - Complex64::new(x[1], x[1] * x[2])).norm() < 1e-12);
    }
}
