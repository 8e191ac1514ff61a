//! Discrete local Dirichlet-to-Neumann map on `Σ`, the spectral `H^{1/2}_{00}(Σ)`
//! Gram matrix, the operator norm of DtN differences and the Alessandrini
//! identity.

use crate::admittivity::{Admittivity, AdmittivitySpec};
use crate::error::{Error, Result};
use crate::fem::{assemble_difference, to_field, FemSystem};
use crate::io::{complex_matrix_bytes, json_hash, sha256_hex, DtnHeader};
use crate::linalg::{dense_cholesky, dense_sym_eigen, lower_solve, max_singular_value, Csr};
use crate::mesh::{DiscreteField, StructuredMesh, View};
use faer::Mat;
use num_complex::Complex64;
use serde::Serialize;
use std::path::Path;

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// Trace space on `Σ`: nodes strictly inside the rectangle, with the surface
/// mass and Dirichlet stiffness of the bilinear elements on `Σ`.
#[derive(Clone, Debug)]
pub struct BoundarySpace {
    /// Global node ids of the DOFs (increasing).
    pub nodes: Vec<usize>,
    pub coords: Vec<[f64; 3]>,
    /// Interior node counts along the two tangential axes.
    pub grid: [usize; 2],
    /// Tangential grid index of each DOF.
    pub index: Vec<[usize; 2]>,
    pub h: f64,
    pub mass: Mat<f64>,
    pub stiffness: Mat<f64>,
}

fn tridiag(n: usize, d: f64, o: f64) -> Mat<f64> {
    Mat::from_fn(n, n, |i, j| {
        if i == j {
            d
        } else if i.abs_diff(j) == 1 {
            o
        } else {
            0.0
        }
    })
}

impl BoundarySpace {
    pub fn new(mesh: &StructuredMesh) -> Result<Self> {
        let sigma = mesh.domain.base.sigma();
        let h = mesh.h;
        let grid = [mesh.sigma_cells[0] - 1, mesh.sigma_cells[1] - 1];
        if mesh.sigma_nodes.is_empty() {
            return Err(Error::InvalidInput("Σ carries no interior nodes".into()));
        }
        let nodes = mesh.sigma_nodes.clone();
        let mut coords = Vec::with_capacity(nodes.len());
        let mut index = Vec::with_capacity(nodes.len());
        for &n in &nodes {
            let x = mesh.node_pos(n);
            let t = sigma.tangential_coords(x);
            let ia = ((t[0] - sigma.rect.lo[0]) / h).round() as usize;
            let ib = ((t[1] - sigma.rect.lo[1]) / h).round() as usize;
            coords.push(x.0);
            index.push([ia - 1, ib - 1]);
        }
        let m1 = [tridiag(grid[0], 4.0 * h / 6.0, h / 6.0), tridiag(grid[1], 4.0 * h / 6.0, h / 6.0)];
        let k1 = [tridiag(grid[0], 2.0 / h, -1.0 / h), tridiag(grid[1], 2.0 / h, -1.0 / h)];
        let n = nodes.len();
        let mass = Mat::from_fn(n, n, |p, q| {
            let (a, b) = (index[p], index[q]);
            m1[0][(a[0], b[0])] * m1[1][(a[1], b[1])]
        });
        let stiffness = Mat::from_fn(n, n, |p, q| {
            let (a, b) = (index[p], index[q]);
            k1[0][(a[0], b[0])] * m1[1][(a[1], b[1])] + m1[0][(a[0], b[0])] * k1[1][(a[1], b[1])]
        });
        Ok(Self { nodes, coords, grid, index, h, mass, stiffness })
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    /// DOF values of a field whose base-view boundary trace is supported on `Σ`.
    pub fn restrict(&self, mesh: &StructuredMesh, u: &DiscreteField) -> Result<Vec<Complex64>> {
        let tol = 1e-14 * u.max_abs().max(1.0);
        for &n in &mesh.base.active {
            if mesh.is_dirichlet(n, View::Base) && !self.nodes.contains(&n) && u.values[n].norm() > tol {
                return Err(Error::UnsupportedTrace(format!(
                    "nonzero boundary value at {:?} outside Σ",
                    mesh.node_pos(n).0
                )));
            }
        }
        Ok(self.nodes.iter().map(|&n| u.values[n]).collect())
    }

    /// Base-view field with the given DOF values on `Σ` and zero elsewhere.
    pub fn extend(&self, mesh: &StructuredMesh, f: &[Complex64]) -> Result<DiscreteField> {
        self.check(f)?;
        let mut u = DiscreteField::zeros(mesh);
        for (&n, &v) in self.nodes.iter().zip(f) {
            u.values[n] = v;
        }
        Ok(u)
    }

    fn check(&self, f: &[Complex64]) -> Result<()> {
        if f.len() != self.dim() {
            return Err(Error::UnsupportedTrace(format!("expected {} DOF values, got {}", self.dim(), f.len())));
        }
        Ok(())
    }
}

/// Dense DtN matrix over the DOFs of a [`BoundarySpace`], row-major:
/// `values[i n + j] = ∫σ∇u_j·∇φ_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct DtnMatrix {
    pub n: usize,
    pub values: Vec<Complex64>,
    pub dof_coords: Vec<[f64; 3]>,
    pub admittivity_hash: String,
    pub mesh_hash: String,
}

impl DtnMatrix {
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.n + j]
    }

    /// Bilinear pairing `gᵀΛf`.
    pub fn pair(&self, f: &[Complex64], g: &[Complex64]) -> Complex64 {
        let mut s = C0;
        for i in 0..self.n {
            let mut r = C0;
            for j in 0..self.n {
                r += self.values[i * self.n + j] * f[j];
            }
            s += g[i] * r;
        }
        s
    }

    pub fn sub(&self, o: &DtnMatrix) -> Result<DtnMatrix> {
        if self.n != o.n || self.dof_coords != o.dof_coords {
            return Err(Error::GramMismatch("DtN matrices over different DOF sets".into()));
        }
        Ok(DtnMatrix {
            n: self.n,
            values: self.values.iter().zip(&o.values).map(|(a, b)| a - b).collect(),
            dof_coords: self.dof_coords.clone(),
            admittivity_hash: format!("{}-{}", self.admittivity_hash, o.admittivity_hash),
            mesh_hash: self.mesh_hash.clone(),
        })
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |Λ_ij − Λ_ji| / ‖Λ‖`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                m = m.max((self.get(i, j) - self.get(j, i)).norm());
            }
        }
        let nrm = self.norm();
        if nrm == 0.0 {
            m
        } else {
            m / nrm
        }
    }

    pub fn to_faer(&self) -> Mat<Complex64> {
        Mat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn header(&self) -> DtnHeader {
        DtnHeader {
            n: self.n,
            dof_coords: self.dof_coords.clone(),
            admittivity_hash: self.admittivity_hash.clone(),
            mesh_hash: self.mesh_hash.clone(),
            data_sha256: sha256_hex(&complex_matrix_bytes(self.n, &self.values)),
        }
    }

    /// Writes `<stem>.json` (header) and `<stem>.bin` (interleaved values).
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let bytes = complex_matrix_bytes(self.n, &self.values);
        std::fs::write(dir.join(format!("{stem}.bin")), &bytes)?;
        let header = serde_json::to_string_pretty(&self.header()).map_err(|e| Error::IoError(e.to_string()))?;
        std::fs::write(dir.join(format!("{stem}.json")), header)?;
        Ok(())
    }
}

pub fn admittivity_hash(adm: &Admittivity) -> String {
    json_hash(&AdmittivitySpec::from_admittivity(adm))
}

pub fn mesh_hash(mesh: &StructuredMesh) -> String {
    sha256_hex(mesh.descriptor().as_bytes())
}

/// Dirichlet solver on `Ω` for data supported on `Σ`.
pub struct ForwardSolver<'a> {
    pub mesh: &'a StructuredMesh,
    pub adm: &'a Admittivity,
    pub space: BoundarySpace,
    pub sys: FemSystem,
}

impl<'a> ForwardSolver<'a> {
    pub fn new(adm: &'a Admittivity, mesh: &'a StructuredMesh) -> Result<Self> {
        Ok(Self { mesh, adm, space: BoundarySpace::new(mesh)?, sys: FemSystem::new(adm, mesh, View::Base)? })
    }

    fn data_local(&self, f: &[Complex64]) -> Vec<Complex64> {
        let vn = &self.mesh.base;
        let mut g = vec![C0; vn.active.len()];
        for (&n, &v) in self.space.nodes.iter().zip(f) {
            g[vn.local[n] as usize] = v;
        }
        g
    }

    /// Solutions for several DOF data vectors.
    pub fn solve_many(&self, data: &[Vec<Complex64>]) -> Result<Vec<DiscreteField>> {
        for f in data {
            self.space.check(f)?;
        }
        let cases: Vec<(Vec<Complex64>, Option<Vec<Complex64>>)> =
            data.iter().map(|f| (self.data_local(f), None)).collect();
        Ok(self.sys.solve_many(&cases)?.into_iter().map(|s| to_field(self.mesh, View::Base, &s.local)).collect())
    }

    pub fn solve(&self, f: &[Complex64]) -> Result<DiscreteField> {
        Ok(self.solve_many(&[f.to_vec()])?.pop().expect("one solution"))
    }

    /// `(K u)` at the DOFs: the variational Neumann data of `u`.
    pub fn neumann(&self, u: &DiscreteField) -> Vec<Complex64> {
        let ku = self.sys.apply(self.mesh, u);
        self.space.nodes.iter().map(|&n| ku[self.mesh.base.local[n] as usize]).collect()
    }

    /// The full DtN matrix, one solve per DOF.
    pub fn dtn(&self) -> Result<DtnMatrix> {
        let n = self.space.dim();
        let mut values = vec![C0; n * n];
        for start in (0..n).step_by(32) {
            let end = (start + 32).min(n);
            let data: Vec<Vec<Complex64>> = (start..end)
                .map(|j| {
                    let mut f = vec![C0; n];
                    f[j] = Complex64::new(1.0, 0.0);
                    f
                })
                .collect();
            for (j, u) in (start..end).zip(self.solve_many(&data)?) {
                for (i, v) in self.neumann(&u).into_iter().enumerate() {
                    values[i * n + j] = v;
                }
            }
        }
        Ok(DtnMatrix {
            n,
            values,
            dof_coords: self.space.coords.clone(),
            admittivity_hash: admittivity_hash(self.adm),
            mesh_hash: mesh_hash(self.mesh),
        })
    }
}

/// Assembles the DtN matrix of `adm`.
pub fn assemble_dtn(adm: &Admittivity, mesh: &StructuredMesh) -> Result<DtnMatrix> {
    ForwardSolver::new(adm, mesh)?.dtn()
}

/// Spectral Gram matrices of the discrete `H^{1/2}_{00}(Σ)` norm and its dual.
#[derive(Clone, Debug)]
pub struct FractionalGram {
    /// Generalized eigenvalues of `(K_Σ, M_Σ)`, ascending.
    pub mu: Vec<f64>,
    /// `M_Σ`-orthonormal eigenvectors (columns).
    pub w: Mat<f64>,
    pub n_half: Mat<f64>,
    pub n_minus_half: Mat<f64>,
    /// `C = W diag(μ^{-1/4})`, so that `C Cᵀ = N_half⁻¹`.
    pub whitening: Mat<f64>,
}

/// Generalized symmetric eigenproblem `K w = μ M w` with `M` SPD.
pub fn generalized_eigen(k: &Mat<f64>, m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let l = dense_cholesky(m).map_err(|_| Error::EigSolveFailure("mass matrix not SPD".into()))?;
    let x = lower_solve(&l, k);
    let c = lower_solve(&l, &x.transpose().to_owned());
    let c = Mat::from_fn(c.nrows(), c.ncols(), |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let (mu, v) = dense_sym_eigen(&c)?;
    let lt = l.transpose().to_owned();
    let mut w = v.clone();
    faer::linalg::triangular_solve::solve_upper_triangular_in_place(lt.as_ref(), w.as_mut(), faer::Par::Seq);
    Ok((mu, w))
}

pub fn build_fractional_gram(space: &BoundarySpace) -> Result<FractionalGram> {
    let (mu, w) = generalized_eigen(&space.stiffness, &space.mass)?;
    if mu.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::EigSolveFailure("non-positive surface eigenvalue".into()));
    }
    let n = mu.len();
    let mw = &space.mass * &w;
    let scaled = |p: f64| Mat::from_fn(n, n, |i, j| w[(i, j)] * mu[j].powf(p));
    let n_half = {
        let a = Mat::from_fn(n, n, |i, j| mw[(i, j)] * mu[j].sqrt());
        &a * mw.transpose()
    };
    let n_minus_half = &scaled(-0.5) * w.transpose();
    Ok(FractionalGram { whitening: scaled(-0.25), mu, w, n_half, n_minus_half })
}

/// `σ_max(Cᵀ D C)` for a whitening `C` with `C Cᵀ = N⁻¹`.
fn whitened_norm(d: &Mat<Complex64>, c: &Mat<f64>) -> Result<f64> {
    let cc = Mat::from_fn(c.nrows(), c.ncols(), |i, j| Complex64::new(c[(i, j)], 0.0));
    let t = cc.transpose() * d * &cc;
    max_singular_value(&t)
}

/// `sup |gᵀ D f| / (‖f‖_N ‖g‖_N)` for a dense symmetric positive definite `N`.
pub fn weighted_operator_norm(d: &Mat<Complex64>, n: &Mat<f64>) -> Result<f64> {
    if d.nrows() != n.nrows() || d.ncols() != n.ncols() {
        return Err(Error::GramMismatch(format!("operator {}×{} vs Gram {}", d.nrows(), d.ncols(), n.nrows())));
    }
    let l = dense_cholesky(n)?;
    let eye = Mat::<f64>::identity(n.nrows(), n.nrows());
    let linv = lower_solve(&l, &eye);
    whitened_norm(d, &linv.transpose().to_owned())
}

/// `‖Λ₁ − Λ₂‖_*` in the spectral `H^{1/2}_{00}` geometry.
pub fn op_norm_diff(l1: &DtnMatrix, l2: &DtnMatrix, gram: &FractionalGram) -> Result<f64> {
    let d = l1.sub(l2)?;
    op_norm(&d.to_faer(), gram)
}

pub fn op_norm(d: &Mat<Complex64>, gram: &FractionalGram) -> Result<f64> {
    if d.nrows() != gram.mu.len() || d.ncols() != gram.mu.len() {
        return Err(Error::GramMismatch(format!("operator of size {} vs Gram of size {}", d.nrows(), gram.mu.len())));
    }
    whitened_norm(d, &gram.whitening)
}

/// Both sides of the discrete Alessandrini identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlessandriniReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: Complex64,
    pub relative: f64,
}

/// Factorized forward problems of an admittivity pair.
pub struct PairSolver<'a> {
    pub first: ForwardSolver<'a>,
    pub second: ForwardSolver<'a>,
    /// Stiffness of `σ⁽¹⁾ − σ⁽²⁾` on the base view.
    pub difference: Csr,
}

impl<'a> PairSolver<'a> {
    pub fn new(adm1: &'a Admittivity, adm2: &'a Admittivity, mesh: &'a StructuredMesh) -> Result<Self> {
        Ok(Self {
            first: ForwardSolver::new(adm1, mesh)?,
            second: ForwardSolver::new(adm2, mesh)?,
            difference: assemble_difference(adm1, adm2, mesh, View::Base),
        })
    }

    /// `LHS = gᵀ(Λ₁ − Λ₂)f` from the Neumann data of `σ⁽¹⁾`, `σ⁽²⁾` solutions with
    /// data `f`; `RHS = ∫(σ⁽¹⁾ − σ⁽²⁾)∇u₁·∇u₂` with `u₁` (`σ⁽¹⁾`, data `g`) and
    /// `u₂` (`σ⁽²⁾`, data `f`).
    pub fn alessandrini(&self, f: &[Complex64], g: &[Complex64]) -> Result<AlessandriniReport> {
        let mesh = self.first.mesh;
        let mut s1 = self.first.solve_many(&[f.to_vec(), g.to_vec()])?;
        let u1g = s1.pop().expect("two solutions");
        let u1f = s1.pop().expect("two solutions");
        let u2f = self.second.solve(f)?;
        let dot = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<Complex64>();
        let lhs = dot(g, &self.first.neumann(&u1f)) - dot(g, &self.second.neumann(&u2f));
        let vn = &mesh.base;
        let loc = |u: &DiscreteField| vn.active.iter().map(|&n| u.values[n]).collect::<Vec<_>>();
        let ku2 = self.difference.matvec(&loc(&u2f));
        let rhs = dot(&loc(&u1g), &ku2);
        let residual = lhs - rhs;
        let scale = lhs.norm().max(rhs.norm()).max(f64::EPSILON);
        Ok(AlessandriniReport { lhs, rhs, residual, relative: residual.norm() / scale })
    }
}

/// Residual of the discrete Alessandrini identity for data `f`, `g` on `Σ`.
pub fn alessandrini_residual(
    adm1: &Admittivity,
    adm2: &Admittivity,
    mesh: &StructuredMesh,
    f: &[Complex64],
    g: &[Complex64],
) -> Result<AlessandriniReport> {
    PairSolver::new(adm1, adm2, mesh)?.alessandrini(f, g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_mass_stiffness_spectrum() {
        let m = 7;
        let h = 0.125;
        let k = tridiag(m, 2.0 / h, -1.0 / h);
        let ms = tridiag(m, 4.0 * h / 6.0, h / 6.0);
        let (mu, w) = generalized_eigen(&k, &ms).unwrap();
        for (j, v) in mu.iter().enumerate() {
            let th = (j + 1) as f64 * std::f64::consts::PI / (m + 1) as f64;
            let exact = 6.0 / (h * h) * (1.0 - th.cos()) / (2.0 + th.cos());
            assert!((v - exact).abs() < 1e-10 * exact);
        }
        let g = w.transpose() * &ms * &w;
        for i in 0..m {
            for j in 0..m {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - e).abs() < 1e-10);
            }
        }
    }
}
