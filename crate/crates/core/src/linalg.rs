//! Sparse storage and the direct solver for the real block system.

use crate::error::{Error, Result};
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::ldlt::factor::LdltRegularization;
use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, LdltRef, SymbolicCholesky, SymmetricOrdering};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Mat, Par, Side};
use num_complex::Complex64;

/// Square CSR matrix with separate real and imaginary value arrays.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl Csr {
    /// Empty matrix with the given sorted row patterns.
    pub fn with_pattern(rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut ptr = Vec::with_capacity(n + 1);
        ptr.push(0);
        let mut col = Vec::new();
        for r in rows {
            col.extend(r);
            ptr.push(col.len());
        }
        let nnz = col.len();
        Self { n, ptr, col, re: vec![0.0; nnz], im: vec![0.0; nnz] }
    }

    /// Position of entry `(r, c)` in the value arrays.
    pub fn pos(&self, r: usize, c: usize) -> usize {
        let s = &self.col[self.ptr[r]..self.ptr[r + 1]];
        self.ptr[r] + s.binary_search(&c).expect("entry in pattern")
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let s = &self.col[self.ptr[r]..self.ptr[r + 1]];
        match s.binary_search(&c) {
            Ok(p) => Complex64::new(self.re[self.ptr[r] + p], self.im[self.ptr[r] + p]),
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// `y = (Kʳ + iKⁱ) x`.
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|r| {
                let mut s = Complex64::new(0.0, 0.0);
                for p in self.ptr[r]..self.ptr[r + 1] {
                    s += Complex64::new(self.re[p], self.im[p]) * x[self.col[p]];
                }
                s
            })
            .collect()
    }

    /// `y = (|Kʳ| + |Kⁱ|) |x|`, a scale for relative residuals.
    pub fn abs_matvec(&self, x: &[Complex64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                let mut s = 0.0;
                for p in self.ptr[r]..self.ptr[r + 1] {
                    s += (self.re[p].abs() + self.im[p].abs()) * x[self.col[p]].norm();
                }
                s
            })
            .collect()
    }

    /// Largest `|a_rc − a_cr|` over both parts.
    pub fn asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for r in 0..self.n {
            for p in self.ptr[r]..self.ptr[r + 1] {
                let c = self.col[p];
                let t = self.get(c, r);
                m = m.max((self.re[p] - t.re).abs()).max((self.im[p] - t.im).abs());
            }
        }
        m
    }
}

/// `LDLᵀ` factorization of the quasi-definite symmetric form
/// `[[Kʳ, −Kⁱ], [−Kⁱ, −Kʳ]]` of the complex system `(Kʳ + iKⁱ) u = b`,
/// obtained from the block system `[[Kʳ, −Kⁱ], [Kⁱ, Kʳ]]` by negating its
/// second block row.
pub struct BlockLdlt {
    n: usize,
    symbolic: SymbolicCholesky<usize>,
    values: Vec<f64>,
}

impl std::fmt::Debug for BlockLdlt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlockLdlt").field("n", &self.n).field("nnz_factor", &self.values.len()).finish()
    }
}

impl BlockLdlt {
    /// Factorizes the complex matrix given by `entries(p)` listing `(q, kr, ki)`
    /// for each row `p` of an `n × n` symmetric matrix.
    pub fn factor(n: usize, rows: &[Vec<(usize, f64, f64)>]) -> Result<Self> {
        let mut trip = Vec::new();
        for (p, row) in rows.iter().enumerate() {
            for &(q, kr, ki) in row {
                if q > p {
                    continue;
                }
                trip.push(Triplet::new(p, q, kr));
                trip.push(Triplet::new(n + p, n + q, -kr));
                if ki != 0.0 {
                    trip.push(Triplet::new(n + p, q, -ki));
                    if q != p {
                        trip.push(Triplet::new(n + q, p, -ki));
                    }
                }
            }
        }
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(2 * n, 2 * n, &trip)
            .map_err(|e| Error::SingularSystem(format!("{e:?}")))?;
        let symbolic =
            factorize_symbolic_cholesky(m.symbolic(), Side::Lower, SymmetricOrdering::Amd, Default::default())
                .map_err(|e| Error::SingularSystem(format!("{e:?}")))?;
        let mut values = vec![0.0; symbolic.len_val()];
        let mut mem = MemBuffer::new(symbolic.factorize_numeric_ldlt_scratch::<f64>(Par::Seq, Default::default()));
        symbolic
            .factorize_numeric_ldlt(
                &mut values,
                m.as_ref(),
                Side::Lower,
                LdltRegularization::default(),
                Par::Seq,
                MemStack::new(&mut mem),
                Default::default(),
            )
            .map_err(|e| Error::SingularSystem(format!("{e:?}")))?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem("non-finite factor".into()));
        }
        Ok(Self { n, symbolic, values })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves for several complex right-hand sides at once.
    pub fn solve_many(&self, rhs: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        let n = self.n;
        let k = rhs.len();
        if k == 0 {
            return vec![];
        }
        let mut b = Mat::<f64>::zeros(2 * n, k);
        for (j, r) in rhs.iter().enumerate() {
            for i in 0..n {
                b[(i, j)] = r[i].re;
                b[(n + i, j)] = -r[i].im;
            }
        }
        let ldlt = LdltRef::<usize, f64>::new(&self.symbolic, &self.values);
        let mut mem = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(k, Par::Seq));
        ldlt.solve_in_place_with_conj(Conj::No, b.as_mut(), Par::Seq, MemStack::new(&mut mem));
        (0..k).map(|j| (0..n).map(|i| Complex64::new(b[(i, j)], b[(n + i, j)])).collect()).collect()
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        self.solve_many(std::slice::from_ref(&rhs.to_vec())).pop().expect("one column")
    }
}

/// Lower Cholesky factor of a dense SPD matrix.
pub fn dense_cholesky(a: &Mat<f64>) -> Result<Mat<f64>> {
    let llt = a.llt(Side::Lower).map_err(|_| Error::NotSpd)?;
    Ok(llt.L().to_owned())
}

/// Solves `L X = B` for lower-triangular `L`.
pub fn lower_solve(l: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
    let mut x = b.clone();
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(l.as_ref(), x.as_mut(), Par::Seq);
    x
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a dense symmetric matrix.
pub fn dense_sym_eigen(a: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let e = a.self_adjoint_eigen(Side::Lower).map_err(|e| Error::EigSolveFailure(format!("{e:?}")))?;
    let s = e.S().column_vector().iter().copied().collect();
    Ok((s, e.U().to_owned()))
}

/// Largest singular value of a dense complex matrix.
pub fn max_singular_value(a: &Mat<Complex64>) -> Result<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0.0);
    }
    let s = a.singular_values().map_err(|e| Error::EigSolveFailure(format!("{e:?}")))?;
    Ok(s[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_complex_symmetric_system() {
        // [[4+i, 1-0.5i], [1-0.5i, 3+2i]]
        let rows = vec![vec![(0, 4.0, 1.0), (1, 1.0, -0.5)], vec![(0, 1.0, -0.5), (1, 3.0, 2.0)]];
        let f = BlockLdlt::factor(2, &rows).unwrap();
        let b = vec![Complex64::new(1.0, 2.0), Complex64::new(-1.0, 0.5)];
        let x = f.solve(&b);
        let a = [
            [Complex64::new(4.0, 1.0), Complex64::new(1.0, -0.5)],
            [Complex64::new(1.0, -0.5), Complex64::new(3.0, 2.0)],
        ];
        for i in 0..2 {
            let r = a[i][0] * x[0] + a[i][1] * x[1] - b[i];
            assert!(r.norm() < 1e-14);
        }
    }
}
