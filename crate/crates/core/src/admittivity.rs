//! Piecewise-affine complex anisotropic admittivity `σ = γ A`.

use crate::error::{Error, Result};
use crate::geometry::{Aabb, AprioriData, LayeredDomain};
use crate::scalar::{Mat3, Real, Vec3};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

/// `γ(x) = s + S·x` with complex `s` and complex gradient `S`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineComplex<T: Real = f64> {
    pub s_r: T,
    pub s_i: T,
    pub g_r: Vec3<T>,
    pub g_i: Vec3<T>,
}

impl<T: Real> AffineComplex<T> {
    pub fn constant(re: T, im: T) -> Self {
        Self { s_r: re, s_i: im, g_r: Vec3::zero(), g_i: Vec3::zero() }
    }

    pub fn one() -> Self {
        Self::constant(T::one(), T::zero())
    }

    pub fn eval(&self, x: Vec3<T>) -> Complex<T> {
        Complex::new(self.s_r + self.g_r.dot(x), self.s_i + self.g_i.dot(x))
    }

    pub fn gradient(&self) -> (Vec3<T>, Vec3<T>) {
        (self.g_r, self.g_i)
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self { s_r: self.s_r - o.s_r, s_i: self.s_i - o.s_i, g_r: self.g_r - o.g_r, g_i: self.g_i - o.g_i }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { s_r: self.s_r + o.s_r, s_i: self.s_i + o.s_i, g_r: self.g_r + o.g_r, g_i: self.g_i + o.g_i }
    }

    pub fn scale(&self, c: T) -> Self {
        Self { s_r: self.s_r * c, s_i: self.s_i * c, g_r: self.g_r * c, g_i: self.g_i * c }
    }

    fn real_equal(&self, o: &Self) -> bool {
        self.s_r == o.s_r && self.g_r == o.g_r
    }

    fn imag_equal(&self, o: &Self) -> bool {
        self.s_i == o.s_i && self.g_i == o.g_i
    }
}

/// Symmetric positive-definite anisotropy `A(x) = A_0 + Σ_k x_k A_k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnisotropyField<T: Real = f64> {
    Constant(Mat3<T>),
    Affine { a0: Mat3<T>, a1: [Mat3<T>; 3] },
}

impl<T: Real> AnisotropyField<T> {
    pub fn identity() -> Self {
        AnisotropyField::Constant(Mat3::identity())
    }

    pub fn eval(&self, x: Vec3<T>) -> Mat3<T> {
        match self {
            AnisotropyField::Constant(a) => *a,
            AnisotropyField::Affine { a0, a1 } => {
                let mut m = *a0;
                for k in 0..3 {
                    m = m.add(&a1[k].scale(x[k]));
                }
                m
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, AnisotropyField::Constant(_))
    }

    /// Upper bound of the Lipschitz constant in the spectral norm.
    pub fn lipschitz(&self) -> T {
        match self {
            AnisotropyField::Constant(_) => T::zero(),
            AnisotropyField::Affine { a1, .. } => {
                let s = a1.iter().fold(T::zero(), |s, m| s + m.norm_fro() * m.norm_fro());
                s.sqrt()
            }
        }
    }

    /// `sup ‖A‖ + r0 · Lip(A)` over a box (spectral norm is convex, so the
    /// supremum over the box is attained at a vertex).
    pub fn c01_norm(&self, b: &Aabb<T>, r0: T) -> T {
        let sup = b.vertices().iter().map(|v| spectral_norm_sym(&self.eval(*v))).fold(T::zero(), T::max);
        sup + r0 * self.lipschitz()
    }
}

fn spectral_norm_sym<T: Real>(m: &Mat3<T>) -> T {
    let (vals, _) = m.sym_eigen();
    vals[0].abs().max(vals[2].abs())
}

/// Real 6×6 block form `[[σʳ, −σⁱ], [σⁱ, σʳ]]` of a complex tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockTensor<T: Real = f64> {
    pub re: Mat3<T>,
    pub im: Mat3<T>,
}

impl<T: Real> BlockTensor<T> {
    pub fn block(&self) -> [[T; 6]; 6] {
        let mut b = [[T::zero(); 6]; 6];
        for i in 0..3 {
            for j in 0..3 {
                b[i][j] = self.re.0[i][j];
                b[i][j + 3] = -self.im.0[i][j];
                b[i + 3][j] = self.im.0[i][j];
                b[i + 3][j + 3] = self.re.0[i][j];
            }
        }
        b
    }

    /// `𝒞ξ·ξ` for `ξ ∈ ℝ⁶`.
    pub fn quad_form(&self, xi: [T; 6]) -> T {
        let b = self.block();
        let mut s = T::zero();
        for i in 0..6 {
            for j in 0..6 {
                s = s + b[i][j] * xi[i] * xi[j];
            }
        }
        s
    }

    /// Complex matrix entry `(i, j)`.
    pub fn entry(&self, i: usize, j: usize) -> Complex<T> {
        Complex::new(self.re.0[i][j], self.im.0[i][j])
    }
}

/// Per-layer affine `γ_m`, `m = 1…N+1`, and a common anisotropy field. The
/// slab `D_0` carries `γ = 1`, `A = I`.
#[derive(Clone, Debug, PartialEq)]
pub struct Admittivity<T: Real = f64> {
    pub gammas: Vec<AffineComplex<T>>,
    pub anisotropy: AnisotropyField<T>,
}

impl<T: Real> Admittivity<T> {
    pub fn new(gammas: Vec<AffineComplex<T>>, anisotropy: AnisotropyField<T>) -> Self {
        Self { gammas, anisotropy }
    }

    /// Number of layers `N + 1` inside `Ω`.
    pub fn n_layers(&self) -> usize {
        self.gammas.len()
    }

    /// `γ` on layer `layer` without a membership check (layer 0 is the slab).
    pub fn gamma_at(&self, layer: usize, x: Vec3<T>) -> Complex<T> {
        if layer == 0 {
            Complex::new(T::one(), T::zero())
        } else {
            self.gammas[layer - 1].eval(x)
        }
    }

    /// Affine coefficient of layer `layer` (the constant one on the slab).
    pub fn affine(&self, layer: usize) -> AffineComplex<T> {
        if layer == 0 {
            AffineComplex::one()
        } else {
            self.gammas[layer - 1]
        }
    }

    pub fn anisotropy_at(&self, layer: usize, x: Vec3<T>) -> Mat3<T> {
        if layer == 0 {
            Mat3::identity()
        } else {
            self.anisotropy.eval(x)
        }
    }

    /// `σ = γA` on layer `layer` as a block tensor, no membership check.
    pub fn sigma_at(&self, layer: usize, x: Vec3<T>) -> BlockTensor<T> {
        let g = self.gamma_at(layer, x);
        let a = self.anisotropy_at(layer, x);
        BlockTensor { re: a.scale(g.re), im: a.scale(g.im) }
    }

    fn check_layer(&self, dom: &LayeredDomain<T>, x: Vec3<T>, layer: usize) -> Result<()> {
        let err = || Error::LayerMismatch { point: x.cast::<f64>().0, layer };
        if layer == 0 {
            return Ok(());
        }
        if layer > self.gammas.len() || layer > dom.boxes.len() {
            return Err(err());
        }
        if !dom.boxes[layer - 1].contains(x) {
            return Err(err());
        }
        if layer < dom.boxes.len() && dom.boxes[layer].contains_open(x) {
            return Err(err());
        }
        Ok(())
    }

    /// Evaluates `γ_m(x)` after checking that `x` is in the closure of `D_m`.
    pub fn eval_gamma(&self, dom: &LayeredDomain<T>, x: Vec3<T>, layer: usize) -> Result<Complex<T>> {
        self.check_layer(dom, x, layer)?;
        Ok(self.gamma_at(layer, x))
    }

    /// Evaluates `σ(x)` after checking that `x` is in the closure of `D_m`.
    pub fn eval_sigma(&self, dom: &LayeredDomain<T>, x: Vec3<T>, layer: usize) -> Result<BlockTensor<T>> {
        self.check_layer(dom, x, layer)?;
        Ok(self.sigma_at(layer, x))
    }

    /// Same anisotropy, `γ` scaled by `c`.
    pub fn scale_gamma(&self, c: T) -> Self {
        Self { gammas: self.gammas.iter().map(|g| g.scale(c)).collect(), anisotropy: self.anisotropy }
    }

    /// Convex box pieces of layer `m ≥ 1`.
    pub fn layer_pieces(dom: &LayeredDomain<T>, m: usize) -> Vec<Aabb<T>> {
        if m < dom.boxes.len() {
            dom.boxes[m - 1].shell_pieces(&dom.boxes[m])
        } else {
            vec![dom.boxes[m - 1]]
        }
    }

    /// Validates assumptions (a)–(d). `extra` holds additional sample points
    /// (e.g. mesh nodes) with their layer indices.
    pub fn validate_apriori(
        &self,
        apriori: &AprioriData,
        dom: &LayeredDomain<T>,
        extra: &[(Vec3<T>, usize)],
    ) -> AprioriReport {
        let gbar = T::lit(apriori.gamma_bar);
        let lam = T::lit(apriori.lambda);
        let mut rep = AprioriReport::default();
        if self.gammas.len() != dom.n_layers() + 1 {
            let msg = format!("expected {} layer coefficients, found {}", dom.n_layers() + 1, self.gammas.len());
            for c in [&mut rep.bounds, &mut rep.lipschitz, &mut rep.ellipticity, &mut rep.visibility] {
                c.fail(msg.clone(), None);
            }
            return rep;
        }
        let mut samples: Vec<(Vec3<T>, usize)> = Vec::new();
        for m in 1..=self.gammas.len() {
            for piece in Self::layer_pieces(dom, m) {
                samples.extend(piece.vertices().iter().map(|v| (*v, m)));
            }
        }
        samples.extend_from_slice(extra);
        let tol = T::lit(1e-12);
        for &(x, m) in &samples {
            let g = self.gamma_at(m, x);
            if rep.bounds.passed && g.re < T::one() / gbar - tol {
                rep.bounds.fail(format!("γʳ = {} < 1/γ̄ in layer {m}", g.re), Some(x.cast()));
            }
            if rep.bounds.passed && g.norm() > gbar + tol {
                rep.bounds.fail(format!("|γ| = {} > γ̄ in layer {m}", g.norm()), Some(x.cast()));
            }
            if rep.ellipticity.passed {
                let sr = self.anisotropy_at(m, x).scale(g.re);
                let (vals, _) = sr.sym_eigen();
                if vals[0] < T::one() / lam - tol || vals[2] > lam + tol {
                    rep.ellipticity.fail(
                        format!("eigenvalues of σʳ in [{}, {}] outside [1/λ, λ] in layer {m}", vals[0], vals[2]),
                        Some(x.cast()),
                    );
                }
            }
            if rep.lipschitz.passed {
                let a = self.anisotropy.eval(x);
                if a.asymmetry() > tol * (T::one() + a.max_abs()) {
                    rep.lipschitz.fail("A is not symmetric".into(), Some(x.cast()));
                } else if a.sym_eigen().0[0] <= T::zero() {
                    rep.lipschitz.fail("A is not positive definite".into(), Some(x.cast()));
                }
            }
        }
        if rep.lipschitz.passed {
            let norm = self.anisotropy.c01_norm(dom.omega(), dom.r0);
            if norm > T::lit(apriori.a_bar) + tol {
                rep.lipschitz.fail(format!("‖A‖_C01 = {norm} > Ā"), None);
            }
        }
        for m in 2..=self.gammas.len() {
            let (a, b) = (&self.gammas[m - 2], &self.gammas[m - 1]);
            if a.real_equal(b) {
                rep.visibility.fail(format!("real parts of γ_{} and γ_{m} coincide", m - 1), None);
                rep.visibility.layers = Some((m - 1, m));
                break;
            }
            if a.imag_equal(b) {
                rep.visibility.fail(format!("imaginary parts of γ_{} and γ_{m} coincide", m - 1), None);
                rep.visibility.layers = Some((m - 1, m));
                break;
            }
        }
        rep
    }

    /// Exact `E = sup_Ω |γ⁽¹⁾ − γ⁽²⁾|`, its witness point and maximizing layer.
    pub fn sup_norm_diff(&self, other: &Self, dom: &LayeredDomain<T>) -> Result<SupNormDiff<T>> {
        if self.anisotropy != other.anisotropy {
            return Err(Error::AnisotropyMismatch);
        }
        if self.gammas.len() != other.gammas.len() {
            return Err(Error::InvalidInput("layer counts differ".into()));
        }
        let mut best = SupNormDiff { value: T::zero(), witness: dom.omega().center(), layer: 1, per_layer: vec![] };
        for m in 1..=self.gammas.len() {
            let d = self.gammas[m - 1].sub(&other.gammas[m - 1]);
            let mut lm = T::zero();
            for piece in Self::layer_pieces(dom, m) {
                for v in piece.vertices() {
                    let val = d.eval(v).norm();
                    if val > lm {
                        lm = val;
                    }
                    if val > best.value {
                        best.value = val;
                        best.witness = v;
                        best.layer = m;
                    }
                }
            }
            best.per_layer.push(lm);
        }
        Ok(best)
    }
}

/// Result of [`Admittivity::sup_norm_diff`].
#[derive(Clone, Debug, PartialEq)]
pub struct SupNormDiff<T: Real = f64> {
    pub value: T,
    pub witness: Vec3<T>,
    pub layer: usize,
    /// Maximum per layer `m = 1…N+1`.
    pub per_layer: Vec<T>,
}

/// Outcome of one a-priori clause.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Clause {
    pub passed: bool,
    pub detail: Option<String>,
    pub witness: Option<Vec3Ser>,
    pub layers: Option<(usize, usize)>,
}

impl Default for Clause {
    fn default() -> Self {
        Self { passed: true, detail: None, witness: None, layers: None }
    }
}

impl Clause {
    fn fail(&mut self, detail: String, witness: Option<Vec3<f64>>) {
        if self.passed {
            self.passed = false;
            self.detail = Some(detail);
            self.witness = witness.map(|w| Vec3Ser(w.0));
        }
    }
}

/// Serializable point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Vec3Ser(pub [f64; 3]);

/// Pass/fail per assumption (a) bounds, (b) Lipschitz, (c) ellipticity, (d) visibility.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AprioriReport {
    pub bounds: Clause,
    pub lipschitz: Clause,
    pub ellipticity: Clause,
    pub visibility: Clause,
}

impl AprioriReport {
    pub fn passed(&self) -> bool {
        self.bounds.passed && self.lipschitz.passed && self.ellipticity.passed && self.visibility.passed
    }

    /// Name of the first failing clause.
    pub fn first_failure(&self) -> Option<(&'static str, &Clause)> {
        [
            ("Bounds on the conductivity", &self.bounds),
            ("Lipschitz continuity of A", &self.lipschitz),
            ("Uniform ellipticity condition", &self.ellipticity),
            ("Visibility condition", &self.visibility),
        ]
        .into_iter()
        .find(|(_, c)| !c.passed)
    }
}

/// Serialized form of one layer coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaSpec {
    pub s_r: f64,
    pub s_i: f64,
    #[serde(rename = "S_r")]
    pub g_r: [f64; 3],
    #[serde(rename = "S_i")]
    pub g_i: [f64; 3],
}

/// Serialized anisotropy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[allow(clippy::large_enum_variant)]
pub enum AnisotropySpec {
    Constant { value: [[f64; 3]; 3] },
    Affine { value: [[f64; 3]; 3], linear: [[[f64; 3]; 3]; 3] },
}

/// Serialized admittivity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmittivitySpec {
    pub gammas: Vec<GammaSpec>,
    pub anisotropy: AnisotropySpec,
}

impl AdmittivitySpec {
    pub fn build<T: Real>(&self) -> Admittivity<T> {
        let v = |a: [f64; 3]| Vec3(a.map(T::lit));
        let m = |a: [[f64; 3]; 3]| Mat3(a.map(|r| r.map(T::lit)));
        Admittivity {
            gammas: self
                .gammas
                .iter()
                .map(|g| AffineComplex { s_r: T::lit(g.s_r), s_i: T::lit(g.s_i), g_r: v(g.g_r), g_i: v(g.g_i) })
                .collect(),
            anisotropy: match &self.anisotropy {
                AnisotropySpec::Constant { value } => AnisotropyField::Constant(m(*value)),
                AnisotropySpec::Affine { value, linear } => {
                    AnisotropyField::Affine { a0: m(*value), a1: linear.map(m) }
                }
            },
        }
    }

    pub fn from_admittivity(a: &Admittivity<f64>) -> Self {
        Self {
            gammas: a.gammas.iter().map(|g| GammaSpec { s_r: g.s_r, s_i: g.s_i, g_r: g.g_r.0, g_i: g.g_i.0 }).collect(),
            anisotropy: match a.anisotropy {
                AnisotropyField::Constant(c) => AnisotropySpec::Constant { value: c.0 },
                AnisotropyField::Affine { a0, a1 } => AnisotropySpec::Affine { value: a0.0, linear: a1.map(|m| m.0) },
            },
        }
    }
}
