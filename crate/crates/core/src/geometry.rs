//! Layered box geometry: nested boxes, layers, flat portions and the
//! augmented domain with its outer slab.

use crate::error::{Error, Result};
use crate::scalar::{Real, Vec3};
use serde::{Deserialize, Serialize};

/// A-priori constants of the admissible class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AprioriData {
    pub n_layers: usize,
    pub r0: f64,
    #[serde(rename = "M0")]
    pub m0: f64,
    pub lambda: f64,
    pub gamma_bar: f64,
    #[serde(rename = "A_bar")]
    pub a_bar: f64,
}

impl AprioriData {
    pub const DIMENSION: usize = 3;

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if self.n_layers == 0 {
            return bad("n_layers must be positive");
        }
        if !(self.lambda > 1.0) {
            return bad("lambda must exceed 1");
        }
        if !(self.gamma_bar > 1.0) {
            return bad("gamma_bar must exceed 1");
        }
        if !(self.a_bar > 0.0) {
            return bad("A_bar must be positive");
        }
        if !(self.r0 > 0.0) {
            return bad("r0 must be positive");
        }
        Ok(())
    }
}

/// Closed axis-aligned box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb<T: Real = f64> {
    pub lo: Vec3<T>,
    pub hi: Vec3<T>,
}

impl<T: Real> Aabb<T> {
    pub fn new(lo: Vec3<T>, hi: Vec3<T>) -> Self {
        Self { lo, hi }
    }

    pub fn center(&self) -> Vec3<T> {
        (self.lo + self.hi).scale(T::lit(0.5))
    }

    pub fn extent(&self, axis: usize) -> T {
        self.hi[axis] - self.lo[axis]
    }

    pub fn contains(&self, x: Vec3<T>) -> bool {
        (0..3).all(|a| x[a] >= self.lo[a] && x[a] <= self.hi[a])
    }

    pub fn contains_open(&self, x: Vec3<T>) -> bool {
        (0..3).all(|a| x[a] > self.lo[a] && x[a] < self.hi[a])
    }

    /// True when `x` lies on the surface of the box.
    pub fn on_surface(&self, x: Vec3<T>) -> bool {
        self.contains(x) && !self.contains_open(x)
    }

    /// Euclidean distance from `x` to the box surface.
    pub fn dist_to_surface(&self, x: Vec3<T>) -> T {
        if self.contains(x) {
            let mut d = T::infinity();
            for a in 0..3 {
                d = d.min(x[a] - self.lo[a]).min(self.hi[a] - x[a]);
            }
            d
        } else {
            self.dist_outside(x)
        }
    }

    /// Distance from `x` to the (closed) box; zero inside.
    pub fn dist_outside(&self, x: Vec3<T>) -> T {
        let mut s = T::zero();
        for a in 0..3 {
            let d = (self.lo[a] - x[a]).max(x[a] - self.hi[a]).max(T::zero());
            s = s + d * d;
        }
        s.sqrt()
    }

    /// The eight vertices.
    pub fn vertices(&self) -> [Vec3<T>; 8] {
        let mut v = [Vec3::zero(); 8];
        for (c, out) in v.iter_mut().enumerate() {
            for a in 0..3 {
                out[a] = if (c >> a) & 1 == 0 { self.lo[a] } else { self.hi[a] };
            }
        }
        v
    }

    /// Convex box decomposition of `self` minus the open interior of `inner`,
    /// assuming `inner` is nested strictly inside. Yields up to 26 boxes.
    pub fn shell_pieces(&self, inner: &Aabb<T>) -> Vec<Aabb<T>> {
        let cuts = |a: usize| [self.lo[a], inner.lo[a], inner.hi[a], self.hi[a]];
        let (cx, cy, cz) = (cuts(0), cuts(1), cuts(2));
        let mut out = Vec::with_capacity(26);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    if i == 1 && j == 1 && k == 1 {
                        continue;
                    }
                    out.push(Aabb::new(Vec3::new(cx[i], cy[j], cz[k]), Vec3::new(cx[i + 1], cy[j + 1], cz[k + 1])));
                }
            }
        }
        out
    }
}

/// One of the six faces of an axis-aligned box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Face {
    #[serde(rename = "x-")]
    XMinus,
    #[serde(rename = "x+")]
    XPlus,
    #[serde(rename = "y-")]
    YMinus,
    #[serde(rename = "y+")]
    YPlus,
    #[serde(rename = "z-")]
    ZMinus,
    #[serde(rename = "z+")]
    ZPlus,
}

impl Face {
    pub const ALL: [Face; 6] = [Face::XMinus, Face::XPlus, Face::YMinus, Face::YPlus, Face::ZMinus, Face::ZPlus];

    /// Normal axis index.
    pub fn axis(self) -> usize {
        match self {
            Face::XMinus | Face::XPlus => 0,
            Face::YMinus | Face::YPlus => 1,
            Face::ZMinus | Face::ZPlus => 2,
        }
    }

    /// `+1` for the upper face along the axis, `-1` for the lower one.
    pub fn sign(self) -> i32 {
        match self {
            Face::XMinus | Face::YMinus | Face::ZMinus => -1,
            _ => 1,
        }
    }

    /// The two tangential axes in increasing order.
    pub fn tangential(self) -> [usize; 2] {
        match self.axis() {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        }
    }

    pub fn outward_normal<T: Real>(self) -> Vec3<T> {
        let mut n = Vec3::zero();
        n[self.axis()] = T::lit(self.sign() as f64);
        n
    }

    /// Coordinate of the face plane for box `b`.
    pub fn plane<T: Real>(self, b: &Aabb<T>) -> T {
        if self.sign() < 0 {
            b.lo[self.axis()]
        } else {
            b.hi[self.axis()]
        }
    }
}

/// Rectangle in the tangential coordinates of a face.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect<T: Real = f64> {
    pub lo: [T; 2],
    pub hi: [T; 2],
}

impl<T: Real> Rect<T> {
    pub fn side(&self, i: usize) -> T {
        self.hi[i] - self.lo[i]
    }

    pub fn center(&self) -> [T; 2] {
        [(self.lo[0] + self.hi[0]) * T::lit(0.5), (self.lo[1] + self.hi[1]) * T::lit(0.5)]
    }

    pub fn contains(&self, p: [T; 2]) -> bool {
        (0..2).all(|i| p[i] >= self.lo[i] && p[i] <= self.hi[i])
    }

    pub fn contains_open(&self, p: [T; 2]) -> bool {
        (0..2).all(|i| p[i] > self.lo[i] && p[i] < self.hi[i])
    }
}

/// Planar rectangle on a face of `∂Ω_owner`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlatPortion<T: Real = f64> {
    pub owner: usize,
    pub face: Face,
    pub rect: Rect<T>,
    /// Outward unit normal of `∂Ω_owner` on `face`.
    pub normal: Vec3<T>,
    /// Coordinate of the face plane along the normal axis.
    pub plane: T,
}

impl<T: Real> FlatPortion<T> {
    /// Lifts tangential coordinates to a point on the portion plane.
    pub fn point(&self, t: [T; 2]) -> Vec3<T> {
        let [a, b] = self.face.tangential();
        let mut p = Vec3::zero();
        p[self.face.axis()] = self.plane;
        p[a] = t[0];
        p[b] = t[1];
        p
    }

    pub fn center(&self) -> Vec3<T> {
        self.point(self.rect.center())
    }

    /// Tangential coordinates of `x`.
    pub fn tangential_coords(&self, x: Vec3<T>) -> [T; 2] {
        let [a, b] = self.face.tangential();
        [x[a], x[b]]
    }

    /// True when `x` is on the portion plane and within the closed rectangle.
    pub fn contains(&self, x: Vec3<T>, tol: T) -> bool {
        (x[self.face.axis()] - self.plane).abs() <= tol && self.rect.contains(self.tangential_coords(x))
    }

    /// `P + r ν` for `P` the supplied point on the portion (default: its center).
    pub fn probe_point(&self, offset: T, limit: T, at: Option<Vec3<T>>) -> Result<Vec3<T>> {
        if !(offset.abs() < limit) {
            return Err(Error::OffsetOutOfRange { offset: offset.to_f64_lossless(), limit: limit.to_f64_lossless() });
        }
        let p = at.unwrap_or_else(|| self.center());
        Ok(p + self.normal.scale(offset))
    }
}

/// Serializable description of a flat portion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortionSpec {
    pub owner: usize,
    pub face: Face,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

/// Serializable description of a layered domain, boxes outermost first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub boxes: Vec<[[f64; 3]; 2]>,
    pub portions: Vec<PortionSpec>,
    pub pitch: f64,
}

/// Index of the layer containing a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerIndex {
    Layer(usize),
    Boundary,
}

/// True when `v` is an integer multiple of `pitch` up to rounding.
pub fn on_grid<T: Real>(v: T, pitch: T) -> bool {
    let q = v / pitch;
    (q - q.round()).abs() <= T::lit(1e-6)
}

/// Nested boxes `Ω_0 ⊃ … ⊃ Ω_N` with one flat portion per boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct LayeredDomain<T: Real = f64> {
    pub boxes: Vec<Aabb<T>>,
    pub portions: Vec<FlatPortion<T>>,
    pub pitch: T,
    pub r0: T,
}

impl<T: Real> LayeredDomain<T> {
    /// Validates and builds a layered domain.
    pub fn build(spec: &DomainSpec, r0: T) -> Result<Self> {
        let pitch = T::lit(spec.pitch);
        if !(spec.pitch > 0.0) || !(r0 > T::zero()) {
            return Err(Error::InvalidInput("pitch and r0 must be positive".into()));
        }
        if spec.boxes.is_empty() {
            return Err(Error::InvalidInput("at least one box is required".into()));
        }
        let boxes: Vec<Aabb<T>> =
            spec.boxes.iter().map(|b| Aabb::new(Vec3(b[0].map(T::lit)), Vec3(b[1].map(T::lit)))).collect();
        for (m, b) in boxes.iter().enumerate() {
            for a in 0..3 {
                if !(b.lo[a] < b.hi[a]) {
                    return Err(Error::InvalidInput(format!("box {m} is empty along axis {a}")));
                }
                for v in [b.lo[a], b.hi[a]] {
                    if !on_grid(v, pitch) {
                        return Err(Error::GridMisaligned(format!(
                            "box {m} coordinate {v} is not a multiple of {pitch}"
                        )));
                    }
                }
            }
        }
        let margin = T::lit(2.0) * pitch * (T::one() - T::lit(1e-9));
        for m in 1..boxes.len() {
            let (outer, inner) = (&boxes[m - 1], &boxes[m]);
            for a in 0..3 {
                let lo = inner.lo[a] - outer.lo[a];
                let hi = outer.hi[a] - inner.hi[a];
                if lo < margin || hi < margin {
                    return Err(Error::NestingViolation(format!(
                        "box {m} margin {} below 2h along axis {a}",
                        lo.min(hi)
                    )));
                }
            }
        }
        let n_boxes = boxes.len();
        let mut portions: Vec<Option<FlatPortion<T>>> = vec![None; n_boxes];
        for (i, p) in spec.portions.iter().enumerate() {
            if p.owner >= n_boxes {
                return Err(Error::InvalidInput(format!("portion {i} owner {} out of range", p.owner)));
            }
            if portions[p.owner].is_some() {
                return Err(Error::InvalidInput(format!("duplicate portion for boundary {}", p.owner)));
            }
            let b = &boxes[p.owner];
            let rect = Rect { lo: p.lo.map(T::lit), hi: p.hi.map(T::lit) };
            let tang = p.face.tangential();
            for s in 0..2 {
                for v in [rect.lo[s], rect.hi[s]] {
                    if !on_grid(v, pitch) {
                        return Err(Error::GridMisaligned(format!(
                            "portion {i} coordinate {v} is not a multiple of {pitch}"
                        )));
                    }
                }
                if !(rect.lo[s] > b.lo[tang[s]] && rect.hi[s] < b.hi[tang[s]] && rect.lo[s] < rect.hi[s]) {
                    return Err(Error::InvalidInput(format!("portion {i} must lie strictly inside its face")));
                }
                let min = r0 / T::lit(3.0);
                if rect.side(s) < min * (T::one() - T::lit(1e-12)) {
                    return Err(Error::PortionTooSmall {
                        index: i,
                        side: rect.side(s).to_f64_lossless(),
                        min: min.to_f64_lossless(),
                    });
                }
            }
            portions[p.owner] = Some(FlatPortion {
                owner: p.owner,
                face: p.face,
                rect,
                normal: p.face.outward_normal(),
                plane: p.face.plane(b),
            });
        }
        let portions = portions
            .into_iter()
            .enumerate()
            .map(|(m, p)| p.ok_or_else(|| Error::InvalidInput(format!("missing flat portion on boundary {m}"))))
            .collect::<Result<Vec<_>>>()?;
        let dom = Self { boxes, portions, pitch, r0 };
        for m in 1..=dom.n_layers() + 1 {
            if !dom.layer_connected(m) {
                return Err(Error::DisconnectedLayer(m));
            }
        }
        Ok(dom)
    }

    /// Number of interior interfaces `N` (layers are `D_1 … D_{N+1}`).
    pub fn n_layers(&self) -> usize {
        self.boxes.len() - 1
    }

    pub fn omega(&self) -> &Aabb<T> {
        &self.boxes[0]
    }

    /// The flat portion `Σ` on `∂Ω_0`.
    pub fn sigma(&self) -> &FlatPortion<T> {
        &self.portions[0]
    }

    /// Layer index of a point of `Ω` (closure); index 0 is reserved for the slab.
    pub fn layer_index(&self, x: Vec3<T>) -> Result<LayerIndex> {
        if !self.boxes[0].contains(x) {
            return Err(Error::OutsideDomain(x.cast::<f64>().0));
        }
        if self.boxes.iter().any(|b| b.on_surface(x)) {
            return Ok(LayerIndex::Boundary);
        }
        let m = self.boxes.iter().take_while(|b| b.contains_open(x)).count();
        Ok(LayerIndex::Layer(m))
    }

    /// Layer of an open-cell point, ignoring the interface tie.
    pub fn layer_of_interior_point(&self, x: Vec3<T>) -> usize {
        self.boxes.iter().take_while(|b| b.contains_open(x)).count()
    }

    /// Distance from `x` to `∂Ω_0`.
    pub fn dist_to_boundary(&self, x: Vec3<T>) -> T {
        self.boxes[0].dist_to_surface(x)
    }

    /// Flood fill over the cell centers of the pitch grid restricted to layer `m`.
    fn layer_connected(&self, m: usize) -> bool {
        let om = &self.boxes[0];
        let n: Vec<usize> = (0..3).map(|a| (om.extent(a) / self.pitch).round().to_usize().unwrap_or(0)).collect();
        let (nx, ny, nz) = (n[0], n[1], n[2]);
        let total = nx * ny * nz;
        if total == 0 || total > 8_000_000 {
            return true;
        }
        let half = T::lit(0.5);
        let center = |i: usize, j: usize, k: usize| {
            om.lo
                + Vec3::new(
                    (T::lit(i as f64) + half) * self.pitch,
                    (T::lit(j as f64) + half) * self.pitch,
                    (T::lit(k as f64) + half) * self.pitch,
                )
        };
        let id = |i: usize, j: usize, k: usize| i + nx * (j + ny * k);
        let mut inlayer = vec![false; total];
        let mut start = None;
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    if self.layer_of_interior_point(center(i, j, k)) == m {
                        inlayer[id(i, j, k)] = true;
                        start.get_or_insert((i, j, k));
                    }
                }
            }
        }
        let Some(s) = start else { return false };
        let mut seen = vec![false; total];
        let mut stack = vec![s];
        seen[id(s.0, s.1, s.2)] = true;
        let mut count = 0usize;
        while let Some((i, j, k)) = stack.pop() {
            count += 1;
            let nb = [
                (i.wrapping_sub(1), j, k),
                (i + 1, j, k),
                (i, j.wrapping_sub(1), k),
                (i, j + 1, k),
                (i, j, k.wrapping_sub(1)),
                (i, j, k + 1),
            ];
            for (a, b, c) in nb {
                if a < nx && b < ny && c < nz {
                    let q = id(a, b, c);
                    if inlayer[q] && !seen[q] {
                        seen[q] = true;
                        stack.push((a, b, c));
                    }
                }
            }
        }
        count == inlayer.iter().filter(|v| **v).count()
    }

    /// Outer slab attached along `Σ`, footprint equal to the rectangle of `Σ`.
    pub fn augment(&self, depth: T) -> Result<AugmentedDomain<T>> {
        AugmentedDomain::new(self.clone(), depth)
    }
}

/// `Ω` together with the slab `D_0` glued along `Σ`.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedDomain<T: Real = f64> {
    pub base: LayeredDomain<T>,
    pub slab: Aabb<T>,
    pub depth: T,
    /// Points of the slab at distance at least `r0/2` from `∂Ω`.
    pub pole_region: Aabb<T>,
    /// Bounding box of `Ω̃_0`.
    pub bbox: Aabb<T>,
}

impl<T: Real> AugmentedDomain<T> {
    fn new(base: LayeredDomain<T>, depth: T) -> Result<Self> {
        let r0 = base.r0;
        if depth < r0 * (T::one() - T::lit(1e-12)) {
            return Err(Error::SlabTooThin { depth: depth.to_f64_lossless(), r0: r0.to_f64_lossless() });
        }
        if !on_grid(depth, base.pitch) {
            return Err(Error::FootprintMismatch(format!("slab depth {depth} is not a multiple of the pitch")));
        }
        let sigma = *base.sigma();
        if sigma.owner != 0 {
            return Err(Error::FootprintMismatch("Σ must lie on ∂Ω_0".into()));
        }
        let axis = sigma.face.axis();
        let [ta, tb] = sigma.face.tangential();
        let mut lo = Vec3::zero();
        let mut hi = Vec3::zero();
        lo[ta] = sigma.rect.lo[0];
        hi[ta] = sigma.rect.hi[0];
        lo[tb] = sigma.rect.lo[1];
        hi[tb] = sigma.rect.hi[1];
        let mut pr_lo = lo;
        let mut pr_hi = hi;
        let half = r0 * T::lit(0.5);
        if sigma.face.sign() < 0 {
            lo[axis] = sigma.plane - depth;
            hi[axis] = sigma.plane;
            pr_lo[axis] = lo[axis];
            pr_hi[axis] = sigma.plane - half;
        } else {
            lo[axis] = sigma.plane;
            hi[axis] = sigma.plane + depth;
            pr_lo[axis] = sigma.plane + half;
            pr_hi[axis] = hi[axis];
        }
        let slab = Aabb::new(lo, hi);
        let om = base.omega();
        let mut blo = om.lo;
        let mut bhi = om.hi;
        for a in 0..3 {
            blo[a] = blo[a].min(slab.lo[a]);
            bhi[a] = bhi[a].max(slab.hi[a]);
        }
        Ok(Self { base, slab, depth, pole_region: Aabb::new(pr_lo, pr_hi), bbox: Aabb::new(blo, bhi) })
    }

    pub fn pitch(&self) -> T {
        self.base.pitch
    }

    pub fn r0(&self) -> T {
        self.base.r0
    }

    /// Closure membership in `Ω̃_0`.
    pub fn contains(&self, x: Vec3<T>) -> bool {
        self.base.omega().contains(x) || self.slab.contains(x)
    }

    /// Layer index including the slab (index 0).
    pub fn layer_index(&self, x: Vec3<T>) -> Result<LayerIndex> {
        if self.base.omega().contains(x) {
            return self.base.layer_index(x);
        }
        if self.slab.contains(x) {
            if self.slab.on_surface(x) {
                return Ok(LayerIndex::Boundary);
            }
            return Ok(LayerIndex::Layer(0));
        }
        Err(Error::OutsideDomain(x.cast::<f64>().0))
    }

    /// Layer of an interior point not on any interface (slab is 0).
    pub fn layer_of_interior_point(&self, x: Vec3<T>) -> Option<usize> {
        if self.base.omega().contains_open(x) {
            Some(self.base.layer_of_interior_point(x))
        } else if self.slab.contains_open(x) {
            Some(0)
        } else {
            None
        }
    }

    /// Whether `x` lies in the pole region `(D_0)_{r0/2}`.
    pub fn in_pole_region(&self, x: Vec3<T>) -> bool {
        self.pole_region.contains(x)
    }

    /// Probe point `P + r ν` on portion `m` (default `P` = portion center).
    pub fn probe_point(&self, m: usize, offset: T, at: Option<Vec3<T>>) -> Result<Vec3<T>> {
        let portion =
            self.base.portions.get(m).ok_or_else(|| Error::InvalidInput(format!("no portion on boundary {m}")))?;
        let limit = self.r0() * T::lit(0.5);
        let p = portion.probe_point(offset, limit, at)?;
        if !self.contains(p) {
            return Err(Error::OutsideDomain(p.cast::<f64>().0));
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_layer_spec() -> DomainSpec {
        DomainSpec {
            boxes: vec![[[0.0; 3], [1.0; 3]], [[0.25; 3], [0.75; 3]]],
            portions: vec![
                PortionSpec { owner: 0, face: Face::ZMinus, lo: [0.125, 0.125], hi: [0.875, 0.875] },
                PortionSpec { owner: 1, face: Face::ZPlus, lo: [0.375, 0.375], hi: [0.625, 0.625] },
            ],
            pitch: 1.0 / 16.0,
        }
    }

    #[test]
    fn builds_two_layer_domain() {
        let d = LayeredDomain::<f64>::build(&two_layer_spec(), 0.5).unwrap();
        assert_eq!(d.n_layers(), 1);
        assert_eq!(d.sigma().normal, Vec3::new(0.0, 0.0, -1.0));
    }

    #[test]
    fn shared_corner_is_nesting_violation() {
        let mut s = two_layer_spec();
        s.boxes[1] = [[0.0; 3], [0.5; 3]];
        assert!(matches!(LayeredDomain::<f64>::build(&s, 0.5), Err(Error::NestingViolation(_))));
    }

    #[test]
    fn off_grid_face_is_misaligned() {
        let mut s = two_layer_spec();
        s.boxes[1][0][0] = 0.3;
        assert!(matches!(LayeredDomain::<f64>::build(&s, 0.5), Err(Error::GridMisaligned(_))));
    }

    #[test]
    fn small_portion_rejected() {
        let mut s = two_layer_spec();
        s.portions[1].hi = [0.5, 0.625];
        assert!(matches!(LayeredDomain::<f64>::build(&s, 0.5), Err(Error::PortionTooSmall { .. })));
    }

    #[test]
    fn layer_index_examples() {
        let d = LayeredDomain::<f64>::build(&two_layer_spec(), 0.5).unwrap();
        let a = d.augment(0.5).unwrap();
        assert_eq!(a.layer_index(Vec3::new(0.5, 0.5, 0.5)).unwrap(), LayerIndex::Layer(2));
        assert_eq!(a.layer_index(Vec3::new(0.5, 0.5, -0.2)).unwrap(), LayerIndex::Layer(0));
        assert_eq!(a.layer_index(Vec3::new(0.5, 0.5, 0.25)).unwrap(), LayerIndex::Boundary);
        assert_eq!(a.layer_index(Vec3::new(0.1, 0.1, 0.1)).unwrap(), LayerIndex::Layer(1));
        assert!(a.layer_index(Vec3::new(0.05, 0.5, -0.2)).is_err());
    }

    #[test]
    fn augment_builds_slab_and_pole_region() {
        let d = LayeredDomain::<f64>::build(&two_layer_spec(), 0.5).unwrap();
        let a = d.augment(0.5).unwrap();
        assert_eq!(a.slab.lo, Vec3::new(0.125, 0.125, -0.5));
        assert_eq!(a.slab.hi, Vec3::new(0.875, 0.875, 0.0));
        assert_eq!(a.pole_region.hi[2], -0.25);
        assert!(matches!(d.augment(0.125), Err(Error::SlabTooThin { .. })));
    }

    #[test]
    fn probe_point_uses_outward_normal() {
        let d = LayeredDomain::<f64>::build(&two_layer_spec(), 0.5).unwrap();
        let a = d.augment(0.5).unwrap();
        let p = a.probe_point(1, 1.0 / 16.0, None).unwrap();
        assert_eq!(p, Vec3::new(0.5, 0.5, 0.8125));
        let q = a.probe_point(1, -1.0 / 16.0, None).unwrap();
        assert_eq!(q, Vec3::new(0.5, 0.5, 0.6875));
        assert!(matches!(a.probe_point(1, 0.5, None), Err(Error::OffsetOutOfRange { .. })));
    }

    #[test]
    fn shell_pieces_cover_volume() {
        let o = Aabb::new(Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 1.0));
        let i = Aabb::new(Vec3::new(0.25, 0.25, 0.25), Vec3::new(0.75, 0.75, 0.75));
        let v: f64 = o.shell_pieces(&i).iter().map(|b| b.extent(0) * b.extent(1) * b.extent(2)).sum();
        assert!((v - (1.0 - 0.125)).abs() < 1e-15);
    }
}
