//! Experiment configuration: a single strict JSON document.

use crate::admittivity::{Admittivity, AdmittivitySpec, AnisotropySpec};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, AprioriData, AugmentedDomain, DomainSpec, LayeredDomain};
use crate::io::json_hash;
use crate::mesh::StructuredMesh;
use crate::probes::PeelingVariant;
use crate::scalar::Vec3;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// A fixed admittivity pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub first: AdmittivitySpec,
    pub second: AdmittivitySpec,
}

/// Ranges for random admissible pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    pub anisotropy: AnisotropySpec,
    /// Range of the constant real part of each layer coefficient.
    pub s_r: [f64; 2],
    /// Range of the constant imaginary part.
    pub s_i: [f64; 2],
    /// Bound on each gradient component (real and imaginary).
    pub gradient: f64,
    /// Bound on each component of the perturbation direction.
    pub perturbation: f64,
}

fn default_pairs() -> usize {
    20
}
fn default_t() -> f64 {
    0.1
}
fn default_ladder() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3]
}

/// Random-pair sweep parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    /// Perturbation scale of random pairs (a fixed pair uses `t = 1`).
    #[serde(default = "default_t")]
    pub t: f64,
    /// Scales applied to the perturbation of pair 0.
    #[serde(default = "default_ladder")]
    pub t_ladder: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { pairs: default_pairs(), t: default_t(), t_ladder: default_ladder() }
    }
}

fn default_points() -> usize {
    3
}

/// Tensor Gauss pole grids `D_y`, `D_z` as `[lo, hi]` boxes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleGridSpec {
    pub y: Option<[[f64; 3]; 2]>,
    pub z: Option<[[f64; 3]; 2]>,
    #[serde(default = "default_points")]
    pub points: usize,
}

impl Default for PoleGridSpec {
    fn default() -> Self {
        Self { y: None, z: None, points: default_points() }
    }
}

fn one() -> usize {
    1
}
fn default_refinement() -> usize {
    16
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticSpec {
    #[serde(default = "one")]
    pub interface: usize,
    /// Offsets `r`; default `{4, 8, 16}·h/refinement`.
    #[serde(default)]
    pub ladder: Option<Vec<f64>>,
    #[serde(default = "default_refinement")]
    pub refinement: usize,
    #[serde(default = "one")]
    pub pairs: usize,
}

impl Default for AsymptoticSpec {
    fn default() -> Self {
        Self { interface: 1, ladder: None, refinement: default_refinement(), pairs: 1 }
    }
}

fn default_peeling_pairs() -> usize {
    10
}
fn default_variant() -> PeelingVariant {
    PeelingVariant::Value
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeelingSpec {
    #[serde(default = "one")]
    pub interface: usize,
    /// Offsets `r`; default `{r0/4, r0/8, r0/16}`.
    #[serde(default)]
    pub ladder: Option<Vec<f64>>,
    #[serde(default = "default_variant")]
    pub variant: PeelingVariant,
    #[serde(default = "default_peeling_pairs")]
    pub pairs: usize,
    #[serde(default = "default_refinement")]
    pub refinement: usize,
}

impl Default for PeelingSpec {
    fn default() -> Self {
        Self { interface: 1, ladder: None, variant: PeelingVariant::Value, pairs: 10, refinement: default_refinement() }
    }
}

fn default_radii() -> [f64; 3] {
    [0.1, 0.15, 0.3]
}
fn unit() -> f64 {
    1.0
}
fn default_samples() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreeSphereSpec {
    /// Ball center; default the center of the innermost box.
    #[serde(default)]
    pub center: Option<[f64; 3]>,
    #[serde(default = "default_radii")]
    pub radii: [f64; 3],
    #[serde(default = "unit")]
    pub s: f64,
    #[serde(default = "unit")]
    pub lambda: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl Default for ThreeSphereSpec {
    fn default() -> Self {
        Self { center: None, radii: default_radii(), s: 1.0, lambda: 1.0, samples: default_samples() }
    }
}

fn default_workers() -> usize {
    1
}

/// Full experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub apriori: AprioriData,
    /// Slab depth; default `r0`.
    #[serde(default)]
    pub slab_depth: Option<f64>,
    /// Cells per unit length.
    pub resolution: usize,
    /// Resolutions for multi-level sweeps; default `[resolution]`.
    #[serde(default)]
    pub mesh_levels: Option<Vec<usize>>,
    #[serde(default)]
    pub pair: Option<PairSpec>,
    #[serde(default)]
    pub sampler: Option<SamplerSpec>,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub pole_grids: PoleGridSpec,
    #[serde(default)]
    pub asymptotic: AsymptoticSpec,
    #[serde(default)]
    pub peeling: PeelingSpec,
    #[serde(default)]
    pub three_sphere: ThreeSphereSpec,
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub output_dir: String,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::ParseError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn hash(&self) -> String {
        json_hash(self)
    }

    pub fn slab_depth(&self) -> f64 {
        self.slab_depth.unwrap_or(self.apriori.r0)
    }

    pub fn levels(&self) -> Vec<usize> {
        self.mesh_levels.clone().unwrap_or_else(|| vec![self.resolution])
    }

    pub fn layered_domain(&self) -> Result<LayeredDomain> {
        LayeredDomain::build(&self.domain, self.apriori.r0)
    }

    pub fn augmented_domain(&self) -> Result<AugmentedDomain> {
        self.layered_domain()?.augment(self.slab_depth())
    }

    pub fn mesh(&self, resolution: usize) -> Result<StructuredMesh> {
        StructuredMesh::build(&self.augmented_domain()?, resolution)
    }

    /// The fixed pair, if present.
    pub fn fixed_pair(&self) -> Option<(Admittivity, Admittivity)> {
        self.pair.as_ref().map(|p| (p.first.build(), p.second.build()))
    }

    /// `D_y`, `D_z`: configured boxes, or the half-size boxes co-centered with
    /// the two halves of the pole region split along its first tangential axis.
    pub fn pole_grid_boxes(&self) -> Result<(Aabb, Aabb)> {
        let dom = self.augmented_domain()?;
        let pr = dom.pole_region;
        let axis = dom.base.sigma().face.tangential()[0];
        let mid = 0.5 * (pr.lo[axis] + pr.hi[axis]);
        let shrink = |lo: Vec3, hi: Vec3| {
            let c = (lo + hi).scale(0.5);
            let d = (hi - lo).scale(0.25);
            Aabb::new(c - d, c + d)
        };
        let mut hi_y = pr.hi;
        hi_y[axis] = mid;
        let mut lo_z = pr.lo;
        lo_z[axis] = mid;
        let to_box = |b: [[f64; 3]; 2]| Aabb::new(Vec3(b[0]), Vec3(b[1]));
        let by = self.pole_grids.y.map(to_box).unwrap_or_else(|| shrink(pr.lo, hi_y));
        let bz = self.pole_grids.z.map(to_box).unwrap_or_else(|| shrink(lo_z, pr.hi));
        Ok((by, bz))
    }

    /// Geometry, resolution and admittivity checks.
    pub fn validate(&self) -> Result<()> {
        let invalid = |e: Error| Error::ValidationError(e.to_string());
        self.apriori.validate().map_err(invalid)?;
        let dom = self.layered_domain().map_err(invalid)?;
        if dom.n_layers() != self.apriori.n_layers {
            return Err(Error::ValidationError(format!(
                "domain has {} interfaces but n_layers = {}",
                dom.n_layers(),
                self.apriori.n_layers
            )));
        }
        self.augmented_domain().map_err(invalid)?;
        for r in self.levels().into_iter().chain([self.resolution]) {
            self.mesh(r).map_err(invalid)?;
        }
        if self.pair.is_none() && self.sampler.is_none() {
            return Err(Error::ValidationError("either pair or sampler must be given".into()));
        }
        if let Some((a1, a2)) = self.fixed_pair() {
            for a in [&a1, &a2] {
                let rep = a.validate_apriori(&self.apriori, &dom, &[]);
                if let Some((name, clause)) = rep.first_failure() {
                    let detail = clause.detail.clone().unwrap_or_default();
                    return Err(Error::ValidationError(format!("{name}: {detail}")));
                }
            }
            if a1.anisotropy != a2.anisotropy {
                return Err(Error::ValidationError("pair uses different anisotropy fields".into()));
            }
        }
        if let Some(s) = &self.sampler {
            if !(s.s_r[0] <= s.s_r[1] && s.s_i[0] <= s.s_i[1] && s.gradient >= 0.0 && s.perturbation >= 0.0) {
                return Err(Error::ValidationError("sampler ranges are inverted or negative".into()));
            }
        }
        if self.workers == 0 {
            return Err(Error::ValidationError("workers must be positive".into()));
        }
        if !(self.sweep.t >= 0.0) || self.sweep.t_ladder.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::ValidationError("perturbation scales must be positive".into()));
        }
        let (by, bz) = self.pole_grid_boxes()?;
        let dom = self.augmented_domain().map_err(invalid)?;
        for b in [by, bz] {
            if !(dom.in_pole_region(b.lo) && dom.in_pole_region(b.hi)) {
                return Err(Error::ValidationError("pole grid outside the pole region".into()));
            }
        }
        Ok(())
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    ExperimentConfig::from_json(&text)
}
