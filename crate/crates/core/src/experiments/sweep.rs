//! Stability sweeps over admittivity pairs, perturbation ladders and meshes.

use crate::admittivity::{Admittivity, AdmittivitySpec};
use crate::dtn::{build_fractional_gram, op_norm_diff, ForwardSolver, FractionalGram};
use crate::error::{Error, Result};
use crate::experiments::config::ExperimentConfig;
use crate::experiments::sampler::{draw_admissible, PairDraw};
use crate::fit::loglog_slope;
use crate::geometry::LayeredDomain;
use crate::green::{asymptotic_exponent_fit, GreenSolver};
use crate::mesh::{StructuredMesh, View};
use crate::probes::{misfit, peeling_split, pole_grid, three_sphere_check, ProbeContext};
use crate::scalar::Vec3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    Lipschitz,
    Misfit,
    Asymptotic,
    Peeling,
    ThreeSphere,
}

impl SweepMode {
    pub const ALL: [SweepMode; 5] =
        [SweepMode::Lipschitz, SweepMode::Misfit, SweepMode::Asymptotic, SweepMode::Peeling, SweepMode::ThreeSphere];

    pub fn name(self) -> &'static str {
        match self {
            SweepMode::Lipschitz => "lipschitz",
            SweepMode::Misfit => "misfit",
            SweepMode::Asymptotic => "asymptotic",
            SweepMode::Peeling => "peeling",
            SweepMode::ThreeSphere => "three_sphere",
        }
    }

    /// Mode-specific CSV columns following the common ones.
    pub fn extra_columns(self) -> &'static [&'static str] {
        match self {
            SweepMode::Lipschitz | SweepMode::Misfit => &[],
            SweepMode::Asymptotic => &[
                "value",
                "gradient",
                "mixed",
                "theta1",
                "theta2",
                "theta3",
                "value_monotone",
                "gradient_monotone",
                "mixed_monotone",
            ],
            SweepMode::Peeling => {
                &["s_re", "s_im", "i1_re", "i1_im", "i2_re", "i2_im", "caccioppoli", "slope_i1", "membership_error"]
            }
            SweepMode::ThreeSphere => &["norm1", "norm2", "norm3", "delta", "c_min"],
        }
    }
}

impl FromStr for SweepMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SweepMode::ALL
            .into_iter()
            .find(|m| m.name() == s || m.name().replace('_', "-") == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown sweep mode {s}")))
    }
}

/// One row of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub mode: SweepMode,
    /// `pair`, `ladder`, `rung`, `fit` or `sample`.
    pub kind: String,
    pub level: usize,
    pub pair: usize,
    pub t: Option<f64>,
    pub r: Option<f64>,
    /// `sup |γ⁽¹⁾ − γ⁽²⁾|`.
    pub e: Option<f64>,
    /// `‖Λ₁ − Λ₂‖_*`.
    pub epsilon: Option<f64>,
    pub j: Option<f64>,
    pub ratio_e_epsilon: Option<f64>,
    pub ratio_e_sqrt_j: Option<f64>,
    pub extra: BTreeMap<String, f64>,
    pub mesh_hash: String,
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first: Option<AdmittivitySpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub second: Option<AdmittivitySpec>,
}

impl ExperimentRecord {
    fn new(mode: SweepMode, kind: &str, level: usize, pair: usize, ctx: &LevelContext) -> Self {
        Self {
            mode,
            kind: kind.into(),
            level,
            pair,
            t: None,
            r: None,
            e: None,
            epsilon: None,
            j: None,
            ratio_e_epsilon: None,
            ratio_e_sqrt_j: None,
            extra: BTreeMap::new(),
            mesh_hash: ctx.mesh_hash.clone(),
            config_hash: ctx.config_hash.clone(),
            first: None,
            second: None,
        }
    }

    fn with_pair(mut self, a1: &Admittivity, a2: &Admittivity) -> Self {
        self.first = Some(AdmittivitySpec::from_admittivity(a1));
        self.second = Some(AdmittivitySpec::from_admittivity(a2));
        self
    }
}

/// Per-level aggregate of a sweep.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LevelSummary {
    pub level: usize,
    pub max_ratio: Option<f64>,
    pub min_ratio: Option<f64>,
    pub ladder_slope: Option<f64>,
    pub values: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub mode: SweepMode,
    pub config_hash: String,
    pub levels: Vec<LevelSummary>,
    /// `max/min` of the per-level maximal ratios.
    pub level_spread: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepOutput {
    pub summary: SweepSummary,
    pub records: Vec<ExperimentRecord>,
}

pub(crate) fn ratio(a: f64, b: f64) -> Option<f64> {
    (b > 0.0).then(|| a / b)
}

struct LevelContext {
    mesh_hash: String,
    config_hash: String,
}

/// Number of pairs and the perturbation scale used for them.
pub fn pair_plan(cfg: &ExperimentConfig) -> (usize, f64) {
    if cfg.sampler.is_some() {
        (cfg.sweep.pairs, cfg.sweep.t)
    } else {
        (1, 1.0)
    }
}

/// Pair `index` of the configuration: sampled with the configured seed, or the fixed pair.
pub fn pair_draw(cfg: &ExperimentConfig, dom: &LayeredDomain, index: usize) -> Result<PairDraw> {
    match (&cfg.sampler, cfg.fixed_pair()) {
        (Some(s), _) => {
            let t_max = cfg.sweep.t_ladder.iter().cloned().fold(cfg.sweep.t, f64::max);
            draw_admissible(&cfg.apriori, dom, s, cfg.seed, index as u64, t_max)
        }
        (None, Some((a1, a2))) => Ok(PairDraw::from_pair(&a1, &a2)),
        (None, None) => Err(Error::ValidationError("either pair or sampler must be given".into())),
    }
}

/// `(E, ε)` for a pair, reusing a DtN matrix of the first admittivity.
fn lipschitz_pair(
    mesh: &StructuredMesh,
    dom: &LayeredDomain,
    gram: &FractionalGram,
    a1: &Admittivity,
    l1: &crate::dtn::DtnMatrix,
    a2: &Admittivity,
) -> Result<(f64, f64)> {
    let e = a1.sup_norm_diff(a2, dom)?.value;
    let l2 = ForwardSolver::new(a2, mesh)?.dtn()?;
    Ok((e, op_norm_diff(l1, &l2, gram)?))
}

fn misfit_j(cfg: &ExperimentConfig, mesh: &StructuredMesh, a1: &Admittivity, a2: &Admittivity) -> Result<f64> {
    let (by, bz) = cfg.pole_grid_boxes()?;
    let n = cfg.pole_grids.points;
    let ctx = ProbeContext::new(a1, a2, mesh)?;
    Ok(misfit(&ctx, &pole_grid(&by, n), &pole_grid(&bz, n), false)?.j)
}

fn finish_ratios(s: &mut LevelSummary, ratios: &[f64]) {
    if !ratios.is_empty() {
        s.max_ratio = Some(ratios.iter().cloned().fold(f64::MIN, f64::max));
        s.min_ratio = Some(ratios.iter().cloned().fold(f64::MAX, f64::min));
    }
}

fn run_level(cfg: &ExperimentConfig, mode: SweepMode, level: usize) -> Result<(Vec<ExperimentRecord>, LevelSummary)> {
    let dom = cfg.layered_domain()?;
    let mesh = cfg.mesh(level)?;
    let lc = LevelContext { mesh_hash: crate::dtn::mesh_hash(&mesh), config_hash: cfg.hash() };
    let (count, t_pair) = pair_plan(cfg);
    let mut summary = LevelSummary { level, ..Default::default() };
    let mut records = Vec::new();
    match mode {
        SweepMode::Lipschitz | SweepMode::Misfit => {
            let gram = if mode == SweepMode::Lipschitz {
                Some(build_fractional_gram(&crate::dtn::BoundarySpace::new(&mesh)?)?)
            } else {
                None
            };
            let per_pair: Vec<Result<Vec<ExperimentRecord>>> = (0..count)
                .into_par_iter()
                .map(|i| {
                    let draw = pair_draw(cfg, &dom, i)?;
                    let a1 = draw.first.clone();
                    let l1 = match &gram {
                        Some(_) => Some(ForwardSolver::new(&a1, &mesh)?.dtn()?),
                        None => None,
                    };
                    let mut ts = vec![("pair", t_pair)];
                    if i == 0 {
                        ts.extend(cfg.sweep.t_ladder.iter().map(|&t| ("ladder", t)));
                    }
                    let mut out = Vec::new();
                    for (kind, t) in ts {
                        let a2 = draw.at(t);
                        let mut rec = ExperimentRecord::new(mode, kind, level, i, &lc).with_pair(&a1, &a2);
                        rec.t = Some(t);
                        match (&gram, &l1) {
                            (Some(g), Some(l1)) => {
                                let (e, eps) = lipschitz_pair(&mesh, &dom, g, &a1, l1, &a2)?;
                                rec.e = Some(e);
                                rec.epsilon = Some(eps);
                                rec.ratio_e_epsilon = ratio(e, eps);
                            }
                            _ => {
                                let e = a1.sup_norm_diff(&a2, &dom)?.value;
                                let j = misfit_j(cfg, &mesh, &a1, &a2)?;
                                rec.e = Some(e);
                                rec.j = Some(j);
                                rec.ratio_e_sqrt_j = ratio(e, j.sqrt());
                            }
                        }
                        out.push(rec);
                    }
                    Ok(out)
                })
                .collect();
            for p in per_pair {
                records.extend(p?);
            }
            let pick =
                |r: &ExperimentRecord| if mode == SweepMode::Lipschitz { r.ratio_e_epsilon } else { r.ratio_e_sqrt_j };
            let ratios: Vec<f64> = records.iter().filter(|r| r.kind == "pair").filter_map(pick).collect();
            finish_ratios(&mut summary, &ratios);
            let ladder: Vec<&ExperimentRecord> = records.iter().filter(|r| r.kind == "ladder").collect();
            if ladder.len() >= 2 {
                let ts: Vec<f64> = ladder.iter().map(|r| r.t.unwrap_or(0.0)).collect();
                let vs: Vec<f64> = ladder
                    .iter()
                    .map(|r| if mode == SweepMode::Lipschitz { r.epsilon.unwrap_or(0.0) } else { r.j.unwrap_or(0.0) })
                    .collect();
                if vs.iter().all(|v| *v > 0.0) {
                    summary.ladder_slope = Some(loglog_slope(&ts, &vs));
                }
            }
        }
        SweepMode::Asymptotic => {
            let spec = &cfg.asymptotic;
            let per_pair: Vec<Result<Vec<ExperimentRecord>>> = (0..spec.pairs)
                .into_par_iter()
                .map(|i| {
                    let a1 = pair_draw(cfg, &dom, i)?.first;
                    let mut solver = GreenSolver::new(&a1, &mesh)?;
                    solver.refinement = spec.refinement;
                    let ladder = spec.ladder.clone().unwrap_or_else(|| {
                        let p = solver.effective_pitch();
                        vec![4.0 * p, 8.0 * p, 16.0 * p]
                    });
                    let rep = asymptotic_exponent_fit(&solver, spec.interface, &ladder)?;
                    let mut out = Vec::new();
                    for g in &rep.rungs {
                        let mut rec = ExperimentRecord::new(mode, "rung", level, i, &lc);
                        rec.r = Some(g.r);
                        rec.extra.insert("value".into(), g.value);
                        rec.extra.insert("gradient".into(), g.gradient);
                        rec.extra.insert("mixed".into(), g.mixed);
                        out.push(rec);
                    }
                    let mut fit = ExperimentRecord::new(mode, "fit", level, i, &lc);
                    for (k, v) in [
                        ("theta1", rep.theta1),
                        ("theta2", rep.theta2),
                        ("theta3", rep.theta3),
                        ("value_monotone", rep.value_monotone as u8 as f64),
                        ("gradient_monotone", rep.gradient_monotone as u8 as f64),
                        ("mixed_monotone", rep.mixed_monotone as u8 as f64),
                    ] {
                        fit.extra.insert(k.into(), v);
                    }
                    fit.first = Some(AdmittivitySpec::from_admittivity(&a1));
                    out.push(fit);
                    Ok(out)
                })
                .collect();
            for p in per_pair {
                records.extend(p?);
            }
            let fits: Vec<&ExperimentRecord> = records.iter().filter(|r| r.kind == "fit").collect();
            for key in ["theta1", "theta2", "theta3"] {
                let min = fits.iter().map(|r| r.extra[key]).fold(f64::MAX, f64::min);
                summary.values.insert(format!("min_{key}"), min);
            }
            let all_mono = fits.iter().all(|r| r.extra["value_monotone"] == 1.0 && r.extra["gradient_monotone"] == 1.0);
            summary.values.insert("all_monotone".into(), all_mono as u8 as f64);
        }
        SweepMode::Peeling => {
            let spec = &cfg.peeling;
            let r0 = cfg.apriori.r0;
            let ladder = spec.ladder.clone().unwrap_or_else(|| vec![r0 / 4.0, r0 / 8.0, r0 / 16.0]);
            let n = if cfg.sampler.is_some() { spec.pairs } else { 1 };
            let per_pair: Vec<Result<Vec<ExperimentRecord>>> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let draw = pair_draw(cfg, &dom, i)?;
                    let a1 = draw.first.clone();
                    let a2 = draw.at(t_pair);
                    let e = a1.sup_norm_diff(&a2, &dom)?.value;
                    let mut ctx = ProbeContext::new(&a1, &a2, &mesh)?;
                    ctx.set_refinement(spec.refinement);
                    let rep = peeling_split(&ctx, spec.interface, &ladder, spec.variant)?;
                    let mut out = Vec::new();
                    for g in &rep.rungs {
                        let mut rec = ExperimentRecord::new(mode, "rung", level, i, &lc);
                        rec.t = Some(t_pair);
                        rec.r = Some(g.r);
                        rec.e = Some(e);
                        for (k, v) in [
                            ("s_re", g.s.re),
                            ("s_im", g.s.im),
                            ("i1_re", g.i1.re),
                            ("i1_im", g.i1.im),
                            ("i2_re", g.i2.re),
                            ("i2_im", g.i2.im),
                        ] {
                            rec.extra.insert(k.into(), v);
                        }
                        if let Some(c) = ratio(g.i2.norm() * rep.rho, e) {
                            rec.extra.insert("caccioppoli".into(), c);
                        }
                        out.push(rec);
                    }
                    let mut fit = ExperimentRecord::new(mode, "fit", level, i, &lc).with_pair(&a1, &a2);
                    fit.t = Some(t_pair);
                    fit.e = Some(e);
                    if let Some(s) = rep.slope_i1 {
                        fit.extra.insert("slope_i1".into(), s);
                    }
                    fit.extra.insert("membership_error".into(), rep.membership_error);
                    out.push(fit);
                    Ok(out)
                })
                .collect();
            for p in per_pair {
                records.extend(p?);
            }
            let ratios: Vec<f64> = records.iter().filter_map(|r| r.extra.get("caccioppoli").copied()).collect();
            finish_ratios(&mut summary, &ratios);
            if let Some(s) = records.iter().find(|r| r.kind == "fit").and_then(|r| r.extra.get("slope_i1")) {
                summary.ladder_slope = Some(*s);
            }
        }
        SweepMode::ThreeSphere => {
            let spec = &cfg.three_sphere;
            let a1 = pair_draw(cfg, &dom, 0)?.first;
            let fwd = ForwardSolver::new(&a1, &mesh)?;
            let center = spec.center.map(Vec3).unwrap_or_else(|| dom.boxes.last().expect("boxes").center());
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(u64::MAX);
            let data: Vec<Vec<Complex64>> = (0..spec.samples)
                .map(|_| {
                    (0..fwd.space.dim())
                        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                        .collect()
                })
                .collect();
            let fields = fwd.solve_many(&data)?;
            let mut c = Vec::new();
            for (i, v) in fields.iter().enumerate() {
                let rep =
                    three_sphere_check(&mesh, View::Base, v, center, spec.radii, spec.s, spec.lambda, Some(&fwd.sys))?;
                let mut rec = ExperimentRecord::new(mode, "sample", level, i, &lc);
                for (k, val) in [
                    ("norm1", rep.norms[0]),
                    ("norm2", rep.norms[1]),
                    ("norm3", rep.norms[2]),
                    ("delta", rep.delta),
                    ("c_min", rep.c_min),
                ] {
                    rec.extra.insert(k.into(), val);
                }
                if !rep.trivial {
                    c.push(rep.c_min);
                }
                records.push(rec);
            }
            finish_ratios(&mut summary, &c);
            if let (Some(a), Some(b)) = (summary.max_ratio, summary.min_ratio) {
                if let Some(s) = ratio(a, b) {
                    summary.values.insert("spread".into(), s);
                }
            }
        }
    }
    Ok((records, summary))
}

/// Runs a sweep over every mesh level of the configuration.
pub fn run_sweep(cfg: &ExperimentConfig, mode: SweepMode) -> Result<SweepOutput> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut records = Vec::new();
    let mut levels = Vec::new();
    for level in cfg.levels() {
        let (r, s) = pool.install(|| run_level(cfg, mode, level))?;
        records.extend(r);
        levels.push(s);
    }
    let maxima: Vec<f64> = levels.iter().filter_map(|l| l.max_ratio).collect();
    let level_spread = (maxima.len() >= 2).then(|| {
        let hi = maxima.iter().cloned().fold(f64::MIN, f64::max);
        let lo = maxima.iter().cloned().fold(f64::MAX, f64::min);
        hi / lo
    });
    Ok(SweepOutput { summary: SweepSummary { mode, config_hash: cfg.hash(), levels, level_spread }, records })
}
