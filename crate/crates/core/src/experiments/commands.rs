//! Single-shot operations behind the command-line subcommands. Each writes
//! its outputs and a manifest into one directory and returns a JSON record.

use crate::admittivity::Admittivity;
use crate::dtn::{build_fractional_gram, op_norm_diff, ForwardSolver};
use crate::error::{Error, Result};
use crate::experiments::config::ExperimentConfig;
use crate::experiments::emit::{json_bytes, write_file, write_manifest, Manifest};
use crate::experiments::sweep::{pair_draw, pair_plan, ratio, run_sweep, SweepMode};
use crate::io::write_field;
use crate::mesh::StructuredMesh;
use crate::probes::{misfit, peeling_split, pole_grid, PeelingVariant, ProbeContext};
use crate::scalar::Vec3;
use num_complex::Complex64;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

/// Environment variable overriding the configured output root.
pub const OUTPUT_ROOT_ENV: &str = "CALDERON_OUTPUT_ROOT";

/// `<root>/<name>` with the root from the environment or the configuration.
pub fn output_dir(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    let root = std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    root.join(name)
}

/// Result of a command: its record and the manifest of its directory.
#[derive(Clone, Debug)]
pub struct CommandOutput {
    pub dir: PathBuf,
    pub record: Value,
    pub manifest: Manifest,
}

fn finish(dir: &Path, record: Value, mut files: Vec<String>) -> Result<CommandOutput> {
    write_file(dir, "record.json", &json_bytes(&record)?)?;
    files.push("record.json".into());
    let manifest = write_manifest(dir, &files)?;
    Ok(CommandOutput { dir: dir.to_path_buf(), record, manifest })
}

/// The configured pair: the fixed pair, or sampled pair 0 at the sweep scale.
pub fn config_pair(cfg: &ExperimentConfig) -> Result<(Admittivity, Admittivity)> {
    let dom = cfg.layered_domain()?;
    let draw = pair_draw(cfg, &dom, 0)?;
    let (_, t) = pair_plan(cfg);
    Ok((draw.first.clone(), draw.at(t)))
}

/// Validation summary of a loaded configuration.
pub fn validate(cfg: &ExperimentConfig) -> Result<Value> {
    cfg.validate()?;
    let dom = cfg.layered_domain()?;
    let mesh = cfg.mesh(cfg.resolution)?;
    let (a1, a2) = config_pair(cfg)?;
    Ok(json!({
        "config_hash": cfg.hash(),
        "layers": dom.n_layers() + 1,
        "nodes": mesh.n_nodes(),
        "cells": mesh.n_cells(),
        "sigma_dofs": mesh.sigma_nodes.len(),
        "apriori_first": a1.validate_apriori(&cfg.apriori, &dom, &[]),
        "apriori_second": a2.validate_apriori(&cfg.apriori, &dom, &[]),
    }))
}

/// Smooth data `sin(π s) sin(π t)` in the rectangle coordinates of `Σ`.
pub fn bump_data(mesh: &StructuredMesh, fwd: &ForwardSolver) -> Vec<Complex64> {
    let sigma = mesh.domain.base.sigma();
    fwd.space
        .coords
        .iter()
        .map(|x| {
            let t = sigma.tangential_coords(Vec3(*x));
            let s0 = (t[0] - sigma.rect.lo[0]) / sigma.rect.side(0);
            let s1 = (t[1] - sigma.rect.lo[1]) / sigma.rect.side(1);
            Complex64::new((std::f64::consts::PI * s0).sin() * (std::f64::consts::PI * s1).sin(), 0.0)
        })
        .collect()
}

/// Forward solves of both admittivities for the bump data on `Σ`.
pub fn solve(cfg: &ExperimentConfig) -> Result<CommandOutput> {
    let dir = output_dir(cfg, "solve");
    let mesh = cfg.mesh(cfg.resolution)?;
    let (a1, a2) = config_pair(cfg)?;
    let mut files = Vec::new();
    let mut parts = Vec::new();
    for (name, a) in [("first", &a1), ("second", &a2)] {
        let fwd = ForwardSolver::new(a, &mesh)?;
        let f = bump_data(&mesh, &fwd);
        let u = fwd.solve(&f)?;
        let residual = fwd.sys.free_residual(&mesh, &u, None);
        let flux: Complex64 = fwd.neumann(&u).iter().zip(&f).map(|(a, b)| a * b).sum();
        let prov = json!({ "command": "solve", "admittivity": name, "config_hash": cfg.hash() });
        write_field(&dir, &format!("solve_{name}"), &mesh, &u, prov)?;
        files.push(format!("solve_{name}.bin"));
        files.push(format!("solve_{name}.json"));
        parts.push(json!({ "admittivity": name, "residual": residual, "energy": [flux.re, flux.im] }));
    }
    finish(&dir, json!({ "command": "solve", "config_hash": cfg.hash(), "solutions": parts }), files)
}

/// Green function of the first admittivity with pole `y`.
pub fn green(cfg: &ExperimentConfig, y: [f64; 3]) -> Result<CommandOutput> {
    let dir = output_dir(cfg, "green");
    let mesh = cfg.mesh(cfg.resolution)?;
    let (a1, _) = config_pair(cfg)?;
    let solver = crate::green::GreenSolver::new(&a1, &mesh)?;
    let g = solver.solve(&[solver.auto_pole(Vec3(y))?])?.pop().expect("one field");
    let boundary = solver.boundary_max(&g)?;
    let c = g.cutoff.radius;
    // Spheres stay inside the ball where χ ≡ 1; the cellwise gradient of the
    // regular part is inaccurate across the cutoff annulus.
    let mut fluxes = Vec::new();
    for f in [0.2, 0.35, 0.5] {
        let rho = f * g.cutoff.inner();
        let v = g.pole_flux(&mesh, &a1, rho)?;
        fluxes.push(json!({ "radius": rho, "flux": [v.re, v.im] }));
    }
    let prov = json!({ "command": "green", "pole": y, "cutoff": c, "config_hash": cfg.hash() });
    write_field(&dir, "green_regular", &mesh, &g.regular, prov)?;
    let record = json!({
        "command": "green",
        "pole": y,
        "cutoff": c,
        "residual": g.residual,
        "boundary_max": boundary,
        "fluxes": fluxes,
    });
    finish(&dir, record, vec!["green_regular.bin".into(), "green_regular.json".into()])
}

/// DtN matrices of the pair and `ε = ‖Λ₁ − Λ₂‖_*`.
pub fn dtn_norm(cfg: &ExperimentConfig) -> Result<CommandOutput> {
    let dir = output_dir(cfg, "dtn-norm");
    let mesh = cfg.mesh(cfg.resolution)?;
    let dom = cfg.layered_domain()?;
    let (a1, a2) = config_pair(cfg)?;
    let f1 = ForwardSolver::new(&a1, &mesh)?;
    let l1 = f1.dtn()?;
    let l2 = ForwardSolver::new(&a2, &mesh)?.dtn()?;
    let gram = build_fractional_gram(&f1.space)?;
    let eps = op_norm_diff(&l1, &l2, &gram)?;
    let e = a1.sup_norm_diff(&a2, &dom)?.value;
    l1.write(&dir, "dtn_first")?;
    l2.write(&dir, "dtn_second")?;
    let record = json!({
        "command": "dtn-norm",
        "config_hash": cfg.hash(),
        "n": l1.n,
        "e": e,
        "epsilon": eps,
        "ratio_e_epsilon": ratio(e, eps),
        "symmetry_defect": [l1.symmetry_defect(), l2.symmetry_defect()],
    });
    let files = ["dtn_first.bin", "dtn_first.json", "dtn_second.bin", "dtn_second.json"].map(String::from).to_vec();
    finish(&dir, record, files)
}

/// Misfit functional over the configured pole grids, with one CSV row per pole pair.
pub fn run_misfit(cfg: &ExperimentConfig) -> Result<CommandOutput> {
    let dir = output_dir(cfg, "misfit");
    let mesh = cfg.mesh(cfg.resolution)?;
    let dom = cfg.layered_domain()?;
    let (a1, a2) = config_pair(cfg)?;
    let ctx = ProbeContext::new(&a1, &a2, &mesh)?;
    let (by, bz) = cfg.pole_grid_boxes()?;
    let n = cfg.pole_grids.points;
    let r = misfit(&ctx, &pole_grid(&by, n), &pole_grid(&bz, n), false)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::IoError(e.to_string());
    w.write_record(["a", "b", "y1", "y2", "y3", "z1", "z2", "z3", "weight", "s0_re", "s0_im"]).map_err(io)?;
    let nz = r.poles_z.len();
    for (k, s) in r.s0.iter().enumerate() {
        let (a, b) = (k / nz, k % nz);
        let (y, z) = (r.poles_y[a], r.poles_z[b]);
        let row = [
            a.to_string(),
            b.to_string(),
            format!("{:?}", y[0]),
            format!("{:?}", y[1]),
            format!("{:?}", y[2]),
            format!("{:?}", z[0]),
            format!("{:?}", z[1]),
            format!("{:?}", z[2]),
            format!("{:?}", r.weights_y[a] * r.weights_z[b]),
            format!("{:?}", s.re),
            format!("{:?}", s.im),
        ];
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::IoError(e.to_string()))?;
    write_file(&dir, "s0.csv", &bytes)?;
    let e = a1.sup_norm_diff(&a2, &dom)?.value;
    let record = json!({
        "command": "misfit",
        "config_hash": cfg.hash(),
        "j": r.j,
        "e": e,
        "ratio_e_sqrt_j": ratio(e, r.j.sqrt()),
        "pairs": r.s0.len(),
    });
    finish(&dir, record, vec!["s0.csv".into()])
}

/// Peeling split at interface `m` along `ladder`.
pub fn probe(cfg: &ExperimentConfig, m: usize, ladder: &[f64], variant: PeelingVariant) -> Result<CommandOutput> {
    let dir = output_dir(cfg, "probe");
    let mesh = cfg.mesh(cfg.resolution)?;
    let dom = cfg.layered_domain()?;
    let (a1, a2) = config_pair(cfg)?;
    let mut ctx = ProbeContext::new(&a1, &a2, &mesh)?;
    ctx.set_refinement(cfg.peeling.refinement);
    let rep = peeling_split(&ctx, m, ladder, variant)?;
    let e = a1.sup_norm_diff(&a2, &dom)?.value;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::IoError(e.to_string());
    w.write_record(["r", "w1", "w2", "w3", "s_re", "s_im", "i1_re", "i1_im", "i2_re", "i2_im", "cells_i1"])
        .map_err(io)?;
    for g in &rep.rungs {
        let row = [g.r, g.w[0], g.w[1], g.w[2], g.s.re, g.s.im, g.i1.re, g.i1.im, g.i2.re, g.i2.im]
            .iter()
            .map(|v| format!("{v:?}"))
            .chain([g.cells_i1.to_string()])
            .collect::<Vec<_>>();
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::IoError(e.to_string()))?;
    write_file(&dir, "peeling.csv", &bytes)?;
    let record = json!({ "command": "probe", "config_hash": cfg.hash(), "e": e, "report": rep });
    finish(&dir, record, vec!["peeling.csv".into()])
}

/// Runs a sweep and writes its outputs.
pub fn sweep(cfg: &ExperimentConfig, mode: SweepMode) -> Result<CommandOutput> {
    let dir = output_dir(cfg, &format!("sweep-{}", mode.name()));
    let out = run_sweep(cfg, mode)?;
    let manifest = crate::experiments::emit::emit_results(&out, &dir)?;
    let record = serde_json::to_value(&out.summary).map_err(|e| Error::IoError(e.to_string()))?;
    Ok(CommandOutput { dir, record, manifest })
}
