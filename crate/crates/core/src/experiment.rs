//! Batch experiments driven by a [`RunConfig`].

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Experiment, RunConfig};
use crate::energy::{
    annulus_energy_exact, core_energy, eps_solution, pair_mesh, punctured_mesh, self_mesh, EnergyBreakdown,
    RenormalizedSetup,
};
use crate::error::{Error, Result};
use crate::forces::{default_fd_step, force_report};
use crate::geometry::{shoelace_area, Outer};
use crate::mesh::write_qcmesh;
use crate::solver::CorrectiveSolution;

/// Files written by a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub result_path: PathBuf,
    pub sweep_path: Option<PathBuf>,
    pub mesh_paths: Vec<PathBuf>,
    pub result: Value,
}

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// One CSV row per ε rung.
pub fn sweep_csv(b: &EnergyBreakdown) -> String {
    let mut s = String::from("eps,eps_eq,J_eps,E0_exact,E0_fit,F,F_fit,fit_residual,remainder,nodes\n");
    let (e0_fit, f_fit, res) = b
        .fit
        .map_or((f64::NAN, f64::NAN, f64::NAN), |f| (f.slope, f.intercept, f.residual));
    for (r, rem) in b.j_eps.iter().zip(&b.remainders) {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            num(r.eps),
            num(r.eps_eq),
            num(r.j_eps),
            num(b.e0),
            num(e0_fit),
            num(b.f),
            num(f_fit),
            num(res),
            num(*rem),
            r.nodes
        );
    }
    s
}

fn ladder_solutions(cfg: &RunConfig, ladder: &[f64]) -> Result<Vec<(crate::energy::EpsSample, CorrectiveSolution)>> {
    let (m, ds, domain, opts) = (cfg.material, cfg.dislocations(), cfg.domain(), cfg.energy_options());
    ladder
        .par_iter()
        .map(|&eps| eps_solution(&m, &ds, &domain, eps, &opts))
        .collect()
}

fn breakdown_json(b: &EnergyBreakdown) -> Value {
    json!({
        "eps_ladder": b.j_eps.iter().map(|s| s.eps).collect::<Vec<_>>(),
        "eps_eq": b.j_eps.iter().map(|s| s.eps_eq).collect::<Vec<_>>(),
        "J_eps": b.j_eps.iter().map(|s| s.j_eps).collect::<Vec<_>>(),
        "E0_exact": b.e0,
        "E0_fit": b.fit.map(|f| f.slope),
        "F_components": {
            "F_self": b.f_self,
            "F_int": b.f_int,
            "F_elastic": b.f_elastic,
            "F_elastic_dual": b.f_elastic_dual,
            "F": b.f,
            "cutoff": b.cutoff,
        },
        "F_fit": b.fit.map(|f| f.intercept),
        "residuals": {
            "fit": b.fit.map(|f| f.residual),
            "remainders": b.remainders,
        },
    })
}

/// Runs the configured experiment and writes its outputs under `out_dir`
/// (or the configured directory).
pub fn run(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<RunOutcome> {
    cfg.validate()?;
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.outputs.dir.clone());
    std::fs::create_dir_all(&dir)?;
    let m = cfg.material;
    let ds = cfg.dislocations();
    let domain = cfg.domain();
    let opts = cfg.energy_options();

    let mut result = json!({
        "experiment": cfg.experiment,
        "material": m,
        "dislocations": cfg.dislocations,
        "mesh": cfg.mesh,
    });
    let obj = result.as_object_mut().expect("object literal");
    let mut dumps: Vec<(String, CorrectiveSolution)> = Vec::new();
    let mut sweep = None;

    match cfg.experiment {
        Experiment::Validate => {
            let radius = cfg.validate_target()?;
            let eps = cfg.ladder()[0];
            let (sample, sol) = eps_solution(&m, &ds, &domain, eps, &opts)?;
            let exact = annulus_energy_exact(&m, ds[0].b_u, ds[0].b_w, radius, sample.eps_eq)?;
            let rel = (sample.j_eps - exact).abs() / exact.abs();
            obj.insert(
                "validate".into(),
                json!({
                    "eps": eps,
                    "eps_eq": sample.eps_eq,
                    "J_quadrature": sample.j_eps,
                    "J_exact": exact,
                    "relative_error": rel,
                    "tolerance": cfg.tolerances.validate,
                    "passed": rel < cfg.tolerances.validate,
                    "nodes": sample.nodes,
                }),
            );
            obj.insert("E0_exact".into(), json!(core_energy(&m, &ds)));
            dumps.push(("eps_0".into(), sol));
        }
        Experiment::Energy | Experiment::Sweep => {
            let ladder = cfg.ladder();
            let setup = RenormalizedSetup::new(&domain, &ds, cfg.tolerances.cutoff, &opts)?;
            let (f, rungs) = rayon::join(|| setup.evaluate(&m, &opts), || ladder_solutions(cfg, &ladder));
            let rungs = rungs?;
            let b = EnergyBreakdown::new(core_energy(&m, &ds), f?.0, rungs.iter().map(|r| r.0).collect())?;
            for (k, (_, sol)) in rungs.into_iter().enumerate() {
                dumps.push((format!("eps_{k}"), sol));
            }
            if let Value::Object(map) = breakdown_json(&b) {
                obj.extend(map);
            }
            sweep = Some(sweep_csv(&b));
        }
        Experiment::Forces => {
            let h = cfg.tolerances.fd_step.unwrap_or_else(|| default_fd_step(&domain));
            let report = force_report(&m, &ds, &domain, &opts, Some(h))?;
            obj.insert("E0_exact".into(), json!(core_energy(&m, &ds)));
            obj.insert("pk_forces".into(), serde_json::to_value(&report)?);
        }
    }

    let mut mesh_paths = Vec::new();
    if cfg.outputs.meshes {
        for (name, sol) in &dumps {
            let mut buf = Vec::new();
            write_qcmesh(&sol.u0.mesh, Some(&sol.u0.values), &mut buf)?;
            let path = dir.join(format!("{name}.qcmesh"));
            write_atomic(&path, &buf)?;
            mesh_paths.push(path);
        }
    }
    let sweep_path = match sweep {
        Some(text) => {
            let path = dir.join(&cfg.outputs.sweep);
            write_atomic(&path, text.as_bytes())?;
            Some(path)
        }
        None => None,
    };
    let result_path = dir.join(&cfg.outputs.result);
    let mut text = serde_json::to_string_pretty(&result)?;
    text.push('\n');
    write_atomic(&result_path, text.as_bytes())?;
    Ok(RunOutcome {
        result_path,
        sweep_path,
        mesh_paths,
        result,
    })
}

/// Dry-run plan: the meshes a run would build, their sizes and a rough
/// runtime estimate. Meshes are generated; nothing is solved.
pub fn describe(cfg: &RunConfig) -> Result<String> {
    cfg.validate()?;
    let ds = cfg.dislocations();
    let domain = cfg.domain();
    let opts = cfg.energy_options();
    let mut s = String::new();
    let _ = writeln!(s, "experiment: {:?}", cfg.experiment);
    let m = cfg.material;
    let _ = writeln!(s, "material: C = {}, K = {}, R = {}", m.c, m.k, m.r);
    match &cfg.domain {
        Outer::Disc { center, radius } => {
            let _ = writeln!(
                s,
                "domain: disc centered at ({}, {}) with radius {}, area {:.6}",
                center.x,
                center.y,
                radius,
                domain.outer_area()
            );
        }
        Outer::Polygon { vertices } => {
            let _ = writeln!(
                s,
                "domain: polygon with {} vertices, shoelace area {:.6}",
                vertices.len(),
                shoelace_area(vertices).abs()
            );
        }
    }
    let _ = writeln!(s, "dislocations: {}", ds.len());
    let _ = writeln!(s, "mesh: h = {}, grade = {}", cfg.mesh.h, cfg.mesh.grade);

    let mut plan: Vec<(String, usize)> = Vec::new();
    let ladder = match cfg.experiment {
        Experiment::Validate => vec![cfg.ladder()[0]],
        Experiment::Energy | Experiment::Sweep => cfg.ladder(),
        Experiment::Forces => Vec::new(),
    };
    let punctured: Vec<usize> = ladder
        .par_iter()
        .map(|&e| punctured_mesh(&domain, &ds, e, &opts).map(|m| m.num_nodes()))
        .collect::<Result<_>>()?;
    for (e, n) in ladder.iter().zip(punctured) {
        plan.push((format!("punctured mesh, eps = {e}"), n));
    }
    if cfg.experiment != Experiment::Validate {
        let r = cfg.tolerances.cutoff.unwrap_or_else(|| crate::energy::default_cutoff(&domain, &ds));
        for (k, d) in ds.iter().enumerate() {
            let n = self_mesh(&domain, d, r, &opts)?.num_nodes();
            plan.push((format!("self-energy mesh {k}, cutoff = {r}"), n));
        }
        let n = pair_mesh(&domain, &ds, &opts)?.0.num_nodes();
        plan.push(("limit mesh".into(), n));
    }
    let _ = writeln!(s, "meshes: {}", plan.len());
    let mut dofs = 0;
    for (name, n) in &plan {
        let _ = writeln!(s, "  {name}: {n} nodes");
        dofs += n;
    }
    let repeats = if cfg.experiment == Experiment::Forces { 5 } else { 1 };
    let _ = writeln!(s, "total nodes: {}", dofs * repeats);
    let _ = writeln!(s, "estimated runtime: {:.1} s", 4e-5 * (dofs * repeats) as f64);
    Ok(s)
}
