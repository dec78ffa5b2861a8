//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails. Run with `--nocapture` to see the lines.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{RngExt, SeedableRng};

use qcd_core::energy::{
    annulus_energy_exact, core_energy, eps_energy, energy_breakdown, f_self, interaction_coefficient,
    interaction_log_fit, EnergyOptions, RenormalizedSetup,
};
use qcd_core::fields::{burgers_loop, Loop, SingularField};
use qcd_core::forces::{default_fd_step, eshelby, pk_force, pk_force_fd, ForceSystem};
use qcd_core::material::energy_density;
use qcd_core::mesh::{triangulate, triangulate_with, MeshOptions};
use qcd_core::solver::{corrective_fields_limit, solve_neumann, NeumannProblem, ScalarFieldFE};
use qcd_core::{Disc, Dislocation, Domain, Material, Point, QuadratureSpec, Result, Tag};

fn at(x: f64, y: f64, b_u: f64, b_w: f64) -> Dislocation {
    Dislocation::new(Point::new(x, y), b_u, b_w)
}

fn unit() -> Material {
    Material::new(1.0, 1.0, 0.0)
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn criterion_1() -> Result<Outcome> {
    let opts = EnergyOptions::new(0.02, 0.25);
    let s = eps_energy(&unit(), &[at(0.0, 0.0, 1.0, 0.0)], &Domain::unit_disc(), 0.1, &opts)?;
    let exact = 10f64.ln() / (4.0 * PI);
    let rel = (s.j_eps - exact).abs() / exact;
    outcome(rel <= 0.01, format!("J = {:.8}, exact = {exact:.8}, rel err = {rel:.2e} (tol 1e-2)", s.j_eps))
}

fn criterion_2() -> Result<Outcome> {
    let opts = EnergyOptions::new(0.02, 0.25);
    let ladder = [0.1, 0.05, 0.025, 0.0125];
    let b = energy_breakdown(&unit(), &[at(0.0, 0.0, 1.0, 0.0)], &Domain::unit_disc(), &ladder, None, &opts)?;
    let fit = b.fit.expect("four rungs give a fit");
    let e0 = 1.0 / (4.0 * PI);
    let rel = (fit.slope - e0).abs() / e0;
    let monotone = b.remainders.windows(2).all(|w| w[1] < w[0]);
    outcome(
        rel <= 0.02 && monotone,
        format!("E0 fit = {:.7} (rel err {rel:.2e}, tol 2e-2), remainders {:?}", fit.slope, b.remainders),
    )
}

fn criterion_3() -> Result<Outcome> {
    let opts = EnergyOptions::new(0.02, 0.25);
    let ds = [at(0.0, 0.0, 1.0, 0.0)];
    let a = f_self(&unit(), &ds, &Domain::unit_disc(), 0.5, &opts)?;
    let b = f_self(&unit(), &ds, &Domain::unit_disc(), 0.25, &opts)?;
    outcome((a - b).abs() <= 1e-3, format!("F_self(0.5) = {a:.3e}, F_self(0.25) = {b:.3e}, |diff| = {:.2e} (tol 1e-3)", (a - b).abs()))
}

fn criterion_4() -> Result<Outcome> {
    let opts = EnergyOptions::new(0.05, 0.25);
    let cases = [
        (unit(), at(0.0, 0.0, 1.0, 0.0), at(0.0, 0.0, 1.0, 0.0)),
        (Material::new(2.0, 0.5, 0.0), at(0.0, 0.0, 0.0, 1.0), at(0.0, 0.0, 0.0, -1.0)),
        (Material::new(2.0, 3.0, 1.0), at(0.0, 0.0, 1.0, 0.5), at(0.0, 0.0, -0.5, 1.0)),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (m, a, b) in cases {
        let fit = interaction_log_fit(&m, [a, b], &Domain::unit_disc(), &[0.2, 0.1, 0.05], &opts)?;
        assert_eq!(fit.expected, interaction_coefficient(&m, &a, &b));
        ok &= fit.deviation <= 0.1;
        detail.push(format!("slope {:.5} vs {:.5} ({:.1}%)", fit.slope, fit.expected, 100.0 * fit.deviation));
    }
    outcome(ok, format!("{} (tol 10%)", detail.join("; ")))
}

fn criterion_5() -> Result<Outcome> {
    let opts = EnergyOptions::new(0.05, 0.25);
    let d = Domain::unit_disc();
    let m = Material::new(2.0, 1.0, 0.5);
    let ds = [at(-0.15, 0.05, 1.0, 0.5), at(0.2, -0.05, 1.0, -0.3)];
    let sys = ForceSystem::solve(&m, &ds, &d, &opts)?;
    let setup = RenormalizedSetup::new(&d, &ds, None, &opts)?;
    let h = default_fd_step(&d);
    let (mut worst_r, mut worst_fd) = (0.0f64, 0.0f64);
    for k in 0..ds.len() {
        let r = sys.default_radius(k);
        let f = pk_force(k, &sys, r)?;
        let half = pk_force(k, &sys, 0.5 * r)?;
        let fd = pk_force_fd(k, &m, &setup, h, &opts)?;
        worst_r = worst_r.max((f - half).norm() / f.norm());
        worst_fd = worst_fd.max((f - fd).norm() / fd.norm());
    }
    let iso = ForceSystem::solve(&m, &[at(0.0, 0.0, 1.0, 0.5)], &d, &opts)?;
    let f0 = pk_force(0, &iso, iso.default_radius(0))?.norm();
    outcome(
        worst_r <= 0.01 && worst_fd <= 0.02 && f0 <= 1e-6,
        format!("r vs r/2 {worst_r:.2e} (tol 1e-2), contour vs FD {worst_fd:.2e} (tol 2e-2), centered |F| {f0:.2e} (tol 1e-6)"),
    )
}

fn l2_error_mod_constants(field: &ScalarFieldFE, exact: impl Fn(Point) -> f64 + Sync) -> f64 {
    let mesh = &field.mesh;
    let diff = |t: usize, p: Point| {
        let [a, b, c] = mesh.tri_points(t);
        let a2 = (b - a).cross(c - a);
        let l1 = (p - a).cross(c - a) / a2;
        let l2 = (b - a).cross(p - a) / a2;
        let [i, j, k] = mesh.tris[t];
        (1.0 - l1 - l2) * field.values[i] + l1 * field.values[j] + l2 * field.values[k] - exact(p)
    };
    let shift = mesh.integrate_tris(6, &[], &|t, p| Ok(diff(t, p))).unwrap() / mesh.area();
    mesh.integrate_tris(6, &[], &|t, p| Ok((diff(t, p) - shift).powi(2))).unwrap().sqrt()
}

fn criterion_6() -> Result<Outcome> {
    let flux = |p: Point, _: Point, _: Tag| Ok(p.x / p.norm());
    let mut errs = Vec::new();
    for h in [0.2, 0.1, 0.05] {
        let mut o = MeshOptions::new(h, 1.0);
        o.outer_segments = Some((2.0 * PI / h).round() as usize);
        let mesh = Arc::new(triangulate_with(&Domain::unit_disc(), &o)?);
        let v = solve_neumann(
            &NeumannProblem {
                mesh: &mesh,
                flux: &flux,
                ball: Disc::new(Point::zero(), 0.5),
            },
            1e-10,
        )?;
        errs.push(l2_error_mod_constants(&v, |p| p.x));
    }
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let mesh = Arc::new(triangulate(&Domain::unit_disc(), 0.05, 1.0)?);
    let ds = [at(0.3, 0.1, 1.0, 0.4), at(-0.2, -0.3, -0.5, 1.0)];
    let mut worst = 0.0f64;
    for m in [Material::new(2.0, 3.0, 1.0), Material::new(1.0, 1.0, -0.9)] {
        worst = worst.max(corrective_fields_limit(&Domain::unit_disc(), &ds, &m, &mesh, 1e-10)?.coupled_residual(&m));
    }
    outcome(
        orders.iter().all(|&o| o >= 1.8) && worst <= 1e-9,
        format!("L2 orders {orders:.3?} (min 1.8), coupled residual {worst:.2e} (tol 1e-9)"),
    )
}

fn criterion_7() -> Result<Outcome> {
    let mut notes = Vec::new();
    let mut ok = true;

    // Burgers loop recovery on three loop shapes.
    let ds = vec![at(0.1, 0.2, 1.0, -0.5), at(-0.3, -0.1, 0.25, 2.0), at(0.9, 0.9, 3.0, 3.0)];
    let field = SingularField::new(ds, 1e-12);
    let q = QuadratureSpec::new(8, 1e-12)?;
    let loops = [
        Loop::circle(Point::zero(), 0.6),
        Loop::square(Point::new(-0.1, 0.0), 1.0),
        Loop::Polyline(vec![
            Point::new(-0.7, -0.5),
            Point::new(0.5, -0.6),
            Point::new(0.6, 0.6),
            Point::new(0.0, 0.3),
            Point::new(-0.6, 0.5),
        ]),
    ];
    let mut worst = 0.0f64;
    for lp in &loops {
        let (bu, bw) = burgers_loop(&field, lp, &q)?;
        worst = worst.max((bu - 1.25).abs()).max((bw - 1.5).abs());
    }
    ok &= worst <= 1e-9;
    notes.push(format!("Burgers loops {worst:.1e} (tol 1e-9)"));

    // Trace-free Eshelby tensor on random fields.
    let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
    let mut trace = 0.0f64;
    for _ in 0..10_000 {
        let (c, k) = (rng.random_range(0.1..5.0), rng.random_range(0.1..5.0));
        let m = Material::new(c, k, rng.random_range(-0.99..0.99) * f64::sqrt(c * k));
        let u = Point::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let w = Point::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        trace = trace.max(eshelby(&m, u, w).trace().abs());
    }
    ok &= trace <= 1e-14;
    notes.push(format!("Eshelby trace {trace:.1e} (tol 1e-14)"));

    // Quadratic Burgers scaling and phonon/phason swap of all four pieces.
    let opts = EnergyOptions::new(0.05, 0.25);
    let d = Domain::unit_disc();
    let m = Material::new(2.0, 1.5, 0.6);
    let ds = [at(0.3, 0.1, 1.0, -0.4), at(-0.2, -0.2, 0.5, 0.8)];
    let lambda = 1.7;
    let scaled: Vec<_> = ds.iter().map(|d| d.scaled(lambda)).collect();
    let swapped: Vec<_> = ds.iter().map(|d| d.swapped()).collect();
    let (base, _) = RenormalizedSetup::new(&d, &ds, None, &opts)?.evaluate(&m, &opts)?;
    let (big, _) = RenormalizedSetup::new(&d, &scaled, None, &opts)?.evaluate(&m, &opts)?;
    let (sw, _) = RenormalizedSetup::new(&d, &swapped, None, &opts)?.evaluate(&m.swapped(), &opts)?;
    let l2 = lambda * lambda;
    let e0 = core_energy(&m, &ds);
    let e0_dev = (core_energy(&m, &scaled) - l2 * e0).abs() / (l2 * e0);
    let ann = annulus_energy_exact(&m, 1.0, -0.4, 1.0, 0.1)?;
    let ann_dev = (annulus_energy_exact(&m, lambda, -0.4 * lambda, 1.0, 0.1)? - l2 * ann).abs() / (l2 * ann);
    let pieces = [
        (base.f_self, big.f_self, sw.f_self),
        (base.f_int, big.f_int, sw.f_int),
        (base.f_elastic, big.f_elastic, sw.f_elastic),
    ];
    let quad_dev = pieces.iter().map(|&(a, b, _)| (b - l2 * a).abs() / (l2 * a).abs()).fold(0.0, f64::max);
    let swap_dev = pieces.iter().map(|&(a, _, s)| (s - a).abs() / a.abs()).fold(0.0, f64::max);
    let e0_swap = (core_energy(&m.swapped(), &swapped) - e0).abs() / e0;
    let f_swap = (energy_density(&m.swapped(), Point::new(0.3, -1.0), Point::new(2.0, 0.5))
        - energy_density(&m, Point::new(2.0, 0.5), Point::new(0.3, -1.0)))
    .abs();
    ok &= e0_dev.max(ann_dev) <= 1e-6 && quad_dev <= 1e-3 && swap_dev.max(e0_swap).max(f_swap) <= 1e-6;
    notes.push(format!(
        "scaling analytic {:.1e} (tol 1e-6), quadrature {quad_dev:.1e} (tol 1e-3), swap {:.1e}",
        e0_dev.max(ann_dev),
        swap_dev.max(e0_swap).max(f_swap)
    ));
    outcome(ok, notes.join("; "))
}

#[test]
fn acceptance() {
    type Check = fn() -> Result<Outcome>;
    let criteria: [(&str, Check, Option<Duration>); 7] = [
        ("1 annulus energy", criterion_1, Some(Duration::from_secs(10))),
        ("2 asymptotic expansion", criterion_2, Some(Duration::from_secs(120))),
        ("3 cutoff independence", criterion_3, None),
        ("4 interaction log law", criterion_4, Some(Duration::from_secs(180))),
        ("5 Peach-Koehler force", criterion_5, Some(Duration::from_secs(180))),
        ("6 solver correctness", criterion_6, None),
        ("7 invariant suites", criterion_7, None),
    ];
    let mut failed = Vec::new();
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let res = check();
        let took = start.elapsed();
        let in_time = budget.is_none_or(|b| took <= b);
        let (passed, detail) = match res {
            Ok(o) => (o.passed && in_time, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let budget_note = budget.map_or(String::new(), |b| format!(" of {}s", b.as_secs()));
        println!(
            "criterion {name}: {} [{:.1}s{budget_note}] {detail}",
            if passed { "PASS" } else { "FAIL" },
            took.as_secs_f64()
        );
        if !passed {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
