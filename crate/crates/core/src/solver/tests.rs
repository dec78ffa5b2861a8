use std::f64::consts::PI;
use std::sync::Arc;

use rand::{RngExt, SeedableRng};

use super::*;
use crate::mesh::{triangulate, triangulate_with, MeshOptions};

const TOL: f64 = 1e-10;

fn disc_mesh(h: f64) -> Arc<Mesh> {
    let mut opts = MeshOptions::new(h, 1.0);
    opts.outer_segments = Some((2.0 * PI / h).round() as usize);
    Arc::new(triangulate_with(&Domain::unit_disc(), &opts).unwrap())
}

fn unit_ball() -> Disc {
    Disc::new(Point::zero(), 0.5)
}

fn cos_theta(p: Point, _: Point, _: Tag) -> Result<f64> {
    Ok(p.x / p.norm())
}

/// L² distance between the P1 interpolant and `exact`, modulo constants.
fn l2_error(field: &ScalarFieldFE, exact: impl Fn(Point) -> f64 + Sync) -> f64 {
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
    mesh.integrate_tris(6, &[], &|t, p| Ok((diff(t, p) - shift).powi(2)))
        .unwrap()
        .sqrt()
}

#[test]
fn decouple_examples() {
    let d = decouple(&Material::new(1.0, 1.0, 0.0)).unwrap();
    assert_eq!(d.inverse, [[1.0, 0.0], [0.0, 1.0]]);
    assert_eq!(d.condition, 1.0);
    let d = decouple(&Material::new(2.0, 3.0, 1.0)).unwrap();
    let want = [[0.6, -0.2], [-0.2, 0.4]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((d.inverse[i][j] - want[i][j]).abs() < 1e-15);
        }
    }
    let expected = (2.5 + 1.25f64.sqrt()) / (2.5 - 1.25f64.sqrt());
    assert!((d.condition - expected).abs() < 1e-12);
    assert!(matches!(decouple(&Material::new(1.0, 1.0, 1.0)), Err(Error::NotPositiveDefinite { .. })));
}

#[test]
fn zero_flux_gives_zero_solution() {
    let mesh = disc_mesh(0.1);
    let p = NeumannProblem {
        mesh: &mesh,
        flux: &|_, _, _| Ok(0.0),
        ball: unit_ball(),
    };
    let v = solve_neumann(&p, TOL).unwrap();
    assert!(v.values.iter().all(|&x| x == 0.0));
}

#[test]
fn constant_flux_is_incompatible() {
    let mesh = disc_mesh(0.1);
    let p = NeumannProblem {
        mesh: &mesh,
        flux: &|_, _, _| Ok(1.0),
        ball: unit_ball(),
    };
    assert!(matches!(solve_neumann(&p, TOL), Err(Error::IncompatibleFlux { .. })));
}

#[test]
fn cosine_flux_reproduces_linear_solution() {
    let mesh = disc_mesh(0.05);
    let p = NeumannProblem {
        mesh: &mesh,
        flux: &cos_theta,
        ball: unit_ball(),
    };
    let v = solve_neumann(&p, TOL).unwrap();
    let err = mesh
        .nodes
        .iter()
        .zip(&v.values)
        .map(|(p, v)| (v - p.x).abs())
        .fold(0.0, f64::max);
    assert!(err <= 0.02, "max nodal error {err}");
    assert!(v.ball_mean(&unit_ball()).abs() < 1e-10);
}

#[test]
fn cosine_flux_converges_at_second_order() {
    let errs: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&h| {
            let mesh = disc_mesh(h);
            let v = solve_neumann(
                &NeumannProblem {
                    mesh: &mesh,
                    flux: &cos_theta,
                    ball: unit_ball(),
                },
                TOL,
            )
            .unwrap();
            l2_error(&v, |p| p.x)
        })
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.8, "order {order}, errors {errs:?}");
    }
}

#[test]
fn solutions_differ_by_constants_across_balls() {
    let mesh = disc_mesh(0.1);
    let flux = |p: Point, _: Point, _: Tag| Ok((2.0 * p.y.atan2(p.x)).sin() + p.x / p.norm());
    let a = solve_neumann(&NeumannProblem { mesh: &mesh, flux: &flux, ball: unit_ball() }, TOL).unwrap();
    let b = solve_neumann(
        &NeumannProblem {
            mesh: &mesh,
            flux: &flux,
            ball: Disc::new(Point::new(0.3, -0.2), 0.2),
        },
        TOL,
    )
    .unwrap();
    let diff: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
    let mean = diff.iter().sum::<f64>() / diff.len() as f64;
    let dev = diff.iter().map(|d| (d - mean).abs()).fold(0.0, f64::max);
    assert!(dev <= 1e-8, "deviation {dev}");
    assert!(mean.abs() > 1e-6);
}

fn one(x: f64, y: f64, bu: f64, bw: f64) -> Dislocation<f64> {
    Dislocation::new(Point::new(x, y), bu, bw)
}

#[test]
fn centered_dislocation_needs_no_correction() {
    let domain = Domain::unit_disc();
    let mesh = Arc::new(triangulate(&domain, 0.1, 1.0).unwrap());
    let m = Material::new(2.0, 3.0, 1.0);
    let sol = corrective_fields_limit(&domain, &[one(0.0, 0.0, 1.0, 0.5)], &m, &mesh, TOL).unwrap();
    assert!(sol.u0.max_grad_norm() <= 1e-10, "{}", sol.u0.max_grad_norm());
    assert!(sol.w0.max_grad_norm() <= 1e-10);

    let holed = domain.punctured(&[Point::zero()], 0.05);
    let hm = Arc::new(triangulate(&holed, 0.1, 0.5).unwrap());
    let sol = corrective_fields_eps(&holed, &[one(0.0, 0.0, 1.0, 0.5)], &m, &hm, TOL).unwrap();
    assert!(sol.u0.max_grad_norm() <= 1e-10 && sol.w0.max_grad_norm() <= 1e-10);
}

fn image_field(p: Point) -> Point {
    // Opposite-sign image of a unit dislocation at (0.5, 0) in the unit disc.
    let rel = p - Point::new(2.0, 0.0);
    rel.perp() * (-1.0 / (2.0 * PI * rel.norm_sq()))
}

#[test]
fn off_center_dislocation_matches_image_solution() {
    let excl = 1e-12;
    let d = one(0.5, 0.0, 1.0, 0.0);
    // The combined field is traction-free on the unit circle.
    for k in 0..64 {
        let t = 2.0 * PI * k as f64 / 64.0;
        let p = Point::new(t.cos(), t.sin());
        let (u, _) = singular_field(&d, p, excl).unwrap();
        assert!((u + image_field(p)).dot(p).abs() < 1e-14);
    }
    let domain = Domain::unit_disc();
    let mesh = Arc::new(triangulate(&domain, 0.05, 1.0).unwrap());
    let sol = corrective_fields_limit(&domain, &[d], &Material::new(1.0, 1.0, 0.0), &mesh, TOL).unwrap();
    let err = mesh
        .integrate_tris(4, &[], &|t, p| Ok((sol.u0.tri_grad(t) - image_field(p)).norm_sq()))
        .unwrap()
        .sqrt();
    let norm = mesh.integrate_domain(&|p| image_field(p).norm_sq(), &QuadratureSpec::default()).unwrap().sqrt();
    assert!(err <= 0.02 * norm, "relative L2 error {}", err / norm);
    assert!(sol.w0.max_grad_norm() == 0.0);
}

use crate::fields::singular_field;
use crate::quadrature::QuadratureSpec;

#[test]
fn symmetric_pair_gives_even_corrective_potential() {
    let domain = Domain::unit_disc();
    let mesh = Arc::new(triangulate(&domain, 0.05, 1.0).unwrap());
    let ds = [one(0.4, 0.1, 1.0, 0.3), one(-0.4, -0.1, 1.0, 0.3)];
    let sol = corrective_fields_limit(&domain, &ds, &Material::new(1.0, 2.0, 0.5), &mesh, TOL).unwrap();
    let vmax = sol.u0.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for k in 0..40 {
        let t = 0.7 * k as f64;
        let p = Point::new(t.cos(), t.sin()) * (0.1 + 0.02 * k as f64);
        let a = sol.u0.value_at(p).unwrap();
        let b = sol.u0.value_at(-p).unwrap();
        assert!((a - b).abs() <= 0.02 * vmax, "{a} vs {b}");
    }
}

#[test]
fn punctured_solutions_converge_to_limit() {
    let domain = Domain::unit_disc();
    let d = one(0.4, 0.0, 1.0, 0.0);
    let m = Material::new(1.0, 1.0, 0.0);
    let lim_mesh = Arc::new(triangulate(&domain, 0.03, 1.0).unwrap());
    let lim = corrective_fields_limit(&domain, &[d], &m, &lim_mesh, TOL).unwrap();
    let diffs: Vec<f64> = [0.08, 0.04, 0.02]
        .iter()
        .map(|&eps| {
            let holed = domain.punctured(&[d.position], eps);
            let mesh = Arc::new(triangulate(&holed, 0.03, 0.5).unwrap());
            let sol = corrective_fields_eps(&holed, &[d], &m, &mesh, TOL).unwrap();
            mesh.integrate_tris(2, &[], &|t, p| Ok((sol.u0.tri_grad(t) - lim.u0.grad_at(p).unwrap()).norm_sq()))
                .unwrap()
                .sqrt()
        })
        .collect();
    assert!(diffs[0] > diffs[1] && diffs[1] > diffs[2], "{diffs:?}");
}

#[test]
fn flux_data_is_compatible() {
    let domain = Domain::unit_disc();
    let ds = [one(0.3, 0.2, 1.0, -1.0), one(-0.2, 0.1, -2.0, 0.5), one(0.0, -0.4, 0.7, 0.0)];
    let holed = domain.punctured(&ds.iter().map(|d| d.position).collect::<Vec<_>>(), 0.03);
    let mesh = Arc::new(triangulate(&holed, 0.05, 0.5).unwrap());
    let sol = corrective_fields_eps(&holed, &ds, &Material::new(1.0, 1.0, 0.2), &mesh, TOL).unwrap();
    for load in [&sol.load_u, &sol.load_w] {
        let net: f64 = load.iter().sum();
        assert!(net.abs() <= 1e-8, "net flux {net}");
    }
}

#[test]
fn decoupled_solution_solves_coupled_system() {
    let domain = Domain::unit_disc();
    let mesh = Arc::new(triangulate(&domain, 0.05, 1.0).unwrap());
    let ds = [one(0.3, 0.1, 1.0, 0.4), one(-0.2, -0.3, -0.5, 1.0)];
    for m in [Material::new(2.0, 3.0, 1.0), Material::new(1.0, 1.0, -0.9)] {
        let sol = corrective_fields_limit(&domain, &ds, &m, &mesh, TOL).unwrap();
        let r = sol.coupled_residual(&m);
        assert!(r <= 1e-9, "coupled residual {r}");
    }
}

#[test]
fn discrete_solution_minimizes_the_functional() {
    let domain = Domain::unit_disc();
    let mesh = Arc::new(triangulate(&domain, 0.1, 1.0).unwrap());
    let m = Material::new(2.0, 1.0, 0.7);
    let sol = corrective_fields_limit(&domain, &[one(0.5, 0.2, 1.0, -0.6)], &m, &mesh, TOL).unwrap();
    let base = sol.discrete_functional(&m, &sol.u0.values, &sol.w0.values);
    assert!(base < 0.0);
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    for _ in 0..20 {
        let scale = 10f64.powf(rng.random_range(-4.0..-1.0));
        let u: Vec<f64> = sol.u0.values.iter().map(|v| v + scale * rng.random_range(-1.0..1.0)).collect();
        let w: Vec<f64> = sol.w0.values.iter().map(|v| v + scale * rng.random_range(-1.0..1.0)).collect();
        let val = sol.discrete_functional(&m, &u, &w);
        assert!(val >= base - 1e-12 * base.abs(), "{val} < {base}");
    }
}
