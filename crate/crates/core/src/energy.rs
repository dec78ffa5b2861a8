//! Energies of dislocation systems.
//!
//! The core-regularized energy `J_ε` of a minimizer behaves like
//! `E₀ ln(1/ε) + F + o(1)`. This module evaluates `J_ε` on punctured meshes,
//! the closed-form core energy `E₀`, the three pieces of the renormalized
//! energy `F = F_self + F_int + F_elastic`, and least-squares fits of the
//! expansion.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{exclusion_radius, singular_field, total_singular_field, Dislocation};
use crate::geometry::{Disc, Domain, Outer, Point};
use crate::material::{energy_density, MaterialConstants};
use crate::mesh::{triangulate_with, Mesh, MeshOptions, Tag};
use crate::scalar::Real;
use crate::solver::{corrective_fields_eps, corrective_fields_limit, CorrectiveSolution, FieldPair};

type Material = MaterialConstants<f64>;

/// `E₀ = Σ (C b_u² + K b_w² + 2R b_u b_w) / 4π`.
pub fn core_energy<T: Real>(m: &MaterialConstants<T>, ds: &[Dislocation<T>]) -> T {
    let four_pi = T::TAU() + T::TAU();
    ds.iter()
        .map(|d| m.burgers_form(d.b_u, d.b_w))
        .fold(T::zero(), |a, b| a + b)
        / four_pi
}

/// Energy of a single dislocation in the annulus `ε < |x − d| < r`.
pub fn annulus_energy_exact<T: Real>(m: &MaterialConstants<T>, b_u: T, b_w: T, r: T, eps: T) -> Result<T> {
    if !(eps > T::zero() && eps < r) {
        return Err(Error::BadRadii {
            eps: eps.to_f64().unwrap_or(f64::NAN),
            r: r.to_f64().unwrap_or(f64::NAN),
        });
    }
    let four_pi = T::TAU() + T::TAU();
    Ok(m.burgers_form(b_u, b_w) * (r / eps).ln() / four_pi)
}

/// Slope of the interaction energy of two dislocations against `ln(1/δ)`.
pub fn interaction_coefficient(m: &Material, a: &Dislocation<f64>, b: &Dislocation<f64>) -> f64 {
    m.burgers_cross(a.b_u, a.b_w, b.b_u, b.b_w) / (2.0 * std::f64::consts::PI)
}

/// Discretization parameters shared by the energy computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyOptions {
    pub h: f64,
    pub grade: f64,
    /// Gauss order of the triangle rules.
    pub order: usize,
    /// Relative tolerance of the linear solves.
    pub tol: f64,
    /// Polygon segments of the cutoff circles in `F_self`.
    pub self_segments: usize,
}

impl Default for EnergyOptions {
    fn default() -> Self {
        Self {
            h: 0.05,
            grade: 0.25,
            order: 6,
            tol: 1e-10,
            self_segments: 1024,
        }
    }
}

impl EnergyOptions {
    pub fn new(h: f64, grade: f64) -> Self {
        Self {
            h,
            grade,
            ..Self::default()
        }
    }

    /// Mesh options whose outer polygon depends on `h` alone, so that every
    /// mesh of a study shares the same outer boundary.
    pub fn mesh_options(&self, domain: &Domain, grade: f64) -> MeshOptions {
        let mut o = MeshOptions::new(self.h, grade);
        if let Outer::Disc { radius, .. } = domain.outer {
            o.outer_segments = Some(((2.0 * std::f64::consts::PI * radius / self.h).ceil() as usize).max(16));
        }
        o
    }
}

/// `∫_{Ω_ε} f` of the full strain pair over a punctured mesh. Corrective
/// gradients defined on `mesh` itself are used element by element.
pub fn total_energy_eps(m: &Material, mesh: &Mesh, fields: &FieldPair, order: usize) -> Result<f64> {
    let same_mesh = fields
        .corrective
        .as_ref()
        .is_some_and(|(u, _)| std::ptr::eq(Arc::as_ptr(&u.mesh), mesh));
    mesh.integrate_tris(order, &[], &|t, p| {
        let (u, w) = total_singular_field(&fields.dislocations, p, fields.exclusion)?;
        let (cu, cw) = match (&fields.corrective, same_mesh) {
            (Some((cu, cw)), true) => (cu.tri_grad(t), cw.tri_grad(t)),
            _ => fields.corrective_at(p)?,
        };
        Ok(energy_density(m, u + cu, w + cw))
    })
}

/// One rung of an ε ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsSample {
    pub eps: f64,
    /// Equivalent radius (perimeter / 2π) of the polygonal holes.
    pub eps_eq: f64,
    pub j_eps: f64,
    pub nodes: usize,
}

/// Mesh for `Ω_ε`, punctured at every dislocation.
pub fn punctured_mesh(domain: &Domain, ds: &[Dislocation<f64>], eps: f64, opts: &EnergyOptions) -> Result<Mesh> {
    let centers: Vec<Point> = ds.iter().map(|d| d.position).collect();
    let holed = domain.punctured(&centers, eps);
    triangulate_with(&holed, &opts.mesh_options(&holed, opts.grade))
}

/// `J_ε` of the full minimizer: singular fields plus the corrective fields
/// solved on `Ω_ε`.
pub fn eps_energy(m: &Material, ds: &[Dislocation<f64>], domain: &Domain, eps: f64, opts: &EnergyOptions) -> Result<EpsSample> {
    Ok(eps_solution(m, ds, domain, eps, opts)?.0)
}

/// As [`eps_energy`], also returning the corrective solution and its mesh.
pub fn eps_solution(
    m: &Material,
    ds: &[Dislocation<f64>],
    domain: &Domain,
    eps: f64,
    opts: &EnergyOptions,
) -> Result<(EpsSample, CorrectiveSolution)> {
    let mesh = Arc::new(punctured_mesh(domain, ds, eps, opts)?);
    let holed = domain.punctured(&ds.iter().map(|d| d.position).collect::<Vec<_>>(), eps);
    let sol = corrective_fields_eps(&holed, ds, m, &mesh, opts.tol)?;
    let fields = FieldPair::with_corrective(ds.to_vec(), &sol, exclusion_radius(domain.diameter()));
    let j_eps = total_energy_eps(m, &mesh, &fields, opts.order)?;
    let eps_eq = mesh.holes.iter().map(|h| h.radius_eq).sum::<f64>() / mesh.holes.len().max(1) as f64;
    let sample = EpsSample {
        eps,
        eps_eq,
        j_eps,
        nodes: mesh.num_nodes(),
    };
    Ok((sample, sol))
}

/// Largest admissible cutoff radius: half the smallest of the pairwise
/// distances and the distances to the outer boundary.
pub fn cutoff_limit(domain: &Domain, ds: &[Dislocation<f64>]) -> f64 {
    0.5 * clearance(domain, ds)
}

/// Default cutoff and contour radius, half of [`cutoff_limit`].
pub fn default_cutoff(domain: &Domain, ds: &[Dislocation<f64>]) -> f64 {
    0.25 * clearance(domain, ds)
}

fn clearance(domain: &Domain, ds: &[Dislocation<f64>]) -> f64 {
    (0..ds.len()).map(|k| clearance_of(domain, ds, k)).fold(f64::INFINITY, f64::min)
}

/// Distance from dislocation `k` to the outer boundary or its nearest
/// neighbour, whichever is smaller.
pub fn clearance_of(domain: &Domain, ds: &[Dislocation<f64>], k: usize) -> f64 {
    let p = ds[k].position;
    ds.iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(_, d)| d.position.dist(p))
        .fold(domain.dist_to_outer(p), f64::min)
}

fn check_cutoff(domain: &Domain, ds: &[Dislocation<f64>], r: f64) -> Result<()> {
    let limit = cutoff_limit(domain, ds);
    if !(r > 0.0 && r <= limit) {
        return Err(Error::BadCutoff { r, limit });
    }
    Ok(())
}

/// Mesh of `Ω \ B_r(d)` used for the self energy of one dislocation.
pub fn self_mesh(domain: &Domain, d: &Dislocation<f64>, r: f64, opts: &EnergyOptions) -> Result<Mesh> {
    let holed = domain.without_holes().with_holes(vec![Disc::new(d.position, r)]);
    let mut mo = opts.mesh_options(domain, 1.0);
    mo.hole_segments = Some(vec![opts.self_segments]);
    triangulate_with(&holed, &mo)
}

/// Self energy of one dislocation from a mesh of `Ω \ B_r(d)`: the
/// quadrature of its own density plus the log counterterm evaluated at the
/// equivalent radius of the hole polygon.
pub fn f_self_on(m: &Material, d: &Dislocation<f64>, mesh: &Mesh, order: usize) -> Result<f64> {
    let hole = mesh
        .holes
        .first()
        .ok_or_else(|| Error::Mesh("self-energy mesh has no cutoff hole".into()))?;
    let excl = exclusion_radius(hole.radius);
    let bulk = mesh.integrate_tris(order, &[], &|_, p| {
        let (u, w) = singular_field(d, p, excl)?;
        Ok(energy_density(m, u, w))
    })?;
    Ok(bulk + core_energy(m, std::slice::from_ref(d)) * hole.radius_eq.ln())
}

/// `F_self = Σ_i ∫_{Ω∖B_r(d_i)} f[u_i, w_i] + Σ_i E₀ⁱ ln r`.
pub fn f_self(m: &Material, ds: &[Dislocation<f64>], domain: &Domain, r: f64, opts: &EnergyOptions) -> Result<f64> {
    m.validate()?;
    if ds.is_empty() {
        return Ok(0.0);
    }
    check_cutoff(domain, ds, r)?;
    let parts: Vec<f64> = ds
        .par_iter()
        .map(|d| f_self_on(m, d, &self_mesh(domain, d, r, opts)?, opts.order))
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum())
}

/// Mesh of `Ω` with every dislocation as a vertex and local refinement
/// scaled to the nearest-neighbour distance.
pub fn pair_mesh(domain: &Domain, ds: &[Dislocation<f64>], opts: &EnergyOptions) -> Result<(Mesh, Vec<usize>)> {
    let mut mo = opts.mesh_options(domain, opts.grade);
    for k in 0..ds.len() {
        let size = (opts.h * opts.grade).min(0.05 * clearance_of(domain, ds, k));
        mo = mo.with_point(ds[k].position, size);
    }
    let mesh = triangulate_with(&domain.without_holes(), &mo)?;
    let nodes = ds
        .iter()
        .map(|d| {
            mesh.find_node(d.position)
                .ok_or_else(|| Error::Mesh("dislocation is not a mesh vertex".into()))
        })
        .collect::<Result<_>>()?;
    Ok((mesh, nodes))
}

/// `Σ_{i<j} ∫_Ω (C u_i·u_j + K w_i·w_j + R u_i·w_j + R u_j·w_i)` on a mesh
/// whose vertices `nodes` sit at the dislocations.
pub fn f_int_on(m: &Material, ds: &[Dislocation<f64>], mesh: &Mesh, nodes: &[usize], order: usize) -> Result<f64> {
    if ds.len() < 2 {
        return Ok(0.0);
    }
    let excl = exclusion_radius(mesh.h);
    mesh.integrate_tris(order, nodes, &|_, p| {
        let fs: Vec<(Point, Point)> = ds.iter().map(|d| singular_field(d, p, excl)).collect::<Result<_>>()?;
        let mut s = 0.0;
        for i in 0..fs.len() {
            for j in i + 1..fs.len() {
                let (ui, wi) = fs[i];
                let (uj, wj) = fs[j];
                s += m.c * ui.dot(uj) + m.k * wi.dot(wj) + m.r * (ui.dot(wj) + uj.dot(wi));
            }
        }
        Ok(s)
    })
}

pub fn f_int(m: &Material, ds: &[Dislocation<f64>], domain: &Domain, opts: &EnergyOptions) -> Result<f64> {
    m.validate()?;
    if ds.len() < 2 {
        return Ok(0.0);
    }
    let (mesh, nodes) = pair_mesh(domain, ds, opts)?;
    f_int_on(m, ds, &mesh, &nodes, opts.order)
}

/// Boundary-relaxation energy computed two ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElasticEnergy {
    /// `J[∇u₀, ∇w₀] + ∮_{∂Ω} (u₀(CU + RW) + w₀(KW + RU))·n`.
    pub value: f64,
    /// `−J[∇u₀, ∇w₀]`, equal to `value` at the minimizer.
    pub dual: f64,
}

pub fn f_elastic(m: &Material, ds: &[Dislocation<f64>], sol: &CorrectiveSolution, order: usize) -> Result<ElasticEnergy> {
    let mesh = &sol.u0.mesh;
    let bulk = mesh.integrate_tris(1, &[], &|t, _| Ok(energy_density(m, sol.u0.tri_grad(t), sol.w0.tri_grad(t))))?;
    let excl = exclusion_radius(mesh.h);
    let boundary = mesh.integrate_edges(Some(Tag::Outer), order, &|p, n| {
        let (u, w) = total_singular_field(ds, p, excl)?;
        let u0 = sol.u0.value_at(p).unwrap_or_else(|| nearest_value(&sol.u0.values, mesh, p));
        let w0 = sol.w0.value_at(p).unwrap_or_else(|| nearest_value(&sol.w0.values, mesh, p));
        Ok(u0 * (u * m.c + w * m.r).dot(n) + w0 * (w * m.k + u * m.r).dot(n))
    })?;
    Ok(ElasticEnergy {
        value: bulk + boundary,
        dual: -bulk,
    })
}

fn nearest_value(values: &[f64], mesh: &Mesh, p: Point) -> f64 {
    match mesh.locator().locate_nearest(p) {
        Some((t, l)) => {
            let [i, j, k] = mesh.tris[t];
            l[0] * values[i] + l[1] * values[j] + l[2] * values[k]
        }
        None => 0.0,
    }
}

/// Least-squares fit of `J = a ln(1/ε) + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute deviation from the fitted line.
    pub residual: f64,
}

pub fn asymptotic_fit(samples: &[(f64, f64)]) -> Result<Fit> {
    if samples.len() < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 samples, got {}", samples.len())));
    }
    for (i, a) in samples.iter().enumerate() {
        if !(a.0 > 0.0) {
            return Err(Error::DegenerateFit(format!("eps = {} is not positive", a.0)));
        }
        if samples[i + 1..].iter().any(|b| b.0 == a.0) {
            return Err(Error::DegenerateFit(format!("eps = {} repeated", a.0)));
        }
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(e, j)| (-e.ln(), j)).collect();
    let (slope, intercept) = line_fit(&pts);
    let residual = pts
        .iter()
        .map(|&(x, y)| (y - slope * x - intercept).abs())
        .fold(0.0, f64::max);
    Ok(Fit {
        slope,
        intercept,
        residual,
    })
}

fn line_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fit of `F_int` against `ln(1/δ)` for a pair of dislocations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractionFit {
    pub slope: f64,
    pub expected: f64,
    /// `|slope − expected| / |expected|`.
    pub deviation: f64,
    pub separations: Vec<f64>,
    pub values: Vec<f64>,
}

/// Places the pair at `centroid ± (δ/2, 0)` for each separation and fits the
/// interaction energy against `ln(1/δ)`. Positions of `pair` are ignored.
pub fn interaction_log_fit(
    m: &Material,
    pair: [Dislocation<f64>; 2],
    domain: &Domain,
    separations: &[f64],
    opts: &EnergyOptions,
) -> Result<InteractionFit> {
    m.validate()?;
    let mut seen = separations.to_vec();
    seen.sort_by(f64::total_cmp);
    seen.dedup();
    if seen.len() < 2 || seen[0] <= 0.0 {
        return Err(Error::DegenerateFit("need at least 2 distinct positive separations".into()));
    }
    let c = domain.centroid();
    let values: Vec<f64> = separations
        .par_iter()
        .map(|&delta| {
            let off = Point::new(0.5 * delta, 0.0);
            let ds = [
                Dislocation::new(c - off, pair[0].b_u, pair[0].b_w),
                Dislocation::new(c + off, pair[1].b_u, pair[1].b_w),
            ];
            f_int(m, &ds, domain, opts)
        })
        .collect::<Result<_>>()?;
    let pts: Vec<(f64, f64)> = separations.iter().zip(&values).map(|(&d, &v)| (-d.ln(), v)).collect();
    let slope = line_fit(&pts).0;
    let expected = interaction_coefficient(m, &pair[0], &pair[1]);
    Ok(InteractionFit {
        slope,
        expected,
        deviation: if expected == 0.0 {
            slope.abs()
        } else {
            (slope - expected).abs() / expected.abs()
        },
        separations: separations.to_vec(),
        values,
    })
}

/// Renormalized energy of one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Renormalized {
    pub f_self: f64,
    pub f_int: f64,
    pub f_elastic: f64,
    pub f_elastic_dual: f64,
    pub cutoff: f64,
}

impl Renormalized {
    pub fn total(&self) -> f64 {
        self.f_self + self.f_int + self.f_elastic
    }
}

/// Meshes for evaluating `F` at one configuration. The meshes can be
/// morphed to follow a small displacement of one dislocation, which keeps
/// `F` a smooth function of the positions.
#[derive(Debug, Clone)]
pub struct RenormalizedSetup {
    pub domain: Domain,
    pub dislocations: Vec<Dislocation<f64>>,
    pub cutoff: f64,
    pub self_meshes: Vec<Arc<Mesh>>,
    pub pair_mesh: Arc<Mesh>,
    pub pair_nodes: Vec<usize>,
}

impl RenormalizedSetup {
    pub fn new(domain: &Domain, ds: &[Dislocation<f64>], cutoff: Option<f64>, opts: &EnergyOptions) -> Result<Self> {
        domain.validate()?;
        if ds.is_empty() {
            return Err(Error::Config("no dislocations".into()));
        }
        if let Some(k) = ds.iter().position(|d| !(domain.dist_to_outer(d.position) > 0.0)) {
            return Err(Error::Config(format!("dislocation {k} is not strictly inside the domain")));
        }
        let r = cutoff.unwrap_or_else(|| default_cutoff(domain, ds));
        check_cutoff(domain, ds, r)?;
        let self_meshes = ds
            .par_iter()
            .map(|d| self_mesh(domain, d, r, opts).map(Arc::new))
            .collect::<Result<_>>()?;
        let (pair, pair_nodes) = pair_mesh(domain, ds, opts)?;
        Ok(Self {
            domain: domain.clone(),
            dislocations: ds.to_vec(),
            cutoff: r,
            self_meshes,
            pair_mesh: Arc::new(pair),
            pair_nodes,
        })
    }

    pub fn evaluate(&self, m: &Material, opts: &EnergyOptions) -> Result<(Renormalized, CorrectiveSolution)> {
        let ds = &self.dislocations;
        let (selfs, rest) = rayon::join(
            || {
                ds.par_iter()
                    .zip(&self.self_meshes)
                    .map(|(d, mesh)| f_self_on(m, d, mesh, opts.order))
                    .collect::<Result<Vec<f64>>>()
            },
            || -> Result<(f64, CorrectiveSolution, ElasticEnergy)> {
                let fi = f_int_on(m, ds, &self.pair_mesh, &self.pair_nodes, opts.order)?;
                let sol = corrective_fields_limit(&self.domain, ds, m, &self.pair_mesh, opts.tol)?;
                let el = f_elastic(m, ds, &sol, opts.order)?;
                Ok((fi, sol, el))
            },
        );
        let (fi, sol, el) = rest?;
        Ok((
            Renormalized {
                f_self: selfs?.iter().sum(),
                f_int: fi,
                f_elastic: el.value,
                f_elastic_dual: el.dual,
                cutoff: self.cutoff,
            },
            sol,
        ))
    }

    /// The same meshes with dislocation `k` moved by `delta`. Nodes within
    /// `0.3·c` of the dislocation move rigidly, nodes beyond `0.45·c` stay
    /// fixed, where `c` is the clearance of dislocation `k`.
    pub fn displaced(&self, k: usize, delta: Point) -> Result<Self> {
        let d = self.dislocations[k].position;
        let c = clearance_of(&self.domain, &self.dislocations, k);
        if !(delta.norm() < 0.05 * c) {
            return Err(Error::Config(format!(
                "displacement {} too large for clearance {c}",
                delta.norm()
            )));
        }
        let map = |p: Point| p + delta * blend((p.dist(d) - 0.3 * c) / (0.15 * c));
        let mut ds = self.dislocations.clone();
        ds[k].position = d + delta;
        let mut self_meshes = self.self_meshes.clone();
        self_meshes[k] = Arc::new(self.self_meshes[k].morphed(map)?);
        let mut pair = self.pair_mesh.morphed(map)?;
        pair.nodes[self.pair_nodes[k]] = ds[k].position;
        Ok(Self {
            domain: self.domain.clone(),
            dislocations: ds,
            cutoff: self.cutoff,
            self_meshes,
            pair_mesh: Arc::new(pair),
            pair_nodes: self.pair_nodes.clone(),
        })
    }
}

/// Smooth step from 1 at `t ≤ 0` to 0 at `t ≥ 1`.
fn blend(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

/// Full energy report of a configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub e0: f64,
    pub f_self: f64,
    pub f_int: f64,
    pub f_elastic: f64,
    pub f_elastic_dual: f64,
    pub f: f64,
    pub cutoff: f64,
    pub j_eps: Vec<EpsSample>,
    pub fit: Option<Fit>,
    /// `|J_ε − E₀ ln(1/ε_eq) − F|` per rung.
    pub remainders: Vec<f64>,
}

impl EnergyBreakdown {
    pub fn new(e0: f64, f: Renormalized, j_eps: Vec<EpsSample>) -> Result<Self> {
        let fit = if j_eps.len() >= 3 {
            Some(asymptotic_fit(&j_eps.iter().map(|s| (s.eps_eq, s.j_eps)).collect::<Vec<_>>())?)
        } else {
            None
        };
        let total = f.f_self + f.f_int + f.f_elastic;
        let remainders = j_eps
            .iter()
            .map(|s| (s.j_eps - e0 * (1.0 / s.eps_eq).ln() - total).abs())
            .collect();
        Ok(Self {
            e0,
            f_self: f.f_self,
            f_int: f.f_int,
            f_elastic: f.f_elastic,
            f_elastic_dual: f.f_elastic_dual,
            f: total,
            cutoff: f.cutoff,
            j_eps,
            fit,
            remainders,
        })
    }
}

/// Computes `E₀`, `F` and `J_ε` on every rung of `ladder`.
pub fn energy_breakdown(
    m: &Material,
    ds: &[Dislocation<f64>],
    domain: &Domain,
    ladder: &[f64],
    cutoff: Option<f64>,
    opts: &EnergyOptions,
) -> Result<EnergyBreakdown> {
    m.validate()?;
    let setup = RenormalizedSetup::new(domain, ds, cutoff, opts)?;
    let (f, samples) = rayon::join(
        || setup.evaluate(m, opts),
        || {
            ladder
                .par_iter()
                .map(|&eps| eps_energy(m, ds, domain, eps, opts))
                .collect::<Result<Vec<_>>>()
        },
    );
    EnergyBreakdown::new(core_energy(m, ds), f?.0, samples?)
}
