//! Corrective elastic problems reduced to scalar Laplace-Neumann problems.
//!
//! The coupled Euler-Lagrange system
//!
//! ```text
//! ∇·(C∇u + R∇w) = 0,   ∇·(R∇u + K∇w) = 0
//! ```
//!
//! with traction data `(C g_u + R g_w, R g_u + K g_w)` decouples, after
//! multiplying by the inverse modulus matrix, into `Δu = 0, ∂u/∂n = g_u` and
//! `Δw = 0, ∂w/∂n = g_w`. Both are discretized with P1 elements and solved
//! by preconditioned conjugate gradients on the singular stiffness system.

mod sparse;

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{exclusion_radius, singular_field_except, total_singular_field, Dislocation, StrainPair};
use crate::geometry::{Disc, Domain, Point};
use crate::material::MaterialConstants;
use crate::mesh::{Mesh, Tag};
use crate::quadrature::UnitRule;

pub use sparse::{pcg_neumann, Csr};

type Material = MaterialConstants<f64>;

/// Inverse of the modulus matrix `[[C, R], [R, K]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decoupling {
    pub inverse: [[f64; 2]; 2],
    /// Spectral condition number of the modulus matrix.
    pub condition: f64,
}

pub fn decouple(m: &Material) -> Result<Decoupling> {
    m.validate()?;
    let det = m.determinant();
    let inverse = [[m.k / det, -m.r / det], [-m.r / det, m.c / det]];
    let mean = 0.5 * (m.c + m.k);
    let rad = (0.25 * (m.c - m.k).powi(2) + m.r * m.r).sqrt();
    Ok(Decoupling {
        inverse,
        condition: (mean + rad) / (mean - rad),
    })
}

/// Gauss points per boundary edge for flux data.
pub const FLUX_POINTS: usize = 4;

/// Boundary flux `g(point, outward normal, tag)`.
pub type Flux<'a> = dyn Fn(Point, Point, Tag) -> Result<f64> + Sync + 'a;

/// Pure-Neumann Laplace problem on a mesh.
pub struct NeumannProblem<'a> {
    pub mesh: &'a Arc<Mesh>,
    pub flux: &'a Flux<'a>,
    /// Ball over which the solution has zero mean; see [`default_ball`].
    pub ball: Disc,
}

/// Piecewise-linear scalar field on a mesh.
#[derive(Debug, Clone)]
pub struct ScalarFieldFE {
    pub mesh: Arc<Mesh>,
    pub values: Vec<f64>,
    tri_grad: Vec<Point>,
    nodal_grad: Vec<Point>,
}

impl ScalarFieldFE {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Self {
        let tri_grad = (0..mesh.num_tris()).map(|t| mesh.tri_gradient(t, &values)).collect();
        let nodal_grad = mesh.recovered_gradient(&values);
        Self {
            mesh,
            values,
            tri_grad,
            nodal_grad,
        }
    }

    pub fn zero(mesh: Arc<Mesh>) -> Self {
        let n = mesh.num_nodes();
        Self::new(mesh, vec![0.0; n])
    }

    /// Constant gradient on triangle `t`.
    pub fn tri_grad(&self, t: usize) -> Point {
        self.tri_grad[t]
    }

    pub fn tri_grads(&self) -> &[Point] {
        &self.tri_grad
    }

    pub fn nodal_grads(&self) -> &[Point] {
        &self.nodal_grad
    }

    /// Linear interpolation of the nodal values.
    pub fn value_at(&self, p: Point) -> Option<f64> {
        let (t, l) = self.mesh.locator().locate_nearest(p)?;
        let [a, b, c] = self.mesh.tris[t];
        Some(l[0] * self.values[a] + l[1] * self.values[b] + l[2] * self.values[c])
    }

    /// Linear interpolation of the recovered nodal gradient.
    pub fn grad_at(&self, p: Point) -> Option<Point> {
        let (t, l) = self.mesh.locator().locate_nearest(p)?;
        let [a, b, c] = self.mesh.tris[t];
        Some(self.nodal_grad[a] * l[0] + self.nodal_grad[b] * l[1] + self.nodal_grad[c] * l[2])
    }

    /// Mean of the field over the triangles whose centroid lies in `ball`.
    pub fn ball_mean(&self, ball: &Disc) -> f64 {
        ball_mean(&self.mesh, &self.values, ball)
    }

    pub fn max_grad_norm(&self) -> f64 {
        self.tri_grad.iter().map(|g| g.norm()).fold(0.0, f64::max)
    }

    /// `∫ |∇v|²` over the mesh.
    pub fn dirichlet_energy(&self) -> f64 {
        (0..self.mesh.num_tris())
            .map(|t| self.mesh.tri_area(t) * self.tri_grad[t].norm_sq())
            .sum()
    }
}

fn ball_mean(mesh: &Mesh, values: &[f64], ball: &Disc) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for t in 0..mesh.num_tris() {
        if mesh.tri_centroid(t).dist(ball.center) <= ball.radius {
            let a = mesh.tri_area(t);
            let [i, j, k] = mesh.tris[t];
            num += a * (values[i] + values[j] + values[k]) / 3.0;
            den += a;
        }
    }
    if den > 0.0 {
        return num / den;
    }
    let t = (0..mesh.num_tris())
        .min_by(|&a, &b| {
            mesh.tri_centroid(a)
                .dist(ball.center)
                .total_cmp(&mesh.tri_centroid(b).dist(ball.center))
        })
        .unwrap_or(0);
    let [i, j, k] = mesh.tris[t];
    (values[i] + values[j] + values[k]) / 3.0
}

/// Normalization ball: centered at the outer centroid, as large as
/// possible while staying `2ε` clear of every core and within half the
/// distance to the outer boundary. When a core sits too close to the
/// centroid the ball of half the boundary distance is used instead.
pub fn default_ball(domain: &Domain, cores: &[Disc]) -> Disc {
    let c = domain.centroid();
    let full = 0.5 * domain.dist_to_outer(c);
    let avoid = cores
        .iter()
        .map(|d| c.dist(d.center) - 2.0 * d.radius)
        .fold(full, f64::min);
    let radius = if avoid >= 0.25 * full { avoid } else { full };
    Disc::new(c, radius)
}

/// Assembled stiffness matrix of a mesh, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct NeumannSystem {
    pub mesh: Arc<Mesh>,
    pub stiffness: Csr,
}

/// Result of one scalar solve.
#[derive(Debug, Clone)]
pub struct NeumannSolution {
    pub field: ScalarFieldFE,
    pub load: Vec<f64>,
    pub iterations: usize,
    /// `‖K v − b‖ / ‖b‖` of the final iterate.
    pub residual: f64,
}

impl NeumannSystem {
    pub fn new(mesh: Arc<Mesh>) -> Self {
        let stiffness = Csr::stiffness(&mesh);
        Self { mesh, stiffness }
    }

    /// Load vector `b_i = ∮ g φ_i ds`, checked for compatibility.
    pub fn load(&self, flux: &Flux<'_>) -> Result<Vec<f64>> {
        let mesh = &self.mesh;
        let rule = UnitRule::new(FLUX_POINTS);
        let per_edge: Vec<(usize, usize, f64, f64, f64, f64)> = mesh
            .bedges
            .par_iter()
            .map(|e| {
                let (a, b) = (mesh.nodes[e.a], mesh.nodes[e.b]);
                let n = mesh.edge_normal(e);
                let len = a.dist(b);
                let (mut ba, mut bb, mut gmax) = (0.0, 0.0, 0.0f64);
                for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                    let g = flux(a + (b - a) * t, n, e.tag)?;
                    if !g.is_finite() {
                        let x = a + (b - a) * t;
                        return Err(Error::NonFiniteIntegrand { x: x.x, y: x.y });
                    }
                    ba += w * g * (1.0 - t) * len;
                    bb += w * g * t * len;
                    gmax = gmax.max(g.abs());
                }
                Ok((e.a, e.b, ba, bb, gmax, len))
            })
            .collect::<Result<_>>()?;
        let mut load = vec![0.0; mesh.num_nodes()];
        let mut gmax = 0.0f64;
        let mut measure = 0.0;
        for &(a, b, ba, bb, g, len) in &per_edge {
            load[a] += ba;
            load[b] += bb;
            gmax = gmax.max(g);
            measure += len;
        }
        let net: f64 = per_edge.iter().map(|e| e.2 + e.3).sum();
        let allowed = 1e-8 * measure * gmax;
        if net.abs() > allowed {
            return Err(Error::IncompatibleFlux { net, allowed });
        }
        Ok(load)
    }

    /// Solve `K v = b` and shift `v` to zero mean over `ball`.
    pub fn solve_load(&self, load: Vec<f64>, ball: &Disc, tol: f64) -> Result<NeumannSolution> {
        let (mut v, iterations) = pcg_neumann(&self.stiffness, &load, tol)?;
        let shift = ball_mean(&self.mesh, &v, ball);
        v.iter_mut().for_each(|x| *x -= shift);
        let residual = self.residual(&v, &load);
        Ok(NeumannSolution {
            field: ScalarFieldFE::new(self.mesh.clone(), v),
            load,
            iterations,
            residual,
        })
    }

    pub fn solve(&self, flux: &Flux<'_>, ball: &Disc, tol: f64) -> Result<NeumannSolution> {
        let load = self.load(flux)?;
        self.solve_load(load, ball, tol)
    }

    /// `‖K v − b‖ / ‖b‖` with `b` projected onto the range of `K`.
    pub fn residual(&self, v: &[f64], load: &[f64]) -> f64 {
        let n = load.len() as f64;
        let mean = load.iter().sum::<f64>() / n;
        let b: Vec<f64> = load.iter().map(|x| x - mean).collect();
        let mut kv = vec![0.0; v.len()];
        self.stiffness.mul(v, &mut kv);
        let bn = sparse::norm(&b);
        let r: Vec<f64> = kv.iter().zip(&b).map(|(a, b)| a - b).collect();
        if bn == 0.0 {
            sparse::norm(&r)
        } else {
            sparse::norm(&r) / bn
        }
    }
}

pub fn solve_neumann(p: &NeumannProblem<'_>, tol: f64) -> Result<ScalarFieldFE> {
    let sys = NeumannSystem::new(p.mesh.clone());
    Ok(sys.solve(p.flux, &p.ball, tol)?.field)
}

/// Corrective potentials `(u₀, w₀)` and solve diagnostics.
#[derive(Debug, Clone)]
pub struct CorrectiveSolution {
    pub u0: ScalarFieldFE,
    pub w0: ScalarFieldFE,
    pub ball: Disc,
    pub load_u: Vec<f64>,
    pub load_w: Vec<f64>,
    /// Largest relative residual of the two scalar solves.
    pub residual: f64,
    pub iterations: usize,
    pub system: Arc<NeumannSystem>,
}

impl CorrectiveSolution {
    /// Relative residual of `(u₀, w₀)` in the original coupled system with
    /// moduli `m`.
    pub fn coupled_residual(&self, m: &Material) -> f64 {
        let k = &self.system.stiffness;
        let n = k.n;
        let (mut ku, mut kw) = (vec![0.0; n], vec![0.0; n]);
        k.mul(&self.u0.values, &mut ku);
        k.mul(&self.w0.values, &mut kw);
        let center = |v: &[f64]| {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| x - mean).collect::<Vec<f64>>()
        };
        let bu = center(&self.load_u);
        let bw = center(&self.load_w);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            let fu = m.c * bu[i] + m.r * bw[i];
            let fw = m.r * bu[i] + m.k * bw[i];
            let ru = m.c * ku[i] + m.r * kw[i] - fu;
            let rw = m.r * ku[i] + m.k * kw[i] - fw;
            num += ru * ru + rw * rw;
            den += fu * fu + fw * fw;
        }
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }

    /// Discrete corrective functional `½ xᵀA x − Fᵀx` of the coupled system,
    /// evaluated at arbitrary nodal values.
    pub fn discrete_functional(&self, m: &Material, u: &[f64], w: &[f64]) -> f64 {
        let k = &self.system.stiffness;
        let (mut ku, mut kw) = (vec![0.0; k.n], vec![0.0; k.n]);
        k.mul(u, &mut ku);
        k.mul(w, &mut kw);
        let quad = m.c * sparse::dot(u, &ku) + m.k * sparse::dot(w, &kw) + 2.0 * m.r * sparse::dot(u, &kw);
        let lin: f64 = (0..k.n)
            .map(|i| {
                let fu = m.c * self.load_u[i] + m.r * self.load_w[i];
                let fw = m.r * self.load_u[i] + m.k * self.load_w[i];
                fu * u[i] + fw * w[i]
            })
            .sum();
        0.5 * quad - lin
    }
}

fn check_dislocations(domain: &Domain, ds: &[Dislocation<f64>]) -> Result<()> {
    for (i, d) in ds.iter().enumerate() {
        if !(domain.dist_to_outer(d.position) > 0.0) {
            return Err(Error::Config(format!("dislocation {i} is not strictly inside the domain")));
        }
        for (j, e) in ds.iter().enumerate().skip(i + 1) {
            if d.position == e.position {
                return Err(Error::Config(format!("dislocations {i} and {j} coincide")));
            }
        }
    }
    Ok(())
}

fn solve_pair(
    system: Arc<NeumannSystem>,
    ball: Disc,
    tol: f64,
    flux_u: &Flux<'_>,
    flux_w: &Flux<'_>,
) -> Result<CorrectiveSolution> {
    let (su, sw) = rayon::join(|| system.solve(flux_u, &ball, tol), || system.solve(flux_w, &ball, tol));
    let (su, sw) = (su?, sw?);
    Ok(CorrectiveSolution {
        residual: su.residual.max(sw.residual),
        iterations: su.iterations.max(sw.iterations),
        u0: su.field,
        w0: sw.field,
        ball,
        load_u: su.load,
        load_w: sw.load,
        system,
    })
}

/// Corrective fields on the whole domain: `Δu₀ = 0` with
/// `∂u₀/∂n = −(Σ u_i)·n` on the outer boundary, likewise for `w₀`.
pub fn corrective_fields_limit(
    domain: &Domain,
    ds: &[Dislocation<f64>],
    m: &Material,
    mesh: &Arc<Mesh>,
    tol: f64,
) -> Result<CorrectiveSolution> {
    corrective_fields_limit_with(domain, ds, m, Arc::new(NeumannSystem::new(mesh.clone())), tol)
}

/// As [`corrective_fields_limit`], reusing an assembled system.
pub fn corrective_fields_limit_with(
    domain: &Domain,
    ds: &[Dislocation<f64>],
    m: &Material,
    system: Arc<NeumannSystem>,
    tol: f64,
) -> Result<CorrectiveSolution> {
    decouple(m)?;
    check_dislocations(domain, ds)?;
    if !system.mesh.holes.is_empty() {
        return Err(Error::Mesh("the limit problem needs a mesh without holes".into()));
    }
    let excl = exclusion_radius(domain.diameter());
    let ball = default_ball(domain, &[]);
    let fu = |p: Point, n: Point, _: Tag| Ok(-total_singular_field(ds, p, excl)?.0.dot(n));
    let fw = |p: Point, n: Point, _: Tag| Ok(-total_singular_field(ds, p, excl)?.1.dot(n));
    solve_pair(system, ball, tol, &fu, &fw)
}

/// Corrective fields on the punctured domain. On the outer boundary the
/// flux is `−(Σ u_i)·n`; on hole `i` it is `−(Σ_{j≠i} u_j)·n` with `n`
/// pointing into the hole.
pub fn corrective_fields_eps(
    domain: &Domain,
    ds: &[Dislocation<f64>],
    m: &Material,
    mesh: &Arc<Mesh>,
    tol: f64,
) -> Result<CorrectiveSolution> {
    decouple(m)?;
    check_dislocations(domain, ds)?;
    if mesh.holes.len() != ds.len() {
        return Err(Error::Mesh(format!(
            "mesh has {} holes for {} dislocations",
            mesh.holes.len(),
            ds.len()
        )));
    }
    for (i, (h, d)) in mesh.holes.iter().zip(ds).enumerate() {
        if h.center.dist(d.position) > 1e-9 * domain.diameter() {
            return Err(Error::Mesh(format!("hole {i} is not centered on dislocation {i}")));
        }
    }
    let excl = exclusion_radius(domain.diameter());
    let cores: Vec<Disc> = mesh.holes.iter().map(|h| Disc::new(h.center, h.radius)).collect();
    let ball = default_ball(domain, &cores);
    let field = |p: Point, tag: Tag| -> Result<(Point, Point)> {
        match tag {
            Tag::Outer => total_singular_field(ds, p, excl),
            Tag::Hole(i) => singular_field_except(ds, i, p, excl),
        }
    };
    let fu = |p: Point, n: Point, tag: Tag| Ok(-field(p, tag)?.0.dot(n));
    let fw = |p: Point, n: Point, tag: Tag| Ok(-field(p, tag)?.1.dot(n));
    let system = Arc::new(NeumannSystem::new(mesh.clone()));
    solve_pair(system, ball, tol, &fu, &fw)
}

/// Full strain pair: singular superposition plus corrective gradients.
#[derive(Debug, Clone)]
pub struct FieldPair {
    pub dislocations: Vec<Dislocation<f64>>,
    pub corrective: Option<(ScalarFieldFE, ScalarFieldFE)>,
    pub exclusion: f64,
}

impl FieldPair {
    pub fn singular(dislocations: Vec<Dislocation<f64>>, exclusion: f64) -> Self {
        Self {
            dislocations,
            corrective: None,
            exclusion,
        }
    }

    pub fn with_corrective(dislocations: Vec<Dislocation<f64>>, sol: &CorrectiveSolution, exclusion: f64) -> Self {
        Self {
            dislocations,
            corrective: Some((sol.u0.clone(), sol.w0.clone())),
            exclusion,
        }
    }

    /// Corrective gradients at `p`, interpolated from recovered nodal values.
    pub fn corrective_at(&self, p: Point) -> Result<(Point, Point)> {
        match &self.corrective {
            None => Ok((Point::zero(), Point::zero())),
            Some((u, w)) => {
                let gu = u.grad_at(p).ok_or(Error::Mesh("point outside the mesh".into()))?;
                let gw = w.grad_at(p).ok_or(Error::Mesh("point outside the mesh".into()))?;
                Ok((gu, gw))
            }
        }
    }
}

impl StrainPair for FieldPair {
    fn strains(&self, p: Point) -> Result<(Point, Point)> {
        let (u, w) = total_singular_field(&self.dislocations, p, self.exclusion)?;
        let (cu, cw) = self.corrective_at(p)?;
        Ok((u + cu, w + cw))
    }

    fn cores(&self) -> &[Dislocation<f64>] {
        &self.dislocations
    }

    fn exclusion(&self) -> f64 {
        self.exclusion
    }
}

#[cfg(test)]
mod tests;
