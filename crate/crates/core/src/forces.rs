//! Eshelby stress and Peach-Köhler forces.
//!
//! The force on dislocation `k` is the flux of `f I − T` through any small
//! loop around it, where `T = C u⊗u + K w⊗w + R (u⊗w + w⊗u)` is built from
//! the limit fields. It equals `−∇_{d_k} F`, which gives an independent
//! finite-difference check.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{clearance_of, pair_mesh, EnergyOptions, RenormalizedSetup};
use crate::error::{Error, Result};
use crate::fields::{exclusion_radius, Dislocation, Loop, StrainPair};
use crate::geometry::{Domain, Point};
use crate::material::MaterialConstants;
use crate::quadrature::QuadratureSpec;
use crate::scalar::{Real, Tensor2, Vec2};
use crate::solver::{corrective_fields_limit, FieldPair};

type Material = MaterialConstants<f64>;

/// Trapezoid points on circular contours.
pub const CONTOUR_POINTS: usize = 256;

/// `E = −(f I − T)`, with `f = ½ tr T` the energy density. Symmetric and
/// trace free.
pub fn eshelby<T: Real>(m: &MaterialConstants<T>, u: Vec2<T>, w: Vec2<T>) -> Tensor2<T> {
    let t = Tensor2::from(u.outer(u)).scale(m.c)
        + Tensor2::from(w.outer(w)).scale(m.k)
        + (Tensor2::from(u.outer(w)) + Tensor2::from(w.outer(u))).scale(m.r);
    let half = (t.m[0][0] - t.m[1][1]) / (T::one() + T::one());
    Tensor2::from_rows([[half, t.m[0][1]], [t.m[1][0], -half]])
}

/// A dislocation system together with its limit fields.
#[derive(Debug, Clone)]
pub struct ForceSystem {
    pub material: Material,
    pub domain: Domain,
    pub fields: FieldPair,
}

impl ForceSystem {
    /// Solves the limit corrective problem on a mesh refined at every
    /// dislocation.
    pub fn solve(m: &Material, ds: &[Dislocation<f64>], domain: &Domain, opts: &EnergyOptions) -> Result<Self> {
        let (mesh, _) = pair_mesh(domain, ds, opts)?;
        let sol = corrective_fields_limit(domain, ds, m, &Arc::new(mesh), opts.tol)?;
        Ok(Self {
            material: *m,
            domain: domain.clone(),
            fields: FieldPair::with_corrective(ds.to_vec(), &sol, exclusion_radius(domain.diameter())),
        })
    }

    pub fn dislocations(&self) -> &[Dislocation<f64>] {
        &self.fields.dislocations
    }

    /// Bound on contour radii around dislocation `k`: half its clearance.
    pub fn contour_limit(&self, k: usize) -> f64 {
        0.5 * clearance_of(&self.domain, self.dislocations(), k)
    }

    /// Default contour radius, half of [`Self::contour_limit`].
    pub fn default_radius(&self, k: usize) -> f64 {
        0.5 * self.contour_limit(k)
    }

    fn traction(&self, p: Point, n: Point) -> Result<Point> {
        let (u, w) = self.fields.strains(p)?;
        Ok(-eshelby(&self.material, u, w).apply(n))
    }
}

/// Closed contour around a dislocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Contour {
    Circle { radius: f64 },
    /// Axis-aligned square of the given side.
    Square { side: f64 },
}

impl Contour {
    fn reach(&self) -> f64 {
        match *self {
            Contour::Circle { radius } => radius,
            Contour::Square { side } => side / std::f64::consts::SQRT_2,
        }
    }
}

/// Force on dislocation `k` from a [`CONTOUR_POINTS`]-point trapezoid rule on
/// the circle of radius `r`.
pub fn pk_force(k: usize, sys: &ForceSystem, r: f64) -> Result<Point> {
    pk_force_with(k, sys, &Contour::Circle { radius: r }, &QuadratureSpec::default())
}

/// Force on dislocation `k` from an arbitrary contour. Circles use the
/// trapezoid rule; squares use adaptive Gauss-Legendre with `q`.
pub fn pk_force_with(k: usize, sys: &ForceSystem, contour: &Contour, q: &QuadratureSpec) -> Result<Point> {
    let limit = sys.contour_limit(k);
    let reach = contour.reach();
    if !(reach > 0.0 && reach < limit) {
        return Err(Error::BadContour { r: reach, limit });
    }
    let center = sys.dislocations()[k].position;
    match *contour {
        Contour::Circle { radius } => {
            let parts: Vec<Point> = (0..CONTOUR_POINTS)
                .into_par_iter()
                .map(|i| {
                    let t = 2.0 * PI * i as f64 / CONTOUR_POINTS as f64;
                    let n = Point::new(t.cos(), t.sin());
                    sys.traction(center + n * radius, n)
                })
                .collect::<Result<_>>()?;
            let ds = 2.0 * PI * radius / CONTOUR_POINTS as f64;
            Ok(parts.into_iter().sum::<Point>() * ds)
        }
        Contour::Square { side } => {
            let lp = Loop::square(center, side);
            let comp = |axis: usize| {
                lp.integrate(q, &mut |p, dp| {
                    let t = sys.traction(p, Point::new(dp.y, -dp.x).normalized())?;
                    Ok(if axis == 0 { t.x } else { t.y } * dp.norm())
                })
            };
            Ok(Point::new(comp(0)?, comp(1)?))
        }
    }
}

/// `−∇_{d_k} F` by central differences with step `h_fd`, each displaced
/// configuration re-solved on meshes morphed from `setup`.
pub fn pk_force_fd(k: usize, m: &Material, setup: &RenormalizedSetup, h_fd: f64, opts: &EnergyOptions) -> Result<Point> {
    let steps = [
        Point::new(h_fd, 0.0),
        Point::new(-h_fd, 0.0),
        Point::new(0.0, h_fd),
        Point::new(0.0, -h_fd),
    ];
    let values: Vec<f64> = steps
        .par_iter()
        .map(|&s| Ok(setup.displaced(k, s)?.evaluate(m, opts)?.0.total()))
        .collect::<Result<_>>()?;
    Ok(Point::new(
        -(values[0] - values[1]) / (2.0 * h_fd),
        -(values[2] - values[3]) / (2.0 * h_fd),
    ))
}

/// Default finite-difference step for a domain.
pub fn default_fd_step(domain: &Domain) -> f64 {
    1e-3 * domain.scale()
}

/// Forces on every dislocation with their consistency checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForceReport {
    pub forces: Vec<Point>,
    pub radius: Vec<f64>,
    /// `|F(r) − F(r/2)| / |F(r)|`, absolute when the force vanishes.
    pub r_deviation: Vec<f64>,
    pub fd_forces: Option<Vec<Point>>,
    pub fd_step: Option<f64>,
    /// `|F_contour − F_fd| / |F_fd|`, absolute when the force vanishes.
    pub fd_deviation: Option<Vec<f64>>,
}

fn deviation(a: Point, b: Point) -> f64 {
    let d = (a - b).norm();
    if b.norm() > 1e-12 {
        d / b.norm()
    } else {
        d
    }
}

pub fn force_report(
    m: &Material,
    ds: &[Dislocation<f64>],
    domain: &Domain,
    opts: &EnergyOptions,
    fd_step: Option<f64>,
) -> Result<ForceReport> {
    let sys = ForceSystem::solve(m, ds, domain, opts)?;
    let mut forces = Vec::new();
    let mut radius = Vec::new();
    let mut r_deviation = Vec::new();
    for k in 0..ds.len() {
        let r = sys.default_radius(k);
        let f = pk_force(k, &sys, r)?;
        let half = pk_force(k, &sys, 0.5 * r)?;
        r_deviation.push(deviation(half, f));
        forces.push(f);
        radius.push(r);
    }
    let (fd_forces, fd_deviation) = match fd_step {
        None => (None, None),
        Some(h) => {
            let setup = RenormalizedSetup::new(domain, ds, None, opts)?;
            let fd: Vec<Point> = (0..ds.len())
                .map(|k| pk_force_fd(k, m, &setup, h, opts))
                .collect::<Result<_>>()?;
            let dev = forces.iter().zip(&fd).map(|(&a, &b)| deviation(a, b)).collect();
            (Some(fd), Some(dev))
        }
    };
    Ok(ForceReport {
        forces,
        radius,
        r_deviation,
        fd_forces,
        fd_step,
        fd_deviation,
    })
}
