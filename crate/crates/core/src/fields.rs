//! Singular phonon/phason fields of screw dislocations and circulation loops.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist_point_segment, Point};
use crate::quadrature::{adaptive_line, QuadratureSpec, UnitRule};
use crate::scalar::{Real, Vec2};

/// A screw dislocation at `position` with phonon and phason Burgers moduli.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dislocation<T> {
    pub position: Vec2<T>,
    pub b_u: T,
    pub b_w: T,
}

impl<T: Copy> Dislocation<T> {
    pub const fn new(position: Vec2<T>, b_u: T, b_w: T) -> Self {
        Self { position, b_u, b_w }
    }
}

impl<T: Real> Dislocation<T> {
    /// Same position, Burgers moduli multiplied by `s`.
    pub fn scaled(&self, s: T) -> Self {
        Self::new(self.position, self.b_u * s, self.b_w * s)
    }

    /// Same position, phonon and phason moduli exchanged.
    pub fn swapped(&self) -> Self {
        Self::new(self.position, self.b_w, self.b_u)
    }

    pub fn is_trivial(&self) -> bool {
        self.b_u == T::zero() && self.b_w == T::zero()
    }
}

/// Exclusion radius used for a domain of the given diameter.
pub fn exclusion_radius<T: Real>(diameter: T) -> T {
    T::lit(1e-12) * diameter
}

/// Closed-form strain pair `(u_i, w_i)` of one dislocation at `p`.
///
/// Both fields are `b/(2π) · (−(y−y₀), x−x₀) / |p − d|²`.
pub fn singular_field<T: Real>(d: &Dislocation<T>, p: Vec2<T>, exclusion: T) -> Result<(Vec2<T>, Vec2<T>)> {
    let rel = p - d.position;
    let r2 = rel.norm_sq();
    if !(r2 > exclusion * exclusion) {
        return Err(at_core(p, d.position));
    }
    let k = T::one() / (T::TAU() * r2);
    let dir = rel.perp();
    Ok((dir * (d.b_u * k), dir * (d.b_w * k)))
}

/// Superposition of [`singular_field`] over all dislocations.
pub fn total_singular_field<T: Real>(ds: &[Dislocation<T>], p: Vec2<T>, exclusion: T) -> Result<(Vec2<T>, Vec2<T>)> {
    let mut u = Vec2::zero();
    let mut w = Vec2::zero();
    for d in ds {
        let (ui, wi) = singular_field(d, p, exclusion)?;
        u += ui;
        w += wi;
    }
    Ok((u, w))
}

/// Sum of singular fields, skipping dislocation `skip`.
pub(crate) fn singular_field_except(
    ds: &[Dislocation<f64>],
    skip: usize,
    p: Point,
    exclusion: f64,
) -> Result<(Point, Point)> {
    let mut u = Point::zero();
    let mut w = Point::zero();
    for (j, d) in ds.iter().enumerate() {
        if j != skip {
            let (uj, wj) = singular_field(d, p, exclusion)?;
            u += uj;
            w += wj;
        }
    }
    Ok((u, w))
}

fn at_core<T: Real>(p: Vec2<T>, c: Vec2<T>) -> Error {
    let f = |t: T| t.to_f64().unwrap_or(f64::NAN);
    Error::EvalAtCore {
        x: f(p.x),
        y: f(p.y),
        cx: f(c.x),
        cy: f(c.y),
    }
}

/// Anything that yields the strain pair `(u, w)` at a point.
pub trait StrainPair: Sync {
    fn strains(&self, p: Point) -> Result<(Point, Point)>;

    /// Dislocations carried by the field. Used to reject loops through cores.
    fn cores(&self) -> &[Dislocation<f64>];

    fn exclusion(&self) -> f64;
}

/// The pure singular superposition of a dislocation system.
#[derive(Debug, Clone)]
pub struct SingularField {
    pub dislocations: Vec<Dislocation<f64>>,
    pub exclusion: f64,
}

impl SingularField {
    pub fn new(dislocations: Vec<Dislocation<f64>>, exclusion: f64) -> Self {
        Self { dislocations, exclusion }
    }
}

impl StrainPair for SingularField {
    fn strains(&self, p: Point) -> Result<(Point, Point)> {
        total_singular_field(&self.dislocations, p, self.exclusion)
    }

    fn cores(&self) -> &[Dislocation<f64>] {
        &self.dislocations
    }

    fn exclusion(&self) -> f64 {
        self.exclusion
    }
}

/// A closed, counterclockwise integration loop.
#[derive(Debug, Clone, PartialEq)]
pub enum Loop {
    Circle { center: Point, radius: f64 },
    /// Closed polyline; the last vertex connects back to the first.
    Polyline(Vec<Point>),
}

impl Loop {
    pub fn circle(center: Point, radius: f64) -> Self {
        Loop::Circle { center, radius }
    }

    /// Axis-aligned square of side `side` centered at `center`.
    pub fn square(center: Point, side: f64) -> Self {
        let h = 0.5 * side;
        Loop::Polyline(vec![
            center + Point::new(-h, -h),
            center + Point::new(h, -h),
            center + Point::new(h, h),
            center + Point::new(-h, h),
        ])
    }

    fn distance_to(&self, p: Point) -> f64 {
        match self {
            Loop::Circle { center, radius } => (p.dist(*center) - radius).abs(),
            Loop::Polyline(v) => (0..v.len())
                .map(|i| dist_point_segment(p, v[i], v[(i + 1) % v.len()]))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// `∮ g(p, dp/dt) dt` with adaptive Gauss-Legendre on each piece.
    pub fn integrate(
        &self,
        q: &QuadratureSpec,
        g: &mut dyn FnMut(Point, Point) -> Result<f64>,
    ) -> Result<f64> {
        let rule = UnitRule::new(q.order);
        match self {
            Loop::Circle { center, radius } => {
                const ARCS: usize = 8;
                let mut total = 0.0;
                for a in 0..ARCS {
                    let t0 = 2.0 * PI * a as f64 / ARCS as f64;
                    let t1 = 2.0 * PI * (a + 1) as f64 / ARCS as f64;
                    total += adaptive_line(t0, t1, &rule, q.tol, &mut |t| {
                        let (s, c) = t.sin_cos();
                        let p = *center + Point::new(c, s) * *radius;
                        g(p, Point::new(-s, c) * *radius)
                    })?;
                }
                Ok(total)
            }
            Loop::Polyline(v) => {
                let mut total = 0.0;
                for i in 0..v.len() {
                    let a = v[i];
                    let b = v[(i + 1) % v.len()];
                    let dp = b - a;
                    total += adaptive_line(0.0, 1.0, &rule, q.tol, &mut |t| g(a + dp * t, dp))?;
                }
                Ok(total)
            }
        }
    }

    fn check_clear(&self, field: &dyn StrainPair) -> Result<()> {
        for d in field.cores() {
            if self.distance_to(d.position) <= field.exclusion() {
                return Err(Error::LoopThroughCore {
                    cx: d.position.x,
                    cy: d.position.y,
                });
            }
        }
        Ok(())
    }
}

/// Circulations `(∮ u·t ds, ∮ w·t ds)` around a counterclockwise loop.
pub fn burgers_loop(field: &dyn StrainPair, lp: &Loop, q: &QuadratureSpec) -> Result<(f64, f64)> {
    lp.check_clear(field)?;
    let gu = lp.integrate(q, &mut |p, dp| Ok(field.strains(p)?.0.dot(dp)))?;
    let gw = lp.integrate(q, &mut |p, dp| Ok(field.strains(p)?.1.dot(dp)))?;
    Ok((gu, gw))
}

/// Outward fluxes `(∮ u·n ds, ∮ w·n ds)` through a counterclockwise loop.
pub fn flux_loop(field: &dyn StrainPair, lp: &Loop, q: &QuadratureSpec) -> Result<(f64, f64)> {
    lp.check_clear(field)?;
    let normal = |dp: Point| Point::new(dp.y, -dp.x);
    let fu = lp.integrate(q, &mut |p, dp| Ok(field.strains(p)?.0.dot(normal(dp))))?;
    let fw = lp.integrate(q, &mut |p, dp| Ok(field.strains(p)?.1.dot(normal(dp))))?;
    Ok((fu, fw))
}
