//! Planar domains: a disc or simple polygon, optionally with circular holes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Vec2;

pub type Point = Vec2<f64>;

/// Closed disc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: Point,
    pub radius: f64,
}

impl Disc {
    pub const fn new(center: Point, radius: f64) -> Self {
        Self { center, radius }
    }
}

/// Outer boundary of a computational domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outer {
    Disc { center: Point, radius: f64 },
    /// Simple polygon, vertices listed counterclockwise.
    Polygon { vertices: Vec<Point> },
}

/// Outer region minus a set of circular cores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub outer: Outer,
    #[serde(default)]
    pub holes: Vec<Disc>,
}

impl Domain {
    pub fn disc(center: Point, radius: f64) -> Self {
        Self {
            outer: Outer::Disc { center, radius },
            holes: Vec::new(),
        }
    }

    pub fn unit_disc() -> Self {
        Self::disc(Point::zero(), 1.0)
    }

    pub fn polygon(vertices: Vec<Point>) -> Self {
        Self {
            outer: Outer::Polygon { vertices },
            holes: Vec::new(),
        }
    }

    /// Axis-aligned square `[x0, x1] × [y0, y1]`.
    pub fn rectangle(lo: Point, hi: Point) -> Self {
        Self::polygon(vec![
            lo,
            Point::new(hi.x, lo.y),
            hi,
            Point::new(lo.x, hi.y),
        ])
    }

    pub fn with_holes(mut self, holes: Vec<Disc>) -> Self {
        self.holes = holes;
        self
    }

    /// Same outer boundary, with a core of radius `eps` at each point.
    pub fn punctured(&self, centers: &[Point], eps: f64) -> Self {
        Self {
            outer: self.outer.clone(),
            holes: centers.iter().map(|&c| Disc::new(c, eps)).collect(),
        }
    }

    /// Outer boundary only.
    pub fn without_holes(&self) -> Self {
        Self {
            outer: self.outer.clone(),
            holes: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.outer {
            Outer::Disc { center, radius } => {
                if !(*radius > 0.0) || !center.is_finite() {
                    return Err(Error::Geometry(format!("disc radius must be > 0, got {radius}")));
                }
            }
            Outer::Polygon { vertices } => check_polygon(vertices)?,
        }
        for (i, h) in self.holes.iter().enumerate() {
            if !(h.radius > 0.0) {
                return Err(Error::Geometry(format!("hole {i} has non-positive radius {}", h.radius)));
            }
            let clearance = self.dist_to_outer(h.center);
            if clearance <= h.radius {
                return Err(Error::Geometry(format!(
                    "hole {i} at ({}, {}) with radius {} does not lie strictly inside the outer boundary",
                    h.center.x, h.center.y, h.radius
                )));
            }
            for (j, g) in self.holes.iter().enumerate().skip(i + 1) {
                if h.center.dist(g.center) <= h.radius + g.radius {
                    return Err(Error::Geometry(format!("holes {i} and {j} overlap or touch")));
                }
            }
        }
        Ok(())
    }

    /// Signed distance from `p` to the outer boundary, positive inside.
    pub fn dist_to_outer(&self, p: Point) -> f64 {
        match &self.outer {
            Outer::Disc { center, radius } => radius - p.dist(*center),
            Outer::Polygon { vertices } => {
                let d = polygon_edges(vertices)
                    .map(|(a, b)| dist_point_segment(p, a, b))
                    .fold(f64::INFINITY, f64::min);
                if point_in_polygon(p, vertices) {
                    d
                } else {
                    -d
                }
            }
        }
    }

    /// Inside the outer boundary and outside every hole.
    pub fn contains(&self, p: Point) -> bool {
        self.dist_to_outer(p) > 0.0 && self.holes.iter().all(|h| p.dist(h.center) > h.radius)
    }

    /// Area enclosed by the outer boundary (exact, not discretized).
    pub fn outer_area(&self) -> f64 {
        match &self.outer {
            Outer::Disc { radius, .. } => PI * radius * radius,
            Outer::Polygon { vertices } => shoelace_area(vertices),
        }
    }

    pub fn area(&self) -> f64 {
        self.outer_area() - self.holes.iter().map(|h| PI * h.radius * h.radius).sum::<f64>()
    }

    pub fn outer_perimeter(&self) -> f64 {
        match &self.outer {
            Outer::Disc { radius, .. } => 2.0 * PI * radius,
            Outer::Polygon { vertices } => polygon_edges(vertices).map(|(a, b)| a.dist(b)).sum(),
        }
    }

    /// Centroid of the region enclosed by the outer boundary.
    pub fn centroid(&self) -> Point {
        match &self.outer {
            Outer::Disc { center, .. } => *center,
            Outer::Polygon { vertices } => polygon_centroid(vertices),
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.outer {
            Outer::Disc { radius, .. } => 2.0 * radius,
            Outer::Polygon { vertices } => {
                let mut d: f64 = 0.0;
                for (i, a) in vertices.iter().enumerate() {
                    for b in &vertices[i + 1..] {
                        d = d.max(a.dist(*b));
                    }
                }
                d
            }
        }
    }

    /// Length scale of the domain: the disc radius, or half the diameter.
    pub fn scale(&self) -> f64 {
        0.5 * self.diameter()
    }

    /// Axis-aligned bounding box of the outer boundary.
    pub fn bounding_box(&self) -> (Point, Point) {
        match &self.outer {
            Outer::Disc { center, radius } => (
                *center - Point::new(*radius, *radius),
                *center + Point::new(*radius, *radius),
            ),
            Outer::Polygon { vertices } => {
                let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
                let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
                for v in vertices {
                    lo = Point::new(lo.x.min(v.x), lo.y.min(v.y));
                    hi = Point::new(hi.x.max(v.x), hi.y.max(v.y));
                }
                (lo, hi)
            }
        }
    }
}

fn check_polygon(v: &[Point]) -> Result<()> {
    if v.len() < 3 {
        return Err(Error::Geometry("polygon needs at least 3 vertices".into()));
    }
    if v.iter().any(|p| !p.is_finite()) {
        return Err(Error::Geometry("polygon has non-finite vertices".into()));
    }
    if shoelace_area(v) <= 0.0 {
        return Err(Error::Geometry("polygon must be counterclockwise with positive area".into()));
    }
    let n = v.len();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        if a.dist(b) == 0.0 {
            return Err(Error::Geometry(format!("polygon has repeated vertex {i}")));
        }
        for j in i + 1..n {
            // Adjacent edges share a vertex and are allowed to touch there.
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (v[j], v[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return Err(Error::Geometry(format!("polygon edges {i} and {j} intersect")));
            }
        }
    }
    Ok(())
}

/// Iterator over the closed edge list of a polygon.
pub fn polygon_edges(v: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    (0..v.len()).map(move |i| (v[i], v[(i + 1) % v.len()]))
}

/// Signed area by the shoelace formula (positive for counterclockwise).
pub fn shoelace_area(v: &[Point]) -> f64 {
    0.5 * polygon_edges(v).map(|(a, b)| a.cross(b)).sum::<f64>()
}

pub fn polygon_centroid(v: &[Point]) -> Point {
    let a = shoelace_area(v);
    let mut c = Point::zero();
    for (p, q) in polygon_edges(v) {
        let cr = p.cross(q);
        c += (p + q) * cr;
    }
    c * (1.0 / (6.0 * a))
}

pub fn point_in_polygon(p: Point, v: &[Point]) -> bool {
    let mut inside = false;
    for (a, b) in polygon_edges(v) {
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

pub fn dist_point_segment(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sq();
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Domain {
        Domain::rectangle(Point::new(-1.0, -1.0), Point::new(1.0, 1.0))
    }

    #[test]
    fn hole_touching_boundary_is_rejected() {
        let d = square().with_holes(vec![Disc::new(Point::new(0.99, 0.0), 0.05)]);
        assert!(matches!(d.validate(), Err(Error::Geometry(_))));
    }

    #[test]
    fn overlapping_holes_are_rejected() {
        let d = Domain::unit_disc().with_holes(vec![
            Disc::new(Point::new(0.0, 0.0), 0.1),
            Disc::new(Point::new(0.15, 0.0), 0.1),
        ]);
        assert!(d.validate().is_err());
        let ok = Domain::unit_disc().with_holes(vec![
            Disc::new(Point::new(0.0, 0.0), 0.1),
            Disc::new(Point::new(0.3, 0.0), 0.1),
        ]);
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn clockwise_or_self_intersecting_polygons_are_rejected() {
        let cw = Domain::polygon(vec![
            Point::new(0.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
        ]);
        assert!(cw.validate().is_err());
        let bowtie = Domain::polygon(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ]);
        assert!(bowtie.validate().is_err());
    }

    #[test]
    fn shoelace_and_centroid() {
        let d = square();
        assert_eq!(d.outer_area(), 4.0);
        assert_eq!(d.centroid(), Point::zero());
        let tri = vec![Point::new(0.0, 0.0), Point::new(3.0, 0.0), Point::new(0.0, 3.0)];
        assert_eq!(shoelace_area(&tri), 4.5);
        let c = polygon_centroid(&tri);
        assert!((c.x - 1.0).abs() < 1e-15 && (c.y - 1.0).abs() < 1e-15);
    }

    #[test]
    fn distances_and_containment() {
        let d = square();
        assert!((d.dist_to_outer(Point::new(0.5, 0.0)) - 0.5).abs() < 1e-15);
        assert!(d.dist_to_outer(Point::new(1.5, 0.0)) < 0.0);
        let holed = d.punctured(&[Point::zero()], 0.2);
        assert!(!holed.contains(Point::new(0.1, 0.0)));
        assert!(holed.contains(Point::new(0.3, 0.0)));
        assert!((Domain::unit_disc().dist_to_outer(Point::new(0.25, 0.0)) - 0.75).abs() < 1e-15);
    }
}
