//! Triangle meshes with tagged boundaries, element quadrature and point location.

mod generate;
mod io;
mod locate;

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::quadrature::{pairwise_sum, QuadratureSpec, TriangleRule, UnitRule};

pub use generate::{hole_segments, triangulate, triangulate_with, MeshOptions, PointFeature};
pub use io::{read_qcmesh, write_qcmesh};
pub use locate::Locator;

/// Which boundary component an edge lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    Outer,
    Hole(usize),
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Outer => write!(f, "OUTER"),
            Tag::Hole(i) => write!(f, "HOLE:{i}"),
        }
    }
}

/// A boundary edge oriented with the meshed region on its left.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub tag: Tag,
}

/// Discretized core hole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoleInfo {
    pub center: Point,
    /// Radius of the circle the polygon is inscribed in.
    pub radius: f64,
    /// Perimeter of the polygon divided by 2π.
    pub radius_eq: f64,
    pub segments: usize,
}

#[derive(Debug)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    pub tris: Vec<[usize; 3]>,
    pub bedges: Vec<BoundaryEdge>,
    pub h: f64,
    pub grade: f64,
    pub holes: Vec<HoleInfo>,
    edge_index: HashMap<(usize, usize), usize>,
    locator: OnceLock<Locator>,
}

impl Clone for Mesh {
    fn clone(&self) -> Self {
        Self::assemble(self.nodes.clone(), self.tris.clone(), self.bedges.clone(), self.h, self.grade, self.holes.clone())
    }
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Build a mesh from raw arrays. Hole information is derived from the
    /// `HOLE` edges when `holes` is empty.
    pub fn assemble(
        nodes: Vec<Point>,
        tris: Vec<[usize; 3]>,
        bedges: Vec<BoundaryEdge>,
        h: f64,
        grade: f64,
        holes: Vec<HoleInfo>,
    ) -> Self {
        let edge_index = bedges.iter().enumerate().map(|(i, e)| (key(e.a, e.b), i)).collect();
        let mut mesh = Self {
            nodes,
            tris,
            bedges,
            h,
            grade,
            holes,
            edge_index,
            locator: OnceLock::new(),
        };
        if mesh.holes.is_empty() {
            mesh.holes = mesh.derive_holes();
        } else {
            mesh.refresh_hole_radii();
        }
        mesh
    }

    fn derive_holes(&self) -> Vec<HoleInfo> {
        let n = self
            .bedges
            .iter()
            .filter_map(|e| match e.tag {
                Tag::Hole(i) => Some(i + 1),
                Tag::Outer => None,
            })
            .max()
            .unwrap_or(0);
        (0..n)
            .map(|i| {
                let edges: Vec<_> = self.bedges.iter().filter(|e| e.tag == Tag::Hole(i)).collect();
                let m = edges.len().max(1) as f64;
                let center = edges.iter().map(|e| self.nodes[e.a]).sum::<Point>() * (1.0 / m);
                let radius = edges.iter().map(|e| self.nodes[e.a].dist(center)).fold(0.0, f64::max);
                let perim: f64 = edges.iter().map(|e| self.nodes[e.a].dist(self.nodes[e.b])).sum();
                HoleInfo {
                    center,
                    radius,
                    radius_eq: perim / (2.0 * std::f64::consts::PI),
                    segments: edges.len(),
                }
            })
            .collect()
    }

    fn refresh_hole_radii(&mut self) {
        for (i, hole) in self.holes.iter_mut().enumerate() {
            let mut perim = 0.0;
            let mut count = 0;
            for e in self.bedges.iter().filter(|e| e.tag == Tag::Hole(i)) {
                perim += self.nodes[e.a].dist(self.nodes[e.b]);
                count += 1;
            }
            hole.radius_eq = perim / (2.0 * std::f64::consts::PI);
            hole.segments = count;
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_tris(&self) -> usize {
        self.tris.len()
    }

    pub fn tri_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.tris[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    /// Signed area of triangle `t`.
    pub fn tri_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.tri_points(t);
        0.5 * (b - a).cross(c - a)
    }

    pub fn tri_centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.tri_points(t);
        (a + b + c) * (1.0 / 3.0)
    }

    /// Gradients of the three barycentric basis functions on triangle `t`.
    pub fn basis_gradients(&self, t: usize) -> [Point; 3] {
        let [p0, p1, p2] = self.tri_points(t);
        let a2 = (p1 - p0).cross(p2 - p0);
        let g = |pa: Point, pb: Point| Point::new(pa.y - pb.y, pb.x - pa.x) * (1.0 / a2);
        [g(p1, p2), g(p2, p0), g(p0, p1)]
    }

    /// Gradient of the piecewise-linear interpolant of `values` on triangle `t`.
    pub fn tri_gradient(&self, t: usize, values: &[f64]) -> Point {
        let g = self.basis_gradients(t);
        let [a, b, c] = self.tris[t];
        g[0] * values[a] + g[1] * values[b] + g[2] * values[c]
    }

    /// Area of the meshed region.
    pub fn area(&self) -> f64 {
        let v: Vec<f64> = (0..self.tris.len()).map(|t| self.tri_area(t)).collect();
        pairwise_sum(&v)
    }

    /// Longest edge of each triangle, with its midpoint.
    pub fn longest_edges(&self) -> impl Iterator<Item = (f64, Point)> + '_ {
        (0..self.tris.len()).map(move |t| {
            let p = self.tri_points(t);
            (0..3)
                .map(|i| (p[i].dist(p[(i + 1) % 3]), (p[i] + p[(i + 1) % 3]) * 0.5))
                .fold((0.0, Point::zero()), |acc, e| if e.0 > acc.0 { e } else { acc })
        })
    }

    /// Tags present on the boundary, sorted.
    pub fn tags(&self) -> Vec<Tag> {
        let mut t: Vec<Tag> = self.bedges.iter().map(|e| e.tag).collect();
        t.sort();
        t.dedup();
        t
    }

    pub fn edges_with_tag(&self, tag: Tag) -> impl Iterator<Item = &BoundaryEdge> + '_ {
        self.bedges.iter().filter(move |e| e.tag == tag)
    }

    /// Check the structural invariants of the mesh.
    pub fn audit(&self) -> Result<()> {
        for (t, tri) in self.tris.iter().enumerate() {
            if tri.iter().any(|&i| i >= self.nodes.len()) {
                return Err(Error::Mesh(format!("triangle {t} references a missing node")));
            }
            if !(self.tri_area(t) > 0.0) {
                return Err(Error::Mesh(format!("triangle {t} has non-positive signed area")));
            }
        }
        let mut count: HashMap<(usize, usize), (usize, (usize, usize))> = HashMap::new();
        for tri in &self.tris {
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                let e = count.entry(key(a, b)).or_insert((0, (a, b)));
                e.0 += 1;
            }
        }
        let mut boundary = 0;
        for (k, (n, dir)) in &count {
            match n {
                1 => {
                    boundary += 1;
                    let Some(&i) = self.edge_index.get(k) else {
                        return Err(Error::Mesh(format!("boundary edge {k:?} has no tag")));
                    };
                    let e = self.bedges[i];
                    if (e.a, e.b) != *dir {
                        return Err(Error::Mesh(format!("boundary edge {k:?} is not oriented with the region on its left")));
                    }
                }
                2 => {
                    if self.edge_index.contains_key(k) {
                        return Err(Error::Mesh(format!("interior edge {k:?} is tagged as boundary")));
                    }
                }
                _ => return Err(Error::Mesh(format!("edge {k:?} is shared by {n} triangles"))),
            }
        }
        if boundary != self.bedges.len() {
            return Err(Error::Mesh(format!(
                "{} tagged edges but {boundary} boundary edges",
                self.bedges.len()
            )));
        }
        for (i, h) in self.holes.iter().enumerate() {
            if h.segments < 16 {
                return Err(Error::Mesh(format!("hole {i} is resolved by only {} edges", h.segments)));
            }
        }
        Ok(())
    }

    /// Unit normal of a boundary edge pointing out of the meshed region.
    pub fn outward_normal(&self, a: usize, b: usize) -> Result<Point> {
        let &i = self.edge_index.get(&key(a, b)).ok_or(Error::NotBoundary(a, b))?;
        Ok(self.edge_normal(&self.bedges[i]))
    }

    pub fn edge_normal(&self, e: &BoundaryEdge) -> Point {
        let d = self.nodes[e.b] - self.nodes[e.a];
        Point::new(d.y, -d.x).normalized()
    }

    pub fn boundary_edge(&self, a: usize, b: usize) -> Option<&BoundaryEdge> {
        self.edge_index.get(&key(a, b)).map(|&i| &self.bedges[i])
    }

    /// Element-wise quadrature of `f` over the mesh.
    pub fn integrate_domain(&self, f: &(dyn Fn(Point) -> f64 + Sync), q: &QuadratureSpec) -> Result<f64> {
        self.integrate_tris(q.order, &[], &|_, p| Ok(f(p)))
    }

    /// Element-wise quadrature with a collapsed rule whose apex sits at any
    /// vertex listed in `singular`, so integrands like `1/|x − d|` at those
    /// nodes are integrated accurately.
    pub fn integrate_tris(
        &self,
        order: usize,
        singular: &[usize],
        f: &(dyn Fn(usize, Point) -> Result<f64> + Sync),
    ) -> Result<f64> {
        let rule = TriangleRule::new(order);
        let parts: Vec<f64> = (0..self.tris.len())
            .into_par_iter()
            .map(|t| {
                let tri = self.tris[t];
                let apex = (0..3).find(|&i| singular.contains(&tri[i])).unwrap_or(0);
                let p = [self.nodes[tri[apex]], self.nodes[tri[(apex + 1) % 3]], self.nodes[tri[(apex + 2) % 3]]];
                let mut s = 0.0;
                for (x, w) in rule.points(p[0], p[1], p[2]) {
                    let v = f(t, x)?;
                    if !v.is_finite() {
                        return Err(Error::NonFiniteIntegrand { x: x.x, y: x.y });
                    }
                    s += w * v;
                }
                Ok(s)
            })
            .collect::<Result<_>>()?;
        Ok(pairwise_sum(&parts))
    }

    /// Gauss-Legendre quadrature of `f` along the edges with `tag`.
    pub fn integrate_boundary(&self, tag: Tag, f: &(dyn Fn(Point) -> f64 + Sync), q: &QuadratureSpec) -> Result<f64> {
        self.integrate_edges(Some(tag), q.order, &|p, _| Ok(f(p)))
    }

    /// Quadrature of `f(point, outward normal)` along tagged edges, or all
    /// boundary edges when `tag` is `None`.
    pub fn integrate_edges(
        &self,
        tag: Option<Tag>,
        order: usize,
        f: &(dyn Fn(Point, Point) -> Result<f64> + Sync),
    ) -> Result<f64> {
        let rule = UnitRule::new(order);
        let parts: Vec<f64> = self
            .bedges
            .iter()
            .filter(|e| tag.is_none_or(|t| e.tag == t))
            .map(|e| {
                let (a, b) = (self.nodes[e.a], self.nodes[e.b]);
                let n = self.edge_normal(e);
                let len = a.dist(b);
                let mut s = 0.0;
                for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                    let x = a + (b - a) * t;
                    let v = f(x, n)?;
                    if !v.is_finite() {
                        return Err(Error::NonFiniteIntegrand { x: x.x, y: x.y });
                    }
                    s += w * v;
                }
                Ok(s * len)
            })
            .collect::<Result<_>>()?;
        Ok(pairwise_sum(&parts))
    }

    /// Total length of the edges with `tag`.
    pub fn boundary_length(&self, tag: Tag) -> f64 {
        self.edges_with_tag(tag).map(|e| self.nodes[e.a].dist(self.nodes[e.b])).sum()
    }

    pub fn locator(&self) -> &Locator {
        self.locator.get_or_init(|| Locator::new(self))
    }

    /// Copy of the mesh with every node moved by `map`. Connectivity and
    /// tags are unchanged; hole centers move with `map`.
    pub fn morphed(&self, map: impl Fn(Point) -> Point) -> Result<Mesh> {
        let nodes: Vec<Point> = self.nodes.iter().map(|&p| map(p)).collect();
        let holes = self
            .holes
            .iter()
            .map(|h| HoleInfo {
                center: map(h.center),
                ..*h
            })
            .collect();
        let m = Mesh::assemble(nodes, self.tris.clone(), self.bedges.clone(), self.h, self.grade, holes);
        for t in 0..m.tris.len() {
            if !(m.tri_area(t) > 0.0) {
                return Err(Error::Mesh(format!("morphing inverted triangle {t}")));
            }
        }
        Ok(m)
    }

    /// Index of the node at exactly `p`, if any.
    pub fn find_node(&self, p: Point) -> Option<usize> {
        self.nodes.iter().position(|&q| q == p)
    }

    /// Area-weighted average of the triangle gradients around each node.
    pub fn recovered_gradient(&self, values: &[f64]) -> Vec<Point> {
        let mut acc = vec![Point::zero(); self.nodes.len()];
        let mut wsum = vec![0.0; self.nodes.len()];
        for t in 0..self.tris.len() {
            let g = self.tri_gradient(t, values);
            let a = self.tri_area(t);
            for &i in &self.tris[t] {
                acc[i] += g * a;
                wsum[i] += a;
            }
        }
        acc.iter().zip(&wsum).map(|(&g, &w)| if w > 0.0 { g * (1.0 / w) } else { g }).collect()
    }
}

#[cfg(test)]
mod tests;
