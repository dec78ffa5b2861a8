//! Graded constrained Delaunay meshing of discs and polygons with circular holes.
//!
//! A size field `s(x)` is built from the holes and from optional point
//! features. Seed points are laid out on rings around every feature and on a
//! hexagonal background lattice, thinned so that no two accepted seeds are
//! closer than a fraction of the local size, and handed to a constrained
//! Delaunay triangulation together with the boundary polygons. Ruppert
//! refinement fixes the angles; edges still longer than the local size are
//! bisected until none remain.

use std::collections::HashSet;
use std::f64::consts::PI;

use spade::handles::FixedFaceHandle;
use spade::handles::InnerTag;
use spade::{
    AngleLimit, ConstrainedDelaunayTriangulation, DelaunayTriangulation, HierarchyHintGenerator, Point2,
    RefinementParameters, Triangulation,
};

use crate::error::{Error, Result};
use crate::geometry::{Domain, Outer, Point};

use super::{BoundaryEdge, HoleInfo, Mesh, Tag};

/// A point where the mesh is locally refined to size `size`. With
/// `vertex` set, the point itself becomes a mesh node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointFeature {
    pub point: Point,
    pub size: f64,
    pub vertex: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshOptions {
    pub h: f64,
    pub grade: f64,
    /// Growth rate of the size field away from features.
    pub growth: f64,
    pub points: Vec<PointFeature>,
    /// Per-hole polygon segment counts; defaults to [`hole_segments`].
    pub hole_segments: Option<Vec<usize>>,
    pub outer_segments: Option<usize>,
}

impl MeshOptions {
    pub fn new(h: f64, grade: f64) -> Self {
        Self {
            h,
            grade,
            growth: 0.3,
            points: Vec::new(),
            hole_segments: None,
            outer_segments: None,
        }
    }

    pub fn with_point(mut self, point: Point, size: f64) -> Self {
        self.points.push(PointFeature {
            point,
            size,
            vertex: true,
        });
        self
    }
}

/// Number of polygon segments resolving a hole of radius `eps`.
///
/// The count never falls below 16, keeps edges under `h·grade`, and grows
/// like `√(scale/eps)` so the polygonal error of the hole shrinks as the
/// hole does.
pub fn hole_segments(eps: f64, h: f64, grade: f64, scale: f64) -> usize {
    let by_size = (2.0 * PI * eps / (h * grade)).ceil();
    let by_ratio = (40.0 * (scale / eps).sqrt()).ceil();
    (by_size.max(by_ratio) as usize).max(16)
}

struct Feature {
    center: Point,
    radius: f64,
    size: f64,
    /// Within this distance of `center` the size is capped by `h·grade`.
    cap_radius: f64,
}

struct Sizing {
    h: f64,
    fine: f64,
    growth: f64,
    features: Vec<Feature>,
}

impl Sizing {
    fn feature_size(&self, f: &Feature, p: Point) -> f64 {
        let d = p.dist(f.center);
        let mut s = f.size + self.growth * (d - f.radius).max(0.0);
        if d <= f.cap_radius {
            s = s.min(self.fine);
        }
        s.min(self.h)
    }

    fn at(&self, p: Point) -> f64 {
        self.features.iter().map(|f| self.feature_size(f, p)).fold(self.h, f64::min)
    }
}

fn ring(center: Point, radius: f64, n: usize, phase: f64) -> impl Iterator<Item = Point> {
    (0..n).map(move |k| {
        let t = 2.0 * PI * (k as f64 + phase) / n as f64;
        center + Point::new(t.cos(), t.sin()) * radius
    })
}

type Cdt = ConstrainedDelaunayTriangulation<Point2<f64>>;

pub fn triangulate(domain: &Domain, h: f64, grade: f64) -> Result<Mesh> {
    triangulate_with(domain, &MeshOptions::new(h, grade))
}

pub fn triangulate_with(domain: &Domain, opts: &MeshOptions) -> Result<Mesh> {
    domain.validate()?;
    if !(opts.h > 0.0) || !(opts.grade > 0.0 && opts.grade <= 1.0) || !(opts.growth > 0.0) {
        return Err(Error::Mesh(format!(
            "need h > 0, 0 < grade <= 1 and growth > 0 (h = {}, grade = {}, growth = {})",
            opts.h, opts.grade, opts.growth
        )));
    }
    for f in &opts.points {
        if !(f.size > 0.0) || domain.dist_to_outer(f.point) <= 0.0 {
            return Err(Error::Mesh(format!("point feature at ({}, {}) is invalid", f.point.x, f.point.y)));
        }
    }
    let scale = domain.scale();
    let seg_counts: Vec<usize> = match &opts.hole_segments {
        Some(v) if v.len() == domain.holes.len() => v.iter().map(|&n| n.max(16)).collect(),
        Some(_) => return Err(Error::Mesh("hole_segments length differs from hole count".into())),
        None => domain
            .holes
            .iter()
            .map(|d| hole_segments(d.radius, opts.h, opts.grade, scale))
            .collect(),
    };

    let fine = opts.h * opts.grade;
    let mut features: Vec<Feature> = domain
        .holes
        .iter()
        .zip(&seg_counts)
        .map(|(d, &n)| Feature {
            center: d.center,
            radius: d.radius,
            size: (2.0 * d.radius * (PI / n as f64).sin()).min(fine),
            cap_radius: 3.0 * d.radius,
        })
        .collect();
    features.extend(opts.points.iter().map(|f| Feature {
        center: f.point,
        radius: 0.0,
        size: f.size.min(opts.h),
        cap_radius: 0.0,
    }));
    let sizing = Sizing {
        h: opts.h,
        fine,
        growth: opts.growth,
        features,
    };

    // Boundary loops.
    let mut loops: Vec<Vec<Point>> = Vec::new();
    match &domain.outer {
        Outer::Disc { center, radius } => {
            let n = opts.outer_segments.unwrap_or_else(|| {
                let probe = 4096;
                let smin = ring(*center, *radius, probe, 0.0).map(|p| sizing.at(p)).fold(f64::INFINITY, f64::min);
                ((2.0 * PI * radius / smin).ceil() as usize).max(16)
            });
            loops.push(ring(*center, *radius, n, 0.5).collect());
        }
        Outer::Polygon { vertices } => {
            let mut pts = Vec::new();
            for i in 0..vertices.len() {
                let a = vertices[i];
                let b = vertices[(i + 1) % vertices.len()];
                let len = a.dist(b);
                let smin = (0..=64)
                    .map(|k| sizing.at(a + (b - a) * (k as f64 / 64.0)))
                    .fold(f64::INFINITY, f64::min);
                let m = ((len / smin).ceil() as usize).max(1);
                for k in 0..m {
                    pts.push(a + (b - a) * (k as f64 / m as f64));
                }
            }
            loops.push(pts);
        }
    }
    for (d, &n) in domain.holes.iter().zip(&seg_counts) {
        loops.push(ring(d.center, d.radius, n, 0.5).collect());
    }

    // Seed selection.
    let mut nn: DelaunayTriangulation<Point2<f64>, (), (), (), HierarchyHintGenerator<f64>> = DelaunayTriangulation::new();
    let mut seeds: Vec<Point> = Vec::new();
    let mut edges: Vec<[usize; 2]> = Vec::new();
    let insert_nn = |nn: &mut DelaunayTriangulation<Point2<f64>, (), (), (), HierarchyHintGenerator<f64>>, p: Point| {
        nn.insert(Point2::new(p.x, p.y))
            .map_err(|e| Error::Mesh(format!("vertex insertion failed: {e:?}")))
    };
    for lp in &loops {
        let base = seeds.len();
        for (k, &p) in lp.iter().enumerate() {
            seeds.push(p);
            insert_nn(&mut nn, p)?;
            edges.push([base + k, base + (k + 1) % lp.len()]);
        }
    }
    for f in &opts.points {
        if f.vertex {
            seeds.push(f.point);
            insert_nn(&mut nn, f.point)?;
        }
    }

    let clear_of_boundary = |p: Point, s: f64| -> bool {
        domain.dist_to_outer(p) >= 0.5 * s && domain.holes.iter().all(|d| p.dist(d.center) - d.radius >= 0.5 * s)
    };
    let try_seed = |nn: &mut DelaunayTriangulation<Point2<f64>, (), (), (), HierarchyHintGenerator<f64>>,
                        seeds: &mut Vec<Point>,
                        p: Point|
     -> Result<()> {
        let s = sizing.at(p);
        if !clear_of_boundary(p, s) {
            return Ok(());
        }
        if let Some(v) = nn.nearest_neighbor(Point2::new(p.x, p.y)) {
            let q = v.position();
            if Point::new(q.x, q.y).dist(p) < 0.7 * s {
                return Ok(());
            }
        }
        seeds.push(p);
        insert_nn(nn, p)?;
        Ok(())
    };

    let diameter = domain.diameter();
    for f in &sizing.features {
        let mut rho = if f.radius > 0.0 { f.radius + 0.866 * f.size } else { f.size };
        let mut parity = 0.0;
        loop {
            let s = sizing.feature_size(f, f.center + Point::new(rho, 0.0));
            if s >= opts.h && rho > f.cap_radius {
                break;
            }
            if rho > diameter {
                break;
            }
            let n = ((2.0 * PI * rho / s).ceil() as usize).max(6);
            for p in ring(f.center, rho, n, parity) {
                try_seed(&mut nn, &mut seeds, p)?;
            }
            parity = 0.5 - parity;
            rho += 0.866 * s;
        }
    }

    let (lo, hi) = domain.bounding_box();
    let dy = opts.h * 0.866;
    let rows = ((hi.y - lo.y) / dy).ceil() as usize + 1;
    let cols = ((hi.x - lo.x) / opts.h).ceil() as usize + 2;
    for r in 0..rows {
        let y = lo.y + r as f64 * dy;
        let shift = if r % 2 == 0 { 0.0 } else { 0.5 * opts.h };
        for c in 0..cols {
            let p = Point::new(lo.x + shift + c as f64 * opts.h, y);
            if domain.dist_to_outer(p) > 0.0 {
                try_seed(&mut nn, &mut seeds, p)?;
            }
        }
    }
    drop(nn);

    let vertices: Vec<Point2<f64>> = seeds.iter().map(|p| Point2::new(p.x, p.y)).collect();
    let mut cdt = Cdt::bulk_load_cdt(vertices, edges).map_err(|e| Error::Mesh(format!("triangulation failed: {e:?}")))?;

    let params = || {
        RefinementParameters::<f64>::new()
            .with_angle_limit(AngleLimit::from_deg(20.0))
            .exclude_outer_faces(true)
            .with_max_additional_vertices(4 * seeds.len() + 10_000)
    };

    let mut excluded: HashSet<FixedFaceHandle<InnerTag>>;
    let mut pass = 0;
    loop {
        let result = cdt.refine(params());
        if !result.refinement_complete {
            return Err(Error::Mesh("Delaunay refinement ran out of vertices".into()));
        }
        excluded = result.excluded_faces.into_iter().collect();
        let mut splits: Vec<Point> = Vec::new();
        let mut seen = HashSet::new();
        for face in cdt.inner_faces() {
            if excluded.contains(&face.fix()) {
                continue;
            }
            for e in face.adjacent_edges() {
                if e.is_constraint_edge() || !seen.insert(e.as_undirected().fix()) {
                    continue;
                }
                let [a, b] = e.positions();
                let (a, b) = (Point::new(a.x, a.y), Point::new(b.x, b.y));
                let mid = (a + b) * 0.5;
                if a.dist(b) > sizing.at(mid) {
                    splits.push(mid);
                }
            }
        }
        if splits.is_empty() {
            break;
        }
        pass += 1;
        if pass > 40 {
            return Err(Error::Mesh("size refinement did not converge".into()));
        }
        for p in splits {
            cdt.insert(Point2::new(p.x, p.y))
                .map_err(|e| Error::Mesh(format!("vertex insertion failed: {e:?}")))?;
        }
    }

    extract(&cdt, &excluded, domain, opts, &seg_counts)
}

fn extract(
    cdt: &Cdt,
    excluded: &HashSet<FixedFaceHandle<InnerTag>>,
    domain: &Domain,
    opts: &MeshOptions,
    seg_counts: &[usize],
) -> Result<Mesh> {
    let mut index = vec![usize::MAX; cdt.num_vertices()];
    let mut nodes = Vec::new();
    let mut tris = Vec::new();
    let mut bedges = Vec::new();
    let mut node_of = |v: usize, p: Point2<f64>, nodes: &mut Vec<Point>| -> usize {
        if index[v] == usize::MAX {
            index[v] = nodes.len();
            nodes.push(Point::new(p.x, p.y));
        }
        index[v]
    };
    let is_inner = |f: spade::handles::FaceHandle<'_, spade::handles::PossiblyOuterTag, Point2<f64>, (), spade::CdtEdge<()>, ()>| {
        f.as_inner().is_some_and(|f| !excluded.contains(&f.fix()))
    };
    for face in cdt.inner_faces() {
        if excluded.contains(&face.fix()) {
            continue;
        }
        let vs = face.vertices();
        let mut t = [0usize; 3];
        for (k, v) in vs.iter().enumerate() {
            t[k] = node_of(v.fix().index(), v.position(), &mut nodes);
        }
        let (a, b, c) = (nodes[t[0]], nodes[t[1]], nodes[t[2]]);
        if (b - a).cross(c - a) < 0.0 {
            t.swap(1, 2);
        }
        tris.push(t);
        for e in face.adjacent_edges() {
            if is_inner(e.rev().face()) {
                continue;
            }
            let from = node_of(e.from().fix().index(), e.from().position(), &mut nodes);
            let to = node_of(e.to().fix().index(), e.to().position(), &mut nodes);
            let mid = (nodes[from] + nodes[to]) * 0.5;
            let tag = domain
                .holes
                .iter()
                .position(|d| mid.dist(d.center) < d.radius * (1.0 + 1e-9))
                .map_or(Tag::Outer, Tag::Hole);
            bedges.push(BoundaryEdge { a: from, b: to, tag });
        }
    }
    let holes = domain
        .holes
        .iter()
        .zip(seg_counts)
        .map(|(d, &n)| HoleInfo {
            center: d.center,
            radius: d.radius,
            radius_eq: 0.0,
            segments: n,
        })
        .collect();
    let mesh = Mesh::assemble(nodes, tris, bedges, opts.h, opts.grade, holes);
    mesh.audit()?;
    Ok(mesh)
}
