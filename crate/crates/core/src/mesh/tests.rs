use std::f64::consts::PI;
use std::io::{BufReader, Cursor};

use super::*;
use crate::geometry::{Disc, Domain};

fn holed(eps: f64) -> Domain {
    Domain::unit_disc().with_holes(vec![Disc::new(Point::zero(), eps)])
}

#[test]
fn unit_disc_without_holes() {
    let m = triangulate(&Domain::unit_disc(), 0.2, 1.0).unwrap();
    m.audit().unwrap();
    assert_eq!(m.tags(), vec![Tag::Outer]);
    assert!((0..m.num_tris()).all(|t| m.tri_area(t) > 0.0));
}

#[test]
fn unit_disc_with_small_hole() {
    let m = triangulate(&holed(0.05), 0.1, 0.25).unwrap();
    m.audit().unwrap();
    assert_eq!(m.tags(), vec![Tag::Outer, Tag::Hole(0)]);
    assert!(m.edges_with_tag(Tag::Hole(0)).count() >= 16);
    let hole = m.holes[0];
    assert!(hole.radius_eq < 0.05 && hole.radius_eq > 0.0499);
}

#[test]
fn hole_touching_boundary_fails() {
    let d = Domain::rectangle(Point::new(-1.0, -1.0), Point::new(1.0, 1.0))
        .with_holes(vec![Disc::new(Point::new(0.99, 0.0), 0.05)]);
    assert!(matches!(triangulate(&d, 0.1, 0.25), Err(Error::Geometry(_))));
}

#[test]
fn edge_lengths_follow_the_size_field() {
    let (h, grade, eps) = (0.1, 0.25, 0.05);
    let m = triangulate(&holed(eps), h, grade).unwrap();
    for (len, mid) in m.longest_edges() {
        assert!(len <= h * (1.0 + 1e-12), "edge {len} at {mid:?}");
        if mid.norm() <= 3.0 * eps {
            assert!(len <= h * grade * (1.0 + 1e-12), "edge {len} at {mid:?}");
        }
    }
}

#[test]
fn polygon_domain_and_point_features() {
    let d = Domain::rectangle(Point::new(-1.0, -0.5), Point::new(1.0, 0.5));
    let opts = MeshOptions::new(0.1, 1.0)
        .with_point(Point::new(0.2, 0.1), 0.002)
        .with_point(Point::new(-0.3, 0.0), 0.01);
    let m = triangulate_with(&d, &opts).unwrap();
    m.audit().unwrap();
    assert!(m.find_node(Point::new(0.2, 0.1)).is_some());
    assert!(m.find_node(Point::new(-0.3, 0.0)).is_some());
    assert!((m.area() - 2.0).abs() < 1e-12);
}

#[test]
fn outward_normals() {
    let h = 0.1;
    let m = triangulate(&holed(0.2), h, 0.5).unwrap();
    let near = |target: Point, tag: Tag| {
        m.edges_with_tag(tag)
            .min_by(|a, b| {
                let da = ((m.nodes[a.a] + m.nodes[a.b]) * 0.5).dist(target);
                let db = ((m.nodes[b.a] + m.nodes[b.b]) * 0.5).dist(target);
                da.total_cmp(&db)
            })
            .copied()
            .unwrap()
    };
    let e = near(Point::new(1.0, 0.0), Tag::Outer);
    let n = m.outward_normal(e.a, e.b).unwrap();
    assert!(n.dist(Point::new(1.0, 0.0)) < 1e-2 * h);
    let e = near(Point::new(0.2, 0.0), Tag::Hole(0));
    let n = m.outward_normal(e.b, e.a).unwrap();
    assert!(n.dist(Point::new(-1.0, 0.0)) < 1e-2 * h);
    let interior = m
        .tris
        .iter()
        .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
        .find(|&(a, b)| m.boundary_edge(a, b).is_none())
        .unwrap();
    assert!(matches!(m.outward_normal(interior.0, interior.1), Err(Error::NotBoundary(..))));
}

#[test]
fn normals_close_up_on_each_component() {
    let m = triangulate(&holed(0.1), 0.1, 0.5).unwrap();
    for tag in m.tags() {
        let mut s = Point::zero();
        for e in m.edges_with_tag(tag) {
            s += m.edge_normal(e) * m.nodes[e.a].dist(m.nodes[e.b]);
        }
        assert!(s.norm() <= 1e-8 * m.boundary_length(tag), "{tag}: {s:?}");
    }
}

#[test]
fn domain_integrals() {
    let q = QuadratureSpec::default();
    let m = triangulate(&Domain::unit_disc(), 0.05, 1.0).unwrap();
    let area = m.integrate_domain(&|_| 1.0, &q).unwrap();
    assert!((area - PI).abs() < 0.005 * PI);

    let a = triangulate(&holed(0.1), 0.05, 0.5).unwrap();
    let v = a.integrate_domain(&|p| 1.0 / p.norm_sq(), &q).unwrap();
    let exact = 2.0 * PI * 10f64.ln();
    assert!((v - exact).abs() < 0.01 * exact);

    let err = m.integrate_domain(&|p| if p.norm() < 0.3 { f64::NAN } else { 1.0 }, &q);
    assert!(matches!(err, Err(Error::NonFiniteIntegrand { .. })));
}

#[test]
fn boundary_integrals() {
    let q = QuadratureSpec::default();
    let m = triangulate(&holed(0.05), 0.05, 0.5).unwrap();
    let per = m.integrate_boundary(Tag::Outer, &|_| 1.0, &q).unwrap();
    assert!((per - 2.0 * PI).abs() < 0.005 * 2.0 * PI);
    let hole = m.integrate_boundary(Tag::Hole(0), &|_| 1.0, &q).unwrap();
    assert!((hole - 0.1 * PI).abs() < 0.01 * 0.1 * PI);
    let x = m.integrate_boundary(Tag::Outer, &|p| p.x, &q).unwrap();
    assert!(x.abs() < 1e-10);
}

#[test]
fn integration_converges_at_second_order() {
    // ∫ e^x cos y over the unit disc is π by the mean-value property.
    let q = QuadratureSpec::new(2, 1e-10).unwrap();
    let errs: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&h| {
            let mut opts = MeshOptions::new(h, 1.0);
            opts.outer_segments = Some((2.0 * PI / h).round() as usize);
            let m = triangulate_with(&Domain::unit_disc(), &opts).unwrap();
            (m.integrate_domain(&|p| p.x.exp() * p.y.cos(), &q).unwrap() - PI).abs()
        })
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.9, "order {order}, errors {errs:?}");
    }
}

#[test]
fn qcmesh_round_trip() {
    let m = triangulate(&holed(0.2), 0.2, 0.5).unwrap();
    let field: Vec<f64> = m.nodes.iter().map(|p| p.x * 0.1 + p.y.sin()).collect();
    let mut buf = Vec::new();
    write_qcmesh(&m, Some(&field), &mut buf).unwrap();
    let (back, f) = read_qcmesh(&mut BufReader::new(Cursor::new(&buf))).unwrap();
    assert_eq!(back.nodes, m.nodes);
    assert_eq!(back.tris, m.tris);
    assert_eq!(back.bedges, m.bedges);
    assert_eq!(f.unwrap(), field);
    back.audit().unwrap();
    assert!((back.holes[0].radius_eq - m.holes[0].radius_eq).abs() < 1e-15);

    let mut plain = Vec::new();
    write_qcmesh(&m, None, &mut plain).unwrap();
    assert!(read_qcmesh(&mut Cursor::new(&plain)).unwrap().1.is_none());

    let text = String::from_utf8(buf).unwrap().replacen("qcmesh 1", "qcmesh 2", 1);
    assert!(matches!(read_qcmesh(&mut Cursor::new(text.as_bytes())), Err(Error::Parse { .. })));
    let bad = "qcmesh 1\nnodes 1\n0 0\ntris 1\n0 0 5\nbedges 0\n";
    assert!(read_qcmesh(&mut Cursor::new(bad.as_bytes())).is_err());
}

#[test]
fn locator_finds_containing_triangles() {
    let m = triangulate(&holed(0.1), 0.1, 0.5).unwrap();
    let loc = m.locator();
    for t in (0..m.num_tris()).step_by(7) {
        let c = m.tri_centroid(t);
        let (found, l) = loc.locate(c).unwrap();
        assert_eq!(found, t);
        assert!(l.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-9));
    }
    assert!(loc.locate(Point::zero()).is_none());
    assert!(loc.locate_nearest(Point::new(1.0, 0.0)).is_some());
}

#[test]
fn morphing_moves_nodes_and_keeps_connectivity() {
    let m = triangulate(&Domain::unit_disc(), 0.2, 1.0).unwrap();
    let shifted = m.morphed(|p| p * 1.1).unwrap();
    assert_eq!(shifted.tris, m.tris);
    assert!((shifted.area() - 1.21 * m.area()).abs() < 1e-12);
    assert!(m.morphed(|p| Point::new(-p.x, p.y)).is_err());
}
