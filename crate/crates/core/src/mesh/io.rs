use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::geometry::Point;

use super::{BoundaryEdge, Mesh, Tag};

/// Write `mesh` in the `qcmesh 1` text format, optionally followed by a
/// nodal `field` section.
pub fn write_qcmesh(mesh: &Mesh, field: Option<&[f64]>, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "qcmesh 1")?;
    writeln!(out, "nodes {}", mesh.nodes.len())?;
    for p in &mesh.nodes {
        writeln!(out, "{:?} {:?}", p.x, p.y)?;
    }
    writeln!(out, "tris {}", mesh.tris.len())?;
    for t in &mesh.tris {
        writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(out, "bedges {}", mesh.bedges.len())?;
    for e in &mesh.bedges {
        writeln!(out, "{} {} {}", e.a, e.b, e.tag)?;
    }
    if let Some(values) = field {
        if values.len() != mesh.nodes.len() {
            return Err(Error::Config(format!(
                "field has {} values for {} nodes",
                values.len(),
                mesh.nodes.len()
            )));
        }
        writeln!(out, "field {}", values.len())?;
        for v in values {
            writeln!(out, "{v:?}")?;
        }
    }
    Ok(())
}

struct Lines<'a> {
    inner: Box<dyn Iterator<Item = std::io::Result<String>> + 'a>,
    line: usize,
}

impl Lines<'_> {
    fn next(&mut self) -> Result<Option<String>> {
        loop {
            match self.inner.next() {
                None => return Ok(None),
                Some(l) => {
                    self.line += 1;
                    let l = l?;
                    if !l.trim().is_empty() {
                        return Ok(Some(l));
                    }
                }
            }
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn expect(&mut self) -> Result<String> {
        self.next()?.ok_or_else(|| self.err("unexpected end of file"))
    }

    fn header(&mut self, name: &str) -> Result<usize> {
        let l = self.expect()?;
        let mut it = l.split_whitespace();
        if it.next() != Some(name) {
            return Err(self.err(format!("expected `{name} N`")));
        }
        let n = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| self.err("bad count"))?;
        Ok(n)
    }

    fn fields<T: std::str::FromStr>(&mut self, n: usize) -> Result<Vec<T>> {
        let l = self.expect()?;
        let v: Vec<T> = l
            .split_whitespace()
            .map(|s| s.parse::<T>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| self.err("malformed number"))?;
        if v.len() != n {
            return Err(self.err(format!("expected {n} values")));
        }
        Ok(v)
    }
}

fn parse_tag(s: &str) -> Option<Tag> {
    if s == "OUTER" {
        return Some(Tag::Outer);
    }
    s.strip_prefix("HOLE:").and_then(|i| i.parse().ok()).map(Tag::Hole)
}

/// Read a `qcmesh 1` file, returning the mesh and the optional nodal field.
pub fn read_qcmesh(input: &mut dyn BufRead) -> Result<(Mesh, Option<Vec<f64>>)> {
    let mut lines = Lines {
        inner: Box::new(input.lines()),
        line: 0,
    };
    let first = lines.expect()?;
    let mut it = first.split_whitespace();
    if it.next() != Some("qcmesh") {
        return Err(lines.err("missing `qcmesh` header"));
    }
    match it.next() {
        Some("1") => {}
        Some(v) => return Err(lines.err(format!("unsupported version {v}"))),
        None => return Err(lines.err("missing version")),
    }

    let n = lines.header("nodes")?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let v: Vec<f64> = lines.fields(2)?;
        nodes.push(Point::new(v[0], v[1]));
    }
    let m = lines.header("tris")?;
    let mut tris = Vec::with_capacity(m);
    for _ in 0..m {
        let v: Vec<usize> = lines.fields(3)?;
        if v.iter().any(|&i| i >= n) {
            return Err(lines.err("node index out of range"));
        }
        tris.push([v[0], v[1], v[2]]);
    }
    let b = lines.header("bedges")?;
    let mut bedges = Vec::with_capacity(b);
    for _ in 0..b {
        let l = lines.expect()?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(lines.err("expected `i j TAG`"));
        }
        let a: usize = parts[0].parse().map_err(|_| lines.err("bad index"))?;
        let bb: usize = parts[1].parse().map_err(|_| lines.err("bad index"))?;
        if a >= n || bb >= n {
            return Err(lines.err("node index out of range"));
        }
        let tag = parse_tag(parts[2]).ok_or_else(|| lines.err(format!("unknown tag {}", parts[2])))?;
        bedges.push(BoundaryEdge { a, b: bb, tag });
    }
    let field = match lines.next()? {
        None => None,
        Some(l) => {
            let mut it = l.split_whitespace();
            if it.next() != Some("field") {
                return Err(lines.err("expected `field N` or end of file"));
            }
            let k: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| lines.err("bad count"))?;
            if k != n {
                return Err(lines.err("field length differs from node count"));
            }
            let mut values = Vec::with_capacity(k);
            for _ in 0..k {
                values.push(lines.fields::<f64>(1)?[0]);
            }
            Some(values)
        }
    };
    let mut mesh = Mesh::assemble(nodes, tris, bedges, 0.0, 1.0, Vec::new());
    mesh.h = mesh.longest_edges().map(|e| e.0).fold(0.0, f64::max);
    Ok((mesh, field))
}
