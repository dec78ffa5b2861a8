use crate::geometry::Point;

use super::Mesh;

/// Bucket grid over triangle bounding boxes.
#[derive(Debug)]
pub struct Locator {
    lo: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
    tris: Vec<[Point; 3]>,
}

fn barycentric(p: Point, t: &[Point; 3]) -> [f64; 3] {
    let a2 = (t[1] - t[0]).cross(t[2] - t[0]);
    let l1 = (p - t[0]).cross(t[2] - t[0]) / a2;
    let l2 = (t[1] - t[0]).cross(p - t[0]) / a2;
    [1.0 - l1 - l2, l1, l2]
}

impl Locator {
    pub fn new(mesh: &Mesh) -> Self {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &mesh.nodes {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let n = mesh.tris.len().max(1);
        let g = (n as f64).sqrt().ceil().max(1.0);
        let cell = ((hi.x - lo.x).max(hi.y - lo.y) / g).max(f64::MIN_POSITIVE);
        let nx = ((hi.x - lo.x) / cell).floor() as usize + 1;
        let ny = ((hi.y - lo.y) / cell).floor() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        let tris: Vec<[Point; 3]> = (0..mesh.tris.len()).map(|t| mesh.tri_points(t)).collect();
        for (t, p) in tris.iter().enumerate() {
            let (x0, y0) = Self::cell_of(lo, cell, nx, ny, Point::new(p[0].x.min(p[1].x).min(p[2].x), p[0].y.min(p[1].y).min(p[2].y)));
            let (x1, y1) = Self::cell_of(lo, cell, nx, ny, Point::new(p[0].x.max(p[1].x).max(p[2].x), p[0].y.max(p[1].y).max(p[2].y)));
            for iy in y0..=y1 {
                for ix in x0..=x1 {
                    buckets[iy * nx + ix].push(t);
                }
            }
        }
        Self { lo, cell, nx, ny, buckets, tris }
    }

    fn cell_of(lo: Point, cell: f64, nx: usize, ny: usize, p: Point) -> (usize, usize) {
        let ix = ((p.x - lo.x) / cell).floor().clamp(0.0, (nx - 1) as f64) as usize;
        let iy = ((p.y - lo.y) / cell).floor().clamp(0.0, (ny - 1) as f64) as usize;
        (ix, iy)
    }

    /// Triangle containing `p` and the barycentric coordinates of `p` in it.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        const SLACK: f64 = -1e-12;
        let (ix, iy) = Self::cell_of(self.lo, self.cell, self.nx, self.ny, p);
        self.buckets[iy * self.nx + ix].iter().find_map(|&t| {
            let l = barycentric(p, &self.tris[t]);
            (l.iter().all(|&v| v >= SLACK)).then_some((t, l))
        })
    }

    /// Like [`Locator::locate`], but falls back to the closest triangle
    /// (with clamped barycentric coordinates) for points just outside the
    /// polygonal boundary.
    pub fn locate_nearest(&self, p: Point) -> Option<(usize, [f64; 3])> {
        if let Some(hit) = self.locate(p) {
            return Some(hit);
        }
        let (ix, iy) = Self::cell_of(self.lo, self.cell, self.nx, self.ny, p);
        let mut best: Option<(usize, [f64; 3])> = None;
        let mut best_score = f64::NEG_INFINITY;
        for ring in 0..3usize {
            let r = ring as isize;
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx.abs() != r && dy.abs() != r {
                        continue;
                    }
                    let (cx, cy) = (ix as isize + dx, iy as isize + dy);
                    if cx < 0 || cy < 0 || cx >= self.nx as isize || cy >= self.ny as isize {
                        continue;
                    }
                    for &t in &self.buckets[cy as usize * self.nx + cx as usize] {
                        let l = barycentric(p, &self.tris[t]);
                        let score = l.iter().cloned().fold(f64::INFINITY, f64::min);
                        if score > best_score {
                            best_score = score;
                            best = Some((t, l));
                        }
                    }
                }
            }
            if best.is_some() {
                break;
            }
        }
        best.map(|(t, l)| {
            let c = l.map(|v| v.max(0.0));
            let s: f64 = c.iter().sum();
            (t, c.map(|v| v / s))
        })
    }
}
