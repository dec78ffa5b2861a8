//! Gauss-Legendre rules, collapsed triangle rules and adaptive line quadrature.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Quadrature order (points per element direction or per segment) and the
/// relative tolerance used by adaptive line integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub order: usize,
    pub tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { order: 6, tol: 1e-10 }
    }
}

impl QuadratureSpec {
    pub fn new(order: usize, tol: f64) -> Result<Self> {
        let q = Self { order, tol };
        q.check()?;
        Ok(q)
    }

    pub fn check(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::Config("quadrature order must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("quadrature tolerance must be > 0".into()));
        }
        Ok(())
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct UnitRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl UnitRule {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        Self {
            nodes: x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
            weights: w.iter().map(|t| 0.5 * t).collect(),
        }
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let len = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(a + t * len))
            .sum::<f64>()
            * len
    }
}

/// Collapsed (Duffy) tensor-product rule on a triangle.
///
/// The square `[0,1]²` is mapped onto the triangle with the edge `s = 0`
/// collapsed to the chosen apex. The Jacobian vanishes linearly at the apex,
/// which cancels a `1/ρ` singularity located there.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    line: UnitRule,
}

impl TriangleRule {
    pub fn new(order: usize) -> Self {
        Self {
            line: UnitRule::new(order.max(1)),
        }
    }

    pub fn order(&self) -> usize {
        self.line.nodes.len()
    }

    /// Quadrature points and weights for the triangle `(apex, b, c)`.
    pub fn points(&self, apex: Point, b: Point, c: Point) -> impl Iterator<Item = (Point, f64)> + '_ {
        let area2 = ((b - apex).cross(c - apex)).abs();
        let line = &self.line;
        line.nodes.iter().zip(&line.weights).flat_map(move |(&s, &ws)| {
            line.nodes.iter().zip(&line.weights).map(move |(&t, &wt)| {
                let edge = b + (c - b) * t;
                let p = apex + (edge - apex) * s;
                (p, ws * wt * s * area2)
            })
        })
    }
}

/// Adaptive composite Gauss-Legendre on `[a, b]`.
///
/// A panel is accepted once the `n`-point estimate on the whole panel and the
/// sum over its two halves agree within `tol` relative to the accumulated
/// absolute integrand mass.
pub fn adaptive_line(
    a: f64,
    b: f64,
    rule: &UnitRule,
    tol: f64,
    f: &mut dyn FnMut(f64) -> Result<f64>,
) -> Result<f64> {
    const MAX_DEPTH: usize = 40;
    let mut total = 0.0;
    let mut stack = vec![(a, b, 0usize)];
    // Scale for the relative test: coarse estimate of ∫|f|.
    let mut scale = 0.0;
    {
        let len = b - a;
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            scale += w * f(a + t * len)?.abs() * len.abs();
        }
    }
    let floor = f64::MIN_POSITIVE.sqrt();
    while let Some((lo, hi, depth)) = stack.pop() {
        let whole = panel(rule, lo, hi, f)?;
        let mid = 0.5 * (lo + hi);
        let left = panel(rule, lo, mid, f)?;
        let right = panel(rule, mid, hi, f)?;
        let refined = left + right;
        if (whole - refined).abs() <= tol * scale.max(floor) || depth >= MAX_DEPTH {
            total += refined;
        } else {
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    Ok(total)
}

fn panel(rule: &UnitRule, a: f64, b: f64, f: &mut dyn FnMut(f64) -> Result<f64>) -> Result<f64> {
    let len = b - a;
    let mut s = 0.0;
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        s += w * f(a + t * len)?;
    }
    Ok(s * len)
}

/// Sum a slice pairwise, so results do not depend on thread scheduling.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if v.len() <= LEAF {
        return v.iter().sum();
    }
    let (l, r) = v.split_at(v.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in 1..=20 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "n = {n}");
            for deg in 0..(2 * n) {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - exact).abs() < 1e-12, "n = {n}, deg = {deg}");
            }
        }
    }

    #[test]
    fn triangle_rule_polynomial_exactness() {
        let a = Point::new(0.3, -0.2);
        let b = Point::new(1.7, 0.4);
        let c = Point::new(0.1, 1.3);
        let area = 0.5 * (b - a).cross(c - a);
        for k in 2..6 {
            let rule = TriangleRule::new(k);
            let s: f64 = rule.points(a, b, c).map(|(_, w)| w).sum();
            assert!((s - area).abs() < 1e-13);
            // Linear function: integral = area × value at centroid.
            let g = (a + b + c) * (1.0 / 3.0);
            let lin: f64 = rule.points(b, c, a).map(|(p, w)| w * (2.0 * p.x - p.y)).sum();
            assert!((lin - area * (2.0 * g.x - g.y)).abs() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn collapsed_rule_handles_vertex_singularity() {
        // ∫ over the right triangle (0,0),(1,0),(1,1) of 1/|x| equals ln(1+√2).
        let rule = TriangleRule::new(16);
        let got: f64 = rule
            .points(Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0))
            .map(|(p, w)| w / p.norm())
            .sum();
        assert!((got - (1.0 + 2f64.sqrt()).ln()).abs() < 1e-12);
    }

    #[test]
    fn adaptive_line_converges_on_peaked_integrand() {
        let rule = UnitRule::new(8);
        let got = adaptive_line(-1.0, 1.0, &rule, 1e-12, &mut |x| Ok(1.0 / (1e-4 + x * x))).unwrap();
        let exact = 2.0 * (1.0 / 1e-4f64.sqrt()) * (1.0 / 1e-4f64.sqrt()).atan();
        assert!((got - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        assert!((pairwise_sum(&v) - v.iter().sum::<f64>()).abs() < 1e-11);
    }
}
