//! Collapsed-tensor Gauss rules on triangles.

use super::Triangle;
use crate::geometry::Point;

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// A rule on the reference triangle: barycentric points, weights summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Rule exact for all polynomials of total degree `<= degree`.
pub fn quadrature(degree: usize) -> QuadratureRule {
    // (u, v) ↦ (u, v (1 - u)) maps the unit square onto the triangle with
    // Jacobian (1 - u), so u needs one extra degree of exactness.
    let (xu, wu) = gauss_legendre((degree + 3) / 2);
    let (xv, wv) = gauss_legendre((degree + 2) / 2);
    let mut points = Vec::with_capacity(xu.len() * xv.len());
    let mut weights = Vec::with_capacity(xu.len() * xv.len());
    for (u, a) in xu.iter().zip(&wu) {
        for (v, b) in xv.iter().zip(&wv) {
            let x = *u;
            let y = v * (1.0 - u);
            points.push([1.0 - x - y, x, y]);
            weights.push(2.0 * a * b * (1.0 - u));
        }
    }
    QuadratureRule { degree, points, weights }
}

/// `∫_T f` using `rule` mapped affinely onto `tri`.
pub fn integrate<F: FnMut(Point) -> f64>(mut f: F, tri: &Triangle, rule: &QuadratureRule) -> f64 {
    let s: f64 = rule
        .points
        .iter()
        .zip(&rule.weights)
        .map(|(b, w)| w * f(tri.point(*b)))
        .sum();
    s * tri.area()
}
