//! Bivariate polynomials on triangles in the barycentric Bernstein basis.
//!
//! A degree-`d` polynomial on triangle `T` is stored as coefficients
//! `c_α`, `|α| = d`, with `p = Σ c_α B_α`, where
//! `B_α = d!/(α₀! α₁! α₂!) λ₀^α₀ λ₁^α₁ λ₂^α₂` and `λ` are the barycentric
//! coordinates of `T`. Multi-indices are ordered lexicographically with
//! `α₀` descending, then `α₁` descending (see [`multi_indices`]).
//!
//! Bernstein coefficients do not depend on the coordinate frame the
//! triangle is written in, so a polynomial built in a scaled cell-local
//! frame can be reinterpreted on the physical triangle unchanged.

mod quadrature;

pub use quadrature::{gauss_legendre, integrate, quadrature, QuadratureRule};

use crate::geometry::{self, Point};

/// Dimension of `P_k` in two variables.
pub const fn dim(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

/// Position of the multi-index `(a, b, degree - a - b)`.
#[inline]
pub fn index_of(degree: usize, a: usize, b: usize) -> usize {
    let n = degree - a;
    n * (n + 1) / 2 + (n - b)
}

/// All multi-indices of total degree `degree` in storage order.
pub fn multi_indices(degree: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity(dim(degree));
    for a in (0..=degree).rev() {
        for b in (0..=degree - a).rev() {
            out.push([a, b, degree - a - b]);
        }
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

fn multinomial(alpha: [usize; 3]) -> f64 {
    factorial(alpha[0] + alpha[1] + alpha[2])
        / (factorial(alpha[0]) * factorial(alpha[1]) * factorial(alpha[2]))
}

/// Values of all degree-`degree` Bernstein basis polynomials at `bary`.
pub fn bernstein_values(degree: usize, bary: [f64; 3]) -> Vec<f64> {
    let mut pows = [vec![1.0; degree + 1], vec![1.0; degree + 1], vec![1.0; degree + 1]];
    for (axis, p) in pows.iter_mut().enumerate() {
        for e in 1..=degree {
            p[e] = p[e - 1] * bary[axis];
        }
    }
    multi_indices(degree)
        .into_iter()
        .map(|a| multinomial(a) * pows[0][a[0]] * pows[1][a[1]] * pows[2][a[2]])
        .collect()
}

/// A triangle together with its barycentric-coordinate gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub vertices: [Point; 3],
    grads: [Point; 3],
    signed_area: f64,
}

impl Triangle {
    pub fn new(a: Point, b: Point, c: Point) -> Self {
        let twice = geometry::orient(a, b, c);
        // ∇λ_i = rot90(edge opposite vertex i) / (2 area)
        let g = |p: Point, q: Point| geometry::scale(geometry::rot90(geometry::sub(q, p)), 1.0 / twice);
        Self {
            vertices: [a, b, c],
            grads: [g(b, c), g(c, a), g(a, b)],
            signed_area: 0.5 * twice,
        }
    }

    pub fn reference() -> Self {
        Self::new([0.0, 0.0], [1.0, 0.0], [0.0, 1.0])
    }

    pub fn area(&self) -> f64 {
        self.signed_area.abs()
    }

    pub fn signed_area(&self) -> f64 {
        self.signed_area
    }

    pub fn centroid(&self) -> Point {
        let [a, b, c] = self.vertices;
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn diameter(&self) -> f64 {
        let [a, b, c] = self.vertices;
        geometry::dist(a, b).max(geometry::dist(b, c)).max(geometry::dist(c, a))
    }

    pub fn barycentric(&self, p: Point) -> [f64; 3] {
        let [a, b, c] = self.vertices;
        let twice = 2.0 * self.signed_area;
        let l1 = geometry::orient(a, p, c) / twice;
        let l2 = geometry::orient(a, b, p) / twice;
        [1.0 - l1 - l2, l1, l2]
    }

    pub fn point(&self, bary: [f64; 3]) -> Point {
        let [a, b, c] = self.vertices;
        [
            bary[0] * a[0] + bary[1] * b[0] + bary[2] * c[0],
            bary[0] * a[1] + bary[1] * b[1] + bary[2] * c[1],
        ]
    }

    /// Directional derivative of each barycentric coordinate along `v`.
    #[inline]
    pub fn bary_derivative(&self, v: Point) -> [f64; 3] {
        [
            geometry::dot(self.grads[0], v),
            geometry::dot(self.grads[1], v),
            geometry::dot(self.grads[2], v),
        ]
    }

    /// Whether `p` lies in the closed triangle up to `tol` in barycentric terms.
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        self.barycentric(p).iter().all(|&l| l >= -tol)
    }
}

/// Coefficient-space row of the functional `q ↦ (∂_{dirs[0]} ⋯ ∂_{dirs[l-1]} q)(point)`
/// acting on degree-`degree` polynomials over `tri`. Returns zeros if
/// `dirs.len() > degree`.
pub fn functional_row(tri: &Triangle, degree: usize, point: Point, dirs: &[Point]) -> Vec<f64> {
    let l = dirs.len();
    if l > degree {
        return vec![0.0; dim(degree)];
    }
    let mut row = bernstein_values(degree - l, tri.barycentric(point));
    let mut d = degree - l;
    for dir in dirs {
        let t = tri.bary_derivative(*dir);
        let mut lifted = vec![0.0; dim(d + 1)];
        for (pos, beta) in multi_indices(d).into_iter().enumerate() {
            let r = row[pos] * (d + 1) as f64;
            if r == 0.0 {
                continue;
            }
            lifted[index_of(d + 1, beta[0] + 1, beta[1])] += r * t[0];
            lifted[index_of(d + 1, beta[0], beta[1] + 1)] += r * t[1];
            lifted[index_of(d + 1, beta[0], beta[1])] += r * t[2];
        }
        row = lifted;
        d += 1;
    }
    row
}

/// One bivariate polynomial on one triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct TrianglePolynomial {
    degree: usize,
    triangle: Triangle,
    coeffs: Vec<f64>,
}

impl TrianglePolynomial {
    pub fn new(triangle: Triangle, degree: usize, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), dim(degree), "coefficient count must be dim P_k");
        Self { degree, triangle, coeffs }
    }

    pub fn zero(triangle: Triangle, degree: usize) -> Self {
        Self::new(triangle, degree, vec![0.0; dim(degree)])
    }

    pub fn constant(triangle: Triangle, value: f64) -> Self {
        Self::new(triangle, 0, vec![value])
    }

    /// The coordinate function `x` (axis 0) or `y` (axis 1).
    pub fn coordinate(triangle: Triangle, axis: usize) -> Self {
        let v = triangle.vertices;
        Self::new(triangle, 1, vec![v[0][axis], v[1][axis], v[2][axis]])
    }

    /// Build `Σ c x^i y^j` from `(i, j, c)` terms, expressed at degree `degree`.
    pub fn from_monomials(triangle: Triangle, degree: usize, terms: &[(usize, usize, f64)]) -> Self {
        let x = Self::coordinate(triangle, 0);
        let y = Self::coordinate(triangle, 1);
        let mut acc = Self::zero(triangle, degree);
        for &(i, j, c) in terms {
            assert!(i + j <= degree, "monomial degree exceeds target degree");
            let mut m = Self::constant(triangle, c);
            for _ in 0..i {
                m = m.mul(&x);
            }
            for _ in 0..j {
                m = m.mul(&y);
            }
            acc = acc.add(&m.elevate(degree));
        }
        acc
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn triangle(&self) -> &Triangle {
        &self.triangle
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// De Casteljau evaluation; valid anywhere in the plane.
    pub fn evaluate(&self, p: Point) -> f64 {
        let l = self.triangle.barycentric(p);
        let mut c = self.coeffs.clone();
        for r in (1..=self.degree).rev() {
            let mut next = vec![0.0; dim(r - 1)];
            for (pos, beta) in multi_indices(r - 1).into_iter().enumerate() {
                next[pos] = l[0] * c[index_of(r, beta[0] + 1, beta[1])]
                    + l[1] * c[index_of(r, beta[0], beta[1] + 1)]
                    + l[2] * c[index_of(r, beta[0], beta[1])];
            }
            c = next;
        }
        c[0]
    }

    /// Exact derivative along `dir` (not normalized); degree drops by one.
    pub fn derivative(&self, dir: Point) -> Self {
        if self.degree == 0 {
            return Self::zero(self.triangle, 0);
        }
        let d = self.degree;
        let t = self.triangle.bary_derivative(dir);
        let coeffs = multi_indices(d - 1)
            .into_iter()
            .map(|b| {
                d as f64
                    * (t[0] * self.coeffs[index_of(d, b[0] + 1, b[1])]
                        + t[1] * self.coeffs[index_of(d, b[0], b[1] + 1)]
                        + t[2] * self.coeffs[index_of(d, b[0], b[1])])
            })
            .collect();
        Self::new(self.triangle, d - 1, coeffs)
    }

    /// `∂x^nx ∂y^ny p`.
    pub fn partial(&self, nx: usize, ny: usize) -> Self {
        let mut p = self.clone();
        for _ in 0..nx {
            p = p.derivative([1.0, 0.0]);
        }
        for _ in 0..ny {
            p = p.derivative([0.0, 1.0]);
        }
        p
    }

    pub fn gradient_at(&self, p: Point) -> Point {
        [
            self.derivative([1.0, 0.0]).evaluate(p),
            self.derivative([0.0, 1.0]).evaluate(p),
        ]
    }

    /// `[[∂xx, ∂xy], [∂xy, ∂yy]]` at `p`.
    pub fn hessian_at(&self, p: Point) -> [[f64; 2]; 2] {
        let dx = self.derivative([1.0, 0.0]);
        let xx = dx.derivative([1.0, 0.0]).evaluate(p);
        let xy = dx.derivative([0.0, 1.0]).evaluate(p);
        let yy = self.partial(0, 2).evaluate(p);
        [[xx, xy], [xy, yy]]
    }

    /// Evaluate `∂_{dirs[0]} ⋯ ∂_{dirs[l-1]} p` at `point`.
    pub fn directional_at(&self, point: Point, dirs: &[Point]) -> f64 {
        let row = functional_row(&self.triangle, self.degree, point, dirs);
        row.iter().zip(&self.coeffs).map(|(r, c)| r * c).sum()
    }

    /// Raise to degree `target >= degree` without changing the function.
    pub fn elevate(&self, target: usize) -> Self {
        assert!(target >= self.degree);
        if target == self.degree {
            return self.clone();
        }
        let one = Self::new(self.triangle, target - self.degree, vec![1.0; dim(target - self.degree)]);
        self.mul(&one)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (m, n) = (self.degree, other.degree);
        let mut out = vec![0.0; dim(m + n)];
        let ia = multi_indices(m);
        let ib = multi_indices(n);
        let total = factorial(m + n);
        for (pa, a) in ia.iter().enumerate() {
            if self.coeffs[pa] == 0.0 {
                continue;
            }
            let wa = multinomial(*a);
            for (pb, b) in ib.iter().enumerate() {
                let s = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
                let w = wa * multinomial(*b) / (total / (factorial(s[0]) * factorial(s[1]) * factorial(s[2])));
                out[index_of(m + n, s[0], s[1])] += self.coeffs[pa] * other.coeffs[pb] * w;
            }
        }
        Self::new(self.triangle, m + n, out)
    }

    /// Sum; the result has the larger of the two degrees.
    pub fn add(&self, other: &Self) -> Self {
        let d = self.degree.max(other.degree);
        let a = self.elevate(d);
        let b = other.elevate(d);
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + y).collect();
        Self::new(self.triangle, d, coeffs)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.triangle, self.degree, self.coeffs.iter().map(|c| c * s).collect())
    }

    /// `α self + β other` coefficientwise (same degree).
    pub fn axpby(&self, alpha: f64, other: &Self, beta: f64) -> Self {
        assert_eq!(self.degree, other.degree);
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| alpha * a + beta * b).collect();
        Self::new(self.triangle, self.degree, coeffs)
    }

    /// Same coefficients interpreted on another triangle (an affine image).
    pub fn with_triangle(&self, triangle: Triangle) -> Self {
        Self::new(triangle, self.degree, self.coeffs.clone())
    }
}
