//! Galerkin assembly for `∫ μ D²u : D²v` on the free DOFs.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::QuadMesh;
use crate::poly::{bernstein_values, quadrature, QuadratureRule, Triangle, TrianglePolynomial};
use crate::space::{Discretization, Partition, SmoothFunction};
use crate::sparse::{solve_spd, SolveInfo, SymmetricCsr};

/// Piecewise-constant coefficient: `left` for `x ≤ 1/2`, `right` beyond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientField {
    pub left: f64,
    pub right: f64,
}

/// Sub-triangles may cross `x = 1/2` by this much and still count as aligned.
const ALIGN_TOL: f64 = 1e-12;

impl CoefficientField {
    pub fn uniform(mu: f64) -> Self {
        Self { left: mu, right: mu }
    }

    /// `μ₀` on the left half, 1 on the right.
    pub fn interface(mu0: f64) -> Self {
        Self { left: mu0, right: 1.0 }
    }

    pub fn scaled(self, c: f64) -> Self {
        Self { left: c * self.left, right: c * self.right }
    }

    pub fn is_uniform(&self) -> bool {
        self.left == self.right
    }

    pub fn at(&self, p: Point) -> f64 {
        if p[0] <= 0.5 {
            self.left
        } else {
            self.right
        }
    }

    /// Value on a sub-triangle, read at its centroid.
    pub fn on_triangle(&self, quad: usize, index: usize, tri: &Triangle) -> Result<f64> {
        if !self.is_uniform() {
            let xs = tri.vertices.map(|v| v[0]);
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if lo < 0.5 - ALIGN_TOL && hi > 0.5 + ALIGN_TOL {
                return Err(Error::Misaligned { quad, triangle: index });
            }
        }
        Ok(self.at(tri.centroid()))
    }

    /// Per-triangle values for every quad, or the first alignment failure.
    pub fn validate(&self, mesh: &QuadMesh) -> Result<Vec<[f64; 4]>> {
        (0..mesh.quads().len())
            .map(|q| {
                let tris = mesh.macro_cell(q).triangles();
                let mut mu = [0.0; 4];
                for (t, tri) in tris.iter().enumerate() {
                    mu[t] = self.on_triangle(q, t, tri)?;
                }
                Ok(mu)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    /// `∫ μ D²u : D²v`.
    Hessian,
    /// `∫ μ Δu Δv`; equal to the Hessian form on `H₀²` when μ is constant.
    Laplacian,
}

/// Second derivatives `(∂xx, ∂xy, ∂yy)` of a piece at each rule point.
fn hessian_samples(piece: &TrianglePolynomial, table: &[Vec<f64>]) -> Vec<[f64; 3]> {
    let parts = [piece.partial(2, 0), piece.partial(1, 1), piece.partial(0, 2)];
    table
        .iter()
        .map(|b| parts.clone().map(|h| h.coeffs().iter().zip(b).map(|(c, v)| c * v).sum()))
        .collect()
}

fn pair(form: Form, a: &[f64; 3], b: &[f64; 3]) -> f64 {
    match form {
        Form::Hessian => a[0] * b[0] + 2.0 * a[1] * b[1] + a[2] * b[2],
        Form::Laplacian => (a[0] + a[2]) * (b[0] + b[2]),
    }
}

struct Sampler {
    rule: QuadratureRule,
    /// Bernstein values of degree `k − 2` at each rule point.
    table: Vec<Vec<f64>>,
}

impl Sampler {
    fn new(k: usize, degree: usize) -> Self {
        let rule = quadrature(degree);
        let table = rule.points.iter().map(|&b| bernstein_values(k - 2, b)).collect();
        Self { rule, table }
    }
}

fn local_matrix(disc: &Discretization, q: usize, mu: &[f64; 4], form: Form, s: &Sampler) -> DMatrix<f64> {
    let basis = &disc.bases[q];
    let n = basis.len();
    let mut k = DMatrix::zeros(n, n);
    for t in 0..4 {
        let area = basis.cell.triangle(t).area();
        let h: Vec<Vec<[f64; 3]>> = basis.pieces.iter().map(|p| hessian_samples(&p[t], &s.table)).collect();
        for (pt, &w) in s.rule.weights.iter().enumerate() {
            let c = mu[t] * w * area;
            for a in 0..n {
                let ha = &h[a][pt];
                for b in a..n {
                    k[(a, b)] += c * pair(form, ha, &h[b][pt]);
                }
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            k[(a, b)] = k[(b, a)];
        }
    }
    k
}

/// Dense `N × N` stiffness of one quad in its local DOF numbering.
pub fn local_stiffness(disc: &Discretization, q: usize, mu: &CoefficientField, form: Form) -> Result<DMatrix<f64>> {
    let k = disc.degree();
    let tris = disc.mesh.macro_cell(q).triangles();
    let mut m = [0.0; 4];
    for (t, tri) in tris.iter().enumerate() {
        m[t] = mu.on_triangle(q, t, tri)?;
    }
    Ok(local_matrix(disc, q, &m, form, &Sampler::new(k, 2 * (k - 2))))
}

/// Global stiffness restricted to `partition.free`, rows and columns
/// numbered by free index.
pub fn assemble_stiffness(
    disc: &Discretization,
    partition: &Partition,
    mu: &CoefficientField,
    form: Form,
) -> Result<SymmetricCsr> {
    let k = disc.degree();
    let mus = mu.validate(&disc.mesh)?;
    let sampler = Sampler::new(k, 2 * (k - 2));
    let mut triplets = Vec::new();
    for (q, m) in mus.iter().enumerate() {
        let local = local_matrix(disc, q, m, form, &sampler);
        let map: Vec<Option<usize>> = disc.table.local_to_global[q].iter().map(|&g| partition.free_index[g]).collect();
        for (a, fa) in map.iter().enumerate() {
            let Some(i) = *fa else { continue };
            for (b, fb) in map.iter().enumerate().skip(a) {
                if let Some(j) = *fb {
                    triplets.push((i, j, local[(a, b)]));
                }
            }
        }
    }
    Ok(SymmetricCsr::from_triplets(partition.free.len(), triplets))
}

/// Load `b_i = a(u, φ_i)` for a (piecewise) smooth `u` aligned with μ.
pub fn assemble_load_weak<F: SmoothFunction + ?Sized>(
    disc: &Discretization,
    partition: &Partition,
    u: &F,
    mu: &CoefficientField,
) -> Result<Vec<f64>> {
    let k = disc.degree();
    let mus = mu.validate(&disc.mesh)?;
    let s = Sampler::new(k, 11 + k);
    let mut b = vec![0.0; partition.free.len()];
    for (q, m) in mus.iter().enumerate() {
        let basis = &disc.bases[q];
        for (t, &mu_t) in m.iter().enumerate() {
            let tri = basis.cell.triangle(t);
            let hint = tri.centroid();
            let exact: Vec<[f64; 3]> = s
                .rule
                .points
                .iter()
                .map(|&bary| {
                    let p = tri.point(bary);
                    [u.partial_near(p, hint, 2, 0), u.partial_near(p, hint, 1, 1), u.partial_near(p, hint, 0, 2)]
                })
                .collect();
            for (a, &g) in disc.table.local_to_global[q].iter().enumerate() {
                let Some(i) = partition.free_index[g] else { continue };
                let h = hessian_samples(&basis.pieces[a][t], &s.table);
                let sum: f64 = s.rule.weights.iter().zip(&h).zip(&exact).map(|((w, ha), he)| w * pair(Form::Hessian, ha, he)).sum();
                b[i] += mu_t * tri.area() * sum;
            }
        }
    }
    Ok(b)
}

/// Load `(f, φ_i)` with a quadrature rule of the given degree.
pub fn assemble_load_f<F: Fn(Point) -> f64>(disc: &Discretization, partition: &Partition, f: F, degree: usize) -> Vec<f64> {
    let k = disc.degree();
    let rule = quadrature(degree);
    let table: Vec<Vec<f64>> = rule.points.iter().map(|&b| bernstein_values(k, b)).collect();
    let mut b = vec![0.0; partition.free.len()];
    for q in 0..disc.mesh.quads().len() {
        let basis = &disc.bases[q];
        for t in 0..4 {
            let tri = basis.cell.triangle(t);
            let fv: Vec<f64> = rule.points.iter().map(|&bary| f(tri.point(bary))).collect();
            for (a, &g) in disc.table.local_to_global[q].iter().enumerate() {
                let Some(i) = partition.free_index[g] else { continue };
                let c = basis.pieces[a][t].coeffs();
                let sum: f64 = rule
                    .weights
                    .iter()
                    .zip(&table)
                    .zip(&fv)
                    .map(|((w, bv), v)| w * v * c.iter().zip(bv).map(|(x, y)| x * y).sum::<f64>())
                    .sum();
                b[i] += tri.area() * sum;
            }
        }
    }
    b
}

/// Stiffness and load on the free DOFs.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: SymmetricCsr,
    pub rhs: Vec<f64>,
    pub partition: Partition,
}

/// Solve an assembled system; returns the full global DOF vector.
/// A pivot failure reports the global DOF index.
pub fn solve(system: &LinearSystem) -> Result<(Vec<f64>, SolveInfo)> {
    match solve_spd(&system.matrix, &system.rhs) {
        Ok((x, info)) => Ok((system.partition.expand(&x), info)),
        Err(Error::NonPositivePivot { dof, pivot }) => Err(Error::NonPositivePivot { dof: system.partition.free[dof], pivot }),
        Err(e) => Err(e),
    }
}

/// Clamped-plate system for the weak load of `u`.
pub fn build_system<F: SmoothFunction + ?Sized>(
    disc: &Discretization,
    partition: Partition,
    u: &F,
    mu: &CoefficientField,
    form: Form,
) -> Result<LinearSystem> {
    let matrix = assemble_stiffness(disc, &partition, mu, form)?;
    let rhs = assemble_load_weak(disc, &partition, u, mu)?;
    Ok(LinearSystem { matrix, rhs, partition })
}
