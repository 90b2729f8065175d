//! The C¹-Pₖ macro element on one quadrilateral.
//!
//! On a [`MacroCell`] the element space is four degree-`k` polynomials, one per
//! sub-triangle. The `N = 2k² − 2k + 4` degrees of freedom live at the corners
//! and on the four outer edges; `8k` continuity constraints tie the pieces
//! together across the diagonals. Together they form a square system of size
//! `4 dim Pₖ`, solved once per cell for the dual (nodal) basis.
//!
//! Local numbering: corner `i` contributes value, `∂x`, `∂y` (indices `3i..3i+3`);
//! then, edge by edge, `k − 3` values, `k − 2` first normal derivatives and the
//! higher normal derivatives of orders `2..=k−2`. Edge anchors are listed in
//! the edge's canonical orientation (lower global vertex id first), and every
//! normal derivative uses the canonical edge normal.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{self, Point};
use crate::mesh::MacroCell;
use crate::poly::{self, TrianglePolynomial};

/// Local systems with a larger 1-norm condition estimate are rejected.
pub const MAX_LOCAL_CONDITION: f64 = 1e13;

pub fn dof_count(k: usize) -> usize {
    2 * k * k - 2 * k + 4
}

pub fn constraint_count(k: usize) -> usize {
    8 * k
}

/// Higher-order (order ≥ 2) normal-derivative DOFs on one edge.
pub fn higher_edge_dofs(k: usize) -> usize {
    (k - 3) * (k - 2) / 2
}

fn check_degree(k: usize) -> Result<()> {
    if k < 3 {
        return Err(Error::UnsupportedDegree(k));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DofKind {
    VertexValue,
    VertexDx,
    VertexDy,
    EdgeValue,
    /// `order`-fold derivative along the canonical edge normal.
    EdgeNormal { order: usize, normal: Point },
}

impl DofKind {
    pub fn order(&self) -> usize {
        match self {
            DofKind::VertexValue | DofKind::EdgeValue => 0,
            DofKind::VertexDx | DofKind::VertexDy => 1,
            DofKind::EdgeNormal { order, .. } => *order,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofOwner {
    /// Local corner index.
    Vertex(usize),
    /// Local edge index (corners `i`, `i + 1`).
    Edge(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DofFunctional {
    pub kind: DofKind,
    pub anchor: Point,
    pub owner: DofOwner,
    /// The sub-triangle whose piece the functional reads.
    pub triangle: usize,
}

impl DofFunctional {
    pub fn order(&self) -> usize {
        self.kind.order()
    }

    pub fn directions(&self) -> Vec<Point> {
        match self.kind {
            DofKind::VertexValue | DofKind::EdgeValue => vec![],
            DofKind::VertexDx => vec![[1.0, 0.0]],
            DofKind::VertexDy => vec![[0.0, 1.0]],
            DofKind::EdgeNormal { order, normal } => vec![normal; order],
        }
    }

    /// Whether the DOF is a value or first-derivative datum (shared across
    /// neighbouring quads in both global families).
    pub fn is_low_order(&self) -> bool {
        self.order() <= 1
    }
}

/// Positions along an edge, as fractions from the canonical start.
fn fractions(den: usize, count: usize) -> impl Iterator<Item = f64> {
    (1..=count).map(move |j| j as f64 / den as f64)
}

/// The `N` degrees of freedom of the element on `cell`.
pub fn dof_functionals(k: usize, cell: &MacroCell) -> Result<Vec<DofFunctional>> {
    check_degree(k)?;
    let mut out = Vec::with_capacity(dof_count(k));
    for i in 0..4 {
        let x = cell.corners[i];
        for kind in [DofKind::VertexValue, DofKind::VertexDx, DofKind::VertexDy] {
            out.push(DofFunctional { kind, anchor: x, owner: DofOwner::Vertex(i), triangle: i });
        }
    }
    for i in 0..4 {
        let (a, b) = cell.edge_endpoints(i);
        let normal = cell.edge_normal(i);
        let owner = DofOwner::Edge(i);
        for t in fractions(k - 2, k - 3) {
            out.push(DofFunctional { kind: DofKind::EdgeValue, anchor: geometry::lerp(a, b, t), owner, triangle: i });
        }
        for t in fractions(k - 1, k - 2) {
            out.push(DofFunctional {
                kind: DofKind::EdgeNormal { order: 1, normal },
                anchor: geometry::lerp(a, b, t),
                owner,
                triangle: i,
            });
        }
        for order in 2..=k - 2 {
            for t in fractions(k - order, k - 1 - order) {
                out.push(DofFunctional {
                    kind: DofKind::EdgeNormal { order, normal },
                    anchor: geometry::lerp(a, b, t),
                    owner,
                    triangle: i,
                });
            }
        }
    }
    debug_assert_eq!(out.len(), dof_count(k));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    CornerValue,
    CornerGradient,
    DiagonalValue,
    DiagonalNormal,
    CenterValue,
    CenterGradient,
}

/// `(∂_dirs p_a − ∂_dirs p_b)(point) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityConstraint {
    pub kind: ConstraintKind,
    pub triangles: (usize, usize),
    pub point: Point,
    pub dirs: Vec<Point>,
    /// The diagonal `x_i x_0` the constraint sits on; `None` at the center.
    pub diagonal: Option<usize>,
}

/// Local corner index of the diagonal whose interior normal-derivative
/// constraint nearest the center is dropped.
pub const SKIPPED_DIAGONAL: usize = 2;

/// The `8k` continuity constraints on `cell`, placed on the shared diagonals:
/// diagonal `x_i x_0` separates `T_{i−1}` and `T_i`.
pub fn continuity_constraints(k: usize, cell: &MacroCell) -> Result<Vec<ContinuityConstraint>> {
    check_degree(k)?;
    let x0 = cell.center;
    let mut out = Vec::with_capacity(constraint_count(k));
    let pair = |i: usize| ((i + 3) % 4, i);
    for i in 0..4 {
        let x = cell.corners[i];
        out.push(ContinuityConstraint {
            kind: ConstraintKind::CornerValue,
            triangles: pair(i),
            point: x,
            dirs: vec![],
            diagonal: Some(i),
        });
        for d in [[1.0, 0.0], [0.0, 1.0]] {
            out.push(ContinuityConstraint {
                kind: ConstraintKind::CornerGradient,
                triangles: pair(i),
                point: x,
                dirs: vec![d],
                diagonal: Some(i),
            });
        }
    }
    for i in 0..4 {
        for t in fractions(k - 2, k - 3) {
            out.push(ContinuityConstraint {
                kind: ConstraintKind::DiagonalValue,
                triangles: pair(i),
                point: geometry::lerp(cell.corners[i], x0, t),
                dirs: vec![],
                diagonal: Some(i),
            });
        }
    }
    for i in 0..4 {
        let nu = geometry::rot90(geometry::normalize(geometry::sub(x0, cell.corners[i])));
        let count = if i == SKIPPED_DIAGONAL { k - 3 } else { k - 2 };
        for t in fractions(k - 1, count) {
            out.push(ContinuityConstraint {
                kind: ConstraintKind::DiagonalNormal,
                triangles: pair(i),
                point: geometry::lerp(cell.corners[i], x0, t),
                dirs: vec![nu],
                diagonal: Some(i),
            });
        }
    }
    // Normals to the two diagonals x2x4 and x1x3 (one-based corner names).
    let n24 = geometry::rot90(geometry::normalize(geometry::sub(cell.corners[3], cell.corners[1])));
    let n13 = geometry::rot90(geometry::normalize(geometry::sub(cell.corners[2], cell.corners[0])));
    for t in 1..4 {
        out.push(ContinuityConstraint {
            kind: ConstraintKind::CenterValue,
            triangles: (0, t),
            point: x0,
            dirs: vec![],
            diagonal: None,
        });
    }
    for d in [n24, n13] {
        for t in 1..4 {
            out.push(ContinuityConstraint {
                kind: ConstraintKind::CenterGradient,
                triangles: (0, t),
                point: x0,
                dirs: vec![d],
                diagonal: None,
            });
        }
    }
    debug_assert_eq!(out.len(), constraint_count(k));
    Ok(out)
}

/// Nodal basis on one macro cell.
///
/// `pieces[m][t]` is basis function `m` restricted to sub-triangle `t`,
/// stored on the physical triangle. The basis is dual to the functionals
/// scaled by `dof_scale^order`.
#[derive(Debug, Clone)]
pub struct LocalBasis {
    pub degree: usize,
    pub cell: MacroCell,
    pub functionals: Vec<DofFunctional>,
    pub pieces: Vec<[TrianglePolynomial; 4]>,
    pub dof_scale: f64,
    /// Relative residual of the local solve after refinement.
    pub residual: f64,
    /// 1-norm condition estimate of the local system.
    pub condition: f64,
}

fn system_matrix(
    k: usize,
    cell: &MacroCell,
    functionals: &[DofFunctional],
    constraints: &[ContinuityConstraint],
) -> DMatrix<f64> {
    let m = poly::dim(k);
    let tris = cell.triangles();
    let rows = functionals.len() + constraints.len();
    let mut a = DMatrix::zeros(rows, 4 * m);
    for (r, f) in functionals.iter().enumerate() {
        let row = poly::functional_row(&tris[f.triangle], k, f.anchor, &f.directions());
        for (c, v) in row.into_iter().enumerate() {
            a[(r, f.triangle * m + c)] = v;
        }
    }
    for (r, con) in constraints.iter().enumerate() {
        let r = r + functionals.len();
        let (ta, tb) = con.triangles;
        let ra = poly::functional_row(&tris[ta], k, con.point, &con.dirs);
        let rb = poly::functional_row(&tris[tb], k, con.point, &con.dirs);
        for c in 0..m {
            a[(r, ta * m + c)] += ra[c];
            a[(r, tb * m + c)] -= rb[c];
        }
    }
    a
}

fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Solve `A X = [I; 0]`. Square systems use partial-pivot LU plus one
/// refinement step; non-square ones fall back to the SVD least-squares
/// solution (used only for diagnostic variants of the constraint set).
fn solve_dual(a: &DMatrix<f64>, n: usize) -> Result<(DMatrix<f64>, f64, f64)> {
    let rows = a.nrows();
    let mut rhs = DMatrix::zeros(rows, n);
    for i in 0..n {
        rhs[(i, i)] = 1.0;
    }
    if rows == a.ncols() {
        let lu = a.clone().lu();
        let inv = lu.try_inverse().ok_or(Error::SingularLocalSystem { condition: f64::INFINITY })?;
        let condition = norm1(a) * norm1(&inv);
        if !condition.is_finite() || condition > MAX_LOCAL_CONDITION {
            return Err(Error::SingularLocalSystem { condition });
        }
        let mut x = lu.solve(&rhs).ok_or(Error::SingularLocalSystem { condition })?;
        let r = &rhs - a * &x;
        if let Some(dx) = lu.solve(&r) {
            x += dx;
        }
        let res = (&rhs - a * &x).norm() / rhs.norm();
        Ok((x, res, condition))
    } else {
        let svd = a.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let x = svd
            .solve(&rhs, 1e-12 * smax)
            .map_err(|_| Error::SingularLocalSystem { condition: f64::INFINITY })?;
        let res = (&rhs - a * &x).norm() / rhs.norm();
        Ok((x, res, smax / smin))
    }
}

/// Nodal basis dual to functionals scaled by the cell diameter.
pub fn build_local_basis(k: usize, cell: &MacroCell) -> Result<LocalBasis> {
    build_local_basis_scaled(k, cell, cell.diameter)
}

/// Nodal basis dual to `dof_scale^order × F_m`.
pub fn build_local_basis_scaled(k: usize, cell: &MacroCell, dof_scale: f64) -> Result<LocalBasis> {
    build_local_basis_with(k, cell, dof_scale, |_| true)
}

/// As [`build_local_basis_scaled`], keeping only constraints accepted by `keep`.
pub fn build_local_basis_with(
    k: usize,
    cell: &MacroCell,
    dof_scale: f64,
    keep: impl Fn(&ContinuityConstraint) -> bool,
) -> Result<LocalBasis> {
    check_degree(k)?;
    // Assemble in the centroid-translated, diameter-scaled frame. Derivative
    // functionals there are the physical ones times h^order.
    let local = cell.to_local_frame();
    let functionals = dof_functionals(k, &local)?;
    let constraints: Vec<_> = continuity_constraints(k, &local)?.into_iter().filter(|c| keep(c)).collect();
    let a = system_matrix(k, &local, &functionals, &constraints);
    let n = functionals.len();
    let (x, residual, condition) = solve_dual(&a, n)?;

    let m = poly::dim(k);
    let tris = cell.triangles();
    let h = cell.diameter;
    let physical = dof_functionals(k, cell)?;
    let pieces = (0..n)
        .map(|col| {
            let factor = (h / dof_scale).powi(physical[col].order() as i32);
            [0, 1, 2, 3].map(|t| {
                let coeffs = (0..m).map(|c| x[(t * m + c, col)] * factor).collect();
                TrianglePolynomial::new(tris[t], k, coeffs)
            })
        })
        .collect();
    Ok(LocalBasis { degree: k, cell: cell.clone(), functionals: physical, pieces, dof_scale, residual, condition })
}

/// Directional derivative of `p` along `dirs` at `x`, computed by explicit
/// polynomial differentiation.
fn apply_dirs(p: &TrianglePolynomial, dirs: &[Point], x: Point) -> f64 {
    dirs.iter().fold(p.clone(), |q, d| q.derivative(*d)).evaluate(x)
}

impl LocalBasis {
    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// `dof_scale^order × F_m(pieces)`.
    pub fn apply_functional(&self, m: usize, pieces: &[TrianglePolynomial; 4]) -> f64 {
        let f = &self.functionals[m];
        self.dof_scale.powi(f.order() as i32) * apply_dirs(&pieces[f.triangle], &f.directions(), f.anchor)
    }

    /// Largest deviation of the scaled DOF matrix `F_m(φ_n)` from the identity.
    pub fn duality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for n in 0..self.len() {
            for m in 0..self.len() {
                let want = if m == n { 1.0 } else { 0.0 };
                worst = worst.max((self.apply_functional(m, &self.pieces[n]) - want).abs());
            }
        }
        worst
    }

    /// `Σ c_m φ_m`, piece by piece.
    pub fn combine(&self, coeffs: &[f64]) -> [TrianglePolynomial; 4] {
        assert_eq!(coeffs.len(), self.len());
        let tris = self.cell.triangles();
        [0, 1, 2, 3].map(|t| {
            let mut acc = vec![0.0; poly::dim(self.degree)];
            for (phi, &c) in self.pieces.iter().zip(coeffs) {
                if c != 0.0 {
                    for (a, b) in acc.iter_mut().zip(phi[t].coeffs()) {
                        *a += c * b;
                    }
                }
            }
            TrianglePolynomial::new(tris[t], self.degree, acc)
        })
    }

    /// Scaled DOF values of a function given on each sub-triangle.
    pub fn dof_values(&self, pieces: &[TrianglePolynomial; 4]) -> Vec<f64> {
        (0..self.len()).map(|m| self.apply_functional(m, pieces)).collect()
    }
}

/// Result of [`check_c1`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C1Report {
    pub max_value_jump: f64,
    pub max_gradient_jump: f64,
    /// Largest jump over all basis functions, relative to that function's magnitude.
    pub max_scaled_jump: f64,
    /// Largest scaled jump restricted to the diagonal with the skipped constraint.
    pub skipped_diagonal_jump: f64,
}

fn chebyshev(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| 0.5 * (1.0 - (std::f64::consts::PI * (j as f64 + 0.5) / n as f64).cos()))
        .collect()
}

/// Magnitude of `max(|p|, h |∇p|)` sampled over the cell.
fn magnitude(pieces: &[TrianglePolynomial; 4], h: f64) -> f64 {
    let mut m: f64 = 0.0;
    let grid = 8;
    for p in pieces {
        let tri = p.triangle();
        for i in 0..=grid {
            for j in 0..=grid - i {
                let b = [i as f64 / grid as f64, j as f64 / grid as f64, (grid - i - j) as f64 / grid as f64];
                let x = tri.point(b);
                let g = p.gradient_at(x);
                m = m.max(p.evaluate(x).abs()).max(h * geometry::norm(g));
            }
        }
    }
    m
}

/// Value and jump of `pieces` across the four diagonals at Chebyshev points.
pub fn c1_jumps(pieces: &[TrianglePolynomial; 4], cell: &MacroCell, samples: usize) -> [(f64, f64); 4] {
    let h = cell.diameter;
    let ts = chebyshev(samples);
    [0, 1, 2, 3].map(|i| {
        let (a, b) = ((i + 3) % 4, i);
        let mut jv: f64 = 0.0;
        let mut jg: f64 = 0.0;
        for &t in &ts {
            let x = geometry::lerp(cell.corners[i], cell.center, t);
            jv = jv.max((pieces[a].evaluate(x) - pieces[b].evaluate(x)).abs());
            let ga = pieces[a].gradient_at(x);
            let gb = pieces[b].gradient_at(x);
            jg = jg.max(h * geometry::dist(ga, gb));
        }
        (jv, jg)
    })
}

/// Sample value and gradient jumps across all diagonals for every basis function.
pub fn check_c1(basis: &LocalBasis, samples_per_edge: usize) -> C1Report {
    let mut rep = C1Report { max_value_jump: 0.0, max_gradient_jump: 0.0, max_scaled_jump: 0.0, skipped_diagonal_jump: 0.0 };
    let h = basis.cell.diameter;
    for phi in &basis.pieces {
        let mag = magnitude(phi, h).max(f64::MIN_POSITIVE);
        for (i, (jv, jg)) in c1_jumps(phi, &basis.cell, samples_per_edge).into_iter().enumerate() {
            rep.max_value_jump = rep.max_value_jump.max(jv);
            rep.max_gradient_jump = rep.max_gradient_jump.max(jg);
            let s = jv.max(jg) / mag;
            rep.max_scaled_jump = rep.max_scaled_jump.max(s);
            if i == SKIPPED_DIAGONAL {
                rep.skipped_diagonal_jump = rep.skipped_diagonal_jump.max(s);
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::split_macro;
    use crate::poly::Triangle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_square() -> MacroCell {
        split_macro([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    fn random_quad(rng: &mut ChaCha8Rng) -> MacroCell {
        loop {
            let base = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
            let q = base.map(|p| [p[0] + rng.random_range(-0.3..0.3), p[1] + rng.random_range(-0.3..0.3)]);
            if let Ok(c) = split_macro(q) {
                return c;
            }
        }
    }

    #[test]
    fn counting_identities() {
        assert_eq!([3, 4, 5, 6].map(dof_count), [16, 28, 44, 64]);
        let cell = unit_square();
        for k in 3..=8 {
            let f = dof_functionals(k, &cell).unwrap();
            let c = continuity_constraints(k, &cell).unwrap();
            assert_eq!(f.len(), 2 * k * k - 2 * k + 4);
            assert_eq!(c.len(), 8 * k);
            assert_eq!(f.len() + c.len(), 4 * poly::dim(k));
            assert_eq!(f.iter().filter(|d| matches!(d.owner, DofOwner::Vertex(_))).count(), 12);
            let e0: Vec<_> = f.iter().filter(|d| d.owner == DofOwner::Edge(0)).collect();
            assert_eq!(e0.iter().filter(|d| d.kind == DofKind::EdgeValue).count(), k - 3);
            assert_eq!(e0.iter().filter(|d| d.order() == 1).count(), k - 2);
            assert_eq!(e0.iter().filter(|d| d.order() >= 2).count(), higher_edge_dofs(k));
        }
        assert!(matches!(dof_functionals(2, &cell), Err(Error::UnsupportedDegree(2))));
    }

    #[test]
    fn edge_anchor_sets() {
        let cell = unit_square();
        let f = dof_functionals(5, &cell).unwrap();
        let xs = |pred: &dyn Fn(&DofFunctional) -> bool| -> Vec<f64> {
            f.iter().filter(|d| d.owner == DofOwner::Edge(0) && pred(d)).map(|d| d.anchor[0]).collect()
        };
        assert_eq!(xs(&|d| d.kind == DofKind::EdgeValue), vec![1.0 / 3.0, 2.0 / 3.0]);
        assert_eq!(xs(&|d| d.order() == 1), vec![0.25, 0.5, 0.75]);
        assert_eq!(xs(&|d| d.order() == 2), vec![1.0 / 3.0, 2.0 / 3.0]);
        assert_eq!(xs(&|d| d.order() == 3), vec![0.5]);
    }

    #[test]
    fn unit_square_k3_duality() {
        let b = build_local_basis(3, &unit_square()).unwrap();
        assert_eq!(b.len(), 16);
        assert!(b.residual < 1e-11, "{}", b.residual);
        assert!(b.duality_error() < 1e-11, "{}", b.duality_error());
    }

    #[test]
    fn random_quads_k5_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let cell = random_quad(&mut rng);
            let b = build_local_basis(5, &cell).unwrap();
            assert!(b.condition.is_finite());
            assert!(b.residual < 1e-10);
        }
    }

    #[test]
    fn duality_on_random_quads() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for k in 3..=5 {
            for _ in 0..20 {
                let b = build_local_basis(k, &random_quad(&mut rng)).unwrap();
                assert!(b.duality_error() < 1e-10, "k={k}: {}", b.duality_error());
            }
        }
    }

    #[test]
    fn degenerate_quad_is_rank_deficient() {
        // x2, x3, x4 almost collinear: passes the convexity tolerance but
        // the diagonal split degenerates.
        let quad = [[0.0, 0.0], [1.0, 0.0], [0.5, 0.5 + 1e-9], [0.0, 1.0]];
        let cell = MacroCell::with_ids(quad, [0, 1, 2, 3]).unwrap();
        let err = build_local_basis(4, &cell).unwrap_err();
        assert!(matches!(err, Error::SingularLocalSystem { .. }), "{err:?}");
    }

    #[test]
    fn basis_is_c1_across_diagonals() {
        let cell = unit_square();
        for k in 3..=5 {
            let b = build_local_basis(k, &cell).unwrap();
            let rep = check_c1(&b, 20);
            assert!(rep.max_scaled_jump < 1e-9, "k={k}: {rep:?}");
        }
    }

    #[test]
    fn dropping_center_gradients_breaks_c1() {
        let cell = unit_square();
        let b = build_local_basis_with(4, &cell, 1.0, |c| c.kind != ConstraintKind::CenterGradient).unwrap();
        assert!(check_c1(&b, 20).max_scaled_jump > 1e-3);
    }

    #[test]
    fn constant_one_has_no_jump() {
        let cell = unit_square();
        let b = build_local_basis(3, &cell).unwrap();
        let mut c = vec![0.0; b.len()];
        for i in 0..4 {
            c[3 * i] = 1.0;
        }
        let one = b.combine(&c);
        let jumps = c1_jumps(&one, &cell, 20);
        assert!(jumps.iter().all(|&(v, g)| v < 1e-14 && g < 1e-13), "{jumps:?}");
        for p in &one {
            assert!((p.evaluate(p.triangle().centroid()) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn reproduces_global_polynomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for k in 3..=5 {
            let cell = random_quad(&mut rng);
            let b = build_local_basis(k, &cell).unwrap();
            let coeffs = (0..poly::dim(k)).map(|_| rng.random_range(-1.0..1.0)).collect();
            let q = TrianglePolynomial::new(Triangle::reference(), k, coeffs);
            // q is defined everywhere, so every piece reads it directly.
            let q4 = [q.clone(), q.clone(), q.clone(), q.clone()];
            let vals = b.dof_values(&q4);
            let rec = b.combine(&vals);
            for (t, p) in rec.iter().enumerate() {
                for bary in [[0.2, 0.3, 0.5], [0.6, 0.2, 0.2], [0.1, 0.1, 0.8]] {
                    let x = cell.triangle(t).point(bary);
                    let want = q.evaluate(x);
                    assert!((p.evaluate(x) - want).abs() <= 1e-10 * want.abs().max(1.0));
                }
            }
        }
    }
}
