//! Numerical checks of the split-triangle vanishing lemma and unisolvency
//! sweeps over random convex quadrilaterals.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::element::{build_local_basis, check_c1};
use crate::error::{Error, Result};
use crate::geometry::{self, Point};
use crate::mesh::{split_macro, MacroCell};
use crate::poly::{dim, functional_row, Triangle, TrianglePolynomial};

/// Triangle `x₁x₂x₄` split by the segment `x₁x₀`, `x₀` inside `x₂x₄`, into
/// `T₁ = x₁x₂x₀` and `T₄ = x₁x₀x₄`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitTriangleConfig {
    pub x1: Point,
    pub x2: Point,
    pub x4: Point,
    pub x0: Point,
    pub k: usize,
    /// `p₁` and `p₄` vanish to order `m + 1` on their outer edges.
    pub m: usize,
}

impl SplitTriangleConfig {
    pub fn new(x1: Point, x2: Point, x4: Point, x0: Point, k: usize, m: usize) -> Result<Self> {
        if k < 3 || m == 0 || m + 2 > k {
            return Err(Error::InvalidArgument(format!("need 0 < m <= k - 2 and k >= 3, got k = {k}, m = {m}")));
        }
        let c = Self { x1, x2, x4, x0, k, m };
        let scale = geometry::dist(x2, x4).powi(2);
        let on_edge = geometry::orient(x2, x0, x4).abs() <= 1e-12 * scale;
        let t = geometry::dot(geometry::sub(x0, x2), geometry::sub(x4, x2)) / geometry::dist(x2, x4).powi(2);
        if !on_edge || t <= 0.0 || t >= 1.0 || c.t1().signed_area() <= 0.0 || c.t4().signed_area() <= 0.0 {
            return Err(Error::InvalidArgument("x0 must lie strictly inside x2x4 with positively oriented halves".into()));
        }
        Ok(c)
    }

    /// Random configuration: `x₀` on a random chord through a scaled,
    /// rotated and translated copy of the reference picture.
    pub fn random(k: usize, m: usize, rng: &mut impl Rng) -> Result<Self> {
        let len = rng.random_range(0.5..1.5);
        let phi = rng.random_range(0.35..2.8f64);
        let d = [phi.cos(), phi.sin()];
        let x0 = [len, 0.0];
        let x4 = geometry::add(x0, geometry::scale(d, rng.random_range(0.3..1.5)));
        let x2 = geometry::sub(x0, geometry::scale(d, rng.random_range(0.3..1.5)));
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let s = rng.random_range(0.2..3.0);
        let shift = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let map = |p: Point| {
            let r = [theta.cos() * p[0] - theta.sin() * p[1], theta.sin() * p[0] + theta.cos() * p[1]];
            geometry::add(geometry::scale(r, s), shift)
        };
        let (x1, x2, x4, x0) = (map([0.0, 0.0]), map(x2), map(x4), map(x0));
        // Recompute x0 on the mapped chord so it lies on x2x4 to rounding.
        let t = geometry::dist(x2, x0) / geometry::dist(x2, x4);
        Self::new(x1, x2, x4, geometry::lerp(x2, x4, t), k, m)
    }

    pub fn t1(&self) -> Triangle {
        Triangle::new(self.x1, self.x2, self.x0)
    }

    pub fn t4(&self) -> Triangle {
        Triangle::new(self.x1, self.x0, self.x4)
    }

    pub fn diameter(&self) -> f64 {
        [geometry::dist(self.x1, self.x2), geometry::dist(self.x1, self.x4), geometry::dist(self.x2, self.x4)]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

fn unit_normal(a: Point, b: Point) -> Point {
    geometry::rot90(geometry::normalize(geometry::sub(b, a)))
}

/// Equidistant points on `[a, b]` including both ends.
fn points_on(a: Point, b: Point, count: usize) -> Vec<Point> {
    (0..count).map(|j| geometry::lerp(a, b, j as f64 / (count - 1).max(1) as f64)).collect()
}

/// Collocation matrix of the lemma's hypotheses; unknowns are the Bernstein
/// coefficients of `p₁` followed by those of `p₄`.
pub fn split_triangle_system(c: &SplitTriangleConfig) -> DMatrix<f64> {
    let (k, n) = (c.k, dim(c.k));
    let (t1, t4) = (c.t1(), c.t4());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut push = |r1: Option<Vec<f64>>, r4: Option<Vec<f64>>| {
        let mut row = vec![0.0; 2 * n];
        if let Some(r) = r1 {
            row[..n].copy_from_slice(&r);
        }
        if let Some(r) = r4 {
            for (x, y) in row[n..].iter_mut().zip(r) {
                *x -= y;
            }
        }
        // Derivative rows grow like (k / h)^i; balance them.
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        rows.push(row.into_iter().map(|x| x / norm).collect());
    };
    let (n12, n14, n10) = (unit_normal(c.x1, c.x2), unit_normal(c.x1, c.x4), unit_normal(c.x1, c.x0));
    for i in 0..=c.m {
        for p in points_on(c.x1, c.x2, k - i + 1) {
            push(Some(functional_row(&t1, k, p, &vec![n12; i])), None);
        }
        for p in points_on(c.x1, c.x4, k - i + 1) {
            push(None, Some(functional_row(&t4, k, p, &vec![n14; i])));
        }
    }
    for i in 0..=1 {
        for p in points_on(c.x1, c.x0, k - i + 1) {
            let dirs = vec![n10; i];
            push(Some(functional_row(&t1, k, p, &dirs)), Some(functional_row(&t4, k, p, &dirs)));
        }
    }
    DMatrix::from_fn(rows.len(), 2 * n, |i, j| rows[i][j])
}

/// Orthonormal basis of the pairs `(p₁, p₄)` satisfying the hypotheses,
/// from right singular vectors with `σ < 1e−10 σ_max`.
pub fn split_triangle_nullspace(c: &SplitTriangleConfig) -> Vec<(TrianglePolynomial, TrianglePolynomial)> {
    let a = split_triangle_system(c);
    let cols = a.ncols();
    let a = if a.nrows() < cols { a.resize_vertically(cols, 0.0) } else { a };
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.max();
    let n = dim(c.k);
    (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] < 1e-10 * smax)
        .map(|i| {
            let v: Vec<f64> = vt.row(i).iter().copied().collect();
            (TrianglePolynomial::new(c.t1(), c.k, v[..n].to_vec()), TrianglePolynomial::new(c.t4(), c.k, v[n..].to_vec()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitTriangleReport {
    pub k: usize,
    pub m: usize,
    pub configs: usize,
    pub min_nullity: usize,
    pub max_nullity: usize,
    /// Largest scaled `∂^{m+1}` along `x₁x₀` of `p₁` at `x₁`.
    pub max_violation: f64,
    /// Smallest (over configs) largest scaled `∂^{m+2}` at `x₁`; should be
    /// clearly nonzero.
    pub min_control: f64,
    /// Largest scaled `∂^{m+1}` at `x₀`, recorded only.
    pub max_at_x0: f64,
}

impl SplitTriangleReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_violation < tol
    }
}

/// `|F(p₁)| / (‖F‖ ‖(p₁, p₄)‖)` for the `order`-fold derivative `F` along
/// `x₁x₀` at `at`, norms taken on Bernstein coefficients.
fn scaled_tangential(p1: &TrianglePolynomial, size: f64, c: &SplitTriangleConfig, at: Point, order: usize) -> f64 {
    let t = geometry::normalize(geometry::sub(c.x0, c.x1));
    let row = functional_row(p1.triangle(), c.k, at, &vec![t; order]);
    let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
    let value: f64 = row.iter().zip(p1.coeffs()).map(|(r, v)| r * v).sum();
    value.abs() / (norm * size)
}

/// Check the lemma on `trials` random configurations.
pub fn split_triangle_check(k: usize, m: usize, trials: usize, seed: u64) -> Result<SplitTriangleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((k as u64) << 32) ^ ((m as u64) << 40));
    let mut r = SplitTriangleReport {
        k,
        m,
        configs: trials,
        min_nullity: usize::MAX,
        max_nullity: 0,
        max_violation: 0.0,
        min_control: f64::INFINITY,
        max_at_x0: 0.0,
    };
    for _ in 0..trials {
        let c = SplitTriangleConfig::random(k, m, &mut rng)?;
        let null = split_triangle_nullspace(&c);
        r.min_nullity = r.min_nullity.min(null.len());
        r.max_nullity = r.max_nullity.max(null.len());
        let mut control: f64 = 0.0;
        for (p1, p4) in &null {
            let size = p1.coeffs().iter().chain(p4.coeffs()).map(|x| x * x).sum::<f64>().sqrt();
            r.max_violation = r.max_violation.max(scaled_tangential(p1, size, &c, c.x1, m + 1));
            r.max_at_x0 = r.max_at_x0.max(scaled_tangential(p1, size, &c, c.x0, m + 1));
            control = control.max(scaled_tangential(p1, size, &c, c.x1, m + 2));
        }
        r.min_control = r.min_control.min(control);
    }
    Ok(r)
}

/// The 2×2 matching system for `p₁ = c(y + a₁x)^{m+1}`, `p₄ = d(y − a₂x)^{m+1}`
/// across `y = 0`: value and `∂y` at `(1, 0)`.
pub fn pure_power_system(a1: f64, a2: f64, m: usize) -> [[f64; 2]; 2] {
    let tri = Triangle::reference();
    let line = |a: f64| {
        let x = TrianglePolynomial::coordinate(tri, 0).scaled(a);
        let y = TrianglePolynomial::coordinate(tri, 1);
        let l = y.add(&x);
        (0..m).fold(l.clone(), |acc, _| acc.mul(&l))
    };
    let (p1, p4) = (line(a1), line(-a2));
    let at = [1.0, 0.0];
    [
        [p1.evaluate(at), -p4.evaluate(at)],
        [p1.gradient_at(at)[1], -p4.gradient_at(at)[1]],
    ]
}

/// Largest allowed `diameter² / area`.
pub const MAX_ASPECT: f64 = 20.0;
/// Smallest allowed corner turn `cross / diameter²`; screens out squashed
/// corners before they reach the element.
pub const MIN_CORNER_QUALITY: f64 = 1e-3;

/// Admissible sweep input: strictly convex with a quality margin and
/// bounded aspect ratio.
pub fn admissible_quad(q: [Point; 4]) -> Option<MacroCell> {
    let cell = split_macro(q).ok()?;
    let d2 = cell.diameter.powi(2);
    let turn = (0..4).map(|i| geometry::orient(q[i], q[(i + 1) % 4], q[(i + 2) % 4])).fold(f64::INFINITY, f64::min);
    (turn / d2 >= MIN_CORNER_QUALITY && d2 / cell.area() <= MAX_ASPECT).then_some(cell)
}

/// Unit square with each corner moved uniformly within radius 0.3;
/// resampled until admissible. Returns the quad and the number rejected.
pub fn random_quad(rng: &mut impl Rng) -> (MacroCell, usize) {
    let mut rejected = 0;
    loop {
        let q = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]].map(|p: Point| {
            let r = 0.3 * rng.random_range(0.0f64..1.0).sqrt();
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            [p[0] + r * t.cos(), p[1] + r * t.sin()]
        });
        match admissible_quad(q) {
            Some(c) => return (c, rejected),
            None => rejected += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepStats {
    pub k: usize,
    pub trials: usize,
    pub rejected_samples: usize,
    /// `(trial, corners, message)` per failure.
    pub failures: Vec<(usize, [Point; 4], String)>,
    pub min_condition: f64,
    pub median_condition: f64,
    pub max_condition: f64,
    pub max_residual: f64,
    pub max_duality_error: f64,
    pub max_c1_jump: f64,
    pub max_skipped_jump: f64,
}

/// Build the local basis on `trials` random quads and collect diagnostics.
pub fn unisolvency_sweep(k: usize, trials: usize, seed: u64) -> SweepStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((k as u64) << 32));
    let mut conds = Vec::with_capacity(trials);
    let mut s = SweepStats {
        k,
        trials,
        rejected_samples: 0,
        failures: Vec::new(),
        min_condition: f64::INFINITY,
        median_condition: f64::NAN,
        max_condition: 0.0,
        max_residual: 0.0,
        max_duality_error: 0.0,
        max_c1_jump: 0.0,
        max_skipped_jump: 0.0,
    };
    for trial in 0..trials {
        let (cell, rejected) = random_quad(&mut rng);
        s.rejected_samples += rejected;
        match build_local_basis(k, &cell) {
            Ok(b) => {
                conds.push(b.condition);
                s.max_residual = s.max_residual.max(b.residual);
                s.max_duality_error = s.max_duality_error.max(b.duality_error());
                let c1 = check_c1(&b, 12);
                s.max_c1_jump = s.max_c1_jump.max(c1.max_scaled_jump);
                s.max_skipped_jump = s.max_skipped_jump.max(c1.skipped_diagonal_jump);
            }
            Err(e) => s.failures.push((trial, cell.corners, e.to_string())),
        }
    }
    conds.sort_by(f64::total_cmp);
    if !conds.is_empty() {
        s.min_condition = conds[0];
        s.max_condition = conds[conds.len() - 1];
        s.median_condition = conds[conds.len() / 2];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Monomial coefficients `c[i][j]` of `x^i y^j`.
    type Mono = Vec<Vec<f64>>;

    fn mono_mul(a: &Mono, b: &Mono) -> Mono {
        let mut c = vec![vec![0.0; a[0].len() + b[0].len() - 1]; a.len() + b.len() - 1];
        for (i, ra) in a.iter().enumerate() {
            for (j, va) in ra.iter().enumerate() {
                for (p, rb) in b.iter().enumerate() {
                    for (q, vb) in rb.iter().enumerate() {
                        c[i + p][j + q] += va * vb;
                    }
                }
            }
        }
        c
    }

    /// Null-space dimension from coefficient algebra in the canonical frame
    /// (x₁ at the origin, x₀ on the positive x-axis): `pᵢ = ℓᵢ^{m+1} qᵢ`,
    /// then match `p(x, 0)` and `∂y p(x, 0)` coefficient by coefficient.
    fn nullity_oracle(x2: Point, x4: Point, k: usize, m: usize) -> usize {
        let line = |v: Point| -> Mono { vec![vec![0.0, v[0]], vec![-v[1], 0.0]] };
        let power = |l: Mono| (0..m).fold(l.clone(), |acc, _| mono_mul(&acc, &l));
        let (l2, l4) = (power(line(x2)), power(line(x4)));
        let free = k - m - 1;
        let monos: Vec<(usize, usize)> = (0..=free).flat_map(|i| (0..=free - i).map(move |j| (i, j))).collect();
        let mut cols = Vec::new();
        for (l, sign) in [(&l2, 1.0), (&l4, -1.0)] {
            for &(i, j) in &monos {
                let mut q = vec![vec![0.0; j + 1]; i + 1];
                q[i][j] = sign;
                let p = mono_mul(l, &q);
                let mut col = vec![0.0; 2 * k + 1];
                for (a, row) in p.iter().enumerate() {
                    if let Some(v) = row.first() {
                        col[a] += v;
                    }
                    if let (Some(v), true) = (row.get(1), a < k) {
                        col[k + 1 + a] += v;
                    }
                }
                cols.push(col);
            }
        }
        let a = DMatrix::from_fn(2 * k + 1, cols.len(), |i, j| cols[j][i]);
        cols.len() - a.rank(1e-10 * a.abs().max())
    }

    #[test]
    fn nullspace_dimension_matches_coefficient_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 3..=6 {
            for m in 1..=k - 2 {
                for _ in 0..5 {
                    let c = SplitTriangleConfig::random(k, m, &mut rng).unwrap();
                    // Canonical frame for the oracle.
                    let t = geometry::normalize(geometry::sub(c.x0, c.x1));
                    let to = |p: Point| {
                        let d = geometry::sub(p, c.x1);
                        [geometry::dot(d, t), geometry::cross(t, d)]
                    };
                    let want = nullity_oracle(to(c.x2), to(c.x4), k, m);
                    assert_eq!(split_triangle_nullspace(&c).len(), want, "k={k} m={m}");
                }
            }
        }
    }

    #[test]
    fn k3_m1_members_satisfy_hypotheses() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let c = SplitTriangleConfig::random(3, 1, &mut rng).unwrap();
        let null = split_triangle_nullspace(&c);
        assert!(!null.is_empty());
        let n12 = unit_normal(c.x1, c.x2);
        for (p1, p4) in &null {
            for s in 0..=10 {
                let p = geometry::lerp(c.x1, c.x2, s as f64 / 10.0);
                assert!(p1.evaluate(p).abs() < 1e-12);
                assert!(p1.directional_at(p, &[n12]).abs() < 1e-11);
                let q = geometry::lerp(c.x1, c.x0, s as f64 / 10.0);
                assert!((p1.evaluate(q) - p4.evaluate(q)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn out_of_range_order_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(SplitTriangleConfig::random(4, 3, &mut rng).is_err());
        assert!(SplitTriangleConfig::random(4, 0, &mut rng).is_err());
        assert!(SplitTriangleConfig::new([0.0, 0.0], [1.0, -1.0], [1.0, 1.0], [1.0, 0.5], 4, 1).is_ok());
        assert!(SplitTriangleConfig::new([0.0, 0.0], [1.0, -1.0], [1.0, 1.0], [0.9, 0.0], 4, 1).is_err());
    }

    #[test]
    fn pure_powers_are_forced_to_zero() {
        for m in 1..=4 {
            for (a1, a2) in [(1.0, 1.0), (0.3, 2.0), (1.7, 0.4)] {
                let s = pure_power_system(a1, a2, m);
                let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
                let mf = (m + 1) as f64;
                let want = -mf * a1.powi(m as i32) * (-a2).powi(m as i32) * (a1 + a2);
                assert!((det - want).abs() < 1e-12 * want.abs(), "m={m}: {det} vs {want}");
                assert!(det.abs() > 1e-6);
            }
        }
    }

    #[test]
    fn lemma_holds_with_power() {
        for (k, m) in [(4, 1), (5, 2)] {
            let r = split_triangle_check(k, m, 50, 7).unwrap();
            assert!(r.min_nullity > 0);
            assert!(r.passed(1e-9), "{r:?}");
            assert!(r.min_control > 1e-3, "{r:?}");
        }
    }

    #[test]
    fn sweep_k3() {
        let s = unisolvency_sweep(3, 200, 42);
        assert!(s.failures.is_empty());
        assert!(s.max_condition.is_finite() && s.max_condition < 1e13);
        assert!(s.max_duality_error < 1e-10 && s.max_c1_jump < 1e-9);
    }

    #[test]
    fn degenerate_quad_is_filtered() {
        // Sliver corner: triangle x1x2x3 has area ratio 1e-10 to the quad.
        let q = [[0.0, 0.0], [0.5, -1e-10], [1.0, 0.0], [0.5, 1.0]];
        assert!(admissible_quad(q).is_none());
        assert!(admissible_quad([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).is_some());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let (c, _) = random_quad(&mut rng);
            assert!(geometry::dist(c.corners[0], [0.0, 0.0]) <= 0.3 + 1e-12);
        }
    }
}
