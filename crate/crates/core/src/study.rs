//! Manufactured interface solution, error norms and convergence studies.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use crate::assembly::{build_system, CoefficientField, Form};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::generate_fvs_grid;
use crate::poly::{bernstein_values, quadrature};
use crate::space::{apply_clamped_bc, Discretization, Family, SmoothFunction};
use crate::sparse::SolveInfo;

/// Default quadrature degree for error norms.
pub const ERROR_QUADRATURE: usize = 30;

/// Dense monomial polynomial in one variable, lowest degree first.
#[derive(Debug, Clone, PartialEq)]
struct Poly1(Vec<f64>);

impl Poly1 {
    fn linear(c0: f64, c1: f64) -> Self {
        Poly1(vec![c0, c1])
    }

    fn mul(&self, o: &Self) -> Self {
        let mut c = vec![0.0; self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly1(c)
    }

    fn pow(&self, n: usize) -> Self {
        (0..n).fold(Poly1(vec![1.0]), |acc, _| acc.mul(self))
    }

    fn derivative(&self) -> Self {
        if self.0.len() <= 1 {
            return Poly1(vec![0.0]);
        }
        Poly1(self.0.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect())
    }

    fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// All derivatives `p, p', p'', …` down to the zero polynomial.
    fn derivatives(self) -> Vec<Self> {
        let mut out = vec![self];
        while out.last().unwrap().0.len() > 1 {
            let d = out.last().unwrap().derivative();
            out.push(d);
        }
        out.push(Poly1(vec![0.0]));
        out
    }
}

/// `u = −μ₀ X_L(x) Y(y)` for `x ≤ 1/2` and `u = X_R(x) Y(y)` beyond, with
/// `X_L = x²(4x−3)(2x−1)²`, `X_R = (x−1)²(4x−1)(2x−1)²`, `Y = y⁴(y−1)⁴`.
#[derive(Debug, Clone)]
pub struct ManufacturedSolution {
    pub mu0: f64,
    left: Vec<Poly1>,
    right: Vec<Poly1>,
    y: Vec<Poly1>,
}

fn nth(d: &[Poly1], n: usize) -> &Poly1 {
    &d[n.min(d.len() - 1)]
}

impl ManufacturedSolution {
    pub fn new(mu0: f64) -> Self {
        let x = Poly1::linear(0.0, 1.0);
        let bump = Poly1::linear(-1.0, 2.0).pow(2);
        let left = x.pow(2).mul(&Poly1::linear(-3.0, 4.0)).mul(&bump);
        let right = Poly1::linear(-1.0, 1.0).pow(2).mul(&Poly1::linear(-1.0, 4.0)).mul(&bump);
        let y = x.pow(4).mul(&Poly1::linear(-1.0, 1.0).pow(4));
        Self { mu0, left: left.derivatives(), right: right.derivatives(), y: y.derivatives() }
    }

    /// Partial derivative of the left (`on_left`) or right closed form.
    pub fn branch(&self, on_left: bool, p: Point, nx: usize, ny: usize) -> f64 {
        let yv = nth(&self.y, ny).eval(p[1]);
        if on_left {
            -self.mu0 * nth(&self.left, nx).eval(p[0]) * yv
        } else {
            nth(&self.right, nx).eval(p[0]) * yv
        }
    }

    pub fn value(&self, p: Point) -> f64 {
        SmoothFunction::partial(self, p, 0, 0)
    }

    pub fn gradient(&self, p: Point) -> Point {
        [SmoothFunction::partial(self, p, 1, 0), SmoothFunction::partial(self, p, 0, 1)]
    }

    pub fn hessian(&self, p: Point) -> [[f64; 2]; 2] {
        let xy = SmoothFunction::partial(self, p, 1, 1);
        [[SmoothFunction::partial(self, p, 2, 0), xy], [xy, SmoothFunction::partial(self, p, 0, 2)]]
    }
}

impl SmoothFunction for ManufacturedSolution {
    fn partial(&self, p: Point, nx: usize, ny: usize) -> f64 {
        self.branch(p[0] <= 0.5, p, nx, ny)
    }

    fn partial_near(&self, p: Point, toward: Point, nx: usize, ny: usize) -> f64 {
        let left = if p[0] == 0.5 { toward[0] <= 0.5 } else { p[0] < 0.5 };
        self.branch(left, p, nx, ny)
    }
}

/// `‖u − u_h‖₀`, `|u − u_h|₁` and `|u − u_h|ₐ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Errors {
    pub l2: f64,
    pub h1: f64,
    pub energy: f64,
}

impl Errors {
    pub fn as_array(&self) -> [f64; 3] {
        [self.l2, self.h1, self.energy]
    }
}

/// Error norms of the FE function `coeffs` against `exact`, integrated per
/// sub-triangle with a rule of degree `degree`.
pub fn compute_errors<F: SmoothFunction + ?Sized>(
    disc: &Discretization,
    coeffs: &[f64],
    exact: &F,
    mu: &CoefficientField,
    degree: usize,
) -> Result<Errors> {
    let k = disc.degree();
    let mus = mu.validate(&disc.mesh)?;
    let rule = quadrature(degree);
    let tables: Vec<[Vec<f64>; 3]> =
        rule.points.iter().map(|&b| [bernstein_values(k, b), bernstein_values(k - 1, b), bernstein_values(k - 2, b)]).collect();
    let dot = |c: &[f64], b: &[f64]| c.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let (mut l2, mut h1, mut en) = (0.0, 0.0, 0.0);
    for (q, m) in mus.iter().enumerate() {
        let pieces = disc.pieces(q, coeffs);
        for (t, piece) in pieces.iter().enumerate() {
            let tri = *piece.triangle();
            let hint = tri.centroid();
            let parts = [
                piece.partial(1, 0),
                piece.partial(0, 1),
                piece.partial(2, 0),
                piece.partial(1, 1),
                piece.partial(0, 2),
            ];
            let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
            for (&bary, (w, tb)) in rule.points.iter().zip(rule.weights.iter().zip(&tables)) {
                let p = tri.point(bary);
                let e = |nx, ny| exact.partial_near(p, hint, nx, ny);
                let v = dot(piece.coeffs(), &tb[0]) - e(0, 0);
                let gx = dot(parts[0].coeffs(), &tb[1]) - e(1, 0);
                let gy = dot(parts[1].coeffs(), &tb[1]) - e(0, 1);
                let hxx = dot(parts[2].coeffs(), &tb[2]) - e(2, 0);
                let hxy = dot(parts[3].coeffs(), &tb[2]) - e(1, 1);
                let hyy = dot(parts[4].coeffs(), &tb[2]) - e(0, 2);
                a += w * v * v;
                b += w * (gx * gx + gy * gy);
                c += w * (hxx * hxx + 2.0 * hxy * hxy + hyy * hyy);
            }
            let area = tri.area();
            l2 += area * a;
            h1 += area * b;
            en += m[t] * area * c;
        }
    }
    Ok(Errors { l2: l2.sqrt(), h1: h1.sqrt(), energy: en.sqrt() })
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub k: usize,
    pub family: Family,
    pub mu0: f64,
    pub grids: RangeInclusive<usize>,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub level: usize,
    pub quads: usize,
    pub free_dofs: usize,
    pub errors: Errors,
    /// `log₂(e_{ℓ−1}/e_ℓ)` per norm; absent on the first level of a run.
    pub orders: Option<[f64; 3]>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub k: usize,
    pub family: Family,
    pub mu0: f64,
    pub rows: Vec<ErrorRow>,
}

pub fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Discrete solution on one grid level.
pub struct LevelSolution {
    pub disc: Discretization,
    pub coeffs: Vec<f64>,
    pub free_dofs: usize,
    pub info: SolveInfo,
}

/// Solve the clamped interface problem with the manufactured load on `disc`.
pub fn solve_manufactured(disc: Discretization, mu0: f64) -> Result<LevelSolution> {
    let exact = ManufacturedSolution::new(mu0);
    let mu = CoefficientField::interface(mu0);
    let partition = apply_clamped_bc(&disc.table);
    let free_dofs = partition.free.len();
    let system = build_system(&disc, partition, &exact, &mu, Form::Hessian)?;
    let (coeffs, info) = crate::assembly::solve(&system)?;
    Ok(LevelSolution { disc, coeffs, free_dofs, info })
}

pub fn run_study(config: &StudyConfig) -> Result<ErrorReport> {
    if config.grids.is_empty() || *config.grids.start() == 0 {
        return Err(Error::InvalidArgument(format!("invalid grid range {:?}", config.grids)));
    }
    let exact = ManufacturedSolution::new(config.mu0);
    let mu = CoefficientField::interface(config.mu0);
    let mut rows: Vec<ErrorRow> = Vec::new();
    for level in config.grids.clone() {
        let mesh = generate_fvs_grid(level, config.alpha)?;
        let quads = mesh.quads().len();
        let disc = Discretization::new(mesh, config.k, config.family)?;
        let sol = solve_manufactured(disc, config.mu0)?;
        let errors = compute_errors(&sol.disc, &sol.coeffs, &exact, &mu, ERROR_QUADRATURE)?;
        let orders = rows.last().map(|prev| {
            let (p, c) = (prev.errors.as_array(), errors.as_array());
            [order(p[0], c[0]), order(p[1], c[1]), order(p[2], c[2])]
        });
        rows.push(ErrorRow { level, quads, free_dofs: sol.free_dofs, errors, orders, residual: sol.info.relative_residual });
    }
    Ok(ErrorReport { k: config.k, family: config.family, mu0: config.mu0, rows })
}

/// Scientific notation with a three-digit mantissa in `[0.1, 1)`, e.g. `0.466E-6`.
pub fn format_sci(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let mut e = v.abs().log10().floor() as i32 + 1;
    let mut m = v / 10f64.powi(e);
    if (m.abs() * 1000.0).round() >= 1000.0 {
        e += 1;
        m = v / 10f64.powi(e);
    }
    format!("{m:.3}E{e}")
}

impl ErrorReport {
    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "C1-P{} {} family, mu0 = {}", self.k, self.family, self.mu0);
        s.push('\n');
        s.push_str("| grid | free DOFs | ‖u−u_h‖₀ | O(h^r) | |u−u_h|₁ | O(h^r) | |u−u_h|ₐ | O(h^r) |\n");
        s.push_str("|---:|---:|---:|---:|---:|---:|---:|---:|\n");
        for r in &self.rows {
            let e = r.errors.as_array();
            let o = |i: usize| r.orders.map_or("---".to_string(), |o| format!("{:.1}", o[i]));
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} | {} | {} |",
                r.level,
                r.free_dofs,
                format_sci(e[0]),
                o(0),
                format_sci(e[1]),
                o(1),
                format_sci(e[2]),
                o(2)
            );
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,quads,free_dofs,l2,l2_order,h1,h1_order,energy,energy_order,residual\n");
        for r in &self.rows {
            let e = r.errors.as_array();
            let o = |i: usize| r.orders.map_or(String::new(), |o| format!("{:e}", o[i]));
            let _ = writeln!(
                s,
                "{},{},{},{:e},{},{:e},{},{:e},{},{:e}",
                r.level,
                r.quads,
                r.free_dofs,
                e[0],
                o(0),
                e[1],
                o(1),
                e[2],
                o(2),
                r.residual
            );
        }
        s
    }

    pub fn final_orders(&self) -> Option<[f64; 3]> {
        self.rows.last().and_then(|r| r.orders)
    }
}

/// One row per global DOF: index, kind, owner, anchor and value in
/// physical (unscaled) units.
pub fn solution_csv(disc: &Discretization, coeffs: &[f64]) -> String {
    let mut s = String::from("dof,kind,order,owner,x,y,value\n");
    for (i, (d, v)) in disc.table.dofs.iter().zip(disc.unscaled(coeffs)).enumerate() {
        let kind = match d.kind {
            crate::element::DofKind::VertexValue => "value".to_string(),
            crate::element::DofKind::VertexDx => "dx".to_string(),
            crate::element::DofKind::VertexDy => "dy".to_string(),
            crate::element::DofKind::EdgeValue => "edge_value".to_string(),
            crate::element::DofKind::EdgeNormal { order, .. } => format!("normal{order}"),
        };
        let owner = match d.owner {
            crate::space::GlobalOwner::Vertex(v) => format!("vertex:{v}"),
            crate::space::GlobalOwner::Edge(e) => format!("edge:{e}"),
            crate::space::GlobalOwner::QuadEdge { quad, edge } => format!("quad:{quad}:{edge}"),
        };
        let _ = writeln!(s, "{i},{kind},{},{owner},{:e},{:e},{v:e}", d.order(), d.anchor[0], d.anchor[1]);
    }
    s
}
