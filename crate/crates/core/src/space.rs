//! Global DOF numbering for the two C¹ families and clamped boundary data.
//!
//! Numbering is vertex DOFs first (value, `∂x`, `∂y` per vertex), then edge
//! blocks in edge-table order, then per-quad copies of the higher-order edge
//! DOFs (full family only). Within an edge block DOFs follow the element's
//! edge-local order, so the two quads meeting at an edge agree on it without
//! any permutation or sign change.

use crate::element::{self, build_local_basis_scaled, DofKind, DofOwner, LocalBasis};
use crate::error::Result;
use crate::geometry::Point;
use crate::mesh::QuadMesh;
use crate::poly::TrianglePolynomial;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Full C¹-Pₖ macro space: higher normal derivatives kept per quad.
    Full,
    /// Higher normal-derivative DOFs shared by neighbouring quads.
    Condensed,
}

impl std::str::FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full" | "1" => Ok(Family::Full),
            "condensed" | "2" => Ok(Family::Condensed),
            _ => Err(format!("unknown family {s:?} (expected full or condensed)")),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Full => "full",
            Family::Condensed => "condensed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlobalOwner {
    Vertex(usize),
    Edge(usize),
    /// Copy private to one quad's local edge.
    QuadEdge { quad: usize, edge: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalDof {
    pub kind: DofKind,
    pub owner: GlobalOwner,
    pub anchor: Point,
    /// A quad containing the anchor, used to pick a side for piecewise data.
    pub quad: usize,
}

impl GlobalDof {
    pub fn order(&self) -> usize {
        self.kind.order()
    }
}

#[derive(Debug, Clone)]
pub struct DofTable {
    pub family: Family,
    pub degree: usize,
    pub dofs: Vec<GlobalDof>,
    /// Per quad, global index of each local DOF.
    pub local_to_global: Vec<Vec<usize>>,
    /// Derivative DOFs of order `l` are scaled by `dof_scale^l`.
    pub dof_scale: f64,
    /// Values and first derivatives on the boundary (clamped data).
    pub on_boundary: Vec<bool>,
}

impl DofTable {
    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }
}

/// Split of the global DOFs into unknowns and prescribed-zero values.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub free: Vec<usize>,
    pub constrained: Vec<usize>,
    /// Position in `free` of each global DOF.
    pub free_index: Vec<Option<usize>>,
}

impl Partition {
    fn from_mask(mask: &[bool]) -> Self {
        let mut free = Vec::new();
        let mut constrained = Vec::new();
        let mut free_index = vec![None; mask.len()];
        for (i, &c) in mask.iter().enumerate() {
            if c {
                constrained.push(i);
            } else {
                free_index[i] = Some(free.len());
                free.push(i);
            }
        }
        Self { free, constrained, free_index }
    }

    /// Every DOF free.
    pub fn unconstrained(table: &DofTable) -> Self {
        Self::from_mask(&vec![false; table.len()])
    }

    /// Scatter free values into a full-length vector with zeros elsewhere.
    pub fn expand(&self, free_values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.free_index.len()];
        for (&g, &v) in self.free.iter().zip(free_values) {
            out[g] = v;
        }
        out
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&g| full[g]).collect()
    }
}

/// Clamped plate: `u = ∂ₙu = 0`. Vertex data at boundary vertices and
/// edge values / first normal derivatives on boundary edges are fixed;
/// higher normal derivatives on boundary edges stay free.
pub fn apply_clamped_bc(table: &DofTable) -> Partition {
    Partition::from_mask(&table.on_boundary)
}

/// Number and describe the global DOFs of `family` on `mesh`.
pub fn build_global_dofs(mesh: &QuadMesh, k: usize, family: Family) -> Result<DofTable> {
    let dof_scale = mesh.h();
    let shared_edge = (k - 3) + (k - 2);
    let higher = element::higher_edge_dofs(k);
    let per_edge = match family {
        Family::Full => shared_edge,
        Family::Condensed => shared_edge + higher,
    };
    let nv = mesh.vertices().len();
    let ne = mesh.edges().len();
    let edge_base = 3 * nv;
    let quad_base = edge_base + per_edge * ne;
    let total = match family {
        Family::Full => quad_base + 4 * higher * mesh.quads().len(),
        Family::Condensed => quad_base,
    };
    let mut dofs: Vec<Option<GlobalDof>> = vec![None; total];
    let mut on_boundary = vec![false; total];
    let mut local_to_global = Vec::with_capacity(mesh.quads().len());

    for q in 0..mesh.quads().len() {
        let cell = mesh.macro_cell(q);
        let functionals = element::dof_functionals(k, &cell)?;
        let edges = mesh.quad_edges(q);
        let mut map = Vec::with_capacity(functionals.len());
        let mut edge_pos = [0usize; 4];
        for f in &functionals {
            let (g, owner, boundary) = match f.owner {
                DofOwner::Vertex(i) => {
                    let v = mesh.quads()[q][i];
                    let slot = match f.kind {
                        DofKind::VertexValue => 0,
                        DofKind::VertexDx => 1,
                        _ => 2,
                    };
                    (3 * v + slot, GlobalOwner::Vertex(v), mesh.is_boundary_vertex(v))
                }
                DofOwner::Edge(i) => {
                    let e = edges[i];
                    let p = edge_pos[i];
                    edge_pos[i] += 1;
                    let boundary = mesh.edges()[e].is_boundary() && f.is_low_order();
                    if p < per_edge {
                        (edge_base + per_edge * e + p, GlobalOwner::Edge(e), boundary)
                    } else {
                        let g = quad_base + (4 * q + i) * higher + (p - shared_edge);
                        (g, GlobalOwner::QuadEdge { quad: q, edge: i }, boundary)
                    }
                }
            };
            if dofs[g].is_none() {
                dofs[g] = Some(GlobalDof { kind: f.kind, owner, anchor: f.anchor, quad: q });
                on_boundary[g] = boundary;
            }
            map.push(g);
        }
        local_to_global.push(map);
    }
    let dofs = dofs.into_iter().map(|d| d.expect("every global DOF is reached by some quad")).collect();
    Ok(DofTable { family, degree: k, dofs, local_to_global, dof_scale, on_boundary })
}

/// Build the nodal basis of every quad, scaled to the table's DOF units.
pub fn build_bases(mesh: &QuadMesh, table: &DofTable) -> Result<Vec<LocalBasis>> {
    (0..mesh.quads().len())
        .map(|q| build_local_basis_scaled(table.degree, &mesh.macro_cell(q), table.dof_scale))
        .collect()
}

/// A function that can report partial derivatives `∂x^nx ∂y^ny f` at points.
pub trait SmoothFunction {
    fn partial(&self, p: Point, nx: usize, ny: usize) -> f64;

    /// Partial derivative taken from the side containing `toward`; differs
    /// from [`SmoothFunction::partial`] only for piecewise-defined functions.
    fn partial_near(&self, p: Point, _toward: Point, nx: usize, ny: usize) -> f64 {
        self.partial(p, nx, ny)
    }
}

impl SmoothFunction for TrianglePolynomial {
    fn partial(&self, p: Point, nx: usize, ny: usize) -> f64 {
        self.partial(nx, ny).evaluate(p)
    }
}

/// `∂_{dirs[0]} ⋯ ∂_{dirs[l-1]} f(p)` expanded into partials.
pub fn directional<F: SmoothFunction + ?Sized>(f: &F, p: Point, toward: Point, dirs: &[Point]) -> f64 {
    // coefficient of ∂x^i ∂y^(l-i)
    let mut c = vec![1.0];
    for d in dirs {
        let mut next = vec![0.0; c.len() + 1];
        for (i, &v) in c.iter().enumerate() {
            next[i + 1] += v * d[0];
            next[i] += v * d[1];
        }
        c = next;
    }
    let l = dirs.len();
    c.iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| v * f.partial_near(p, toward, i, l - i))
        .sum()
}

/// Mesh, global numbering and local bases needed to work with FE functions.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: QuadMesh,
    pub table: DofTable,
    pub bases: Vec<LocalBasis>,
}

fn directions_of(kind: DofKind) -> Vec<Point> {
    match kind {
        DofKind::VertexValue | DofKind::EdgeValue => vec![],
        DofKind::VertexDx => vec![[1.0, 0.0]],
        DofKind::VertexDy => vec![[0.0, 1.0]],
        DofKind::EdgeNormal { order, normal } => vec![normal; order],
    }
}

impl Discretization {
    pub fn new(mesh: QuadMesh, k: usize, family: Family) -> Result<Self> {
        let table = build_global_dofs(&mesh, k, family)?;
        let bases = build_bases(&mesh, &table)?;
        Ok(Self { mesh, table, bases })
    }

    pub fn degree(&self) -> usize {
        self.table.degree
    }

    pub fn local_coeffs(&self, q: usize, global: &[f64]) -> Vec<f64> {
        self.table.local_to_global[q].iter().map(|&g| global[g]).collect()
    }

    /// Restriction of the FE function with coefficients `global` to quad `q`.
    pub fn pieces(&self, q: usize, global: &[f64]) -> [TrianglePolynomial; 4] {
        self.bases[q].combine(&self.local_coeffs(q, global))
    }

    /// Locate `p`, returning `(quad, sub-triangle)`.
    pub fn locate(&self, p: Point) -> Option<(usize, usize)> {
        let mut best: Option<(f64, usize, usize)> = None;
        for q in 0..self.mesh.quads().len() {
            for (t, tri) in self.mesh.macro_cell(q).triangles().iter().enumerate() {
                let m = tri.barycentric(p).into_iter().fold(f64::INFINITY, f64::min);
                if best.is_none_or(|(bm, _, _)| m > bm) {
                    best = Some((m, q, t));
                }
            }
        }
        best.filter(|(m, _, _)| *m >= -1e-12).map(|(_, q, t)| (q, t))
    }

    pub fn evaluate(&self, global: &[f64], p: Point) -> Option<f64> {
        let (q, t) = self.locate(p)?;
        Some(self.pieces(q, global)[t].evaluate(p))
    }

    /// Global DOF values of `f` (scaled derivative units).
    pub fn interpolate<F: SmoothFunction + ?Sized>(&self, f: &F) -> Vec<f64> {
        let s = self.table.dof_scale;
        self.table
            .dofs
            .iter()
            .map(|d| {
                let toward = self.mesh.macro_cell(d.quad).centroid();
                s.powi(d.order() as i32) * directional(f, d.anchor, toward, &directions_of(d.kind))
            })
            .collect()
    }

    /// Convert a DOF vector to physical units (derivatives unscaled).
    pub fn unscaled(&self, global: &[f64]) -> Vec<f64> {
        let s = self.table.dof_scale;
        global.iter().zip(&self.table.dofs).map(|(v, d)| v / s.powi(d.order() as i32)).collect()
    }
}

/// A finite element function viewed as a [`SmoothFunction`]. Pieces are
/// chosen from the sub-triangle containing the side hint.
pub struct FeFunction<'a> {
    pub disc: &'a Discretization,
    pub coeffs: &'a [f64],
}

impl SmoothFunction for FeFunction<'_> {
    fn partial(&self, p: Point, nx: usize, ny: usize) -> f64 {
        self.partial_near(p, p, nx, ny)
    }

    fn partial_near(&self, p: Point, toward: Point, nx: usize, ny: usize) -> f64 {
        let (q, t) = self.disc.locate(toward).expect("point outside the mesh");
        self.disc.pieces(q, self.coeffs)[t].partial(nx, ny).evaluate(p)
    }
}

/// Embed a condensed-family coefficient vector into the full family on the
/// same mesh by copying shared higher-order values into each quad's copy.
pub fn expand_condensed(condensed: &DofTable, full: &DofTable, coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; full.len()];
    for (lc, lf) in condensed.local_to_global.iter().zip(&full.local_to_global) {
        for (&gc, &gf) in lc.iter().zip(lf) {
            out[gf] = coeffs[gc];
        }
    }
    out
}
