//! Quadrilateral meshes, their edge tables, and the diagonal macro split.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Point};
use crate::poly::Triangle;

/// Cross products of consecutive edges must exceed this times `h²`.
pub const CONVEXITY_TOL: f64 = 1e-12;

/// A mesh edge. `vertices` is ordered lower global index first, which fixes
/// the edge's canonical tangent and normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub vertices: [usize; 2],
    /// `(quad, local edge)` pairs; local edge `i` joins local vertices `i` and `i + 1`.
    pub quads: Vec<(usize, usize)>,
    pub normal: Point,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.quads.len() == 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadMesh {
    vertices: Vec<Point>,
    quads: Vec<[usize; 4]>,
    edges: Vec<Edge>,
    quad_edges: Vec<[usize; 4]>,
    boundary_vertex: Vec<bool>,
}

/// Canonical normal of the segment from `a` to `b`: the tangent rotated 90° CCW.
pub fn canonical_normal(a: Point, b: Point) -> Point {
    geometry::rot90(geometry::normalize(geometry::sub(b, a)))
}

fn check_convex(quad: usize, pts: &[Point; 4]) -> Result<()> {
    let h = quad_diameter(pts);
    let mut crosses = [0.0; 4];
    for (i, c) in crosses.iter_mut().enumerate() {
        let e0 = geometry::sub(pts[(i + 1) % 4], pts[i]);
        let e1 = geometry::sub(pts[(i + 2) % 4], pts[(i + 1) % 4]);
        *c = geometry::cross(e0, e1);
    }
    let tol = CONVEXITY_TOL * h * h;
    if crosses.iter().all(|&c| c < -tol) {
        return Err(Error::NonConvexQuad { quad, reason: "clockwise orientation".into() });
    }
    if let Some(i) = crosses.iter().position(|&c| c <= tol) {
        return Err(Error::NonConvexQuad {
            quad,
            reason: format!("corner {} has cross product {:.3e}", (i + 1) % 4, crosses[i]),
        });
    }
    Ok(())
}

fn quad_diameter(pts: &[Point; 4]) -> f64 {
    let mut h: f64 = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            h = h.max(geometry::dist(pts[i], pts[j]));
        }
    }
    h
}

impl QuadMesh {
    /// Validate and build the edge table.
    pub fn new(vertices: Vec<Point>, quads: Vec<[usize; 4]>) -> Result<Self> {
        for (q, quad) in quads.iter().enumerate() {
            for &v in quad {
                if v >= vertices.len() {
                    return Err(Error::VertexOutOfRange { quad: q, index: v, count: vertices.len() });
                }
            }
            check_convex(q, &quad.map(|v| vertices[v]))?;
        }
        let mut index: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        for (q, quad) in quads.iter().enumerate() {
            for i in 0..4 {
                let (a, b) = (quad[i], quad[(i + 1) % 4]);
                let key = [a.min(b), a.max(b)];
                let e = *index.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        vertices: key,
                        quads: Vec::new(),
                        normal: canonical_normal(vertices[key[0]], vertices[key[1]]),
                    });
                    edges.len() - 1
                });
                edges[e].quads.push((q, i));
            }
        }
        if let Some(e) = edges.iter().find(|e| e.quads.len() > 2) {
            return Err(Error::NonManifoldEdge(e.vertices[0], e.vertices[1], e.quads.len()));
        }
        edges.sort_by_key(|e| e.vertices);
        let mut quad_edges = vec![[0usize; 4]; quads.len()];
        let mut boundary_vertex = vec![false; vertices.len()];
        for (ei, e) in edges.iter().enumerate() {
            for &(q, i) in &e.quads {
                quad_edges[q][i] = ei;
            }
            if e.is_boundary() {
                boundary_vertex[e.vertices[0]] = true;
                boundary_vertex[e.vertices[1]] = true;
            }
        }
        Ok(Self { vertices, quads, edges, quad_edges, boundary_vertex })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn quads(&self) -> &[[usize; 4]] {
        &self.quads
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Global edge index of each local edge of quad `q`.
    pub fn quad_edges(&self, q: usize) -> [usize; 4] {
        self.quad_edges[q]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn quad_points(&self, q: usize) -> [Point; 4] {
        self.quads[q].map(|v| self.vertices[v])
    }

    /// Largest quad diameter.
    pub fn h(&self) -> f64 {
        (0..self.quads.len()).map(|q| quad_diameter(&self.quad_points(q))).fold(0.0, f64::max)
    }

    /// Macro split of quad `q`, with edge orientation taken from global vertex ids.
    pub fn macro_cell(&self, q: usize) -> MacroCell {
        MacroCell::with_ids(self.quad_points(q), self.quads[q])
            .expect("mesh quads are validated convex")
    }

    pub fn interior_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| !e.is_boundary()).count()
    }
}

/// `n × n` uniform squares on the unit square.
pub fn generate_square_grid(n: usize) -> Result<QuadMesh> {
    if n == 0 {
        return Err(Error::InvalidArgument("square grid needs n >= 1".into()));
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
    }
    let mut quads = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            quads.push([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    QuadMesh::new(vertices, quads)
}

/// Level-`level` grid of the convergence study on the unit square.
///
/// The square is cut into `2^(level-1) × 2^(level-1)` cells; each cell has an
/// interior point at relative position `(alpha, alpha)` joined to the four
/// edge midpoints, giving four quadrilaterals per cell.
pub fn generate_fvs_grid(level: usize, alpha: f64) -> Result<QuadMesh> {
    if level == 0 {
        return Err(Error::InvalidArgument("grid level must be >= 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    let n = 1usize << (level - 1);
    let side = 1.0 / n as f64;
    let mut vertices: Vec<Point> = Vec::new();
    let mut lookup: HashMap<(i64, i64), usize> = HashMap::new();
    let mut vid = |p: Point| -> usize {
        let key = ((p[0] * 1e12).round() as i64, (p[1] * 1e12).round() as i64);
        *lookup.entry(key).or_insert_with(|| {
            vertices.push(p);
            vertices.len() - 1
        })
    };
    let mut quads = Vec::with_capacity(4 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (x0, y0) = (i as f64 * side, j as f64 * side);
            let at = |u: f64, v: f64| [x0 + u * side, y0 + v * side];
            let c00 = vid(at(0.0, 0.0));
            let c10 = vid(at(1.0, 0.0));
            let c11 = vid(at(1.0, 1.0));
            let c01 = vid(at(0.0, 1.0));
            let mb = vid(at(0.5, 0.0));
            let mr = vid(at(1.0, 0.5));
            let mt = vid(at(0.5, 1.0));
            let ml = vid(at(0.0, 0.5));
            let p = vid(at(alpha, alpha));
            quads.push([c00, mb, p, ml]);
            quads.push([mb, c10, mr, p]);
            quads.push([p, mr, c11, mt]);
            quads.push([ml, p, mt, c01]);
        }
    }
    QuadMesh::new(vertices, quads)
}

/// One quadrilateral split by its diagonals into
/// `T_i = (x_i, x_{i+1}, x_0)`, `i = 1..4` (stored zero-based).
#[derive(Debug, Clone, PartialEq)]
pub struct MacroCell {
    pub corners: [Point; 4],
    pub center: Point,
    /// Global vertex ids; fix the canonical orientation of each edge.
    pub ids: [usize; 4],
    pub diameter: f64,
}

/// Split a strictly convex CCW quad; edges are oriented by local index order.
pub fn split_macro(quad: [Point; 4]) -> Result<MacroCell> {
    MacroCell::with_ids(quad, [0, 1, 2, 3])
}

impl MacroCell {
    pub fn with_ids(corners: [Point; 4], ids: [usize; 4]) -> Result<Self> {
        check_convex(0, &corners)?;
        let [x1, x2, x3, x4] = corners;
        let d13 = geometry::sub(x3, x1);
        let d24 = geometry::sub(x4, x2);
        let s = geometry::cross(geometry::sub(x2, x1), d24) / geometry::cross(d13, d24);
        let center = geometry::lerp(x1, x3, s);
        Ok(Self { corners, center, ids, diameter: quad_diameter(&corners) })
    }

    pub fn triangle(&self, i: usize) -> Triangle {
        Triangle::new(self.corners[i], self.corners[(i + 1) % 4], self.center)
    }

    pub fn triangles(&self) -> [Triangle; 4] {
        [0, 1, 2, 3].map(|i| self.triangle(i))
    }

    /// Endpoints of local edge `i` in canonical order (lower global id first).
    pub fn edge_endpoints(&self, i: usize) -> (Point, Point) {
        let j = (i + 1) % 4;
        if self.ids[i] < self.ids[j] {
            (self.corners[i], self.corners[j])
        } else {
            (self.corners[j], self.corners[i])
        }
    }

    pub fn edge_normal(&self, i: usize) -> Point {
        let (a, b) = self.edge_endpoints(i);
        canonical_normal(a, b)
    }

    pub fn area(&self) -> f64 {
        let [a, b, c, d] = self.corners;
        0.5 * (geometry::orient(a, b, c) + geometry::orient(a, c, d))
    }

    pub fn centroid(&self) -> Point {
        let c = self.corners;
        [
            0.25 * (c[0][0] + c[1][0] + c[2][0] + c[3][0]),
            0.25 * (c[0][1] + c[1][1] + c[2][1] + c[3][1]),
        ]
    }

    /// The cell expressed in the frame `(x - centroid) / diameter`.
    pub fn to_local_frame(&self) -> MacroCell {
        let c = self.centroid();
        let h = self.diameter;
        let map = |p: Point| geometry::scale(geometry::sub(p, c), 1.0 / h);
        MacroCell {
            corners: self.corners.map(map),
            center: map(self.center),
            ids: self.ids,
            diameter: 1.0,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct MeshFile {
    vertices: Vec<[f64; 2]>,
    quads: Vec<[usize; 4]>,
}

pub fn mesh_from_json(text: &str) -> Result<QuadMesh> {
    let file: MeshFile = serde_json::from_str(text).map_err(|e| Error::MeshFormat(e.to_string()))?;
    QuadMesh::new(file.vertices, file.quads)
}

pub fn mesh_to_json(mesh: &QuadMesh) -> String {
    let file = MeshFile { vertices: mesh.vertices.clone(), quads: mesh.quads.clone() };
    serde_json::to_string_pretty(&file).expect("mesh serializes")
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<QuadMesh> {
    mesh_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_mesh(mesh: &QuadMesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, mesh_to_json(mesh))?;
    Ok(())
}
