//! Simplicial triangulations of rectangles.
//!
//! Triangles are stored counterclockwise. Local edge `j` of a triangle is the
//! edge opposite local vertex `j`, traversed from vertex `j+1` to vertex `j+2`
//! (indices mod 3), so the local traversal is always counterclockwise. Every
//! edge carries a global orientation from its lower to its higher vertex
//! index; `cell_edge_signs` records whether the local traversal agrees.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    /// The square `(0, π)²` used by all experiments.
    pub fn pi_square() -> Self {
        let pi = std::f64::consts::PI;
        Rect::new(0.0, pi, 0.0, pi)
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// Cells adjacent to an edge: one for boundary edges, two otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeCells {
    pub first: usize,
    pub second: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<[usize; 2]>,
    pub cell_edges: Vec<[usize; 3]>,
    /// +1 when the local traversal of the edge runs from low to high vertex index.
    pub cell_edge_signs: Vec<[f64; 3]>,
    pub edge_cells: Vec<EdgeCells>,
    pub boundary_edge: Vec<bool>,
    pub h: f64,
}

/// Affine map data of one cell: `x = origin + jac · x̂` on the reference
/// triangle with vertices (0,0), (1,0), (0,1).
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry {
    pub vertices: [[f64; 2]; 3],
    pub origin: [f64; 2],
    /// Row-major Jacobian; columns are the edge vectors v1 − v0 and v2 − v0.
    pub jac: [[f64; 2]; 2],
    pub jac_inv: [[f64; 2]; 2],
    pub det: f64,
    /// Outward unit normals of the local edges.
    pub normals: [[f64; 2]; 3],
    /// Counterclockwise unit tangents `t = (−n_y, n_x)`.
    pub tangents: [[f64; 2]; 3],
    pub edge_lengths: [f64; 3],
}

/// Local vertex pair `(start, end)` of local edge `j`.
pub const LOCAL_EDGES: [[usize; 2]; 3] = [[1, 2], [2, 0], [0, 1]];

impl CellGeometry {
    pub fn from_vertices(v: [[f64; 2]; 3]) -> Self {
        let jac = [
            [v[1][0] - v[0][0], v[2][0] - v[0][0]],
            [v[1][1] - v[0][1], v[2][1] - v[0][1]],
        ];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let jac_inv = [
            [jac[1][1] / det, -jac[0][1] / det],
            [-jac[1][0] / det, jac[0][0] / det],
        ];
        let mut normals = [[0.0; 2]; 3];
        let mut tangents = [[0.0; 2]; 3];
        let mut edge_lengths = [0.0; 3];
        for (j, [a, b]) in LOCAL_EDGES.iter().enumerate() {
            let tx = v[*b][0] - v[*a][0];
            let ty = v[*b][1] - v[*a][1];
            let len = tx.hypot(ty);
            edge_lengths[j] = len;
            tangents[j] = [tx / len, ty / len];
            // clockwise rotation of a counterclockwise tangent points outward
            normals[j] = [ty / len, -tx / len];
        }
        CellGeometry {
            vertices: v,
            origin: v[0],
            jac,
            jac_inv,
            det,
            normals,
            tangents,
            edge_lengths,
        }
    }

    /// Map a reference point to physical coordinates.
    pub fn map(&self, xr: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + self.jac[0][0] * xr[0] + self.jac[0][1] * xr[1],
            self.origin[1] + self.jac[1][0] * xr[0] + self.jac[1][1] * xr[1],
        ]
    }

    /// Physical gradient from a reference gradient: `J^{-T} ĝ`.
    pub fn push_grad(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.jac_inv[0][0] * g[0] + self.jac_inv[1][0] * g[1],
            self.jac_inv[0][1] * g[0] + self.jac_inv[1][1] * g[1],
        ]
    }

    /// Unnormalized edge vector of local edge `j` (start → end).
    pub fn edge_vector(&self, j: usize) -> [f64; 2] {
        let [a, b] = LOCAL_EDGES[j];
        [
            self.vertices[b][0] - self.vertices[a][0],
            self.vertices[b][1] - self.vertices[a][1],
        ]
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det.abs()
    }
}

fn signed_area(v: &[[f64; 2]], t: &[usize; 3]) -> f64 {
    let [a, b, c] = *t;
    0.5 * ((v[b][0] - v[a][0]) * (v[c][1] - v[a][1]) - (v[c][0] - v[a][0]) * (v[b][1] - v[a][1]))
}

impl Mesh {
    /// Build connectivity from raw vertices and triangles. Clockwise triangles
    /// are reoriented; degenerate ones are rejected.
    pub fn from_triangles(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("no triangles".into()));
        }
        let mut triangles = triangles;
        for (k, t) in triangles.iter_mut().enumerate() {
            if t.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::InvalidMesh(format!("triangle {k} references a missing vertex")));
            }
            let area = signed_area(&vertices, t);
            if !(area.abs() > 0.0) || !area.is_finite() {
                return Err(Error::InvalidMesh(format!("triangle {k} is degenerate")));
            }
            if area < 0.0 {
                t.swap(1, 2);
            }
        }

        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_cells: Vec<EdgeCells> = Vec::new();
        let mut cell_edges = Vec::with_capacity(triangles.len());
        let mut cell_edge_signs = Vec::with_capacity(triangles.len());
        for (k, t) in triangles.iter().enumerate() {
            let mut ce = [0; 3];
            let mut cs = [0.0; 3];
            for (j, [a, b]) in LOCAL_EDGES.iter().enumerate() {
                let (va, vb) = (t[*a], t[*b]);
                let key = [va.min(vb), va.max(vb)];
                let e = match edge_index.get(&key) {
                    Some(&e) => {
                        let cells = &mut edge_cells[e];
                        if cells.second.is_some() {
                            return Err(Error::InvalidMesh(format!(
                                "edge {key:?} shared by more than two triangles"
                            )));
                        }
                        cells.second = Some(k);
                        e
                    }
                    None => {
                        let e = edges.len();
                        edges.push(key);
                        edge_cells.push(EdgeCells { first: k, second: None });
                        edge_index.insert(key, e);
                        e
                    }
                };
                ce[j] = e;
                cs[j] = if va < vb { 1.0 } else { -1.0 };
            }
            cell_edges.push(ce);
            cell_edge_signs.push(cs);
        }
        let boundary_edge = edge_cells.iter().map(|c| c.second.is_none()).collect();
        let h = edges
            .iter()
            .map(|[a, b]| {
                let (p, q) = (vertices[*a], vertices[*b]);
                (q[0] - p[0]).hypot(q[1] - p[1])
            })
            .fold(0.0, f64::max);
        Ok(Mesh {
            vertices,
            triangles,
            edges,
            cell_edges,
            cell_edge_signs,
            edge_cells,
            boundary_edge,
            h,
        })
    }

    /// Uniform `n × n` grid on `rect`, each square split along the diagonal
    /// from its lower-left to its upper-right corner.
    pub fn uniform_grid(n: usize, rect: Rect) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMesh("grid size must be at least 1".into()));
        }
        let (w, h) = (rect.x1 - rect.x0, rect.y1 - rect.y0);
        if !(w > 0.0 && h > 0.0) {
            return Err(Error::InvalidMesh(format!("degenerate rectangle {rect:?}")));
        }
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([
                    rect.x0 + w * i as f64 / n as f64,
                    rect.y0 + h * j as f64 / n as f64,
                ]);
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (ll, lr, ur, ul) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                triangles.push([ll, lr, ur]);
                triangles.push([ll, ur, ul]);
            }
        }
        Mesh::from_triangles(vertices, triangles)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_boundary_edges(&self) -> usize {
        self.boundary_edge.iter().filter(|&&b| b).count()
    }

    pub fn geometry(&self, cell: usize) -> CellGeometry {
        let t = self.triangles[cell];
        CellGeometry::from_vertices([self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]])
    }

    /// Euler characteristic `V − E + T`.
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_cells() as i64
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_cells()).map(|k| self.geometry(k).area()).sum()
    }

    /// Legacy ASCII VTK unstructured grid with optional per-cell scalar data.
    pub fn write_vtk<W: Write>(&self, out: &mut W, title: &str, cell_scalars: &[(&str, &[f64])]) -> Result<()> {
        writeln!(out, "# vtk DataFile Version 3.0")?;
        writeln!(out, "{title}")?;
        writeln!(out, "ASCII")?;
        writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(out, "POINTS {} double", self.num_vertices())?;
        for v in &self.vertices {
            writeln!(out, "{} {} 0", v[0], v[1])?;
        }
        writeln!(out, "CELLS {} {}", self.num_cells(), 4 * self.num_cells())?;
        for t in &self.triangles {
            writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        writeln!(out, "CELL_TYPES {}", self.num_cells())?;
        for _ in &self.triangles {
            writeln!(out, "5")?;
        }
        if !cell_scalars.is_empty() {
            writeln!(out, "CELL_DATA {}", self.num_cells())?;
            for (name, data) in cell_scalars {
                if data.len() != self.num_cells() {
                    return Err(Error::DimensionMismatch(format!(
                        "cell field `{name}` has {} values for {} cells",
                        data.len(),
                        self.num_cells()
                    )));
                }
                writeln!(out, "SCALARS {name} double 1")?;
                writeln!(out, "LOOKUP_TABLE default")?;
                for x in *data {
                    writeln!(out, "{x}")?;
                }
            }
        }
        Ok(())
    }
}
