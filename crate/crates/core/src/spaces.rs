//! Global degree-of-freedom maps and embeddings between spaces.
//!
//! Local-to-global maps are stored flat: local dof `l` of cell `K` sits at
//! position `K * local_dim + l`. Trace spaces carry an orientation sign per
//! local dof; dropped boundary dofs map to `None`.

use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};
use crate::mesh::{CellGeometry, Mesh};
use crate::refelem::{scalar_dim, LagrangeElement, ModalBasis, TraceElement, TraceKind};

/// The function spaces used by the method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    /// Discontinuous vector `P_k`, modal basis per component.
    BrokenVector(usize),
    /// Discontinuous scalar `P_m`, modal basis.
    BrokenScalar(usize),
    /// Continuous Lagrange `P_m` on the whole mesh, boundary included.
    Multiplier(usize),
    /// Curl-conforming rotated BDM of degree `k` with zero tangential trace on the boundary.
    ConformingEdge(usize),
    /// Div-conforming BDM of degree `k`, boundary dofs kept.
    DivConforming(usize),
}

impl SpaceKind {
    pub fn degree(&self) -> usize {
        match *self {
            SpaceKind::BrokenVector(k)
            | SpaceKind::BrokenScalar(k)
            | SpaceKind::Multiplier(k)
            | SpaceKind::ConformingEdge(k)
            | SpaceKind::DivConforming(k) => k,
        }
    }

    /// Number of local basis functions per cell.
    pub fn local_dim(&self) -> usize {
        match *self {
            SpaceKind::BrokenVector(k) | SpaceKind::ConformingEdge(k) | SpaceKind::DivConforming(k) => {
                2 * scalar_dim(k)
            }
            SpaceKind::BrokenScalar(m) | SpaceKind::Multiplier(m) => scalar_dim(m),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpaceHandle {
    pub kind: SpaceKind,
    pub dim: usize,
    pub num_cells: usize,
    local_dofs: Vec<Option<usize>>,
    local_signs: Vec<f64>,
    /// Global dofs lying on the boundary (multiplier and trace spaces).
    pub boundary: Vec<bool>,
}

/// Coefficient vector tagged with the space it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldCoefficients {
    pub kind: SpaceKind,
    pub values: Vec<f64>,
}

impl FieldCoefficients {
    pub fn new(space: &SpaceHandle, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.dim {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a space of dimension {}",
                values.len(),
                space.dim
            )));
        }
        Ok(FieldCoefficients {
            kind: space.kind,
            values,
        })
    }

    pub fn zeros(space: &SpaceHandle) -> Self {
        FieldCoefficients {
            kind: space.kind,
            values: vec![0.0; space.dim],
        }
    }
}

impl SpaceHandle {
    pub fn local_dim(&self) -> usize {
        self.kind.local_dim()
    }

    /// Global index of local dof `l` on `cell`, `None` when eliminated.
    pub fn dof(&self, cell: usize, l: usize) -> Option<usize> {
        self.local_dofs[cell * self.local_dim() + l]
    }

    pub fn sign(&self, cell: usize, l: usize) -> f64 {
        self.local_signs[cell * self.local_dim() + l]
    }

    pub fn cell_dofs(&self, cell: usize) -> &[Option<usize>] {
        let n = self.local_dim();
        &self.local_dofs[cell * n..(cell + 1) * n]
    }

    pub fn cell_signs(&self, cell: usize) -> &[f64] {
        let n = self.local_dim();
        &self.local_signs[cell * n..(cell + 1) * n]
    }

    /// Gather the local coefficients of a global vector on one cell (signs applied).
    pub fn gather(&self, cell: usize, global: &[f64]) -> Vec<f64> {
        self.cell_dofs(cell)
            .iter()
            .zip(self.cell_signs(cell))
            .map(|(d, s)| d.map_or(0.0, |g| s * global[g]))
            .collect()
    }
}

fn broken(mesh: &Mesh, kind: SpaceKind) -> SpaceHandle {
    let n = kind.local_dim();
    let t = mesh.num_cells();
    SpaceHandle {
        kind,
        dim: n * t,
        num_cells: t,
        local_dofs: (0..n * t).map(Some).collect(),
        local_signs: vec![1.0; n * t],
        boundary: vec![false; n * t],
    }
}

fn multiplier(mesh: &Mesh, m: usize) -> SpaceHandle {
    let kind = SpaceKind::Multiplier(m);
    let n = kind.local_dim();
    let t = mesh.num_cells();
    if m == 0 {
        // piecewise constants cannot be continuous; treat as one global constant per cell
        let mut h = broken(mesh, kind);
        h.kind = kind;
        return h;
    }
    let per_edge = m - 1;
    let interior = n - 3 - 3 * per_edge;
    let (nv, ne) = (mesh.num_vertices(), mesh.num_edges());
    let dim = nv + ne * per_edge + t * interior;
    let mut boundary = vec![false; dim];
    for (e, &b) in mesh.boundary_edge.iter().enumerate() {
        if b {
            let [v0, v1] = mesh.edges[e];
            boundary[v0] = true;
            boundary[v1] = true;
            for p in 0..per_edge {
                boundary[nv + e * per_edge + p] = true;
            }
        }
    }
    let mut local_dofs = Vec::with_capacity(n * t);
    for (k, tri) in mesh.triangles.iter().enumerate() {
        local_dofs.extend(tri.iter().map(|&v| Some(v)));
        for j in 0..3 {
            let e = mesh.cell_edges[k][j];
            let forward = mesh.cell_edge_signs[k][j] > 0.0;
            for p in 0..per_edge {
                let pos = if forward { p } else { per_edge - 1 - p };
                local_dofs.push(Some(nv + e * per_edge + pos));
            }
        }
        for i in 0..interior {
            local_dofs.push(Some(nv + ne * per_edge + k * interior + i));
        }
    }
    SpaceHandle {
        kind,
        dim,
        num_cells: t,
        local_dofs,
        local_signs: vec![1.0; n * t],
        boundary,
    }
}

fn trace_space(mesh: &Mesh, kind: SpaceKind, k: usize, drop_boundary: bool) -> SpaceHandle {
    let n = kind.local_dim();
    let t = mesh.num_cells();
    let per_edge = k + 1;
    let interior = n - 3 * per_edge;
    let mut slot = vec![None; mesh.num_edges()];
    let mut count = 0;
    for (e, &b) in mesh.boundary_edge.iter().enumerate() {
        if !(b && drop_boundary) {
            slot[e] = Some(count);
            count += 1;
        }
    }
    let dim = count * per_edge + t * interior;
    let mut boundary = vec![false; dim];
    for (e, s) in slot.iter().enumerate() {
        if let (Some(s), true) = (s, mesh.boundary_edge[e]) {
            for i in 0..per_edge {
                boundary[s * per_edge + i] = true;
            }
        }
    }
    let mut local_dofs = Vec::with_capacity(n * t);
    let mut local_signs = Vec::with_capacity(n * t);
    for cell in 0..t {
        for j in 0..3 {
            let e = mesh.cell_edges[cell][j];
            let sgn = mesh.cell_edge_signs[cell][j];
            for i in 0..per_edge {
                local_dofs.push(slot[e].map(|s| s * per_edge + i));
                // reversing an edge flips the direction and reflects q_i
                let odd = i % 2 == 1;
                local_signs.push(if sgn > 0.0 || odd { 1.0 } else { -1.0 });
            }
        }
        for i in 0..interior {
            local_dofs.push(Some(count * per_edge + cell * interior + i));
            local_signs.push(1.0);
        }
    }
    SpaceHandle {
        kind,
        dim,
        num_cells: t,
        local_dofs,
        local_signs,
        boundary,
    }
}

/// Build the global dof map of `kind` on `mesh`.
pub fn build_space(mesh: &Mesh, kind: SpaceKind) -> Result<SpaceHandle> {
    let ok = match kind {
        SpaceKind::BrokenVector(k) => k <= 6,
        SpaceKind::BrokenScalar(m) => m <= 7,
        SpaceKind::Multiplier(m) => (1..=6).contains(&m),
        SpaceKind::ConformingEdge(k) | SpaceKind::DivConforming(k) => (1..=5).contains(&k),
    };
    if !ok {
        return Err(Error::Unsupported(format!("space {kind:?}")));
    }
    Ok(match kind {
        SpaceKind::BrokenVector(_) | SpaceKind::BrokenScalar(_) => broken(mesh, kind),
        SpaceKind::Multiplier(m) => multiplier(mesh, m),
        SpaceKind::ConformingEdge(k) => trace_space(mesh, kind, k, true),
        SpaceKind::DivConforming(k) => trace_space(mesh, kind, k, false),
    })
}

/// `v = M v̂` for the covariant map `M = J^{-T}`.
pub fn covariant_block(g: &CellGeometry) -> [[f64; 2]; 2] {
    let ji = g.jac_inv;
    [[ji[0][0], ji[1][0]], [ji[0][1], ji[1][1]]]
}

/// `v = M v̂` for the contravariant Piola map `M = J / det J`.
pub fn piola_block(g: &CellGeometry) -> [[f64; 2]; 2] {
    let j = g.jac;
    [[j[0][0] / g.det, j[0][1] / g.det], [j[1][0] / g.det, j[1][1] / g.det]]
}

/// Apply a 2×2 block to vector modal coefficients (component-major, `ns` per component).
pub fn map_vector_coeffs(block: &[[f64; 2]; 2], ref_coeffs: &[f64], ns: usize) -> Vec<f64> {
    let mut out = vec![0.0; 2 * ns];
    for a in 0..ns {
        let (x, y) = (ref_coeffs[a], ref_coeffs[ns + a]);
        out[a] = block[0][0] * x + block[0][1] * y;
        out[ns + a] = block[1][0] * x + block[1][1] * y;
    }
    out
}

/// Invert a 2×2 block.
pub fn inverse_block(b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
    [[b[1][1] / det, -b[0][1] / det], [-b[1][0] / det, b[0][0] / det]]
}

pub(crate) fn sparse(nrows: usize, ncols: usize, triplets: &[Triplet<usize, usize, f64>]) -> SparseColMat<usize, f64> {
    SparseColMat::try_new_from_triplets(nrows, ncols, triplets).expect("valid sparse triplets")
}

/// Physical broken coefficients of every local basis function of a trace
/// element on one cell: entry `l` is the expansion of local function `l`.
pub fn trace_local_coeffs(elem: &TraceElement, g: &CellGeometry) -> Vec<Vec<f64>> {
    let block = match elem.kind {
        TraceKind::Tangential => covariant_block(g),
        TraceKind::Normal => piola_block(g),
    };
    let ns = elem.modal.dim();
    (0..elem.dim())
        .map(|l| {
            let col: Vec<f64> = (0..2 * ns).map(|r| elem.coeffs[(r, l)]).collect();
            map_vector_coeffs(&block, &col, ns)
        })
        .collect()
}

/// Matrix expanding a global trace space (conforming edge or div-conforming)
/// into broken vector coefficients of the same degree.
pub fn trace_embedding(mesh: &Mesh, broken: &SpaceHandle, trace: &SpaceHandle) -> Result<SparseColMat<usize, f64>> {
    let (kind, k) = match trace.kind {
        SpaceKind::ConformingEdge(k) => (TraceKind::Tangential, k),
        SpaceKind::DivConforming(k) => (TraceKind::Normal, k),
        other => return Err(Error::DimensionMismatch(format!("{other:?} is not a trace space"))),
    };
    if broken.kind != SpaceKind::BrokenVector(k) {
        return Err(Error::DimensionMismatch(format!(
            "{:?} cannot host {:?}",
            broken.kind, trace.kind
        )));
    }
    let elem = TraceElement::new(kind, k);
    let ld = broken.local_dim();
    let mut trips = Vec::new();
    for cell in 0..mesh.num_cells() {
        let local = trace_local_coeffs(&elem, &mesh.geometry(cell));
        for (l, col) in local.iter().enumerate() {
            if let Some(gdof) = trace.dof(cell, l) {
                let s = trace.sign(cell, l);
                for (r, v) in col.iter().enumerate() {
                    if *v != 0.0 {
                        trips.push(Triplet::new(cell * ld + r, gdof, s * v));
                    }
                }
            }
        }
    }
    Ok(sparse(broken.dim, trace.dim, &trips))
}

/// Embedding `P` of the conforming edge space into the broken vector space.
pub fn conforming_embedding(mesh: &Mesh, broken: &SpaceHandle, conf: &SpaceHandle) -> Result<SparseColMat<usize, f64>> {
    if !matches!(conf.kind, SpaceKind::ConformingEdge(_)) {
        return Err(Error::DimensionMismatch(format!("{:?} is not a conforming edge space", conf.kind)));
    }
    trace_embedding(mesh, broken, conf)
}

/// Physical modal derivative matrices `(∂x, ∂y)` on a cell, from reference ones.
pub fn physical_derivatives(
    dx: &faer::Mat<f64>,
    dy: &faer::Mat<f64>,
    g: &CellGeometry,
) -> (faer::Mat<f64>, faer::Mat<f64>) {
    let ji = g.jac_inv;
    let px = dx * faer::Scale(ji[0][0]) + dy * faer::Scale(ji[1][0]);
    let py = dx * faer::Scale(ji[0][1]) + dy * faer::Scale(ji[1][1]);
    (px, py)
}

/// Element-wise gradient `G` from broken scalar `P_m` to broken vector `P_{m−1}`.
pub fn grad_embedding(mesh: &Mesh, scalar: &SpaceHandle, vector: &SpaceHandle) -> Result<SparseColMat<usize, f64>> {
    let (SpaceKind::BrokenScalar(m), SpaceKind::BrokenVector(k)) = (scalar.kind, vector.kind) else {
        return Err(Error::DimensionMismatch("grad embedding needs broken spaces".into()));
    };
    if m == 0 || m - 1 != k {
        return Err(Error::DimensionMismatch(format!("gradient of P_{m} does not map onto P_{k}")));
    }
    let modal = ModalBasis::new(m);
    let (dx, dy) = modal.derivative_matrices();
    let (ns, nv) = (scalar_dim(m), scalar_dim(k));
    let mut trips = Vec::new();
    for cell in 0..mesh.num_cells() {
        let (px, py) = physical_derivatives(&dx, &dy, &mesh.geometry(cell));
        for b in 0..ns {
            for a in 0..nv {
                for (c, d) in [(0, &px), (1, &py)] {
                    let v = d[(a, b)];
                    if v.abs() > 1e-15 * (1.0 + d.norm_max()) {
                        trips.push(Triplet::new(cell * 2 * nv + c * nv + a, cell * ns + b, v));
                    }
                }
            }
        }
    }
    Ok(sparse(vector.dim, scalar.dim, &trips))
}

/// Element-wise gradient of the continuous Lagrange space into broken vector
/// `P_{m−1}`; with `zero_boundary`, boundary nodes are eliminated and the
/// returned column map lists the retained multiplier dofs.
pub fn lagrange_gradient(
    mesh: &Mesh,
    lagrange: &SpaceHandle,
    vector: &SpaceHandle,
    zero_boundary: bool,
) -> Result<(SparseColMat<usize, f64>, Vec<usize>)> {
    let (SpaceKind::Multiplier(m), SpaceKind::BrokenVector(k)) = (lagrange.kind, vector.kind) else {
        return Err(Error::DimensionMismatch("lagrange gradient needs multiplier and broken spaces".into()));
    };
    if m == 0 || m - 1 != k {
        return Err(Error::DimensionMismatch(format!("gradient of P_{m} does not map onto P_{k}")));
    }
    let elem = LagrangeElement::new(m);
    let (dx, dy) = elem.modal.derivative_matrices();
    let mut column = vec![None; lagrange.dim];
    let mut kept = Vec::new();
    for (g, &b) in lagrange.boundary.iter().enumerate() {
        if !(zero_boundary && b) {
            column[g] = Some(kept.len());
            kept.push(g);
        }
    }
    let nv = scalar_dim(k);
    let mut trips = Vec::new();
    for cell in 0..mesh.num_cells() {
        let (px, py) = physical_derivatives(&dx, &dy, &mesh.geometry(cell));
        let gx = &px * &elem.coeffs;
        let gy = &py * &elem.coeffs;
        for (l, dof) in lagrange.cell_dofs(cell).iter().enumerate() {
            let Some(col) = dof.and_then(|d| column[d]) else { continue };
            for a in 0..nv {
                for (c, d) in [(0, &gx), (1, &gy)] {
                    let v = d[(a, l)];
                    if v != 0.0 {
                        trips.push(Triplet::new(cell * 2 * nv + c * nv + a, col, v));
                    }
                }
            }
        }
    }
    Ok((sparse(vector.dim, kept.len(), &trips), kept))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Rect;
    use crate::refelem::basis::{edge_point, REF_TANGENTS};
    use crate::refelem::edge_legendre;
    use crate::refelem::quadrature::interval_rule;

    fn grid(n: usize) -> Mesh {
        Mesh::uniform_grid(n, Rect::pi_square()).unwrap()
    }

    #[test]
    fn dimensions() {
        let m2 = grid(2);
        assert_eq!(build_space(&m2, SpaceKind::ConformingEdge(1)).unwrap().dim, 16);
        assert_eq!(build_space(&m2, SpaceKind::Multiplier(1)).unwrap().dim, 9);
        let m16 = grid(16);
        assert_eq!(build_space(&m16, SpaceKind::BrokenVector(1)).unwrap().dim, 3072);
        for n in 1..5 {
            let mesh = grid(n);
            let interior_edges = mesh.num_edges() - mesh.num_boundary_edges();
            for k in 1..=4 {
                let conf = build_space(&mesh, SpaceKind::ConformingEdge(k)).unwrap();
                assert_eq!(conf.dim, interior_edges * (k + 1) + mesh.num_cells() * (k + 1) * (k - 1));
                let div = build_space(&mesh, SpaceKind::DivConforming(k)).unwrap();
                assert_eq!(div.dim, mesh.num_edges() * (k + 1) + mesh.num_cells() * (k + 1) * (k - 1));
            }
            for m in 1..=6 {
                let mult = build_space(&mesh, SpaceKind::Multiplier(m)).unwrap();
                let expect = mesh.num_vertices()
                    + mesh.num_edges() * (m - 1)
                    + mesh.num_cells() * (m.saturating_sub(1) * m.saturating_sub(2) / 2);
                assert_eq!(mult.dim, expect);
            }
        }
    }

    #[test]
    fn multiplier_dofs_are_shared_consistently() {
        // a shared node seen from both cells sits at the same physical point
        let mesh = grid(3);
        let m = 4;
        let space = build_space(&mesh, SpaceKind::Multiplier(m)).unwrap();
        let elem = LagrangeElement::new(m);
        let mut location: Vec<Option<[f64; 2]>> = vec![None; space.dim];
        for cell in 0..mesh.num_cells() {
            let g = mesh.geometry(cell);
            for (l, d) in space.cell_dofs(cell).iter().enumerate() {
                let p = g.map(elem.nodes[l]);
                let d = d.unwrap();
                match location[d] {
                    None => location[d] = Some(p),
                    Some(q) => assert!((p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12),
                }
            }
        }
        assert!(location.iter().all(Option::is_some));
    }

    #[test]
    fn embedding_has_matching_tangential_moments() {
        let mesh = grid(2);
        for k in 1..=3 {
            let broken_space = build_space(&mesh, SpaceKind::BrokenVector(k)).unwrap();
            let conf = build_space(&mesh, SpaceKind::ConformingEdge(k)).unwrap();
            let p = conforming_embedding(&mesh, &broken_space, &conf).unwrap().to_dense();
            let modal = ModalBasis::new(k);
            let ns = modal.dim();
            let rule = interval_rule(2 * k + 2);
            // physical tangential moments of a column seen from a cell along its local edge
            let moments = |col: usize, cell: usize, j: usize| -> Vec<f64> {
                let g = mesh.geometry(cell);
                let ev = g.edge_vector(j);
                let mut out = vec![0.0; k + 1];
                for (pt, w) in rule.points.iter().zip(&rule.weights) {
                    let vals = modal.eval(edge_point(j, pt[0]));
                    let q = edge_legendre(k, pt[0]);
                    let base = cell * 2 * ns;
                    let vx: f64 = (0..ns).map(|a| p[(base + a, col)] * vals[a]).sum();
                    let vy: f64 = (0..ns).map(|a| p[(base + ns + a, col)] * vals[a]).sum();
                    for i in 0..=k {
                        out[i] += w * (vx * ev[0] + vy * ev[1]) * q[i];
                    }
                }
                out
            };
            for e in 0..mesh.num_edges() {
                let cells = mesh.edge_cells[e];
                let Some(second) = cells.second else { continue };
                let j1 = mesh.cell_edges[cells.first].iter().position(|&x| x == e).unwrap();
                let j2 = mesh.cell_edges[second].iter().position(|&x| x == e).unwrap();
                for col in 0..conf.dim {
                    let a = moments(col, cells.first, j1);
                    let b = moments(col, second, j2);
                    // opposite traversal: q_i(1−s) = (−1)^i q_i(s) and the tangent flips
                    for i in 0..=k {
                        let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
                        assert!((a[i] - sign * b[i]).abs() < 1e-12, "k {k} edge {e} col {col}");
                    }
                }
            }
            // boundary tangential moments vanish
            for e in (0..mesh.num_edges()).filter(|&e| mesh.boundary_edge[e]) {
                let c = mesh.edge_cells[e].first;
                let j = mesh.cell_edges[c].iter().position(|&x| x == e).unwrap();
                for col in 0..conf.dim {
                    assert!(moments(col, c, j).iter().all(|m| m.abs() < 1e-12));
                }
            }
            let _ = REF_TANGENTS;
        }
    }

    #[test]
    fn embedding_full_column_rank() {
        let mesh = grid(2);
        let b = build_space(&mesh, SpaceKind::BrokenVector(1)).unwrap();
        let c = build_space(&mesh, SpaceKind::ConformingEdge(1)).unwrap();
        let p = conforming_embedding(&mesh, &b, &c).unwrap().to_dense();
        let s = p.singular_values().unwrap();
        assert_eq!(s.len(), 16);
        assert!(s[s.len() - 1] > 1e-8 * s[0]);
    }

    #[test]
    fn gradient_embedding_agrees_pointwise() {
        let mesh = grid(2);
        let m = 3;
        let scalar = build_space(&mesh, SpaceKind::BrokenScalar(m)).unwrap();
        let vector = build_space(&mesh, SpaceKind::BrokenVector(m - 1)).unwrap();
        let gmat = grad_embedding(&mesh, &scalar, &vector).unwrap();
        let coeffs: Vec<f64> = (0..scalar.dim).map(|i| ((i * 7919) % 13) as f64 / 13.0 - 0.5).collect();
        let col = faer::Col::<f64>::from_fn(scalar.dim, |i| coeffs[i]);
        let grad = &gmat * &col;
        let hi = ModalBasis::new(m);
        let lo = ModalBasis::new(m - 1);
        for cell in 0..mesh.num_cells() {
            let g = mesh.geometry(cell);
            for pt in [[0.2, 0.3], [0.6, 0.1]] {
                let (_, gr) = hi.eval_with_grad(pt);
                let mut direct = [0.0; 2];
                for (b, grad_b) in gr.iter().enumerate() {
                    let pg = g.push_grad(*grad_b);
                    direct[0] += coeffs[cell * hi.dim() + b] * pg[0];
                    direct[1] += coeffs[cell * hi.dim() + b] * pg[1];
                }
                let v = lo.eval(pt);
                let nv = lo.dim();
                let base = cell * 2 * nv;
                let ex: f64 = (0..nv).map(|a| grad[base + a] * v[a]).sum();
                let ey: f64 = (0..nv).map(|a| grad[base + nv + a] * v[a]).sum();
                assert!((ex - direct[0]).abs() < 1e-12 && (ey - direct[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_of_constant_and_linear() {
        let mesh = grid(1);
        let scalar = build_space(&mesh, SpaceKind::BrokenScalar(1)).unwrap();
        let vector = build_space(&mesh, SpaceKind::BrokenVector(0)).unwrap();
        let gmat = grad_embedding(&mesh, &scalar, &vector).unwrap().to_dense();
        // constant: only the first modal function on each cell
        for r in 0..vector.dim {
            assert!(gmat[(r, 0)].abs() < 1e-14 && gmat[(r, 3)].abs() < 1e-14);
        }
        assert!(grad_embedding(&mesh, &scalar, &build_space(&mesh, SpaceKind::BrokenVector(1)).unwrap()).is_err());
    }

    #[test]
    fn mismatched_embedding_rejected() {
        let mesh = grid(1);
        let b = build_space(&mesh, SpaceKind::BrokenVector(2)).unwrap();
        let c = build_space(&mesh, SpaceKind::ConformingEdge(1)).unwrap();
        assert!(conforming_embedding(&mesh, &b, &c).is_err());
    }
}
