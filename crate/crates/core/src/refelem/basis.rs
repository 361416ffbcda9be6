//! Nodal and edge-moment finite elements on the reference triangle.
//!
//! Every element stores its basis as columns of modal coefficients over the
//! orthonormal [`ModalBasis`]; vector coefficients are laid out component
//! major (`c * n + a` for component `c`, modal function `a`).

use faer::{Mat, MatRef};

use super::polynomials::{edge_legendre, scalar_dim, ModalBasis};
use super::quadrature::interval_rule;
use crate::error::{Error, Result};
use crate::mesh::LOCAL_EDGES;

/// Reference vertices (0,0), (1,0), (0,1).
pub const REF_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Unnormalized reference edge vectors (end − start) of the local edges.
pub const REF_TANGENTS: [[f64; 2]; 3] = [[-1.0, 1.0], [0.0, -1.0], [1.0, 0.0]];

/// Outward (unnormalized) reference edge normals: tangents rotated clockwise.
pub const REF_NORMALS: [[f64; 2]; 3] = [[1.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];

/// Point at parameter `s ∈ [0, 1]` along local edge `j`.
pub fn edge_point(j: usize, s: f64) -> [f64; 2] {
    let a = REF_VERTICES[LOCAL_EDGES[j][0]];
    [a[0] + s * REF_TANGENTS[j][0], a[1] + s * REF_TANGENTS[j][1]]
}

fn invert(m: MatRef<'_, f64>) -> Mat<f64> {
    use faer::linalg::solvers::DenseSolveCore;
    m.partial_piv_lu().inverse()
}

/// Continuous-capable scalar Lagrange element on an equispaced lattice.
///
/// Local node order: the three vertices, then the interior nodes of each local
/// edge from its start to its end, then cell-interior nodes.
#[derive(Debug, Clone)]
pub struct LagrangeElement {
    pub degree: usize,
    pub nodes: Vec<[f64; 2]>,
    /// Column `i` holds the modal coefficients of nodal function `i`.
    pub coeffs: Mat<f64>,
    pub modal: ModalBasis,
}

impl LagrangeElement {
    pub fn new(degree: usize) -> Self {
        let m = degree;
        let mut nodes = Vec::with_capacity(scalar_dim(m));
        if m == 0 {
            nodes.push([1.0 / 3.0, 1.0 / 3.0]);
        } else {
            nodes.extend_from_slice(&REF_VERTICES);
            for j in 0..3 {
                for t in 1..m {
                    nodes.push(edge_point(j, t as f64 / m as f64));
                }
            }
            for jy in 1..m {
                for ix in 1..m - jy {
                    nodes.push([ix as f64 / m as f64, jy as f64 / m as f64]);
                }
            }
        }
        let modal = ModalBasis::new(m);
        let n = modal.dim();
        let mut vander = Mat::<f64>::zeros(n, n);
        for (i, p) in nodes.iter().enumerate() {
            for (a, v) in modal.eval(*p).into_iter().enumerate() {
                vander[(i, a)] = v;
            }
        }
        let coeffs = invert(vander.as_ref());
        LagrangeElement {
            degree,
            nodes,
            coeffs,
            modal,
        }
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    /// Number of nodes strictly inside each edge.
    pub fn nodes_per_edge(&self) -> usize {
        self.degree.saturating_sub(1)
    }

    pub fn num_interior(&self) -> usize {
        if self.degree < 3 {
            0
        } else {
            (self.degree - 1) * (self.degree - 2) / 2
        }
    }

    /// Local index of node `t` (0-based, from edge start) inside local edge `j`.
    pub fn edge_node(&self, j: usize, t: usize) -> usize {
        3 + j * self.nodes_per_edge() + t
    }

    pub fn eval(&self, pt: [f64; 2]) -> Vec<f64> {
        let modal = self.modal.eval(pt);
        (0..self.dim())
            .map(|i| (0..modal.len()).map(|a| self.coeffs[(a, i)] * modal[a]).sum())
            .collect()
    }

    pub fn eval_grad(&self, pt: [f64; 2]) -> Vec<[f64; 2]> {
        let (_, g) = self.modal.eval_with_grad(pt);
        (0..self.dim())
            .map(|i| {
                let mut s = [0.0; 2];
                for (a, ga) in g.iter().enumerate() {
                    s[0] += self.coeffs[(a, i)] * ga[0];
                    s[1] += self.coeffs[(a, i)] * ga[1];
                }
                s
            })
            .collect()
    }
}

/// Whether edge moments act on tangential or normal traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    /// Curl-conforming (rotated BDM) element, pushed forward covariantly.
    Tangential,
    /// Div-conforming BDM element, pushed forward by the Piola map.
    Normal,
}

/// Full vector `P_k` element whose degrees of freedom are trace moments
/// against orthonormal Legendre polynomials on each edge, completed by an
/// orthonormal set of interior functionals.
///
/// Degree of freedom `j * (k+1) + i` is
/// `∫_0^1 v̂(x̂_j(s)) · d̂_j q_i(s) ds` with `d̂_j` the unnormalized reference
/// edge tangent or outward normal of local edge `j`.
#[derive(Debug, Clone)]
pub struct TraceElement {
    pub kind: TraceKind,
    pub degree: usize,
    pub modal: ModalBasis,
    /// Column `i` holds the vector modal coefficients of basis function `i`.
    pub coeffs: Mat<f64>,
    /// Row `i` is functional `i` acting on vector modal coefficients.
    pub functionals: Mat<f64>,
}

impl TraceElement {
    pub fn new(kind: TraceKind, degree: usize) -> Self {
        let k = degree;
        let modal = ModalBasis::new(k);
        let ns = modal.dim();
        let n_edge = 3 * (k + 1);
        let rule = interval_rule(2 * k);
        let mut l = Mat::<f64>::zeros(n_edge, 2 * ns);
        for j in 0..3 {
            let dir = match kind {
                TraceKind::Tangential => REF_TANGENTS[j],
                TraceKind::Normal => REF_NORMALS[j],
            };
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let vals = modal.eval(edge_point(j, p[0]));
                let q = edge_legendre(k, p[0]);
                for i in 0..=k {
                    for a in 0..ns {
                        let base = w * vals[a] * q[i];
                        l[(j * (k + 1) + i, a)] += base * dir[0];
                        l[(j * (k + 1) + i, ns + a)] += base * dir[1];
                    }
                }
            }
        }
        let svd = l.svd().expect("trace functional SVD");
        let v = svd.V();
        let dim = 2 * ns;
        let n_int = dim - n_edge;
        let gram = &l * l.transpose();
        let edge_part = l.transpose() * invert(gram.as_ref());
        let mut coeffs = Mat::<f64>::zeros(dim, dim);
        let mut functionals = Mat::<f64>::zeros(dim, dim);
        for c in 0..n_edge {
            for r in 0..dim {
                coeffs[(r, c)] = edge_part[(r, c)];
                functionals[(c, r)] = l[(c, r)];
            }
        }
        for c in 0..n_int {
            for r in 0..dim {
                coeffs[(r, n_edge + c)] = v[(r, n_edge + c)];
                functionals[(n_edge + c, r)] = v[(r, n_edge + c)];
            }
        }
        TraceElement {
            kind,
            degree,
            modal,
            coeffs,
            functionals,
        }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn dofs_per_edge(&self) -> usize {
        self.degree + 1
    }

    pub fn num_edge_dofs(&self) -> usize {
        3 * (self.degree + 1)
    }

    pub fn num_interior(&self) -> usize {
        self.dim() - self.num_edge_dofs()
    }

    /// Values of every basis function at a reference point.
    pub fn eval(&self, pt: [f64; 2]) -> Vec<[f64; 2]> {
        let vals = self.modal.eval(pt);
        let ns = vals.len();
        (0..self.dim())
            .map(|i| {
                let mut v = [0.0; 2];
                for (a, va) in vals.iter().enumerate() {
                    v[0] += self.coeffs[(a, i)] * va;
                    v[1] += self.coeffs[(ns + a, i)] * va;
                }
                v
            })
            .collect()
    }

    /// Reference curl `∂x v_y − ∂y v_x` and divergence of every basis function.
    pub fn eval_curl_div(&self, pt: [f64; 2]) -> Vec<(f64, f64)> {
        let (_, g) = self.modal.eval_with_grad(pt);
        let ns = g.len();
        (0..self.dim())
            .map(|i| {
                let (mut curl, mut div) = (0.0, 0.0);
                for (a, ga) in g.iter().enumerate() {
                    let (cx, cy) = (self.coeffs[(a, i)], self.coeffs[(ns + a, i)]);
                    curl += cy * ga[0] - cx * ga[1];
                    div += cx * ga[0] + cy * ga[1];
                }
                (curl, div)
            })
            .collect()
    }
}

/// Discontinuous vector `P_k` with the modal basis in each component.
#[derive(Debug, Clone)]
pub struct VectorModalElement {
    pub degree: usize,
    pub modal: ModalBasis,
}

impl VectorModalElement {
    pub fn new(degree: usize) -> Self {
        VectorModalElement {
            degree,
            modal: ModalBasis::new(degree),
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.modal.dim()
    }

    pub fn eval(&self, pt: [f64; 2]) -> Vec<[f64; 2]> {
        let vals = self.modal.eval(pt);
        let mut out: Vec<[f64; 2]> = vals.iter().map(|&v| [v, 0.0]).collect();
        out.extend(vals.iter().map(|&v| [0.0, v]));
        out
    }

    pub fn eval_curl(&self, pt: [f64; 2]) -> Vec<f64> {
        let (_, g) = self.modal.eval_with_grad(pt);
        let mut out: Vec<f64> = g.iter().map(|ga| -ga[1]).collect();
        out.extend(g.iter().map(|ga| ga[0]));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    ScalarLagrange,
    VectorP,
    EdgeBdm,
    DivBdm,
}

/// A reference finite element of one of the supported families.
#[derive(Debug, Clone)]
pub enum BasisFamily {
    Lagrange(LagrangeElement),
    VectorP(VectorModalElement),
    Trace(TraceElement),
}

impl BasisFamily {
    pub fn family(&self) -> Family {
        match self {
            BasisFamily::Lagrange(_) => Family::ScalarLagrange,
            BasisFamily::VectorP(_) => Family::VectorP,
            BasisFamily::Trace(t) if t.kind == TraceKind::Tangential => Family::EdgeBdm,
            BasisFamily::Trace(_) => Family::DivBdm,
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            BasisFamily::Lagrange(e) => e.degree,
            BasisFamily::VectorP(e) => e.degree,
            BasisFamily::Trace(e) => e.degree,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            BasisFamily::Lagrange(e) => e.dim(),
            BasisFamily::VectorP(e) => e.dim(),
            BasisFamily::Trace(e) => e.dim(),
        }
    }

    /// Degree-of-freedom functionals applied to every basis function.
    pub fn dof_matrix(&self) -> Mat<f64> {
        match self {
            BasisFamily::Lagrange(e) => {
                let n = e.dim();
                let mut m = Mat::<f64>::zeros(n, n);
                for (i, p) in e.nodes.iter().enumerate() {
                    for (j, v) in e.eval(*p).into_iter().enumerate() {
                        m[(i, j)] = v;
                    }
                }
                m
            }
            BasisFamily::VectorP(e) => {
                // modal coefficients are L² moments against the orthonormal basis
                let n = e.dim();
                let ns = e.modal.dim();
                let rule = super::quadrature::triangle_rule(2 * e.degree);
                let mut m = Mat::<f64>::zeros(n, n);
                for (p, w) in rule.points.iter().zip(&rule.weights) {
                    let vals = e.eval(*p);
                    let test = e.modal.eval(*p);
                    for (j, v) in vals.iter().enumerate() {
                        for a in 0..ns {
                            m[(a, j)] += w * test[a] * v[0];
                            m[(ns + a, j)] += w * test[a] * v[1];
                        }
                    }
                }
                m
            }
            BasisFamily::Trace(e) => &e.functionals * &e.coeffs,
        }
    }
}

/// Build the reference element of `family` with degree `k`.
pub fn make_basis(family: Family, k: usize) -> Result<BasisFamily> {
    let supported = match family {
        Family::ScalarLagrange => k <= 6,
        Family::VectorP => (1..=5).contains(&k),
        Family::EdgeBdm | Family::DivBdm => (1..=5).contains(&k),
    };
    if !supported {
        return Err(Error::Unsupported(format!("{family:?} of degree {k}")));
    }
    Ok(match family {
        Family::ScalarLagrange => BasisFamily::Lagrange(LagrangeElement::new(k)),
        Family::VectorP => BasisFamily::VectorP(VectorModalElement::new(k)),
        Family::EdgeBdm => BasisFamily::Trace(TraceElement::new(TraceKind::Tangential, k)),
        Family::DivBdm => BasisFamily::Trace(TraceElement::new(TraceKind::Normal, k)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_identity(m: &Mat<f64>, tol: f64) {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let t = if i == j { 1.0 } else { 0.0 };
                assert!((m[(i, j)] - t).abs() <= tol, "entry ({i},{j}) = {}", m[(i, j)]);
            }
        }
    }

    #[test]
    fn dimensions() {
        let e = make_basis(Family::EdgeBdm, 1).unwrap();
        assert_eq!(e.dim(), 6);
        if let BasisFamily::Trace(t) = &e {
            assert_eq!((t.dofs_per_edge(), t.num_interior()), (2, 0));
        }
        assert_eq!(make_basis(Family::VectorP, 1).unwrap().dim(), 6);
        for m in 0..=6 {
            assert_eq!(make_basis(Family::ScalarLagrange, m).unwrap().dim(), (m + 1) * (m + 2) / 2);
        }
        for k in 1..=5 {
            let BasisFamily::Trace(t) = make_basis(Family::EdgeBdm, k).unwrap() else { unreachable!() };
            assert_eq!(t.dim(), (k + 1) * (k + 2));
            assert_eq!(t.num_interior(), (k + 1) * (k - 1));
        }
    }

    #[test]
    fn lagrange_cubic_edge_nodes() {
        let e = LagrangeElement::new(3);
        // the bottom edge (local edge 2) carries its two end vertices and two interior nodes
        let on_edge = e.nodes.iter().filter(|p| p[1].abs() < 1e-15).count();
        assert_eq!(on_edge, 4);
        assert_eq!(e.nodes[e.edge_node(2, 0)], [1.0 / 3.0, 0.0]);
    }

    #[test]
    fn unsupported_requests() {
        assert!(make_basis(Family::ScalarLagrange, 7).is_err());
        assert!(make_basis(Family::VectorP, 0).is_err());
        assert!(make_basis(Family::EdgeBdm, 6).is_err());
    }

    #[test]
    fn unisolvence() {
        for m in 0..=6 {
            assert_identity(&make_basis(Family::ScalarLagrange, m).unwrap().dof_matrix(), 1e-12);
        }
        for k in 1..=5 {
            for fam in [Family::VectorP, Family::EdgeBdm, Family::DivBdm] {
                assert_identity(&make_basis(fam, k).unwrap().dof_matrix(), 1e-12);
            }
        }
    }

    #[test]
    fn tangential_edge_functions_are_local() {
        // an edge basis function has vanishing tangential moments on other edges
        let t = TraceElement::new(TraceKind::Tangential, 2);
        let rule = interval_rule(10);
        for f in 0..t.num_edge_dofs() {
            let own = f / t.dofs_per_edge();
            for j in (0..3).filter(|&j| j != own) {
                for p in &rule.points {
                    let v = t.eval(edge_point(j, p[0]))[f];
                    let tan = v[0] * REF_TANGENTS[j][0] + v[1] * REF_TANGENTS[j][1];
                    assert!(tan.abs() < 1e-12);
                }
            }
        }
    }
}
