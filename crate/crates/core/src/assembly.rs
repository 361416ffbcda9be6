//! Assembly of the bilinear forms and transfer operators of the hybrid method.
//!
//! All broken spaces use the orthonormal modal basis pulled back through the
//! affine cell map, so cell mass matrices are `|det J| I` and every volume
//! term reduces to small dense products of modal coefficient matrices. Only
//! the coupling form needs edge quadrature, which is tabulated once on the
//! reference triangle.

use faer::sparse::Triplet;
use faer::Mat;

use crate::error::{Error, Result};
use crate::mesh::{CellGeometry, Mesh, Rect};
use crate::refelem::basis::edge_point;
use crate::refelem::quadrature::{interval_rule, triangle_rule};
use crate::refelem::{edge_legendre, scalar_dim, LagrangeElement, ModalBasis, TraceElement, TraceKind};
use crate::solvers::{self, sparse_from_triplets, Sparse};
use crate::spaces::{
    build_space, conforming_embedding, grad_embedding, inverse_block, physical_derivatives,
    piola_block, trace_embedding, FieldCoefficients, SpaceHandle, SpaceKind,
};

/// Scalar material coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub eps: f64,
    pub mu: f64,
}

impl Default for Material {
    fn default() -> Self {
        Material { eps: 1.0, mu: 1.0 }
    }
}

/// Reference-element data shared by all cells.
#[derive(Debug, Clone)]
pub struct ReferenceTables {
    pub vec_modal: ModalBasis,
    pub vec_dx: Mat<f64>,
    pub vec_dy: Mat<f64>,
    pub lagrange: LagrangeElement,
    pub lag_dx: Mat<f64>,
    pub lag_dy: Mat<f64>,
    /// `∫_0^1 φ̂_i ψ̂_a ds` along each local edge (multiplier × vector modal).
    pub edge_mult_vec: [Mat<f64>; 3],
    /// `∫_0^1 ψ̂_a q_i ds` along each local edge (scalar modal of degree r × edge Legendre).
    pub edge_scalar_q: [Mat<f64>; 3],
    pub div_elem: TraceElement,
    pub conf_elem: TraceElement,
}

impl ReferenceTables {
    pub fn new(k: usize, r: usize, m: usize) -> Self {
        let vec_modal = ModalBasis::new(k);
        let (vec_dx, vec_dy) = vec_modal.derivative_matrices();
        let lagrange = LagrangeElement::new(m);
        let (lag_dx, lag_dy) = lagrange.modal.derivative_matrices();
        let scal = ModalBasis::new(r);
        let rule = interval_rule(2 * (m + r) + 2);
        let mut edge_mult_vec: [Mat<f64>; 3] = std::array::from_fn(|_| Mat::zeros(lagrange.dim(), vec_modal.dim()));
        let mut edge_scalar_q: [Mat<f64>; 3] = std::array::from_fn(|_| Mat::zeros(scal.dim(), r + 1));
        for j in 0..3 {
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let x = edge_point(j, p[0]);
                let phi = lagrange.eval(x);
                let psi = vec_modal.eval(x);
                for (i, fi) in phi.iter().enumerate() {
                    for (a, pa) in psi.iter().enumerate() {
                        edge_mult_vec[j][(i, a)] += w * fi * pa;
                    }
                }
                let s = scal.eval(x);
                let q = edge_legendre(r, p[0]);
                for (a, sa) in s.iter().enumerate() {
                    for (i, qi) in q.iter().enumerate() {
                        edge_scalar_q[j][(a, i)] += w * sa * qi;
                    }
                }
            }
        }
        ReferenceTables {
            vec_modal,
            vec_dx,
            vec_dy,
            lagrange,
            lag_dx,
            lag_dy,
            edge_mult_vec,
            edge_scalar_q,
            div_elem: TraceElement::new(TraceKind::Normal, r),
            conf_elem: TraceElement::new(TraceKind::Tangential, k),
        }
    }
}

/// Assembled operators. Broken vector fields of degree `k` index rows/columns
/// named "broken"; the degree-`r` vector space hosting `D̂` is "broken_r".
#[derive(Debug, Clone)]
pub struct SystemMatrices {
    pub material: Material,
    /// `ε`-weighted broken mass.
    pub m: Sparse,
    pub m_plain: Sparse,
    /// Curl-curl stiffness `a(·,·)` with weight `μ⁻¹`.
    pub a: Sparse,
    /// Coupling `b(A′, Ĥ)` stored as multiplier × broken.
    pub b: Sparse,
    /// Element-wise gradient, broken scalar `P_r` → broken vector `P_k`.
    pub g: Sparse,
    /// Conforming embedding, broken × conforming.
    pub p: Sparse,
    pub mhat: Sparse,
    pub khat: Sparse,
    /// `∫ curl ψ_j φ_i`, multiplier × broken.
    pub x_h: Sparse,
    /// `∫ ψ_j · curl φ_i`, multiplier × broken.
    pub x_d: Sparse,
    /// Modal coefficients of `curl φ_i`, broken_r × multiplier.
    pub mult_curl: Sparse,
    /// Interpolation of broken_r polynomial fields into the div-conforming space.
    pub broken_r_to_div: Sparse,
    pub div_to_broken_r: Sparse,
    /// Exact expansion of `curl Ĥ` in the div-conforming space.
    pub curl_to_div: Sparse,
    /// `β(φ′, D̂) = Σ_K ∫_{∂K} φ′ D̂·n`, broken scalar × div-conforming.
    pub beta: Sparse,
    /// Injection broken `P_k` → broken_r `P_r`.
    pub inject: Sparse,
    pub m_plain_r: Sparse,
}

/// A mesh together with every space, reference table and assembled operator.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: Mesh,
    pub r: usize,
    pub k: usize,
    pub mult_degree: usize,
    pub broken: SpaceHandle,
    pub broken_r: SpaceHandle,
    pub scalar: SpaceHandle,
    pub multiplier: SpaceHandle,
    pub conforming: SpaceHandle,
    pub div: SpaceHandle,
    pub tables: ReferenceTables,
    pub matrices: SystemMatrices,
}

/// Largest supported method degree.
pub const MAX_R: usize = 5;

impl Discretization {
    /// Uniform `n × n` grid on `(0, π)²`.
    pub fn uniform(n: usize, r: usize, mult_degree: usize, material: Material) -> Result<Self> {
        Discretization::new(Mesh::uniform_grid(n, Rect::pi_square())?, r, mult_degree, material)
    }

    pub fn new(mesh: Mesh, r: usize, mult_degree: usize, material: Material) -> Result<Self> {
        if !(2..=MAX_R).contains(&r) {
            return Err(Error::Unsupported(format!("method degree r = {r} (supported 2..={MAX_R})")));
        }
        if !(1..=r + 1).contains(&mult_degree) {
            return Err(Error::Unsupported(format!(
                "multiplier degree {mult_degree} for r = {r} (supported 1..={})",
                r + 1
            )));
        }
        if !(material.eps > 0.0 && material.mu > 0.0) {
            return Err(Error::config("material", "ε and μ must be positive"));
        }
        let k = r - 1;
        let broken = build_space(&mesh, SpaceKind::BrokenVector(k))?;
        let broken_r = build_space(&mesh, SpaceKind::BrokenVector(r))?;
        let scalar = build_space(&mesh, SpaceKind::BrokenScalar(r))?;
        let multiplier = build_space(&mesh, SpaceKind::Multiplier(mult_degree))?;
        let conforming = build_space(&mesh, SpaceKind::ConformingEdge(k))?;
        let div = build_space(&mesh, SpaceKind::DivConforming(r))?;
        let tables = ReferenceTables::new(k, r, mult_degree);
        let matrices = assemble(&mesh, &tables, &broken, &broken_r, &scalar, &multiplier, &conforming, &div, material)?;
        Ok(Discretization {
            mesh,
            r,
            k,
            mult_degree,
            broken,
            broken_r,
            scalar,
            multiplier,
            conforming,
            div,
            tables,
            matrices,
        })
    }

    /// Whether the multiplier is rich enough for `ker B` to be the conforming space.
    pub fn is_conforming(&self) -> bool {
        self.mult_degree >= self.k + 2
    }

    pub fn material(&self) -> Material {
        self.matrices.material
    }

    /// L² projection of an analytic vector field onto the broken space of `kind`.
    pub fn project_vector(&self, kind: SpaceKind, f: &dyn Fn([f64; 2]) -> [f64; 2]) -> Result<FieldCoefficients> {
        match kind {
            SpaceKind::BrokenVector(d) => {
                let space = if d == self.k {
                    &self.broken
                } else if d == self.r {
                    &self.broken_r
                } else {
                    return Err(Error::DimensionMismatch(format!("no broken vector space of degree {d}")));
                };
                FieldCoefficients::new(space, project_broken_vector(&self.mesh, d, f))
            }
            SpaceKind::ConformingEdge(_) => {
                let c = project_broken_vector(&self.mesh, self.k, f);
                let mats = &self.matrices;
                let rhs = solvers::spmv_t(&mats.p, &solvers::spmv(&mats.m_plain, &c));
                let gram = solvers::congruence(&mats.p, &mats.m_plain);
                FieldCoefficients::new(&self.conforming, solvers::solve_spd(&gram, &rhs)?)
            }
            SpaceKind::DivConforming(_) => {
                let c = project_broken_vector(&self.mesh, self.r, f);
                let mats = &self.matrices;
                let rhs = solvers::spmv_t(&mats.div_to_broken_r, &solvers::spmv(&mats.m_plain_r, &c));
                let gram = solvers::congruence(&mats.div_to_broken_r, &mats.m_plain_r);
                FieldCoefficients::new(&self.div, solvers::solve_spd(&gram, &rhs)?)
            }
            other => Err(Error::DimensionMismatch(format!("{other:?} is not a vector space"))),
        }
    }

    /// L² projection of an analytic scalar field onto a scalar space.
    pub fn project_scalar(&self, kind: SpaceKind, f: &dyn Fn([f64; 2]) -> f64) -> Result<FieldCoefficients> {
        match kind {
            SpaceKind::BrokenScalar(d) if d == self.r => {
                FieldCoefficients::new(&self.scalar, project_broken_scalar(&self.mesh, d, f))
            }
            SpaceKind::Multiplier(_) => {
                let rule = triangle_rule((2 * self.mult_degree + 6).min(20));
                let lag = &self.tables.lagrange;
                let tab: Vec<Vec<f64>> = rule.points.iter().map(|p| lag.eval(*p)).collect();
                let mut load = vec![0.0; self.multiplier.dim];
                for cell in 0..self.mesh.num_cells() {
                    let g = self.mesh.geometry(cell);
                    let dofs = self.multiplier.cell_dofs(cell);
                    for (q, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                        let fv = f(g.map(*p)) * w * g.det.abs();
                        for (l, d) in dofs.iter().enumerate() {
                            load[d.unwrap()] += fv * tab[q][l];
                        }
                    }
                }
                FieldCoefficients::new(&self.multiplier, solvers::solve_spd(&self.matrices.mhat, &load)?)
            }
            other => Err(Error::DimensionMismatch(format!("cannot project a scalar onto {other:?}"))),
        }
    }
}

/// Quadrature degree used when projecting analytic data of unknown degree.
fn analytic_degree(d: usize) -> usize {
    (2 * d + 6).min(20)
}

/// Broken modal coefficients of the L² projection of `f` onto vector `P_d`.
pub fn project_broken_vector(mesh: &Mesh, d: usize, f: &dyn Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
    let modal = ModalBasis::new(d);
    let ns = modal.dim();
    let rule = triangle_rule(analytic_degree(d));
    let tab: Vec<Vec<f64>> = rule.points.iter().map(|p| modal.eval(*p)).collect();
    let mut out = vec![0.0; mesh.num_cells() * 2 * ns];
    for cell in 0..mesh.num_cells() {
        let g = mesh.geometry(cell);
        let base = cell * 2 * ns;
        for (q, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let v = f(g.map(*p));
            for a in 0..ns {
                out[base + a] += w * v[0] * tab[q][a];
                out[base + ns + a] += w * v[1] * tab[q][a];
            }
        }
    }
    out
}

/// Broken modal coefficients of the L² projection of `f` onto scalar `P_d`.
pub fn project_broken_scalar(mesh: &Mesh, d: usize, f: &dyn Fn([f64; 2]) -> f64) -> Vec<f64> {
    let modal = ModalBasis::new(d);
    let ns = modal.dim();
    let rule = triangle_rule(analytic_degree(d));
    let tab: Vec<Vec<f64>> = rule.points.iter().map(|p| modal.eval(*p)).collect();
    let mut out = vec![0.0; mesh.num_cells() * ns];
    for cell in 0..mesh.num_cells() {
        let g = mesh.geometry(cell);
        for (q, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let v = f(g.map(*p));
            for a in 0..ns {
                out[cell * ns + a] += w * v * tab[q][a];
            }
        }
    }
    out
}

/// Physical curl matrix `[−∂y | ∂x]` of a broken vector field on one cell,
/// mapping vector modal coefficients to scalar modal coefficients.
pub fn cell_curl(dx: &Mat<f64>, dy: &Mat<f64>, g: &CellGeometry) -> Mat<f64> {
    let (px, py) = physical_derivatives(dx, dy, g);
    let ns = dx.nrows();
    Mat::from_fn(ns, 2 * ns, |i, j| if j < ns { -py[(i, j)] } else { px[(i, j - ns)] })
}

/// Physical divergence matrix `[∂x | ∂y]` on one cell.
pub fn cell_div(dx: &Mat<f64>, dy: &Mat<f64>, g: &CellGeometry) -> Mat<f64> {
    let (px, py) = physical_derivatives(dx, dy, g);
    let ns = dx.nrows();
    Mat::from_fn(ns, 2 * ns, |i, j| if j < ns { px[(i, j)] } else { py[(i, j - ns)] })
}

fn push_dense(trips: &mut Vec<Triplet<usize, usize, f64>>, rows: &[usize], cols: &[usize], block: &Mat<f64>) {
    for (j, &c) in cols.iter().enumerate() {
        for (i, &r) in rows.iter().enumerate() {
            let v = block[(i, j)];
            if v != 0.0 {
                trips.push(Triplet::new(r, c, v));
            }
        }
    }
}

/// Local index of the local edge carrying local trace dof `l`, if any.
fn trace_owner(mesh: &Mesh, space: &SpaceHandle, cell: usize, l: usize, per_edge: usize) -> bool {
    if l >= 3 * per_edge {
        return true;
    }
    let e = mesh.cell_edges[cell][l / per_edge];
    mesh.edge_cells[e].first == cell && space.dof(cell, l).is_some()
}

/// Matrix `β` of the scalar constraint form against div-conforming fields.
pub fn assemble_constraint_form(mesh: &Mesh, scalar: &SpaceHandle, div: &SpaceHandle) -> Result<Sparse> {
    let (SpaceKind::BrokenScalar(r), SpaceKind::DivConforming(rd)) = (scalar.kind, div.kind) else {
        return Err(Error::DimensionMismatch("constraint form needs broken scalar and div spaces".into()));
    };
    if scalar.num_cells != mesh.num_cells() || div.num_cells != mesh.num_cells() {
        return Err(Error::DimensionMismatch("spaces built on a different mesh".into()));
    }
    let modal = ModalBasis::new(r);
    let ns = modal.dim();
    let rule = interval_rule(r + rd + 2);
    let mut tables: [Mat<f64>; 3] = std::array::from_fn(|_| Mat::zeros(ns, rd + 1));
    for (j, t) in tables.iter_mut().enumerate() {
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let s = modal.eval(edge_point(j, p[0]));
            let q = edge_legendre(rd, p[0]);
            for a in 0..ns {
                for i in 0..=rd {
                    t[(a, i)] += w * s[a] * q[i];
                }
            }
        }
    }
    let per_edge = rd + 1;
    let mut trips = Vec::new();
    for cell in 0..mesh.num_cells() {
        for l in 0..3 * per_edge {
            let (j, i) = (l / per_edge, l % per_edge);
            let Some(gl) = div.dof(cell, l) else { continue };
            let s = div.sign(cell, l);
            for a in 0..ns {
                let v = s * tables[j][(a, i)];
                if v != 0.0 {
                    trips.push(Triplet::new(cell * ns + a, gl, v));
                }
            }
        }
    }
    Ok(sparse_from_triplets(scalar.dim, div.dim, &trips))
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    mesh: &Mesh,
    t: &ReferenceTables,
    broken: &SpaceHandle,
    broken_r: &SpaceHandle,
    scalar: &SpaceHandle,
    mult: &SpaceHandle,
    conf: &SpaceHandle,
    div: &SpaceHandle,
    material: Material,
) -> Result<SystemMatrices> {
    let ns_k = t.vec_modal.dim();
    let SpaceKind::BrokenVector(r) = broken_r.kind else { unreachable!() };
    let ns_r = scalar_dim(r);
    let ns_m = t.lagrange.modal.dim();
    let n_lag = t.lagrange.dim();
    let c = &t.lagrange.coeffs;
    let mu_inv = 1.0 / material.mu;

    let mut m_plain = Vec::new();
    let mut m_plain_r = Vec::new();
    let mut a_tr = Vec::new();
    let mut b_tr = Vec::new();
    let mut mhat = Vec::new();
    let mut khat = Vec::new();
    let mut xh = Vec::new();
    let mut xd = Vec::new();
    let mut mcurl = Vec::new();
    let mut to_div = Vec::new();
    let mut inject = Vec::new();

    let div_elem = &t.div_elem;
    let per_edge_div = r + 1;

    for cell in 0..mesh.num_cells() {
        let g = mesh.geometry(cell);
        let vol = g.det.abs();
        let brk: Vec<usize> = (0..2 * ns_k).map(|i| cell * 2 * ns_k + i).collect();
        let brk_r: Vec<usize> = (0..2 * ns_r).map(|i| cell * 2 * ns_r + i).collect();
        let mdofs: Vec<usize> = mult.cell_dofs(cell).iter().map(|d| d.unwrap()).collect();

        for &i in &brk {
            m_plain.push(Triplet::new(i, i, vol));
        }
        for &i in &brk_r {
            m_plain_r.push(Triplet::new(i, i, vol));
        }
        for comp in 0..2 {
            for a in 0..ns_k {
                inject.push(Triplet::new(brk_r[comp * ns_r + a], brk[comp * ns_k + a], 1.0));
            }
        }

        // curl-curl
        let curl = cell_curl(&t.vec_dx, &t.vec_dy, &g);
        let local_a = curl.transpose() * &curl * faer::Scale(vol * mu_inv);
        push_dense(&mut a_tr, &brk, &brk, &local_a);

        // multiplier mass and stiffness
        let (lx, ly) = physical_derivatives(&t.lag_dx, &t.lag_dy, &g);
        let gx = &lx * c;
        let gy = &ly * c;
        let local_mhat = c.transpose() * c * faer::Scale(vol);
        let local_khat = (gx.transpose() * &gx + gy.transpose() * &gy) * faer::Scale(vol);
        push_dense(&mut mhat, &mdofs, &mdofs, &local_mhat);
        push_dense(&mut khat, &mdofs, &mdofs, &local_khat);

        // ∫ curl ψ_j φ_i = |det| Σ_b curl[b, j] C[b, i]
        let nb = ns_k.min(ns_m);
        let local_xh = Mat::from_fn(n_lag, 2 * ns_k, |i, j| {
            vol * (0..nb).map(|b| c[(b, i)] * curl[(b, j)]).sum::<f64>()
        });
        push_dense(&mut xh, &mdofs, &brk, &local_xh);

        // curl φ_i = (∂y φ_i, −∂x φ_i) in degree-r modal coefficients
        let rows = ns_r.min(ns_m);
        let local_curl = Mat::from_fn(2 * ns_r, n_lag, |row, i| {
            let (comp, a) = (row / ns_r, row % ns_r);
            if a >= rows {
                0.0
            } else if comp == 0 {
                gy[(a, i)]
            } else {
                -gx[(a, i)]
            }
        });
        push_dense(&mut mcurl, &brk_r, &mdofs, &local_curl);
        let local_xd = Mat::from_fn(n_lag, 2 * ns_k, |i, j| {
            let (comp, a) = (j / ns_k, j % ns_k);
            vol * local_curl[(comp * ns_r + a, i)]
        });
        push_dense(&mut xd, &mdofs, &brk, &local_xd);

        // coupling: −Σ_K ∫_{∂K} φ_i (ψ·t) ds
        for j in 0..3 {
            let ev = g.edge_vector(j);
            let tab = &t.edge_mult_vec[j];
            for (i, &gi) in mdofs.iter().enumerate() {
                for a in 0..ns_k {
                    let v = tab[(i, a)];
                    if v.abs() < 1e-15 {
                        continue;
                    }
                    b_tr.push(Triplet::new(gi, brk[a], -v * ev[0]));
                    b_tr.push(Triplet::new(gi, brk[ns_k + a], -v * ev[1]));
                }
            }
        }

        // div-conforming interpolation of broken_r polynomials, from the owner cell
        let pull = inverse_block(&piola_block(&g));
        for l in 0..div_elem.dim() {
            if !trace_owner(mesh, div, cell, l, per_edge_div) {
                continue;
            }
            let gl = div.dof(cell, l).unwrap();
            let s = div.sign(cell, l);
            // functional row composed with the pull-back of physical coefficients
            let row: Vec<f64> = (0..2 * ns_r).map(|col| div_elem.functionals[(l, col)]).collect();
            for a in 0..ns_r {
                let (fx, fy) = (row[a], row[ns_r + a]);
                let vx = fx * pull[0][0] + fy * pull[1][0];
                let vy = fx * pull[0][1] + fy * pull[1][1];
                if vx != 0.0 {
                    to_div.push(Triplet::new(gl, brk_r[a], s * vx));
                }
                if vy != 0.0 {
                    to_div.push(Triplet::new(gl, brk_r[ns_r + a], s * vy));
                }
            }
        }
    }

    let nb = broken.dim;
    let nr = broken_r.dim;
    let nm = mult.dim;
    let m_plain = sparse_from_triplets(nb, nb, &m_plain);
    let m = solvers::add_scaled(material.eps, &m_plain, 0.0, &m_plain);
    let mult_curl = sparse_from_triplets(nr, nm, &mcurl);
    let broken_r_to_div = sparse_from_triplets(div.dim, nr, &to_div);
    let curl_to_div = solvers::matmul(&broken_r_to_div, &mult_curl);
    Ok(SystemMatrices {
        material,
        m,
        m_plain,
        a: sparse_from_triplets(nb, nb, &a_tr),
        b: sparse_from_triplets(nm, nb, &b_tr),
        g: grad_embedding(mesh, scalar, &build_space(mesh, SpaceKind::BrokenVector(r - 1))?)?,
        p: conforming_embedding(mesh, broken, conf)?,
        mhat: sparse_from_triplets(nm, nm, &mhat),
        khat: sparse_from_triplets(nm, nm, &khat),
        x_h: sparse_from_triplets(nm, nb, &xh),
        x_d: sparse_from_triplets(nm, nb, &xd),
        mult_curl,
        broken_r_to_div,
        div_to_broken_r: trace_embedding(mesh, broken_r, div)?,
        curl_to_div,
        beta: assemble_constraint_form(mesh, scalar, div)?,
        inject: sparse_from_triplets(nr, nb, &inject),
        m_plain_r: sparse_from_triplets(nr, nr, &m_plain_r),
    })
}
