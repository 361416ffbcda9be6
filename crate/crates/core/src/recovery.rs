//! Recovery of the numerical trace `Ĥ` from the hybrid constraint.
//!
//! `Ĥ` minimizes `½ĥᵀQĥ − qᵀĥ` with `Q = M̂ + K̂` subject to `Bᵀĥ = g`.
//! The constraint only sees the moments of `Ĥ` against `P_k` on every edge.
//! With the conforming multiplier degree `k + 2` those moments fix each edge
//! trace once its two endpoint values are chosen, so the free directions are
//! the vertex values and the cell bubbles and the minimization is a sparse
//! SPD solve. Other multiplier degrees use a dense constrained
//! least-squares solve.

use faer::sparse::Triplet;
use faer::Mat;

use crate::assembly::Discretization;
use crate::error::{Error, Result};
use crate::refelem::{edge_legendre, TraceElement, TraceKind};
use crate::solvers::{self, sparse_from_triplets, ConstrainedLsq, Sparse, SpdFactor};
use crate::spaces::trace_local_coeffs;

/// Precomputed solver for `Ĥ`.
#[derive(Debug, Clone)]
pub enum HatRecovery {
    Local(Box<LocalRecovery>),
    Dense(Box<DenseRecovery>),
}

impl HatRecovery {
    pub fn new(disc: &Discretization, rank_tol: f64) -> Result<Self> {
        if disc.is_conforming() {
            Ok(HatRecovery::Local(Box::new(LocalRecovery::new(disc)?)))
        } else {
            Ok(HatRecovery::Dense(Box::new(DenseRecovery::new(disc, rank_tol)?)))
        }
    }

    /// Minimizer of `½ĥᵀQĥ − qᵀĥ` subject to `Bᵀĥ = g`.
    pub fn solve(&self, q: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        match self {
            HatRecovery::Local(l) => l.solve(q, g),
            HatRecovery::Dense(d) => d.solve.solve(q, g),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DenseRecovery {
    solve: ConstrainedLsq,
}

impl DenseRecovery {
    pub fn new(disc: &Discretization, rank_tol: f64) -> Result<Self> {
        let m = &disc.matrices;
        let q = solvers::dense_from_sparse(&solvers::add_scaled(1.0, &m.mhat, 1.0, &m.khat));
        let c = solvers::dense_from_sparse(&solvers::transpose(&m.b));
        Ok(DenseRecovery {
            solve: ConstrainedLsq::new(q.as_ref(), c.as_ref(), rank_tol)?,
        })
    }
}

#[derive(Debug, Clone)]
struct EdgeData {
    /// Broken coefficients of the local tangential basis functions on the
    /// representative cell, as (global broken index, value) lists.
    tests: Vec<Vec<(usize, f64)>>,
    /// Whether the representative cell traverses the edge in global direction.
    forward: bool,
    start: usize,
    end: usize,
}

#[derive(Debug, Clone)]
pub struct LocalRecovery {
    k: usize,
    num_vertices: usize,
    per_edge: usize,
    dim: usize,
    broken_dim: usize,
    edges: Vec<EdgeData>,
    /// `q_i(0)`, `q_i(1)` and `q_i` at the edge nodes, for `i ≤ k + 2`.
    q_start: Vec<f64>,
    q_end: Vec<f64>,
    q_nodes: Vec<Vec<f64>>,
    /// Inverse of the endpoint values of `(q_{k+1}, q_{k+2})`.
    ends_inv: [[f64; 2]; 2],
    /// Free directions: vertex modes with moment-free edge traces, then bubbles.
    free: Sparse,
    free_factor: SpdFactor,
    q_mat: Sparse,
}

impl LocalRecovery {
    pub fn new(disc: &Discretization) -> Result<Self> {
        if !disc.is_conforming() {
            return Err(Error::Unsupported("local Ĥ recovery needs multiplier degree k + 2".into()));
        }
        let mesh = &disc.mesh;
        let k = disc.k;
        let m = disc.mult_degree;
        let per_edge = m - 1;
        let nv = mesh.num_vertices();
        let ne = mesh.num_edges();
        let dim = disc.multiplier.dim;
        let ld = disc.broken.local_dim();
        let elem = TraceElement::new(TraceKind::Tangential, k);
        let mut edges = Vec::with_capacity(ne);
        for e in 0..ne {
            let cell = mesh.edge_cells[e].first;
            let j = (0..3).find(|&j| mesh.cell_edges[cell][j] == e).expect("edge belongs to its cell");
            let local = trace_local_coeffs(&elem, &mesh.geometry(cell));
            let tests = (0..=k)
                .map(|i| {
                    local[j * (k + 1) + i]
                        .iter()
                        .enumerate()
                        .filter(|(_, v)| **v != 0.0)
                        .map(|(t, v)| (cell * ld + t, *v))
                        .collect()
                })
                .collect();
            let [start, end] = mesh.edges[e];
            edges.push(EdgeData {
                tests,
                forward: mesh.cell_edge_signs[cell][j] > 0.0,
                start,
                end,
            });
        }
        let q_start = edge_legendre(k + 2, 0.0);
        let q_end = edge_legendre(k + 2, 1.0);
        let q_nodes: Vec<Vec<f64>> = (0..per_edge).map(|p| edge_legendre(k + 2, (p + 1) as f64 / m as f64)).collect();
        let (a, b, c, d) = (q_start[k + 1], q_start[k + 2], q_end[k + 1], q_end[k + 2]);
        let det = a * d - b * c;
        let ends_inv = [[d / det, -b / det], [-c / det, a / det]];

        let mut ztrips = Vec::new();
        for (e, ed) in edges.iter().enumerate() {
            for (v, vals) in [(ed.start, [1.0, 0.0]), (ed.end, [0.0, 1.0])] {
                let al = ends_inv[0][0] * vals[0] + ends_inv[0][1] * vals[1];
                let be = ends_inv[1][0] * vals[0] + ends_inv[1][1] * vals[1];
                for (p, qn) in q_nodes.iter().enumerate() {
                    ztrips.push(Triplet::new(nv + e * per_edge + p, v, al * qn[k + 1] + be * qn[k + 2]));
                }
            }
        }
        for v in 0..nv {
            ztrips.push(Triplet::new(v, v, 1.0));
        }
        let first_interior = nv + ne * per_edge;
        for i in first_interior..dim {
            ztrips.push(Triplet::new(i, nv + i - first_interior, 1.0));
        }
        let free = sparse_from_triplets(dim, nv + dim - first_interior, &ztrips);
        let q_mat = solvers::add_scaled(1.0, &disc.matrices.mhat, 1.0, &disc.matrices.khat);
        let free_factor = SpdFactor::new(&solvers::congruence(&free, &q_mat))?;
        Ok(LocalRecovery {
            k,
            num_vertices: nv,
            per_edge,
            dim,
            broken_dim: disc.broken.dim,
            edges,
            q_start,
            q_end,
            q_nodes,
            ends_inv,
            free,
            free_factor,
            q_mat,
        })
    }

    /// Edge moments `∫_0^1 Ĥ q_i ds` in global edge direction, read off `g`.
    fn moments(&self, g: &[f64]) -> Vec<Vec<f64>> {
        self.edges
            .iter()
            .map(|ed| {
                ed.tests
                    .iter()
                    .enumerate()
                    .map(|(i, t)| {
                        let mu = -t.iter().map(|&(idx, v)| v * g[idx]).sum::<f64>();
                        if ed.forward || i % 2 == 0 {
                            mu
                        } else {
                            -mu
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn solve(&self, q: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        if q.len() != self.dim || g.len() != self.broken_dim {
            return Err(Error::DimensionMismatch("Ĥ recovery right-hand side".into()));
        }
        let k = self.k;
        let nv = self.num_vertices;
        let partial = |c: &[f64], table: &[f64]| c.iter().zip(table).map(|(a, b)| a * b).sum::<f64>();
        // particular solution: zero at the vertices, prescribed moments on every edge
        let mut h = vec![0.0; self.dim];
        for (e, c) in self.moments(g).iter().enumerate() {
            let (s0, s1) = (partial(c, &self.q_start), partial(c, &self.q_end));
            let al = -(self.ends_inv[0][0] * s0 + self.ends_inv[0][1] * s1);
            let be = -(self.ends_inv[1][0] * s0 + self.ends_inv[1][1] * s1);
            for (p, qn) in self.q_nodes.iter().enumerate() {
                h[nv + e * self.per_edge + p] = partial(c, qn) + al * qn[k + 1] + be * qn[k + 2];
            }
        }
        let qh = solvers::spmv(&self.q_mat, &h);
        let r: Vec<f64> = q.iter().zip(&qh).map(|(a, b)| a - b).collect();
        let y = self.free_factor.solve(&solvers::spmv_t(&self.free, &r));
        for (hv, zv) in h.iter_mut().zip(solvers::spmv(&self.free, &y)) {
            *hv += zv;
        }
        solvers::check_finite(&h, "Ĥ recovery")?;
        Ok(h)
    }
}

/// Dense `Q` and `Bᵀ` for small problems, used by tests and oracles.
pub fn dense_problem(disc: &Discretization) -> (Mat<f64>, Mat<f64>) {
    let m = &disc.matrices;
    (
        solvers::dense_from_sparse(&solvers::add_scaled(1.0, &m.mhat, 1.0, &m.khat)),
        solvers::dense_from_sparse(&solvers::transpose(&m.b)),
    )
}
