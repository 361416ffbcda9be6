//! Sparse and dense linear algebra kernels.
//!
//! Sparse factorizations come from `faer`; this module adds the
//! equality-constrained least-squares solver, null-space extraction and a
//! shift-invert eigensolver on top.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Col, Mat, MatRef, Side};

use crate::error::{Error, Result};

pub type Sparse = SparseColMat<usize, f64>;

/// Default relative threshold for numerical rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Largest column count accepted by dense decompositions.
pub const DENSE_LIMIT: usize = 20_000;

pub fn sparse_from_triplets(nrows: usize, ncols: usize, trips: &[Triplet<usize, usize, f64>]) -> Sparse {
    SparseColMat::try_new_from_triplets(nrows, ncols, trips).expect("valid sparse triplets")
}

pub fn identity(n: usize) -> Sparse {
    let trips: Vec<_> = (0..n).map(|i| Triplet::new(i, i, 1.0)).collect();
    sparse_from_triplets(n, n, &trips)
}

/// `y = A x`.
pub fn spmv(a: &Sparse, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.ncols(), x.len(), "spmv dimension");
    let s = a.symbolic();
    let (rows, vals) = (s.row_idx(), a.val());
    let mut y = vec![0.0; a.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        for p in s.col_range(j) {
            y[rows[p]] += vals[p] * xj;
        }
    }
    y
}

/// `y = Aᵀ x`.
pub fn spmv_t(a: &Sparse, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.nrows(), x.len(), "spmv_t dimension");
    let s = a.symbolic();
    let (rows, vals) = (s.row_idx(), a.val());
    (0..a.ncols())
        .map(|j| s.col_range(j).map(|p| vals[p] * x[rows[p]]).sum())
        .collect()
}

pub fn transpose(a: &Sparse) -> Sparse {
    a.as_ref().transpose().to_col_major().expect("sparse transpose")
}

pub fn matmul(a: &Sparse, b: &Sparse) -> Sparse {
    a * b
}

/// `Aᵀ B A` for sparse operands.
pub fn congruence(a: &Sparse, b: &Sparse) -> Sparse {
    let ba = b * a;
    &transpose(a) * &ba
}

/// `αA + βB`.
pub fn add_scaled(alpha: f64, a: &Sparse, beta: f64, b: &Sparse) -> Sparse {
    let mut trips = triplets(a, alpha);
    trips.extend(triplets(b, beta));
    sparse_from_triplets(a.nrows(), a.ncols(), &trips)
}

pub fn triplets(a: &Sparse, scale: f64) -> Vec<Triplet<usize, usize, f64>> {
    a.triplet_iter().map(|t| Triplet::new(t.row, t.col, scale * *t.val)).collect()
}

/// Maximum absolute entry.
pub fn max_abs(a: &Sparse) -> f64 {
    a.val().iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `‖A − Aᵀ‖_max`.
pub fn asymmetry(a: &Sparse) -> f64 {
    max_abs(&add_scaled(1.0, a, -1.0, &transpose(a)))
}

pub(crate) fn check_finite(x: &[f64], what: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.into()))
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn to_col(x: &[f64]) -> Col<f64> {
    Col::from_fn(x.len(), |i| x[i])
}

fn from_col(c: &Col<f64>) -> Vec<f64> {
    (0..c.nrows()).map(|i| c[i]).collect()
}

/// Sparse Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    llt: Llt<usize, f64>,
    n: usize,
}

impl SpdFactor {
    pub fn new(a: &Sparse) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch("SPD factorization of a non-square matrix".into()));
        }
        let llt = a
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::NotPositiveDefinite(format!("{e:?}")))?;
        Ok(SpdFactor { llt, n: a.nrows() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        from_col(&self.llt.solve(to_col(b)))
    }
}

/// Solve `A x = b` for a sparse SPD `A`.
pub fn solve_spd(a: &Sparse, b: &[f64]) -> Result<Vec<f64>> {
    let x = SpdFactor::new(a)?.solve(b);
    check_finite(&x, "SPD solve")?;
    Ok(x)
}

/// Sparse LU factor of a general square matrix.
#[derive(Debug, Clone)]
pub struct LuFactor {
    lu: Lu<usize, f64>,
}

impl LuFactor {
    pub fn new(a: &Sparse) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch("LU factorization of a non-square matrix".into()));
        }
        let lu = a.sp_lu().map_err(|e| Error::Singular(format!("{e:?}")))?;
        Ok(LuFactor { lu })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let x = from_col(&self.lu.solve(to_col(b)));
        if x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(Error::Singular("LU solve produced non-finite values".into()))
        }
    }
}

pub fn dense_from_sparse(a: &Sparse) -> Mat<f64> {
    a.to_dense()
}

fn col_vec(m: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum()).collect()
}

fn col_vec_t(m: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    (0..m.ncols()).map(|j| (0..m.nrows()).map(|i| m[(i, j)] * x[i]).sum()).collect()
}

/// Orthonormal basis of `{x : B x = 0}` from a dense SVD.
pub fn nullspace_basis(b: MatRef<'_, f64>, rank_tol: f64) -> Result<Mat<f64>> {
    let n = b.ncols();
    if n > DENSE_LIMIT {
        return Err(Error::SizeLimit { size: n, limit: DENSE_LIMIT });
    }
    if b.nrows() == 0 {
        return Ok(Mat::identity(n, n));
    }
    let svd = b.svd().map_err(|_| Error::Singular("null-space SVD failed".into()))?;
    let s = svd.S().column_vector();
    let smax = if s.nrows() > 0 { s[0] } else { 0.0 };
    let rank = (0..s.nrows()).filter(|&i| s[i] > rank_tol * smax && smax > 0.0).count();
    let v = svd.V();
    Ok(Mat::from_fn(n, n - rank, |i, j| v[(i, rank + j)]))
}

/// Equality-constrained quadratic minimization with precomputed factorizations:
/// minimize `½ xᵀQx − qᵀx` subject to `Cx = g`, returning the minimum-norm
/// minimizer when it is not unique.
#[derive(Debug, Clone)]
pub struct ConstrainedLsq {
    q_mat: Mat<f64>,
    c_mat: Mat<f64>,
    c_pinv: Mat<f64>,
    sigma_max: f64,
    null: Mat<f64>,
    h_pinv: Mat<f64>,
    h_null: Mat<f64>,
    rank_tol: f64,
}

impl ConstrainedLsq {
    pub fn new(q: MatRef<'_, f64>, c: MatRef<'_, f64>, rank_tol: f64) -> Result<Self> {
        let n = q.nrows();
        if q.ncols() != n || c.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "objective {}x{} with constraints {}x{}",
                q.nrows(),
                q.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        if n > DENSE_LIMIT {
            return Err(Error::SizeLimit { size: n, limit: DENSE_LIMIT });
        }
        let (c_pinv, null, sigma_max) = if c.nrows() == 0 {
            (Mat::zeros(n, 0), Mat::identity(n, n), 0.0)
        } else {
            let svd = c.svd().map_err(|_| Error::Singular("constraint SVD failed".into()))?;
            let s = svd.S().column_vector();
            let smax = s[0];
            let rank = (0..s.nrows()).filter(|&i| smax > 0.0 && s[i] > rank_tol * smax).count();
            let (u, v) = (svd.U(), svd.V());
            let pinv = Mat::from_fn(n, c.nrows(), |i, j| (0..rank).map(|r| v[(i, r)] * u[(j, r)] / s[r]).sum());
            let null = Mat::from_fn(n, n - rank, |i, j| v[(i, rank + j)]);
            (pinv, null, smax)
        };
        let h = null.transpose() * q * &null;
        let h = Mat::from_fn(h.nrows(), h.ncols(), |i, j| 0.5 * (h[(i, j)] + h[(j, i)]));
        let (h_pinv, h_null) = if h.nrows() == 0 {
            (Mat::zeros(0, 0), Mat::zeros(0, 0))
        } else {
            let eig = h
                .self_adjoint_eigen(Side::Lower)
                .map_err(|_| Error::Singular("reduced Hessian eigendecomposition failed".into()))?;
            let lam = eig.S().column_vector();
            let w = eig.U();
            let lmax = (0..lam.nrows()).fold(0.0f64, |m, i| m.max(lam[i].abs()));
            let cut = rank_tol * lmax.max(f64::MIN_POSITIVE);
            if (0..lam.nrows()).any(|i| lam[i] < -cut) {
                return Err(Error::Unbounded);
            }
            let keep: Vec<usize> = (0..lam.nrows()).filter(|&i| lam[i] > cut).collect();
            let drop: Vec<usize> = (0..lam.nrows()).filter(|&i| lam[i] <= cut).collect();
            let m = h.nrows();
            let pinv = Mat::from_fn(m, m, |i, j| keep.iter().map(|&k| w[(i, k)] * w[(j, k)] / lam[k]).sum());
            let hn = Mat::from_fn(m, drop.len(), |i, j| w[(i, drop[j])]);
            (pinv, hn)
        };
        Ok(ConstrainedLsq {
            q_mat: q.to_owned(),
            c_mat: c.to_owned(),
            c_pinv,
            sigma_max,
            null,
            h_pinv,
            h_null,
            rank_tol,
        })
    }

    /// Dimension of the feasible affine subspace.
    pub fn nullity(&self) -> usize {
        self.null.ncols()
    }

    pub fn solve(&self, q: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        let n = self.q_mat.nrows();
        if q.len() != n || g.len() != self.c_mat.nrows() {
            return Err(Error::DimensionMismatch("constrained least-squares right-hand side".into()));
        }
        let xp = col_vec(self.c_pinv.as_ref(), g);
        let cx = col_vec(self.c_mat.as_ref(), &xp);
        let res = norm(&cx.iter().zip(g).map(|(a, b)| a - b).collect::<Vec<_>>());
        let tolerance = self.rank_tol.max(1e-13) * (self.sigma_max * norm(&xp) + norm(g)) + f64::MIN_POSITIVE;
        if !(res <= tolerance) {
            return Err(Error::Infeasible { residual: res, tolerance });
        }
        let qx = col_vec(self.q_mat.as_ref(), &xp);
        let rhs: Vec<f64> = q.iter().zip(&qx).map(|(a, b)| a - b).collect();
        let b = col_vec_t(self.null.as_ref(), &rhs);
        if self.h_null.ncols() > 0 {
            let stray = norm(&col_vec_t(self.h_null.as_ref(), &b));
            if stray > 1e-8 * (norm(&rhs) + 1.0) {
                return Err(Error::Unbounded);
            }
        }
        let y = col_vec(self.h_pinv.as_ref(), &b);
        let zy = col_vec(self.null.as_ref(), &y);
        let x: Vec<f64> = xp.iter().zip(&zy).map(|(a, b)| a + b).collect();
        check_finite(&x, "constrained least squares")?;
        Ok(x)
    }
}

/// One-shot [`ConstrainedLsq`].
pub fn constrained_lsq(q_mat: MatRef<'_, f64>, q: &[f64], c: MatRef<'_, f64>, g: &[f64], rank_tol: f64) -> Result<Vec<f64>> {
    ConstrainedLsq::new(q_mat, c, rank_tol)?.solve(q, g)
}

/// Symmetric saddle-point system `[Q Eᵀ; E 0]` with a full-row-rank `E`,
/// factored once by sparse LU.
#[derive(Debug, Clone)]
pub struct KktSolver {
    lu: LuFactor,
    n: usize,
    m: usize,
}

impl KktSolver {
    pub fn new(q: &Sparse, e: &Sparse) -> Result<Self> {
        let (n, m) = (q.nrows(), e.nrows());
        if e.ncols() != n {
            return Err(Error::DimensionMismatch("KKT constraint width".into()));
        }
        let mut trips = triplets(q, 1.0);
        for t in e.triplet_iter() {
            trips.push(Triplet::new(n + t.row, t.col, *t.val));
            trips.push(Triplet::new(t.col, n + t.row, *t.val));
        }
        let k = sparse_from_triplets(n + m, n + m, &trips);
        Ok(KktSolver { lu: LuFactor::new(&k)?, n, m })
    }

    /// Primal solution of `min ½xᵀQx − qᵀx` subject to `Ex = g`.
    pub fn solve(&self, q: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        let mut rhs = Vec::with_capacity(self.n + self.m);
        rhs.extend_from_slice(q);
        rhs.extend_from_slice(g);
        let mut sol = self.lu.solve(&rhs)?;
        sol.truncate(self.n);
        Ok(sol)
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    /// M-normalized eigenvector.
    pub vector: Vec<f64>,
    /// `‖A x − λ M x‖ / ‖x‖`.
    pub residual: f64,
    pub iterations: usize,
}

/// Eigenpair of `A x = λ M x` nearest `sigma` by shift-invert inverse iteration.
pub fn eigen_shift_invert(a: &Sparse, m: &Sparse, sigma: f64, tol: f64, max_iter: usize) -> Result<EigenPair> {
    let n = a.nrows();
    if a.ncols() != n || m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch("eigen pencil must be square and matching".into()));
    }
    let mut shift = sigma;
    let mut factor = None;
    for attempt in 0..4 {
        match LuFactor::new(&add_scaled(1.0, a, -shift, m)) {
            Ok(f) => {
                // probe once to detect numerically singular factors
                if f.solve(&vec![1.0; n]).is_ok() {
                    factor = Some(f);
                    break;
                }
            }
            Err(_) => {}
        }
        shift = sigma + 1e-8 * (1.0 + sigma.abs()) * 10f64.powi(attempt);
    }
    let factor = factor.ok_or_else(|| Error::Singular(format!("shifted pencil at {sigma}")))?;
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * std::f64::consts::FRAC_1_SQRT_2).sin()).collect();
    // iterate until round-off stagnation, then accept the best iterate if it meets `tol`
    let mut best: Option<EigenPair> = None;
    let mut stalled = 0;
    for it in 1..=max_iter {
        let mx = spmv(m, &x);
        let mut y = factor.solve(&mx)?;
        let my = spmv(m, &y);
        let scale = dot(&y, &my).sqrt();
        if !(scale > 0.0) {
            return Err(Error::NonFinite("inverse iteration".into()));
        }
        y.iter_mut().for_each(|v| *v /= scale);
        let ay = spmv(a, &y);
        let my: Vec<f64> = my.iter().map(|v| v / scale).collect();
        let value = dot(&y, &ay);
        let r: Vec<f64> = ay.iter().zip(&my).map(|(p, q)| p - value * q).collect();
        let residual = norm(&r) / norm(&y);
        x = y;
        if best.as_ref().is_none_or(|b| residual < 0.9 * b.residual) {
            stalled = 0;
        } else {
            stalled += 1;
        }
        if best.as_ref().is_none_or(|b| residual < b.residual) {
            best = Some(EigenPair {
                value,
                vector: x.clone(),
                residual,
                iterations: it,
            });
        }
        if residual <= 1e-3 * tol || stalled >= 5 {
            break;
        }
    }
    match best {
        Some(pair) if pair.residual <= tol => Ok(pair),
        other => Err(Error::NoConvergence {
            iterations: max_iter,
            residual: other.map_or(f64::INFINITY, |p| p.residual),
        }),
    }
}
