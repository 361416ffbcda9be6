//! Orthonormal modal polynomials on the reference triangle.
//!
//! The basis is the Dubiner family, ordered hierarchically by total degree so
//! that the first `dim(P_d)` functions span `P_d` for every `d`. Orthonormality
//! makes every reference mass matrix the identity.

use faer::Mat;

/// Values `P_0..=P_n` of the Jacobi polynomials `P^{(α, β)}` at `x`.
pub fn jacobi(n: usize, alpha: f64, beta: f64, x: f64) -> Vec<f64> {
    let mut p = vec![1.0; n + 1];
    if n == 0 {
        return p;
    }
    p[1] = 0.5 * (alpha - beta + (alpha + beta + 2.0) * x);
    for k in 2..=n {
        let k_f = k as f64;
        let s = 2.0 * k_f + alpha + beta;
        let a1 = 2.0 * k_f * (k_f + alpha + beta) * (s - 2.0);
        let a2 = (s - 1.0) * (alpha * alpha - beta * beta);
        let a3 = (s - 2.0) * (s - 1.0) * s;
        let a4 = 2.0 * (k_f + alpha - 1.0) * (k_f + beta - 1.0) * s;
        p[k] = ((a2 + a3 * x) * p[k - 1] - a4 * p[k - 2]) / a1;
    }
    p
}

/// Derivatives of `P_0..=P_n^{(α, β)}` at `x`.
pub fn jacobi_derivative(n: usize, alpha: f64, beta: f64, x: f64) -> Vec<f64> {
    let mut d = vec![0.0; n + 1];
    if n == 0 {
        return d;
    }
    let shifted = jacobi(n - 1, alpha + 1.0, beta + 1.0, x);
    for k in 1..=n {
        d[k] = 0.5 * (k as f64 + alpha + beta + 1.0) * shifted[k - 1];
    }
    d
}

/// Orthonormal Legendre polynomials on `[0, 1]`: `√(2i+1) P_i(2s − 1)`.
pub fn edge_legendre(n: usize, s: f64) -> Vec<f64> {
    jacobi(n, 0.0, 0.0, 2.0 * s - 1.0)
        .into_iter()
        .enumerate()
        .map(|(i, v)| (2.0 * i as f64 + 1.0).sqrt() * v)
        .collect()
}

/// Number of polynomials of total degree ≤ `d` in two variables.
pub const fn scalar_dim(d: usize) -> usize {
    (d + 1) * (d + 2) / 2
}

/// Degree pairs `(p, q)` of the modal functions in storage order.
pub fn modal_indices(degree: usize) -> Vec<(usize, usize)> {
    let mut idx = Vec::with_capacity(scalar_dim(degree));
    for t in 0..=degree {
        for q in 0..=t {
            idx.push((t - q, q));
        }
    }
    idx
}

#[derive(Debug, Clone)]
pub struct ModalBasis {
    pub degree: usize,
    indices: Vec<(usize, usize)>,
}

impl ModalBasis {
    pub fn new(degree: usize) -> Self {
        ModalBasis {
            degree,
            indices: modal_indices(degree),
        }
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    /// Values and gradients of every basis function at a reference point.
    pub fn eval_with_grad(&self, pt: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let d = self.degree;
        let (x, y) = (pt[0], pt[1]);
        let u = 2.0 * x + y - 1.0;
        let v = 1.0 - y;
        // scaled Legendre Q_p(u, v) = v^p P_p(u / v) and its partials
        let mut q = vec![0.0; d + 1];
        let mut qu = vec![0.0; d + 1];
        let mut qv = vec![0.0; d + 1];
        q[0] = 1.0;
        if d >= 1 {
            q[1] = u;
            qu[1] = 1.0;
        }
        for p in 1..d {
            let a = (2 * p + 1) as f64;
            let b = p as f64;
            let c = (p + 1) as f64;
            q[p + 1] = (a * u * q[p] - b * v * v * q[p - 1]) / c;
            qu[p + 1] = (a * (q[p] + u * qu[p]) - b * v * v * qu[p - 1]) / c;
            qv[p + 1] = (a * u * qv[p] - b * (2.0 * v * q[p - 1] + v * v * qv[p - 1])) / c;
        }
        let eta = 2.0 * y - 1.0;
        let mut jac = Vec::with_capacity(d + 1);
        let mut djac = Vec::with_capacity(d + 1);
        for p in 0..=d {
            let alpha = (2 * p + 1) as f64;
            jac.push(jacobi(d - p, alpha, 0.0, eta));
            djac.push(jacobi_derivative(d - p, alpha, 0.0, eta));
        }
        let mut vals = Vec::with_capacity(self.dim());
        let mut grads = Vec::with_capacity(self.dim());
        for &(p, qd) in &self.indices {
            let scale = (2.0 * (2 * p + 1) as f64 * (p + qd + 1) as f64).sqrt();
            let g = jac[p][qd];
            let dg = 2.0 * djac[p][qd];
            vals.push(scale * q[p] * g);
            grads.push([
                scale * 2.0 * qu[p] * g,
                scale * ((qu[p] - qv[p]) * g + q[p] * dg),
            ]);
        }
        (vals, grads)
    }

    pub fn eval(&self, pt: [f64; 2]) -> Vec<f64> {
        self.eval_with_grad(pt).0
    }

    /// Matrices `(Dx, Dy)` mapping modal coefficients of a function to the
    /// modal coefficients of its reference partial derivatives (same basis).
    pub fn derivative_matrices(&self) -> (Mat<f64>, Mat<f64>) {
        let n = self.dim();
        let rule = super::quadrature::triangle_rule(2 * self.degree);
        let mut dx = Mat::<f64>::zeros(n, n);
        let mut dy = Mat::<f64>::zeros(n, n);
        for (pt, w) in rule.points.iter().zip(&rule.weights) {
            let (vals, grads) = self.eval_with_grad(*pt);
            for b in 0..n {
                for a in 0..n {
                    dx[(a, b)] += w * vals[a] * grads[b][0];
                    dy[(a, b)] += w * vals[a] * grads[b][1];
                }
            }
        }
        (dx, dy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refelem::quadrature::gauss_triangle;

    #[test]
    fn jacobi_reduces_to_legendre() {
        let x = 0.37;
        let p = jacobi(3, 0.0, 0.0, x);
        assert!((p[2] - 0.5 * (3.0 * x * x - 1.0)).abs() < 1e-15);
        assert!((p[3] - 0.5 * (5.0 * x * x * x - 3.0 * x)).abs() < 1e-15);
    }

    #[test]
    fn jacobi_derivative_matches_difference() {
        let h = 1e-6;
        for &(a, b) in &[(0.0, 0.0), (3.0, 0.0), (5.0, 1.0)] {
            let d = jacobi_derivative(6, a, b, 0.3);
            let p1 = jacobi(6, a, b, 0.3 + h);
            let p0 = jacobi(6, a, b, 0.3 - h);
            for k in 0..=6 {
                assert!((d[k] - (p1[k] - p0[k]) / (2.0 * h)).abs() < 1e-6 * (1.0 + d[k].abs()));
            }
        }
    }

    #[test]
    fn modal_basis_is_orthonormal() {
        for deg in 0..=7 {
            let basis = ModalBasis::new(deg);
            let rule = gauss_triangle(2 * deg).unwrap();
            let n = basis.dim();
            let mut gram = vec![0.0; n * n];
            for (pt, w) in rule.points.iter().zip(&rule.weights) {
                let v = basis.eval(*pt);
                for i in 0..n {
                    for j in 0..n {
                        gram[i * n + j] += w * v[i] * v[j];
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((gram[i * n + j] - target).abs() < 1e-12, "degree {deg} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn hierarchical_ordering() {
        let idx = modal_indices(4);
        for d in 0..=4 {
            assert!(idx[..scalar_dim(d)].iter().all(|&(p, q)| p + q <= d));
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let basis = ModalBasis::new(6);
        let h = 1e-5;
        for pt in [[0.2, 0.3], [0.6, 0.1], [0.05, 0.9], [0.33, 0.33]] {
            let (_, g) = basis.eval_with_grad(pt);
            let xp = basis.eval([pt[0] + h, pt[1]]);
            let xm = basis.eval([pt[0] - h, pt[1]]);
            let yp = basis.eval([pt[0], pt[1] + h]);
            let ym = basis.eval([pt[0], pt[1] - h]);
            for i in 0..basis.dim() {
                assert!((g[i][0] - (xp[i] - xm[i]) / (2.0 * h)).abs() < 1e-6 * (1.0 + g[i][0].abs()));
                assert!((g[i][1] - (yp[i] - ym[i]) / (2.0 * h)).abs() < 1e-6 * (1.0 + g[i][1].abs()));
            }
        }
    }

    #[test]
    fn derivative_matrices_are_exact() {
        let basis = ModalBasis::new(5);
        let (dx, dy) = basis.derivative_matrices();
        let n = basis.dim();
        for pt in [[0.1, 0.7], [0.45, 0.2]] {
            let (vals, grads) = basis.eval_with_grad(pt);
            for b in 0..n {
                let gx: f64 = (0..n).map(|a| dx[(a, b)] * vals[a]).sum();
                let gy: f64 = (0..n).map(|a| dy[(a, b)] * vals[a]).sum();
                assert!((gx - grads[b][0]).abs() < 1e-11);
                assert!((gy - grads[b][1]).abs() < 1e-11);
            }
            // derivatives drop one degree
            for b in 0..n {
                for a in scalar_dim(4)..n {
                    assert!(dx[(a, b)].abs() < 1e-11 && dy[(a, b)].abs() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn edge_legendre_orthonormal() {
        let rule = crate::refelem::quadrature::gauss_interval(12).unwrap();
        let mut g = [[0.0; 6]; 6];
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let v = edge_legendre(5, p[0]);
            for i in 0..6 {
                for j in 0..6 {
                    g[i][j] += w * v[i] * v[j];
                }
            }
        }
        for (i, row) in g.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                assert!((x - if i == j { 1.0 } else { 0.0 }).abs() < 1e-13);
            }
        }
    }
}
