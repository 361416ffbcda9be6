//! Reference-triangle quadrature and finite element families.

pub mod basis;
pub mod polynomials;
pub mod quadrature;

pub use basis::{
    edge_point, make_basis, BasisFamily, Family, LagrangeElement, TraceElement, TraceKind, VectorModalElement,
    REF_NORMALS, REF_TANGENTS, REF_VERTICES,
};
pub use polynomials::{edge_legendre, scalar_dim, ModalBasis};
pub use quadrature::{gauss_interval, gauss_triangle, monomial_integral, QuadratureRule};

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn interior_points(n: usize, seed: u64) -> Vec<[f64; 2]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::new();
        while pts.len() < n {
            let (x, y): (f64, f64) = (rng.random_range(0.02..0.96), rng.random_range(0.02..0.96));
            if x + y < 0.96 {
                pts.push([x, y]);
            }
        }
        pts
    }

    #[test]
    fn lagrange_gradients_match_finite_differences() {
        let h = 1e-5;
        for m in 1..=6 {
            let e = LagrangeElement::new(m);
            for p in interior_points(10, m as u64) {
                let g = e.eval_grad(p);
                let (xp, xm) = (e.eval([p[0] + h, p[1]]), e.eval([p[0] - h, p[1]]));
                let (yp, ym) = (e.eval([p[0], p[1] + h]), e.eval([p[0], p[1] - h]));
                for i in 0..e.dim() {
                    assert!((g[i][0] - (xp[i] - xm[i]) / (2.0 * h)).abs() < 1e-6);
                    assert!((g[i][1] - (yp[i] - ym[i]) / (2.0 * h)).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn trace_curl_and_div_match_finite_differences() {
        let h = 1e-5;
        for k in 1..=4 {
            for kind in [TraceKind::Tangential, TraceKind::Normal] {
                let e = TraceElement::new(kind, k);
                for p in interior_points(10, 100 + k as u64) {
                    let cd = e.eval_curl_div(p);
                    let (xp, xm) = (e.eval([p[0] + h, p[1]]), e.eval([p[0] - h, p[1]]));
                    let (yp, ym) = (e.eval([p[0], p[1] + h]), e.eval([p[0], p[1] - h]));
                    for i in 0..e.dim() {
                        let dvy_dx = (xp[i][1] - xm[i][1]) / (2.0 * h);
                        let dvx_dy = (yp[i][0] - ym[i][0]) / (2.0 * h);
                        let dvx_dx = (xp[i][0] - xm[i][0]) / (2.0 * h);
                        let dvy_dy = (yp[i][1] - ym[i][1]) / (2.0 * h);
                        assert!((cd[i].0 - (dvy_dx - dvx_dy)).abs() < 1e-6);
                        assert!((cd[i].1 - (dvx_dx + dvy_dy)).abs() < 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn vector_curl_matches_finite_differences() {
        let h = 1e-5;
        let e = VectorModalElement::new(4);
        for p in interior_points(10, 7) {
            let c = e.eval_curl(p);
            let (xp, xm) = (e.eval([p[0] + h, p[1]]), e.eval([p[0] - h, p[1]]));
            let (yp, ym) = (e.eval([p[0], p[1] + h]), e.eval([p[0], p[1] - h]));
            for i in 0..e.dim() {
                let fd = (xp[i][1] - xm[i][1]) / (2.0 * h) - (yp[i][0] - ym[i][0]) / (2.0 * h);
                assert!((c[i] - fd).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn lagrange_gradients_lie_in_lower_degree_vectors() {
        for m in 1..=5 {
            let e = LagrangeElement::new(m);
            let lower = ModalBasis::new(m - 1);
            let rule = gauss_triangle(2 * m).unwrap();
            let pts = interior_points(5, 40 + m as u64);
            for i in 0..e.dim() {
                // L² projection of each gradient component onto P_{m-1}
                let mut proj = vec![[0.0; 2]; lower.dim()];
                for (p, w) in rule.points.iter().zip(&rule.weights) {
                    let g = e.eval_grad(*p)[i];
                    for (a, v) in lower.eval(*p).into_iter().enumerate() {
                        proj[a][0] += w * g[0] * v;
                        proj[a][1] += w * g[1] * v;
                    }
                }
                for p in &pts {
                    let g = e.eval_grad(*p)[i];
                    let v = lower.eval(*p);
                    let rx: f64 = g[0] - (0..v.len()).map(|a| proj[a][0] * v[a]).sum::<f64>();
                    let ry: f64 = g[1] - (0..v.len()).map(|a| proj[a][1] * v[a]).sum::<f64>();
                    assert!(rx.abs() <= 1e-12 * (1.0 + g[0].abs()) * 10.0);
                    assert!(ry.abs() <= 1e-12 * (1.0 + g[1].abs()) * 10.0);
                }
            }
        }
    }
}
