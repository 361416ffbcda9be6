//! Gauss rules on the unit interval and the reference triangle.
//!
//! Triangle rules are Stroud conical products: a Gauss–Legendre rule in each
//! collapsed coordinate with the Duffy factor folded into the weights.

use crate::error::{Error, Result};

/// Highest polynomial degree a rule can be requested for.
pub const MAX_DEGREE: usize = 20;

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    /// Cartesian reference coordinates: `[s]` padded with 0 on the interval,
    /// `(x̂, ŷ)` on the triangle with vertices (0,0), (1,0), (0,1).
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Barycentric coordinates `(λ0, λ1, λ2)` of the triangle points.
    pub fn barycentric(&self) -> Vec<[f64; 3]> {
        self.points.iter().map(|p| [1.0 - p[0] - p[1], p[0], p[1]]).collect()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

fn check_degree(required: usize) -> Result<()> {
    if required > MAX_DEGREE {
        return Err(Error::Unsupported(format!(
            "quadrature degree {required} exceeds {MAX_DEGREE}"
        )));
    }
    Ok(())
}

/// Gauss rule on `[0, 1]` exact for polynomials of degree `required`.
pub fn gauss_interval(required: usize) -> Result<QuadratureRule> {
    check_degree(required)?;
    Ok(interval_rule(required))
}

pub(crate) fn interval_rule(required: usize) -> QuadratureRule {
    let n = required / 2 + 1;
    let (x, w) = gauss_legendre(n);
    QuadratureRule {
        points: x.iter().map(|&t| [0.5 * (t + 1.0), 0.0]).collect(),
        weights: w.iter().map(|&v| 0.5 * v).collect(),
        exact_degree: 2 * n - 1,
    }
}

/// Conical-product rule on the reference triangle exact for degree `required`.
pub fn gauss_triangle(required: usize) -> Result<QuadratureRule> {
    check_degree(required)?;
    Ok(triangle_rule(required))
}

pub(crate) fn triangle_rule(required: usize) -> QuadratureRule {
    // the collapsed direction carries one extra power from the Duffy factor
    let n = (required + 2).div_ceil(2);
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (xv, wv) in x.iter().zip(&w) {
        let v = 0.5 * (xv + 1.0);
        for (xu, wu) in x.iter().zip(&w) {
            let u = 0.5 * (xu + 1.0);
            points.push([u * (1.0 - v), v]);
            weights.push(0.25 * wu * wv * (1.0 - v));
        }
    }
    QuadratureRule {
        points,
        weights,
        exact_degree: 2 * n - 2,
    }
}

/// Closed form of `∫ x^a y^b` over the reference triangle: `a! b! / (a+b+2)!`.
pub fn monomial_integral(a: u32, b: u32) -> f64 {
    let mut r = 1.0;
    // a! b! / (a+b+2)! = 1 / ((a+b+2)! / (a! b!)), built as a product of ratios
    for i in 1..=b {
        r *= i as f64 / (a + i) as f64;
    }
    r / ((a + b + 1) as f64 * (a + b + 2) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn monomial_oracle_matches_factorials() {
        for a in 0..8 {
            for b in 0..8 {
                let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                assert!((monomial_integral(a, b) - exact).abs() <= 1e-15 * exact);
            }
        }
        assert!((monomial_integral(0, 0) - 0.5).abs() < 1e-16);
        assert!((monomial_integral(1, 1) - 1.0 / 24.0).abs() < 1e-16);
    }

    #[test]
    fn triangle_rules_are_exact() {
        for deg in 0..=MAX_DEGREE {
            let q = gauss_triangle(deg).unwrap();
            assert!(q.exact_degree >= deg);
            assert!(q.weights.iter().all(|&w| w > 0.0));
            for a in 0..=deg as u32 {
                for b in 0..=(deg as u32 - a) {
                    let approx: f64 = q
                        .points
                        .iter()
                        .zip(&q.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact = monomial_integral(a, b);
                    assert!((approx - exact).abs() <= 1e-13 * exact, "deg {deg} x^{a} y^{b}");
                }
            }
        }
    }

    #[test]
    fn interval_rules_are_exact() {
        for deg in 0..=MAX_DEGREE {
            let q = gauss_interval(deg).unwrap();
            let total: f64 = q.weights.iter().sum();
            assert!((total - 1.0).abs() < 1e-14);
            for a in 0..=deg as i32 {
                let approx: f64 = q.points.iter().zip(&q.weights).map(|(p, w)| w * p[0].powi(a)).sum();
                assert!((approx - 1.0 / (a + 1) as f64).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn degree_twelve_hits_x6y6() {
        let q = gauss_triangle(12).unwrap();
        let approx: f64 = q.points.iter().zip(&q.weights).map(|(p, w)| w * p[0].powi(6) * p[1].powi(6)).sum();
        let exact = monomial_integral(6, 6);
        assert!((approx - exact).abs() <= 1e-13 * exact);
    }

    #[test]
    fn rejects_excessive_degree() {
        assert!(gauss_triangle(MAX_DEGREE + 1).is_err());
        assert!(gauss_interval(MAX_DEGREE + 1).is_err());
    }

    #[test]
    fn barycentric_sums_to_one() {
        let q = gauss_triangle(5).unwrap();
        for l in q.barycentric() {
            assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            assert!(l.iter().all(|&c| c > 0.0));
        }
    }
}
