//! Norms, constraint residuals and convergence rates.

use crate::assembly::{cell_curl, cell_div, project_broken_scalar, Discretization};
use crate::error::{Error, Result};
use crate::mesh::CellGeometry;
use crate::refelem::quadrature::triangle_rule;
use crate::refelem::{gauss_triangle, scalar_dim, LagrangeElement, ModalBasis};
use crate::solvers::{self, Sparse};
use crate::spaces::{build_space, FieldCoefficients, SpaceKind};
use faer::sparse::Triplet;
use std::f64::consts::SQRT_2;

/// Reference field for [`l2_error`].
#[derive(Clone, Copy)]
pub enum Exact<'a> {
    Scalar(&'a dyn Fn([f64; 2]) -> f64),
    Vector(&'a dyn Fn([f64; 2]) -> [f64; 2]),
    /// Cell-wise Lagrange interpolant of the given degree.
    ScalarInterpolant(&'a dyn Fn([f64; 2]) -> f64, usize),
    VectorInterpolant(&'a dyn Fn([f64; 2]) -> [f64; 2], usize),
}

impl Exact<'_> {
    fn is_vector(&self) -> bool {
        matches!(self, Exact::Vector(_) | Exact::VectorInterpolant(..))
    }
}

/// Values of the reference field at the mapped points of `rule`, cell by cell.
struct Sampler<'a> {
    exact: Exact<'a>,
    /// Nodal basis at the quadrature points, for interpolants.
    table: Option<(LagrangeElement, Vec<Vec<f64>>)>,
}

impl<'a> Sampler<'a> {
    fn new(exact: Exact<'a>, points: &[[f64; 2]]) -> Self {
        let table = match exact {
            Exact::ScalarInterpolant(_, d) | Exact::VectorInterpolant(_, d) => {
                let lag = LagrangeElement::new(d);
                let tab = points.iter().map(|p| lag.eval(*p)).collect();
                Some((lag, tab))
            }
            _ => None,
        };
        Sampler { exact, table }
    }

    fn sample(&self, g: &CellGeometry, points: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let at = |x: [f64; 2]| match self.exact {
            Exact::Scalar(f) | Exact::ScalarInterpolant(f, _) => [f(x), 0.0],
            Exact::Vector(f) | Exact::VectorInterpolant(f, _) => f(x),
        };
        match &self.table {
            None => points.iter().map(|p| at(g.map(*p))).collect(),
            Some((lag, tab)) => {
                let nodal: Vec<[f64; 2]> = lag.nodes.iter().map(|p| at(g.map(*p))).collect();
                tab.iter()
                    .map(|row| {
                        row.iter().zip(&nodal).fold([0.0; 2], |acc, (w, v)| [acc[0] + w * v[0], acc[1] + w * v[1]])
                    })
                    .collect()
            }
        }
    }
}

/// One row of a time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticRecord {
    pub step: usize,
    pub t: f64,
    pub seminorm_d: f64,
    pub seminorm_dhat: f64,
    pub flux_residual_max: f64,
    pub constraint_residual: f64,
    pub energy: f64,
}

impl DiagnosticRecord {
    pub const CSV_HEADER: &'static str = "step,t,seminorm_D,seminorm_Dhat,flux_residual_max,constraint_residual,energy";

    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.t,
            self.seminorm_d,
            self.seminorm_dhat,
            self.flux_residual_max,
            self.constraint_residual,
            self.energy,
        ];
        if vals.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(format!("diagnostics at step {}", self.step)))
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:?},{:?},{:?},{:?},{:?},{:?}",
            self.step,
            self.t,
            self.seminorm_d,
            self.seminorm_dhat,
            self.flux_residual_max,
            self.constraint_residual,
            self.energy
        )
    }
}

/// Experimental order of convergence under mesh halving.
pub fn eoc(err_coarse: f64, err_fine: f64) -> f64 {
    (err_coarse / err_fine).log2()
}

/// Precomputed operators for the per-step diagnostics.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    /// Element-wise divergence of broken `P_k`, into scalar `P_k` modal coefficients.
    div_broken: Sparse,
    /// Element-wise divergence of the div-conforming space, into scalar `P_r`.
    div_div: Sparse,
    vol_k: Vec<f64>,
    vol_r: Vec<f64>,
    ns_r: usize,
    grad_t_mass: Sparse,
    beta: Sparse,
    m_plain: Sparse,
    a: Sparse,
    eps: f64,
}

impl Diagnostics {
    pub fn new(disc: &Discretization) -> Self {
        let mats = &disc.matrices;
        let (nk, nr) = (scalar_dim(disc.k), scalar_dim(disc.r));
        let div_broken = broken_div_matrix(disc, disc.k);
        let div_r = broken_div_matrix(disc, disc.r);
        let div_div = solvers::matmul(&div_r, &mats.div_to_broken_r);
        let vol: Vec<f64> = (0..disc.mesh.num_cells()).map(|c| disc.mesh.geometry(c).det.abs()).collect();
        Diagnostics {
            div_broken,
            div_div,
            vol_k: vol.iter().flat_map(|v| std::iter::repeat_n(*v, nk)).collect(),
            vol_r: vol.iter().flat_map(|v| std::iter::repeat_n(*v, nr)).collect(),
            ns_r: nr,
            grad_t_mass: solvers::matmul(&solvers::transpose(&mats.g), &mats.m_plain),
            beta: mats.beta.clone(),
            m_plain: mats.m_plain.clone(),
            a: mats.a.clone(),
            eps: mats.material.eps,
        }
    }

    /// `|D|_{H(div; T_h)}` of a broken `P_k` field.
    pub fn seminorm_broken(&self, d: &[f64]) -> f64 {
        weighted_norm(&solvers::spmv(&self.div_broken, d), &self.vol_k)
    }

    /// `|D̂|_{H(div; T_h)}` of a div-conforming field.
    pub fn seminorm_div(&self, dhat: &[f64]) -> f64 {
        weighted_norm(&solvers::spmv(&self.div_div, dhat), &self.vol_r)
    }

    /// Per-cell `∫_{∂K} D̂·n − ∫_K ρ`, with `rho_load` the broken `P_r` load of `ρ`.
    pub fn flux_residuals(&self, dhat: &[f64], rho_load: &[f64]) -> Vec<f64> {
        let bd = solvers::spmv(&self.beta, dhat);
        // the constant function 1 is ψ_0 / √2 on every cell
        (0..bd.len() / self.ns_r)
            .map(|c| (bd[c * self.ns_r] - rho_load[c * self.ns_r]) / std::f64::consts::SQRT_2)
            .collect()
    }

    pub fn flux_residual_max(&self, dhat: &[f64], rho_load: &[f64]) -> f64 {
        self.flux_residuals(dhat, rho_load).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|∫_K grad φ·D + φρ − ∫_{∂K} φ D̂·n|` over the broken `P_r` basis.
    pub fn constraint_residual(&self, d: &[f64], dhat: &[f64], rho_load: &[f64]) -> f64 {
        let gd = solvers::spmv(&self.grad_t_mass, d);
        let bd = solvers::spmv(&self.beta, dhat);
        gd.iter()
            .zip(&bd)
            .zip(rho_load)
            .fold(0.0, |m, ((g, b), r)| m.max((g + r - b).abs()))
    }

    /// `½ε⁻¹⟨D, D⟩ + ½a(A, A)`.
    pub fn energy(&self, a: &[f64], d: &[f64]) -> f64 {
        0.5 / self.eps * solvers::dot(d, &solvers::spmv(&self.m_plain, d)) + 0.5 * solvers::dot(a, &solvers::spmv(&self.a, a))
    }
}

fn weighted_norm(c: &[f64], w: &[f64]) -> f64 {
    c.iter().zip(w).map(|(v, w)| w * v * v).sum::<f64>().sqrt()
}

pub(crate) fn broken_div_matrix(disc: &Discretization, d: usize) -> Sparse {
    let modal = ModalBasis::new(d);
    let (dx, dy) = modal.derivative_matrices();
    let ns = modal.dim();
    let mut trips = Vec::new();
    for cell in 0..disc.mesh.num_cells() {
        let div = cell_div(&dx, &dy, &disc.mesh.geometry(cell));
        for j in 0..2 * ns {
            for i in 0..ns {
                let v = div[(i, j)];
                if v.abs() > 1e-15 * div.norm_max() {
                    trips.push(Triplet::new(cell * ns + i, cell * 2 * ns + j, v));
                }
            }
        }
    }
    let n = disc.mesh.num_cells() * ns;
    solvers::sparse_from_triplets(n, 2 * n, &trips)
}

/// Broken `P_r` load vector `⟨ψ_i, f⟩` of a scalar function.
pub fn scalar_load(disc: &Discretization, f: &dyn Fn([f64; 2]) -> f64) -> Vec<f64> {
    let ns = scalar_dim(disc.r);
    let mut c = project_broken_scalar(&disc.mesh, disc.r, f);
    for cell in 0..disc.mesh.num_cells() {
        let vol = disc.mesh.geometry(cell).det.abs();
        c[cell * ns..(cell + 1) * ns].iter_mut().for_each(|v| *v *= vol);
    }
    c
}

/// Scalar `P_k` modal coefficients of the element-wise curl of a broken `P_k` field.
pub fn broken_curl(disc: &Discretization, a: &[f64]) -> Vec<f64> {
    let modal = &disc.tables.vec_modal;
    let ns = modal.dim();
    let mut out = vec![0.0; disc.mesh.num_cells() * ns];
    for cell in 0..disc.mesh.num_cells() {
        let curl = cell_curl(&disc.tables.vec_dx, &disc.tables.vec_dy, &disc.mesh.geometry(cell));
        let local = &a[cell * 2 * ns..(cell + 1) * 2 * ns];
        for i in 0..ns {
            out[cell * ns + i] = (0..2 * ns).map(|j| curl[(i, j)] * local[j]).sum();
        }
    }
    out
}

/// Broken modal coefficients and degree of a vector field of this discretization.
fn broken_values(disc: &Discretization, field: &FieldCoefficients) -> Result<(usize, Vec<f64>)> {
    let (d, values) = match field.kind {
        SpaceKind::BrokenVector(d) => (d, field.values.clone()),
        SpaceKind::DivConforming(r) if r == disc.r => (r, solvers::spmv(&disc.matrices.div_to_broken_r, &field.values)),
        SpaceKind::ConformingEdge(k) if k == disc.k => (k, solvers::spmv(&disc.matrices.p, &field.values)),
        other => return Err(Error::DimensionMismatch(format!("{other:?} is not a vector field of this discretization"))),
    };
    if values.len() != disc.mesh.num_cells() * 2 * scalar_dim(d) {
        return Err(Error::DimensionMismatch("field length does not match the mesh".into()));
    }
    Ok((d, values))
}

/// `‖div D‖_{L²(K)}` for every cell `K`.
pub fn cell_div_norms(disc: &Discretization, field: &FieldCoefficients) -> Result<Vec<f64>> {
    let (d, values) = broken_values(disc, field)?;
    let ns = scalar_dim(d);
    let div = solvers::spmv(&broken_div_matrix(disc, d), &values);
    Ok((0..disc.mesh.num_cells())
        .map(|c| weighted_norm(&div[c * ns..(c + 1) * ns], &vec![disc.mesh.geometry(c).det.abs(); ns]))
        .collect())
}

/// `|D|_{H(div; T_h)}` of a broken or div-conforming vector field.
pub fn hdiv_seminorm(disc: &Discretization, field: &FieldCoefficients) -> Result<f64> {
    Ok(cell_div_norms(disc, field)?.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// Mean value of a vector field on every cell.
pub fn cell_means(disc: &Discretization, field: &FieldCoefficients) -> Result<Vec<[f64; 2]>> {
    let (d, values) = broken_values(disc, field)?;
    let ns = scalar_dim(d);
    // the constant modal function is √2 on the reference cell
    Ok((0..disc.mesh.num_cells())
        .map(|c| [values[c * 2 * ns] * SQRT_2, values[c * 2 * ns + ns] * SQRT_2])
        .collect())
}

/// L² distance between a discrete field and an analytic one, by quadrature of
/// degree `quad_degree` on every cell.
pub fn l2_error(disc: &Discretization, field: &FieldCoefficients, exact: Exact<'_>, quad_degree: usize) -> Result<f64> {
    let rule = gauss_triangle(quad_degree)?;
    let mesh = &disc.mesh;
    let mut total = 0.0;
    let sampler = Sampler::new(exact, &rule.points);
    match (field.kind, exact.is_vector()) {
        (SpaceKind::BrokenVector(_) | SpaceKind::ConformingEdge(_) | SpaceKind::DivConforming(_), true) => {
            let (d, values) = match field.kind {
                SpaceKind::BrokenVector(d) => (d, field.values.clone()),
                SpaceKind::ConformingEdge(k) if k == disc.k => (k, solvers::spmv(&disc.matrices.p, &field.values)),
                SpaceKind::DivConforming(r) if r == disc.r => {
                    (r, solvers::spmv(&disc.matrices.div_to_broken_r, &field.values))
                }
                other => return Err(Error::DimensionMismatch(format!("{other:?} does not belong to this discretization"))),
            };
            let modal = ModalBasis::new(d);
            let ns = modal.dim();
            check_len(&values, mesh.num_cells() * 2 * ns)?;
            let tab: Vec<Vec<f64>> = rule.points.iter().map(|p| modal.eval(*p)).collect();
            for cell in 0..mesh.num_cells() {
                let g = mesh.geometry(cell);
                let ex = sampler.sample(&g, &rule.points);
                let c = &values[cell * 2 * ns..(cell + 1) * 2 * ns];
                for (q, w) in rule.weights.iter().enumerate() {
                    let vx: f64 = (0..ns).map(|a| c[a] * tab[q][a]).sum();
                    let vy: f64 = (0..ns).map(|a| c[ns + a] * tab[q][a]).sum();
                    let e = ex[q];
                    total += w * g.det.abs() * ((vx - e[0]).powi(2) + (vy - e[1]).powi(2));
                }
            }
        }
        (SpaceKind::BrokenScalar(d), false) => {
            let modal = ModalBasis::new(d);
            let ns = modal.dim();
            check_len(&field.values, mesh.num_cells() * ns)?;
            let tab: Vec<Vec<f64>> = rule.points.iter().map(|p| modal.eval(*p)).collect();
            for cell in 0..mesh.num_cells() {
                let g = mesh.geometry(cell);
                let ex = sampler.sample(&g, &rule.points);
                let c = &field.values[cell * ns..(cell + 1) * ns];
                for (q, w) in rule.weights.iter().enumerate() {
                    let v: f64 = c.iter().zip(&tab[q]).map(|(a, b)| a * b).sum();
                    total += w * g.det.abs() * (v - ex[q][0]).powi(2);
                }
            }
        }
        (SpaceKind::Multiplier(m), false) => {
            let owned;
            let space = if m == disc.mult_degree {
                &disc.multiplier
            } else {
                owned = build_space(mesh, field.kind)?;
                &owned
            };
            check_len(&field.values, space.dim)?;
            let lag = LagrangeElement::new(m);
            let tab: Vec<Vec<f64>> = rule.points.iter().map(|p| lag.eval(*p)).collect();
            for cell in 0..mesh.num_cells() {
                let g = mesh.geometry(cell);
                let ex = sampler.sample(&g, &rule.points);
                let c = space.gather(cell, &field.values);
                for (q, w) in rule.weights.iter().enumerate() {
                    let v: f64 = c.iter().zip(&tab[q]).map(|(a, b)| a * b).sum();
                    total += w * g.det.abs() * (v - ex[q][0]).powi(2);
                }
            }
        }
        (kind, _) => {
            return Err(Error::DimensionMismatch(format!("analytic field does not match the shape of {kind:?}")));
        }
    }
    Ok(total.sqrt())
}

fn check_len(values: &[f64], expected: usize) -> Result<()> {
    if values.len() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!("{} coefficients, expected {expected}", values.len())))
    }
}

/// Reject NaN or infinite entries with context.
pub fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

/// `‖f‖²` over the mesh by quadrature, for analytic normalization checks.
pub fn analytic_norm_sq(disc: &Discretization, f: &dyn Fn([f64; 2]) -> [f64; 2], quad_degree: usize) -> f64 {
    let rule = triangle_rule(quad_degree);
    let mut total = 0.0;
    for cell in 0..disc.mesh.num_cells() {
        let g = disc.mesh.geometry(cell);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let v = f(g.map(*p));
            total += w * g.det.abs() * (v[0] * v[0] + v[1] * v[1]);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{project_broken_vector, Material};
    use crate::mesh::{Mesh, Rect};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn disc(n: usize, r: usize) -> Discretization {
        Discretization::uniform(n, r, r + 1, Material::default()).unwrap()
    }

    #[test]
    fn eoc_examples() {
        assert!((eoc(4e-2, 1e-2) - 2.0).abs() < 1e-15);
        assert!((eoc(2.753e-02, 6.926e-03) - 1.991).abs() < 5e-4);
    }

    #[test]
    fn seminorm_closed_forms() {
        let d = disc(2, 2);
        let c = d.project_vector(SpaceKind::BrokenVector(1), &|_| [3.0, -1.0]).unwrap();
        assert!(hdiv_seminorm(&d, &c).unwrap() < 1e-13);
        let x = d.project_vector(SpaceKind::BrokenVector(1), &|p| [p[0], 0.0]).unwrap();
        assert!((hdiv_seminorm(&d, &x).unwrap() - PI).abs() < 1e-12);
        let diag = Diagnostics::new(&d);
        assert!((diag.seminorm_broken(&x.values) - PI).abs() < 1e-12);
    }

    #[test]
    fn curl_of_multiplier_is_divergence_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for r in 2..=4 {
            let d = disc(2, r);
            let h: Vec<f64> = (0..d.multiplier.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let dh = solvers::spmv(&d.matrices.curl_to_div, &h);
            assert!(Diagnostics::new(&d).seminorm_div(&dh) < 1e-12, "r {r}");
        }
    }

    #[test]
    fn l2_error_of_exact_fields() {
        let d = disc(2, 3);
        let f = |p: [f64; 2]| [p[0] * p[1], 1.0 - p[0]];
        let c = d.project_vector(SpaceKind::BrokenVector(2), &f).unwrap();
        assert!(l2_error(&d, &c, Exact::Vector(&f), 10).unwrap() < 1e-13 * PI);
        let s = |p: [f64; 2]| p[0] * p[0] - p[1];
        let h = d.project_scalar(SpaceKind::Multiplier(4), &s).unwrap();
        assert!(l2_error(&d, &h, Exact::Scalar(&s), 12).unwrap() < 1e-12);
        let zero = |_: [f64; 2]| 0.0;
        let one = FieldCoefficients::new(&d.multiplier, vec![1.0; d.multiplier.dim]).unwrap();
        assert!((l2_error(&d, &one, Exact::Scalar(&zero), 4).unwrap() - PI).abs() < 1e-12);
        assert!(l2_error(&d, &one, Exact::Vector(&f), 4).is_err());
    }

    #[test]
    fn constraint_residual_detects_violation() {
        let d = disc(2, 2);
        let diag = Diagnostics::new(&d);
        let zero_b = vec![0.0; d.broken.dim];
        let zero_s = vec![0.0; d.scalar.dim];
        let mut dh = vec![0.0; d.div.dim];
        assert_eq!(diag.constraint_residual(&zero_b, &dh, &zero_s), 0.0);
        dh[5] = 1.0;
        assert!(diag.constraint_residual(&zero_b, &dh, &zero_s) > 1e-3);
    }

    #[test]
    fn compatible_triple_has_zero_residual() {
        // D̂ from a smooth field, D its P_k projection, ρ = div D̂
        let d = disc(2, 3);
        let f = |p: [f64; 2]| [p[0] * p[0] * p[1], (p[0] - p[1]).sin()];
        let dh = d.project_vector(SpaceKind::DivConforming(3), &f).unwrap().values;
        let dr = solvers::spmv(&d.matrices.div_to_broken_r, &dh);
        let dk: Vec<f64> = {
            let inj = solvers::transpose(&d.matrices.inject);
            solvers::spmv(&inj, &dr)
        };
        let diag = Diagnostics::new(&d);
        let div_r = broken_div_matrix(&d, 3);
        let rho_c = solvers::spmv(&div_r, &dr);
        let load: Vec<f64> = rho_c.iter().zip(&diag.vol_r).map(|(a, b)| a * b).collect();
        assert!(diag.constraint_residual(&dk, &dh, &load) < 1e-12);
        assert!(diag.flux_residual_max(&dh, &load) < 1e-12);
    }

    fn permuted_mesh(n: usize, seed: u64) -> Mesh {
        let base = Mesh::uniform_grid(n, Rect::pi_square()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tris = base.triangles.clone();
        tris.shuffle(&mut rng);
        for t in tris.iter_mut() {
            t.rotate_left(rng.random_range(0..3));
        }
        Mesh::from_triangles(base.vertices.clone(), tris).unwrap()
    }

    #[test]
    fn metrics_invariant_under_cell_reordering() {
        // polynomial data keeps every projection exact, so only round-off differs
        let f = |p: [f64; 2]| [p[0] * p[0] * p[1], p[0] - p[1].powi(3)];
        let s = |p: [f64; 2]| p[0] * p[1] * p[1] - 2.0 * p[0];
        let mut results = Vec::new();
        for mesh in [Mesh::uniform_grid(2, Rect::pi_square()).unwrap(), permuted_mesh(2, 9)] {
            let d = Discretization::new(mesh, 2, 3, Material::default()).unwrap();
            let diag = Diagnostics::new(&d);
            let a = d.project_vector(SpaceKind::BrokenVector(1), &f).unwrap();
            let dh = d.project_vector(SpaceKind::DivConforming(2), &f).unwrap();
            let h = d.project_scalar(SpaceKind::Multiplier(3), &s).unwrap();
            let load = scalar_load(&d, &s);
            results.push([
                diag.seminorm_broken(&a.values),
                diag.seminorm_div(&dh.values),
                diag.energy(&a.values, &a.values),
                diag.constraint_residual(&a.values, &dh.values, &load),
                diag.flux_residual_max(&dh.values, &load),
                l2_error(&d, &a, Exact::Vector(&f), 10).unwrap(),
                l2_error(&d, &h, Exact::Scalar(&s), 10).unwrap(),
            ]);
        }
        for (x, y) in results[0].iter().zip(&results[1]) {
            assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()), "{x} vs {y}");
        }
    }

    #[test]
    fn analytic_mode_has_unit_norm() {
        let d = disc(4, 2);
        let a = |p: [f64; 2]| {
            let c = 2f64.sqrt() / PI;
            [-c * p[0].cos() * p[1].sin(), c * p[0].sin() * p[1].cos()]
        };
        assert!((analytic_norm_sq(&d, &a, 20) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn records_reject_nan() {
        let mut rec = DiagnosticRecord {
            step: 1,
            t: 0.1,
            seminorm_d: 0.0,
            seminorm_dhat: 0.0,
            flux_residual_max: 0.0,
            constraint_residual: 0.0,
            energy: 1.0,
        };
        assert!(rec.validate().is_ok());
        assert_eq!(rec.csv_row(), "1,0.1,0.0,0.0,0.0,0.0,1.0");
        rec.energy = f64::NAN;
        assert!(matches!(rec.validate(), Err(Error::NonFinite(_))));
        assert!(ensure_finite(&[1.0, f64::INFINITY], "x").is_err());
    }

    #[test]
    fn interpolant_reference_reproduces_polynomials() {
        let d = Discretization::uniform(2, 2, 3, Material::default()).unwrap();
        let f = |x: [f64; 2]| [x[0] * x[1] * x[1], 1.0 - x[0] * x[0]];
        let a = FieldCoefficients::new(&d.broken_r, project_broken_vector(&d.mesh, 2, &f)).unwrap();
        let exact = l2_error(&d, &a, Exact::Vector(&f), 8).unwrap();
        let interp = l2_error(&d, &a, Exact::VectorInterpolant(&f, 3), 8).unwrap();
        assert!((exact - interp).abs() < 1e-12);
        let s = |x: [f64; 2]| x[0].sin();
        let zero = FieldCoefficients::new(&d.multiplier, vec![0.0; d.multiplier.dim]).unwrap();
        let coarse = l2_error(&d, &zero, Exact::ScalarInterpolant(&s, 1), 8).unwrap();
        let fine = l2_error(&d, &zero, Exact::ScalarInterpolant(&s, 3), 8).unwrap();
        let truth = l2_error(&d, &zero, Exact::Scalar(&s), 8).unwrap();
        assert!((fine - truth).abs() < (coarse - truth).abs());
    }
}
