//! Invariant suites run by `hybridem check`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{project_broken_vector, Discretization, Material, MAX_R};
use crate::diagnostics::Diagnostics;
use crate::error::Result;
use crate::frequencydomain::{solve_eigenmode, EigenConfig};
use crate::mesh::{Mesh, Rect};
use crate::recovery::HatRecovery;
use crate::refelem::quadrature::MAX_DEGREE;
use crate::refelem::{gauss_triangle, make_basis, monomial_integral, Family};
use crate::solvers::{self, DEFAULT_RANK_TOL};
use crate::spaces::{build_space, lagrange_gradient, FieldCoefficients, SpaceKind};
use crate::timedomain::{kernel_basis, run_time_domain, Mode, Stepper, TimeConfig, TimeProblem, TimeState};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Suite = fn() -> Result<(bool, String)>;

const SUITES: [(&str, Suite); 8] = [
    ("quadrature", quadrature),
    ("unisolvence", unisolvence),
    ("mesh", mesh),
    ("kernel", kernel),
    ("recovery", recovery),
    ("conservation", conservation),
    ("gauge", gauge),
    ("eigen", eigen),
];

/// Run every suite; errors count as failures.
pub fn run_all() -> Vec<SuiteOutcome> {
    SUITES
        .iter()
        .map(|(name, suite)| match suite() {
            Ok((passed, detail)) => SuiteOutcome { name, passed, detail },
            Err(e) => SuiteOutcome {
                name,
                passed: false,
                detail: format!("{}: {e}", e.category()),
            },
        })
        .collect()
}

fn quadrature() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for deg in 0..=MAX_DEGREE {
        let q = gauss_triangle(deg)?;
        for a in 0..=deg as u32 {
            for b in 0..=(deg as u32 - a) {
                let approx: f64 =
                    q.points.iter().zip(&q.weights).map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32)).sum();
                let exact = monomial_integral(a, b);
                worst = worst.max((approx - exact).abs() / exact);
            }
        }
    }
    Ok((worst <= 1e-13, format!("max relative monomial error {worst:.2e}")))
}

fn unisolvence() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    let mut cases = Vec::new();
    for m in 0..=MAX_R + 1 {
        cases.push((Family::ScalarLagrange, m));
    }
    for k in 1..=MAX_R {
        cases.extend([(Family::VectorP, k), (Family::EdgeBdm, k), (Family::DivBdm, k)]);
    }
    for (fam, k) in cases {
        let m = make_basis(fam, k)?.dof_matrix();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let t = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((m[(i, j)] - t).abs());
            }
        }
    }
    Ok((worst <= 1e-12, format!("max |dof matrix − I| {worst:.2e}")))
}

fn mesh() -> Result<(bool, String)> {
    let m = Mesh::uniform_grid(16, Rect::pi_square())?;
    let ok = m.num_cells() == 512 && m.euler_characteristic() == 1 && (m.total_area() - Rect::pi_square().area()).abs() < 1e-12;
    Ok((ok, format!("{} cells, {} edges, {} vertices", m.num_cells(), m.num_edges(), m.num_vertices())))
}

fn kernel() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for r in 2..=MAX_R {
        for n in [2, 4] {
            let d = Discretization::uniform(n, r, r + 1, Material::default())?;
            worst = worst.max(solvers::max_abs(&solvers::matmul(&d.matrices.b, &d.matrices.p)));
        }
    }
    let d = Discretization::uniform(2, 2, 3, Material::default())?;
    let conf = kernel_basis(&d, Mode::Kernel, DEFAULT_RANK_TOL)?.ncols();
    let lower = Discretization::uniform(2, 2, 2, Material::default())?;
    let wide = kernel_basis(&lower, Mode::Kernel, DEFAULT_RANK_TOL)?.ncols();
    let ok = worst <= 1e-12 && conf == d.conforming.dim && wide > conf;
    Ok((
        ok,
        format!("max |B·P| {worst:.2e}; nullity {conf} (conforming {}), {wide} with multiplier degree r", d.conforming.dim),
    ))
}

fn recovery() -> Result<(bool, String)> {
    let d = Discretization::uniform(3, 3, 4, Material::default())?;
    let rec = HatRecovery::new(&d, DEFAULT_RANK_TOL)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h: Vec<f64> = (0..d.multiplier.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let g = solvers::spmv_t(&d.matrices.b, &h);
    let q: Vec<f64> = (0..d.multiplier.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let got = rec.solve(&q, &g)?;
    let res = solvers::spmv_t(&d.matrices.b, &got);
    let worst = res.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok((worst <= 1e-10, format!("constraint residual {worst:.2e}")))
}

fn conservation() -> Result<(bool, String)> {
    let cfg = TimeConfig {
        n: 4,
        steps: 64,
        dt: std::f64::consts::PI / 128.0,
        ..TimeConfig::default()
    };
    let run = run_time_domain(&TimeProblem::quadratic_potential(cfg), None)?;
    let dhat = run.records.iter().map(|r| r.seminorm_dhat).fold(0.0, f64::max);
    let flux = run.records.iter().map(|r| r.flux_residual_max).fold(0.0, f64::max);
    let d = run.records.last().map_or(0.0, |r| r.seminorm_d);
    Ok((
        dhat <= 1e-9 && flux <= 1e-11 && d > dhat,
        format!("max |D̂|div {dhat:.2e}, max flux residual {flux:.2e}, final |D|div {d:.2e}"),
    ))
}

fn gauge() -> Result<(bool, String)> {
    let d = Discretization::uniform(2, 2, 3, Material::default())?;
    let lag = build_space(&d.mesh, SpaceKind::Multiplier(2))?;
    let (grad, kept) = lagrange_gradient(&d.mesh, &lag, &d.broken, true)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let xi: Vec<f64> = (0..kept.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let shift = solvers::spmv(&grad, &xi);
    let stepper = Stepper::new(&d, Mode::Embedding, 0.05, Default::default(), true, DEFAULT_RANK_TOL)?;
    let a0 = stepper.project_kernel(&project_broken_vector(&d.mesh, 1, &|x| [x[1] * x[1], x[0]]));
    let a1: Vec<f64> = a0.iter().zip(&shift).map(|(a, s)| a + s).collect();
    let mut s0 = TimeState { a: FieldCoefficients::new(&d.broken, a0)?, ..TimeState::zero(&d) };
    let mut s1 = TimeState { a: FieldCoefficients::new(&d.broken, a1)?, ..TimeState::zero(&d) };
    let mut worst: f64 = 0.0;
    for _ in 0..8 {
        s0 = stepper.step(&s0)?;
        s1 = stepper.step(&s1)?;
        let h0 = s0.hhat.as_ref().map_or(&[][..], |h| &h.values);
        let h1 = s1.hhat.as_ref().map_or(&[][..], |h| &h.values);
        for (x, y) in s0.d.values.iter().zip(&s1.d.values).chain(h0.iter().zip(h1)) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok((worst <= 1e-10, format!("max trajectory difference {worst:.2e}")))
}

fn eigen() -> Result<(bool, String)> {
    let d = Discretization::uniform(4, 2, 3, Material::default())?;
    let res = solve_eigenmode(&d, &EigenConfig::default())?;
    let diag = Diagnostics::new(&d);
    let div = diag.seminorm_div(&res.dhat.values);
    Ok((
        res.residual <= 1e-9 && (res.omega2 - 2.0).abs() < 0.2 && div < 1e-9,
        format!("ω² = {:.6}, residual {:.2e}, |D̂|div {div:.2e}", res.omega2, res.residual),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        for outcome in run_all() {
            assert!(outcome.passed, "{}: {}", outcome.name, outcome.detail);
        }
    }
}
