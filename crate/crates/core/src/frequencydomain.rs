//! Time-harmonic eigenproblem and convergence studies.
//!
//! The cavity `[0, π]²` with perfectly conducting walls has the transverse
//! eigenvalue `ω² = 2` with the single mode `H = cos x cos y`. The discrete
//! pencil is solved on `ker B` through the conforming embedding, then `Ĥ` and
//! `D̂` are post-processed exactly as in the time domain.

use std::time::{Duration, Instant};

use crate::assembly::{project_broken_vector, Discretization, Material};
use crate::diagnostics::{broken_curl, eoc, l2_error, Exact};
use crate::error::{Error, Result};
use crate::recovery::HatRecovery;
use crate::solvers::{self, DEFAULT_RANK_TOL};
use crate::spaces::{FieldCoefficients, SpaceKind};
use crate::timedomain::{kernel_basis, Mode};

use std::f64::consts::{FRAC_1_PI, SQRT_2};

/// Settings of one eigen solve.
#[derive(Debug, Clone, Copy)]
pub struct EigenConfig {
    pub sigma: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub rank_tol: f64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig {
            sigma: 2.0,
            tol: 1e-10,
            max_iter: 500,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }
}

/// Discrete eigenmode with post-processed fields.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub omega2: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Broken potential, `‖A_h‖_{L²} = 1`.
    pub a: FieldCoefficients,
    /// `μ⁻¹ curl A_h` element by element.
    pub h: FieldCoefficients,
    pub hhat: FieldCoefficients,
    /// `−εω A_h`.
    pub d: FieldCoefficients,
    pub dhat: FieldCoefficients,
}

/// `L²` errors against the exact cavity mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeErrors {
    pub h: f64,
    pub hhat: f64,
    pub d: f64,
    pub dhat: f64,
}

/// Exact normalized `(1, 1)` cavity mode for `ε = μ = 1`.
pub mod exact {
    use super::*;

    pub fn a(x: [f64; 2]) -> [f64; 2] {
        let c = SQRT_2 * FRAC_1_PI;
        [-c * x[0].cos() * x[1].sin(), c * x[0].sin() * x[1].cos()]
    }

    pub fn h(x: [f64; 2]) -> f64 {
        2.0 * SQRT_2 * FRAC_1_PI * x[0].cos() * x[1].cos()
    }

    pub fn d(x: [f64; 2]) -> [f64; 2] {
        let c = 2.0 * FRAC_1_PI;
        [c * x[0].cos() * x[1].sin(), -c * x[0].sin() * x[1].cos()]
    }
}

/// Eigenpair of `K a = ω² ε M a` on `ker B` nearest `sigma`.
///
/// `ker B` is represented by the conforming embedding when the multiplier
/// degree allows it and by a numerical null-space basis otherwise.
pub fn solve_eigenmode(disc: &Discretization, config: &EigenConfig) -> Result<EigenResult> {
    let mats = &disc.matrices;
    let basis = kernel_basis(disc, Mode::default_for(disc), config.rank_tol)?;
    let p = &basis;
    let kr = solvers::congruence(p, &mats.a);
    let mr = solvers::congruence(p, &mats.m);
    let pair = solvers::eigen_shift_invert(&kr, &mr, config.sigma, config.tol, config.max_iter)?;
    let mut a = solvers::spmv(p, &pair.vector);
    let scale = solvers::dot(&a, &solvers::spmv(&mats.m_plain, &a)).sqrt();
    let reference = project_broken_vector(&disc.mesh, disc.k, &exact::a);
    let sign = if solvers::dot(&a, &solvers::spmv(&mats.m_plain, &reference)) < 0.0 { -1.0 } else { 1.0 };
    a.iter_mut().for_each(|v| *v *= sign / scale);
    let mut result = post_process(disc, a, pair.value, config.rank_tol)?;
    result.residual = pair.residual;
    result.iterations = pair.iterations;
    Ok(result)
}

/// `H_h`, `Ĥ`, `D_h`, `D̂` from an eigenpair `(ω², A_h)` of the broken pencil.
pub fn post_process(disc: &Discretization, a: Vec<f64>, omega2: f64, rank_tol: f64) -> Result<EigenResult> {
    if !(omega2 > 0.0) {
        return Err(Error::Unsupported(format!("post-processing needs ω² > 0, got {omega2}")));
    }
    let mats = &disc.matrices;
    let Material { eps, mu } = mats.material;
    let omega = omega2.sqrt();

    let mut q = solvers::spmv(&mats.x_h, &a);
    let xd = solvers::spmv(&mats.x_d, &a);
    q.iter_mut().zip(&xd).for_each(|(q, x)| *q = *q / mu + eps * omega2 * x);
    let ma = solvers::spmv(&mats.m, &a);
    let ka = solvers::spmv(&mats.a, &a);
    let g: Vec<f64> = ma.iter().zip(&ka).map(|(m, k)| omega2 * m - k).collect();
    let hhat = HatRecovery::new(disc, rank_tol)?.solve(&q, &g)?;
    let dhat: Vec<f64> = solvers::spmv(&mats.curl_to_div, &hhat).iter().map(|v| -v / omega).collect();

    let h: Vec<f64> = broken_curl(disc, &a).iter().map(|v| v / mu).collect();
    let d: Vec<f64> = a.iter().map(|v| -eps * omega * v).collect();
    Ok(EigenResult {
        omega2,
        residual: 0.0,
        iterations: 0,
        h: FieldCoefficients {
            kind: SpaceKind::BrokenScalar(disc.k),
            values: h,
        },
        hhat: FieldCoefficients::new(&disc.multiplier, hhat)?,
        d: FieldCoefficients::new(&disc.broken, d)?,
        dhat: FieldCoefficients::new(&disc.div, dhat)?,
        a: FieldCoefficients::new(&disc.broken, a)?,
    })
}

/// What the discrete fields are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reference {
    /// The exact mode itself.
    Analytic,
    /// Its cell-wise Lagrange interpolant of degree `r + 1`.
    #[default]
    Interpolant,
}

impl EigenResult {
    /// Errors against [`exact`]; meaningful for `ε = μ = 1`.
    pub fn errors(&self, disc: &Discretization, reference: Reference) -> Result<ModeErrors> {
        let deg = 2 * disc.r + 4;
        let (h, d) = match reference {
            Reference::Analytic => (Exact::Scalar(&exact::h), Exact::Vector(&exact::d)),
            Reference::Interpolant => (
                Exact::ScalarInterpolant(&exact::h, disc.r + 1),
                Exact::VectorInterpolant(&exact::d, disc.r + 1),
            ),
        };
        Ok(ModeErrors {
            h: l2_error(disc, &self.h, h, deg)?,
            hhat: l2_error(disc, &self.hhat, h, deg)?,
            d: l2_error(disc, &self.d, d, deg)?,
            dhat: l2_error(disc, &self.dhat, d, deg)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub r: usize,
    pub n: usize,
    pub omega2: f64,
    pub residual: f64,
    pub errors: ModeErrors,
    /// Rates against the previous row of the same `r`; `None` on the coarsest mesh.
    pub rates: Option<ModeErrors>,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub const CSV_HEADER: &'static str = "r,N,err_H,rate_H,err_Hhat,rate_Hhat,err_D,rate_D,err_Dhat,rate_Dhat";
    pub const EIGEN_CSV_HEADER: &'static str = "r,N,omega2,abs_omega2_minus_2,residual,seconds";

    pub fn push(&mut self, r: usize, n: usize, result: &EigenResult, errors: ModeErrors, wall_time: Duration) {
        let rates = self.rows.last().filter(|p| p.r == r).map(|p| ModeErrors {
            h: eoc(p.errors.h, errors.h),
            hhat: eoc(p.errors.hhat, errors.hhat),
            d: eoc(p.errors.d, errors.d),
            dhat: eoc(p.errors.dhat, errors.dhat),
        });
        self.rows.push(ConvergenceRow {
            r,
            n,
            omega2: result.omega2,
            residual: result.residual,
            errors,
            rates,
            wall_time,
        });
    }

    pub fn rows_for(&self, r: usize) -> impl Iterator<Item = &ConvergenceRow> {
        self.rows.iter().filter(move |row| row.r == r)
    }

    /// Errors with three significant digits, rates with three decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let e = row.errors;
            let rate = |f: fn(&ModeErrors) -> f64| row.rates.as_ref().map_or(String::new(), |r| format!("{:.3}", f(r)));
            out.push_str(&format!(
                "{},{},{:.3e},{},{:.3e},{},{:.3e},{},{:.3e},{}\n",
                row.r,
                row.n,
                e.h,
                rate(|m| m.h),
                e.hhat,
                rate(|m| m.hhat),
                e.d,
                rate(|m| m.d),
                e.dhat,
                rate(|m| m.dhat)
            ));
        }
        out
    }

    pub fn eigen_csv(&self) -> String {
        let mut out = String::from(Self::EIGEN_CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{:.15e},{:.6e},{:.3e},{:.3}\n",
                row.r,
                row.n,
                row.omega2,
                (row.omega2 - 2.0).abs(),
                row.residual,
                row.wall_time.as_secs_f64()
            ));
        }
        out
    }
}

/// Solve on `N × N` meshes of `[0, π]²` for every `(r, N)` pair, in order.
///
/// With `budget` set, finer meshes of a degree are skipped once one solve of
/// that degree has exceeded it.
pub fn convergence_study(
    degrees: &[usize],
    sizes: &[usize],
    config: &EigenConfig,
    reference: Reference,
    budget: Option<Duration>,
    mut progress: impl FnMut(&ConvergenceRow),
) -> Result<ConvergenceTable> {
    let mut table = ConvergenceTable::default();
    for &r in degrees {
        for &n in sizes {
            let start = Instant::now();
            let disc = Discretization::uniform(n, r, r + 1, Material::default())?;
            let result = solve_eigenmode(&disc, config)?;
            let errors = result.errors(&disc, reference)?;
            let elapsed = start.elapsed();
            table.push(r, n, &result, errors, elapsed);
            progress(table.rows.last().expect("row just pushed"));
            if budget.is_some_and(|b| elapsed > b) {
                break;
            }
        }
    }
    Ok(table)
}

/// Exact eigenvalue of the `(m, n)` cavity mode on `[0, π]²`.
pub fn cavity_eigenvalue(m: usize, n: usize) -> f64 {
    (m * m + n * n) as f64
}
