//! Leapfrog time stepping of the hybrid method.
//!
//! `(A, D)` evolve on `ker B` by a Störmer–Verlet splitting. At every half
//! step the numerical trace `Ĥ` is recovered and the numerical flux `D̂` is
//! advanced by `curl Ĥ − J`, which keeps the discrete charge constraint
//! satisfied to round-off.

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use faer::sparse::Triplet;
use faer::Mat;

use crate::assembly::{project_broken_vector, Discretization, Material};
use crate::diagnostics::{broken_div_matrix, scalar_load, DiagnosticRecord, Diagnostics};
use crate::error::{Error, Result};
use crate::recovery::HatRecovery;
use crate::refelem::quadrature::triangle_rule;
use crate::refelem::scalar_dim;
use crate::solvers::{self, Sparse, SpdFactor, DEFAULT_RANK_TOL, DENSE_LIMIT};
use crate::spaces::{covariant_block, FieldCoefficients};

pub type VectorSource = Arc<dyn Fn([f64; 2], f64) -> [f64; 2] + Send + Sync>;
pub type ScalarSource = Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

/// Current density `J(x, t)` and charge density `ρ(x, t)`; both default to zero.
#[derive(Clone, Default)]
pub struct SourceSpec {
    pub j: Option<VectorSource>,
    pub rho: Option<ScalarSource>,
}

impl fmt::Debug for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SourceSpec")
            .field("j", &self.j.is_some())
            .field("rho", &self.rho.is_some())
            .finish()
    }
}

impl SourceSpec {
    /// Broken `P_r` load `⟨ψ_i, ρ(·, t)⟩`.
    pub fn rho_load(&self, disc: &Discretization, t: f64) -> Vec<f64> {
        match &self.rho {
            Some(rho) => scalar_load(disc, &|x| rho(x, t)),
            None => vec![0.0; disc.scalar.dim],
        }
    }

    /// Broken `P_d` projection of `J(·, t)`, if a current is present.
    fn j_projection(&self, disc: &Discretization, d: usize, t: f64) -> Option<Vec<f64>> {
        self.j.as_ref().map(|j| project_broken_vector(&disc.mesh, d, &|x| j(x, t)))
    }

    /// Largest `|ρ̇ + div J|` at sample points of every cell at time `t`, by
    /// central differences in time and space.
    pub fn charge_defect(&self, disc: &Discretization, t: f64) -> f64 {
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        let rule = triangle_rule(4);
        for cell in 0..disc.mesh.num_cells() {
            let g = disc.mesh.geometry(cell);
            for p in &rule.points {
                let x = g.map(*p);
                let rho_dot = self.rho.as_ref().map_or(0.0, |r| (r(x, t + h) - r(x, t - h)) / (2.0 * h));
                let div = self.j.as_ref().map_or(0.0, |j| {
                    (j([x[0] + h, x[1]], t)[0] - j([x[0] - h, x[1]], t)[0] + j([x[0], x[1] + h], t)[1]
                        - j([x[0], x[1] - h], t)[1])
                        / (2.0 * h)
                });
                worst = worst.max((rho_dot + div).abs());
            }
        }
        worst
    }
}

/// How `ker B` is represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Conforming embedding `P`; needs multiplier degree `k + 2`.
    Embedding,
    /// Numerically computed null-space basis of `B`.
    Kernel,
}

impl Mode {
    pub fn default_for(disc: &Discretization) -> Mode {
        if disc.is_conforming() {
            Mode::Embedding
        } else {
            Mode::Kernel
        }
    }
}

/// Initial value of `D̂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DhatInit {
    Zero,
    /// Closest field satisfying the discrete charge constraint and `div D̂ = Πρ`.
    Compatible,
}

#[derive(Debug, Clone)]
pub struct TimeState {
    pub step: usize,
    pub t: f64,
    pub a: FieldCoefficients,
    pub d: FieldCoefficients,
    pub dhat: FieldCoefficients,
    /// `Ĥ_{n−1/2}` from the step that produced this state.
    pub hhat: Option<FieldCoefficients>,
}

impl TimeState {
    pub fn zero(disc: &Discretization) -> Self {
        TimeState {
            step: 0,
            t: 0.0,
            a: FieldCoefficients::zeros(&disc.broken),
            d: FieldCoefficients::zeros(&disc.broken),
            dhat: FieldCoefficients::zeros(&disc.div),
            hhat: None,
        }
    }
}

/// Basis of `ker B` as columns of a sparse matrix.
pub fn kernel_basis(disc: &Discretization, mode: Mode, rank_tol: f64) -> Result<Sparse> {
    match mode {
        Mode::Embedding => {
            if !disc.is_conforming() {
                return Err(Error::Unsupported(format!(
                    "the conforming embedding spans ker B only for multiplier degree {}",
                    disc.k + 2
                )));
            }
            Ok(disc.matrices.p.clone())
        }
        Mode::Kernel => {
            let n = disc.broken.dim;
            if n > DENSE_LIMIT {
                return Err(Error::SizeLimit { size: n, limit: DENSE_LIMIT });
            }
            let z = solvers::nullspace_basis(solvers::dense_from_sparse(&disc.matrices.b).as_ref(), rank_tol)?;
            Ok(dense_to_sparse(&z))
        }
    }
}

fn dense_to_sparse(z: &Mat<f64>) -> Sparse {
    let mut trips = Vec::new();
    for j in 0..z.ncols() {
        for i in 0..z.nrows() {
            let v = z[(i, j)];
            if v.abs() > 1e-15 {
                trips.push(Triplet::new(i, j, v));
            }
        }
    }
    solvers::sparse_from_triplets(z.nrows(), z.ncols(), &trips)
}

/// Factored operators for repeated leapfrog steps.
pub struct Stepper<'a> {
    disc: &'a Discretization,
    pub mode: Mode,
    pub dt: f64,
    basis: Sparse,
    reduced: SpdFactor,
    recovery: Option<HatRecovery>,
    sources: SourceSpec,
}

impl<'a> Stepper<'a> {
    /// With `recover_hhat` false the `Ĥ` post-processing is skipped and `D̂` is frozen.
    pub fn new(
        disc: &'a Discretization,
        mode: Mode,
        dt: f64,
        sources: SourceSpec,
        recover_hhat: bool,
        rank_tol: f64,
    ) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::config("dt", "time step must be positive"));
        }
        let basis = kernel_basis(disc, mode, rank_tol)?;
        let reduced = SpdFactor::new(&solvers::congruence(&basis, &disc.matrices.m_plain))?;
        let recovery = if recover_hhat { Some(HatRecovery::new(disc, rank_tol)?) } else { None };
        Ok(Stepper {
            disc,
            mode,
            dt,
            basis,
            reduced,
            recovery,
            sources,
        })
    }

    pub fn kernel_dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `M`-orthogonal projection of a broken field onto `ker B`.
    pub fn project_kernel(&self, a: &[f64]) -> Vec<f64> {
        let rhs = solvers::spmv_t(&self.basis, &solvers::spmv(&self.disc.matrices.m_plain, a));
        solvers::spmv(&self.basis, &self.reduced.solve(&rhs))
    }

    /// One leapfrog step.
    pub fn step(&self, state: &TimeState) -> Result<TimeState> {
        let disc = self.disc;
        let mats = &disc.matrices;
        let Material { eps, mu } = mats.material;
        let dt = self.dt;
        let t_half = state.t + 0.5 * dt;
        let half = 0.5 * dt / eps;

        let a_half: Vec<f64> = state.a.values.iter().zip(&state.d.values).map(|(a, d)| a - half * d).collect();
        let ka = solvers::spmv(&mats.a, &a_half);
        let jk = self
            .sources
            .j_projection(disc, disc.k, t_half)
            .map(|j| solvers::spmv(&mats.m_plain, &j));
        let mut rhs = ka.clone();
        if let Some(jk) = &jk {
            rhs.iter_mut().zip(jk).for_each(|(r, j)| *r -= j);
        }
        let y = self.reduced.solve(&solvers::spmv_t(&self.basis, &rhs));
        let ddot = solvers::spmv(&self.basis, &y);
        let d_new: Vec<f64> = state.d.values.iter().zip(&ddot).map(|(d, v)| d + dt * v).collect();

        let (dhat_new, hhat) = match &self.recovery {
            Some(rec) => {
                let jr = self.sources.j_projection(disc, disc.r, t_half);
                let mut q = solvers::spmv(&mats.x_h, &a_half);
                q.iter_mut().for_each(|v| *v /= mu);
                for (qv, xv) in q.iter_mut().zip(solvers::spmv(&mats.x_d, &ddot)) {
                    *qv += xv;
                }
                let mut g = solvers::spmv(&mats.m_plain, &ddot);
                for (gv, kv) in g.iter_mut().zip(&ka) {
                    *gv -= kv;
                }
                if let (Some(jr), Some(jk)) = (&jr, &jk) {
                    let jcurl = solvers::spmv_t(&mats.mult_curl, &solvers::spmv(&mats.m_plain_r, jr));
                    q.iter_mut().zip(&jcurl).for_each(|(a, b)| *a += b);
                    g.iter_mut().zip(jk).for_each(|(a, b)| *a += b);
                }
                let h = rec.solve(&q, &g)?;
                let mut flux = solvers::spmv(&mats.curl_to_div, &h);
                if let Some(jr) = &jr {
                    for (f, j) in flux.iter_mut().zip(solvers::spmv(&mats.broken_r_to_div, jr)) {
                        *f -= j;
                    }
                }
                let dh: Vec<f64> = state.dhat.values.iter().zip(&flux).map(|(a, b)| a + dt * b).collect();
                (dh, Some(FieldCoefficients::new(&disc.multiplier, h)?))
            }
            None => (state.dhat.values.clone(), None),
        };
        let a_new: Vec<f64> = a_half.iter().zip(&d_new).map(|(a, d)| a - half * d).collect();
        solvers::check_finite(&a_new, "leapfrog step")?;
        Ok(TimeState {
            step: state.step + 1,
            t: state.t + dt,
            a: FieldCoefficients::new(&disc.broken, a_new)?,
            d: FieldCoefficients::new(&disc.broken, d_new)?,
            dhat: FieldCoefficients::new(&disc.div, dhat_new)?,
            hhat,
        })
    }
}

/// Single leapfrog step with freshly factored operators.
pub fn leapfrog_step(
    state: &TimeState,
    dt: f64,
    disc: &Discretization,
    sources: &SourceSpec,
    mode: Mode,
) -> Result<TimeState> {
    Stepper::new(disc, mode, dt, sources.clone(), true, DEFAULT_RANK_TOL)?.step(state)
}

/// `D̂_0` closest to `D_0` in L² subject to the discrete charge constraint
/// against every broken scalar test function and `div D̂_0 = Πρ_0` cell by cell.
pub fn init_dhat(disc: &Discretization, d0: &[f64], rho0_load: &[f64], rank_tol: f64) -> Result<Vec<f64>> {
    let mats = &disc.matrices;
    let n = disc.div.dim;
    if n > DENSE_LIMIT {
        return Err(Error::SizeLimit { size: n, limit: DENSE_LIMIT });
    }
    let t = &mats.div_to_broken_r;
    let q_mat = solvers::dense_from_sparse(&solvers::congruence(t, &mats.m_plain_r));
    let q = solvers::spmv_t(t, &solvers::spmv(&mats.m_plain_r, &solvers::spmv(&mats.inject, d0)));

    // element-wise divergence rows, restricted to the image P_{r-1}
    let ns = scalar_dim(disc.r);
    let image = scalar_dim(disc.r - 1);
    let div_full = solvers::dense_from_sparse(&solvers::matmul(&broken_div_matrix(disc, disc.r), t));
    let beta = solvers::dense_from_sparse(&mats.beta);
    let cells = disc.mesh.num_cells();
    let rows = beta.nrows() + cells * image;
    let mut c = Mat::<f64>::zeros(rows, n);
    let mut g = vec![0.0; rows];
    let gd = solvers::spmv_t(&mats.g, &solvers::spmv(&mats.m_plain, d0));
    for i in 0..beta.nrows() {
        for j in 0..n {
            c[(i, j)] = beta[(i, j)];
        }
        g[i] = gd[i] + rho0_load[i];
    }
    for cell in 0..cells {
        let vol = disc.mesh.geometry(cell).det.abs();
        for a in 0..image {
            let row = beta.nrows() + cell * image + a;
            for j in 0..n {
                c[(row, j)] = div_full[(cell * ns + a, j)];
            }
            g[row] = rho0_load[cell * ns + a] / vol;
        }
    }
    match solvers::constrained_lsq(q_mat.as_ref(), &q, c.as_ref(), &g, rank_tol) {
        Err(Error::Infeasible { residual, .. }) => Err(Error::Compatibility { residual }),
        other => other,
    }
}

/// Leapfrog for the conforming edge-element formulation, assembled directly
/// from the mapped edge basis by quadrature.
pub struct ConformingIntegrator<'a> {
    disc: &'a Discretization,
    pub mass: Sparse,
    pub stiffness: Sparse,
    factor: SpdFactor,
    dt: f64,
    sources: SourceSpec,
}

impl<'a> ConformingIntegrator<'a> {
    pub fn new(disc: &'a Discretization, dt: f64, sources: SourceSpec) -> Result<Self> {
        let space = &disc.conforming;
        let elem = &disc.tables.conf_elem;
        let Material { mu, .. } = disc.material();
        let rule = triangle_rule(2 * disc.k + 2);
        let vals: Vec<Vec<[f64; 2]>> = rule.points.iter().map(|p| elem.eval(*p)).collect();
        let curls: Vec<Vec<(f64, f64)>> = rule.points.iter().map(|p| elem.eval_curl_div(*p)).collect();
        let nl = elem.dim();
        let (mut mt, mut kt) = (Vec::new(), Vec::new());
        for cell in 0..disc.mesh.num_cells() {
            let g = disc.mesh.geometry(cell);
            let cov = covariant_block(&g);
            let mut ml = vec![0.0; nl * nl];
            let mut kl = vec![0.0; nl * nl];
            for (q, w) in rule.weights.iter().enumerate() {
                let wv = w * g.det.abs();
                let phys: Vec<[f64; 2]> = vals[q]
                    .iter()
                    .map(|v| [cov[0][0] * v[0] + cov[0][1] * v[1], cov[1][0] * v[0] + cov[1][1] * v[1]])
                    .collect();
                for i in 0..nl {
                    for j in 0..nl {
                        ml[i * nl + j] += wv * (phys[i][0] * phys[j][0] + phys[i][1] * phys[j][1]);
                        kl[i * nl + j] += wv / mu * curls[q][i].0 * curls[q][j].0 / (g.det * g.det);
                    }
                }
            }
            let dofs = space.cell_dofs(cell);
            for i in 0..nl {
                let Some(gi) = dofs[i] else { continue };
                for j in 0..nl {
                    let Some(gj) = dofs[j] else { continue };
                    let s = space.sign(cell, i) * space.sign(cell, j);
                    mt.push(Triplet::new(gi, gj, s * ml[i * nl + j]));
                    kt.push(Triplet::new(gi, gj, s * kl[i * nl + j]));
                }
            }
        }
        let mass = solvers::sparse_from_triplets(space.dim, space.dim, &mt);
        let stiffness = solvers::sparse_from_triplets(space.dim, space.dim, &kt);
        let factor = SpdFactor::new(&mass)?;
        Ok(ConformingIntegrator {
            disc,
            mass,
            stiffness,
            factor,
            dt,
            sources,
        })
    }

    /// `⟨J(·, t), ψ_l⟩` over the conforming basis.
    fn current_load(&self, t: f64) -> Option<Vec<f64>> {
        let j = self.sources.j.as_ref()?;
        let disc = self.disc;
        let elem = &disc.tables.conf_elem;
        let rule = triangle_rule((2 * disc.k + 6).min(20));
        let mut load = vec![0.0; disc.conforming.dim];
        for cell in 0..disc.mesh.num_cells() {
            let g = disc.mesh.geometry(cell);
            let cov = covariant_block(&g);
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let jv = j(g.map(*p), t);
                for (l, v) in elem.eval(*p).iter().enumerate() {
                    let Some(gl) = disc.conforming.dof(cell, l) else { continue };
                    let phys = [cov[0][0] * v[0] + cov[0][1] * v[1], cov[1][0] * v[0] + cov[1][1] * v[1]];
                    load[gl] += w * g.det.abs() * disc.conforming.sign(cell, l) * (phys[0] * jv[0] + phys[1] * jv[1]);
                }
            }
        }
        Some(load)
    }

    /// Advance conforming coefficients `(α, δ)` by one step from time `t`.
    pub fn step(&self, alpha: &[f64], delta: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * self.dt / self.disc.material().eps;
        let a_half: Vec<f64> = alpha.iter().zip(delta).map(|(a, d)| a - half * d).collect();
        let mut rhs = solvers::spmv(&self.stiffness, &a_half);
        if let Some(j) = self.current_load(t + 0.5 * self.dt) {
            rhs.iter_mut().zip(&j).for_each(|(r, j)| *r -= j);
        }
        let rate = self.factor.solve(&rhs);
        let d_new: Vec<f64> = delta.iter().zip(&rate).map(|(d, v)| d + self.dt * v).collect();
        let a_new = a_half.iter().zip(&d_new).map(|(a, d)| a - half * d).collect();
        (a_new, d_new)
    }
}

/// Numerical settings of a time-domain run.
#[derive(Debug, Clone)]
pub struct TimeConfig {
    pub n: usize,
    pub r: usize,
    pub mult_degree: usize,
    pub dt: f64,
    pub steps: usize,
    pub material: Material,
    /// `None` picks [`Mode::default_for`].
    pub mode: Option<Mode>,
    pub dhat_init: DhatInit,
    pub recover_hhat: bool,
    pub rank_tol: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig {
            n: 16,
            r: 2,
            mult_degree: 3,
            dt: std::f64::consts::PI / 512.0,
            steps: 1024,
            material: Material::default(),
            mode: None,
            dhat_init: DhatInit::Zero,
            recover_hhat: true,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }
}

/// Configuration plus initial data and sources.
#[derive(Clone)]
pub struct TimeProblem {
    pub config: TimeConfig,
    pub a0: VectorField,
    pub d0: VectorField,
    pub sources: SourceSpec,
}

impl fmt::Debug for TimeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeProblem")
            .field("config", &self.config)
            .field("sources", &self.sources)
            .finish_non_exhaustive()
    }
}

impl TimeProblem {
    /// `A_0 = (y(π − y), x(π − x))`, `D_0 = 0`, no sources.
    pub fn quadratic_potential(config: TimeConfig) -> Self {
        let pi = std::f64::consts::PI;
        TimeProblem {
            config,
            a0: Arc::new(move |x| [x[1] * (pi - x[1]), x[0] * (pi - x[0])]),
            d0: Arc::new(|_| [0.0, 0.0]),
            sources: SourceSpec::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TimeRun {
    pub records: Vec<DiagnosticRecord>,
    pub final_state: TimeState,
    pub mode: Mode,
    pub nonconforming: bool,
    pub kernel_dim: usize,
    pub wall_time: Duration,
}

/// Observer called with every recorded state, e.g. to write snapshots.
pub type Observer<'o> = dyn FnMut(&Discretization, &TimeState, &DiagnosticRecord) -> Result<()> + 'o;

/// Build the discretization, initialize and run all steps, recording
/// diagnostics at every step (including step 0).
pub fn run_time_domain(problem: &TimeProblem, observer: Option<&mut Observer<'_>>) -> Result<TimeRun> {
    let cfg = &problem.config;
    let disc = Discretization::uniform(cfg.n, cfg.r, cfg.mult_degree, cfg.material)?;
    run_on(&disc, problem, observer)
}

/// [`run_time_domain`] on an existing discretization.
pub fn run_on(disc: &Discretization, problem: &TimeProblem, mut observer: Option<&mut Observer<'_>>) -> Result<TimeRun> {
    let start = Instant::now();
    let cfg = &problem.config;
    let mode = cfg.mode.unwrap_or_else(|| Mode::default_for(disc));
    let stepper = Stepper::new(disc, mode, cfg.dt, problem.sources.clone(), cfg.recover_hhat, cfg.rank_tol)?;
    let diag = Diagnostics::new(disc);

    let a0 = project_broken_vector(&disc.mesh, disc.k, &*problem.a0);
    let a0 = stepper.project_kernel(&a0);
    let d0 = project_broken_vector(&disc.mesh, disc.k, &*problem.d0);
    let d0 = stepper.project_kernel(&d0);
    let rho0 = problem.sources.rho_load(disc, 0.0);
    let dhat0 = match cfg.dhat_init {
        DhatInit::Zero => vec![0.0; disc.div.dim],
        DhatInit::Compatible => init_dhat(disc, &d0, &rho0, cfg.rank_tol)?,
    };
    let mut state = TimeState {
        step: 0,
        t: 0.0,
        a: FieldCoefficients::new(&disc.broken, a0)?,
        d: FieldCoefficients::new(&disc.broken, d0)?,
        dhat: FieldCoefficients::new(&disc.div, dhat0)?,
        hhat: None,
    };
    let record = |s: &TimeState| -> Result<DiagnosticRecord> {
        let rho = problem.sources.rho_load(disc, s.t);
        let rec = DiagnosticRecord {
            step: s.step,
            t: s.t,
            seminorm_d: diag.seminorm_broken(&s.d.values),
            seminorm_dhat: diag.seminorm_div(&s.dhat.values),
            flux_residual_max: diag.flux_residual_max(&s.dhat.values, &rho),
            constraint_residual: diag.constraint_residual(&s.d.values, &s.dhat.values, &rho),
            energy: diag.energy(&s.a.values, &s.d.values),
        };
        rec.validate()?;
        Ok(rec)
    };
    let mut records = Vec::with_capacity(cfg.steps + 1);
    let first = record(&state)?;
    if let Some(obs) = observer.as_deref_mut() {
        obs(disc, &state, &first)?;
    }
    records.push(first);
    for _ in 0..cfg.steps {
        state = stepper.step(&state)?;
        let rec = record(&state)?;
        if let Some(obs) = observer.as_deref_mut() {
            obs(disc, &state, &rec)?;
        }
        records.push(rec);
    }
    Ok(TimeRun {
        records,
        final_state: state,
        mode,
        nonconforming: !disc.is_conforming(),
        kernel_dim: stepper.kernel_dim(),
        wall_time: start.elapsed(),
    })
}
