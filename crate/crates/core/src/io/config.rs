//! Run configuration: TOML documents with nested sections, overridden by flags.
//!
//! ```toml
//! kind = "time"
//!
//! [mesh]
//! n = 16
//! r = 2
//! mult_degree = 3
//!
//! [time]
//! dt = 0.006135923151542565
//! steps = 1024
//! ```

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::assembly::{Material, MAX_R};
use crate::error::{Error, Result};
use crate::frequencydomain::{EigenConfig, Reference};
use crate::solvers::DEFAULT_RANK_TOL;
use crate::timedomain::{DhatInit, Mode, TimeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Time,
    Eigen,
    Convergence,
    Check,
    MeshInfo,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Time => "time",
            Kind::Eigen => "eigen",
            Kind::Convergence => "convergence",
            Kind::Check => "check",
            Kind::MeshInfo => "mesh-info",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeChoice {
    /// Embedding when the multiplier degree allows it, kernel otherwise.
    #[default]
    Auto,
    Embedding,
    Kernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DhatChoice {
    #[default]
    Zero,
    Compatible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceChoice {
    Analytic,
    #[default]
    Interpolant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshSection {
    pub n: usize,
    pub r: usize,
    /// Defaults to `r + 1`.
    pub mult_degree: Option<usize>,
}

impl Default for MeshSection {
    fn default() -> Self {
        MeshSection { n: 16, r: 2, mult_degree: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialSection {
    pub eps: f64,
    pub mu: f64,
}

impl Default for MaterialSection {
    fn default() -> Self {
        MaterialSection { eps: 1.0, mu: 1.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub t_end: Option<f64>,
    pub mode: ModeChoice,
    pub dhat_init: DhatChoice,
    /// Skip the trace recovery; `D̂` then stays at its initial value.
    pub skip_recovery: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenSection {
    pub sigma: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenSection {
    fn default() -> Self {
        let e = EigenConfig::default();
        EigenSection {
            sigma: e.sigma,
            tol: e.tol,
            max_iter: e.max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceSection {
    pub degrees: Vec<usize>,
    pub sizes: Vec<usize>,
    /// Stop refining a degree after one solve exceeds this many seconds.
    pub budget_seconds: Option<f64>,
    pub reference: ReferenceChoice,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        ConvergenceSection {
            degrees: vec![2, 3, 4, 5],
            sizes: vec![2, 4, 8, 16, 32],
            budget_seconds: Some(600.0),
            reference: ReferenceChoice::Interpolant,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    /// Write a VTK snapshot every this many steps; 0 disables snapshots.
    pub vtk_stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub rank_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection { rank_tol: DEFAULT_RANK_TOL }
    }
}

/// The configuration document as written.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub kind: Option<Kind>,
    pub mesh: MeshSection,
    pub material: MaterialSection,
    pub time: TimeSection,
    pub eigen: EigenSection,
    pub convergence: ConvergenceSection,
    pub output: OutputSection,
    pub solver: SolverSection,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub n: Option<usize>,
    pub r: Option<usize>,
    pub mult_degree: Option<usize>,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub sigma: Option<f64>,
    pub out: Option<PathBuf>,
    pub vtk_stride: Option<usize>,
}

/// Validated settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub kind: Kind,
    pub n: usize,
    pub r: usize,
    pub mult_degree: usize,
    pub eps: f64,
    pub mu: f64,
    pub dt: f64,
    pub steps: usize,
    pub t_end: f64,
    pub mode: ModeChoice,
    pub dhat_init: DhatChoice,
    pub recover_hhat: bool,
    pub sigma: f64,
    pub eigen_tol: f64,
    pub max_iter: usize,
    pub degrees: Vec<usize>,
    pub sizes: Vec<usize>,
    pub budget_seconds: Option<f64>,
    pub reference: ReferenceChoice,
    pub out_dir: PathBuf,
    pub vtk_stride: usize,
    pub rank_tol: f64,
}

pub const DEFAULT_OUT_DIR: &str = "hybridem-out";

/// Parse a TOML document; unknown keys are errors.
pub fn parse_config_str(text: &str) -> Result<ConfigFile> {
    toml::from_str(text).map_err(|e| {
        let message = e.message().to_string();
        let key = message
            .split('`')
            .nth(1)
            .map(str::to_string)
            .unwrap_or_else(|| "config".to_string());
        Error::Config { key, message }
    })
}

fn check(ok: bool, key: &str, message: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(key, message))
    }
}

fn positive(x: f64, key: &str) -> Result<()> {
    check(x > 0.0 && x.is_finite(), key, format!("must be positive and finite, got {x}"))
}

/// Merge file values, flag overrides and the environment into a validated config.
///
/// The output directory falls back from the flag to the file, then to
/// `env_out` (the `HYBRIDEM_OUT` variable), then to [`DEFAULT_OUT_DIR`].
pub fn resolve(kind: Kind, file: &ConfigFile, flags: &Overrides, env_out: Option<PathBuf>) -> Result<RunConfig> {
    if let Some(k) = file.kind {
        check(k == kind, "kind", format!("file is for `{}` but `{}` was requested", k.name(), kind.name()))?;
    }
    let n = flags.n.unwrap_or(file.mesh.n);
    let r = flags.r.unwrap_or(file.mesh.r);
    check((1..=256).contains(&n), "mesh.n", format!("must lie in 1..=256, got {n}"))?;
    check((2..=MAX_R).contains(&r), "mesh.r", format!("must lie in 2..={MAX_R}, got {r}"))?;
    let mult_degree = flags.mult_degree.or(file.mesh.mult_degree).unwrap_or(r + 1);
    check(
        (1..=r + 1).contains(&mult_degree),
        "mesh.mult_degree",
        format!("must lie in 1..={}, got {mult_degree}", r + 1),
    )?;
    positive(file.material.eps, "material.eps")?;
    positive(file.material.mu, "material.mu")?;

    let t = &file.time;
    let dt_in = flags.dt.or(t.dt);
    let steps_in = flags.steps.or(t.steps);
    if let Some(dt) = dt_in {
        positive(dt, "time.dt")?;
    }
    if let Some(te) = t.t_end {
        positive(te, "time.t_end")?;
    }
    let (dt, steps) = match (dt_in, steps_in, t.t_end) {
        (Some(dt), Some(steps), Some(te)) => {
            check(
                ((dt * steps as f64) - te).abs() <= 1e-9 * te,
                "time.t_end",
                format!("dt·steps = {} differs from t_end = {te}", dt * steps as f64),
            )?;
            (dt, steps)
        }
        (Some(dt), Some(steps), None) => (dt, steps),
        (None, Some(steps), Some(te)) => {
            check(steps > 0, "time.steps", "must be positive when t_end is given")?;
            (te / steps as f64, steps)
        }
        (Some(dt), None, Some(te)) => {
            let s = (te / dt).round();
            check((s * dt - te).abs() <= 1e-9 * te, "time.t_end", "is not a whole number of steps")?;
            (dt, s as usize)
        }
        (dt, steps, None) => (dt.unwrap_or(PI / 512.0), steps.unwrap_or(1024)),
        (None, None, Some(te)) => {
            let steps = (te / (PI / 512.0)).ceil() as usize;
            (te / steps as f64, steps)
        }
    };

    let sigma = flags.sigma.unwrap_or(file.eigen.sigma);
    check(sigma.is_finite(), "eigen.sigma", "must be finite")?;
    positive(file.eigen.tol, "eigen.tol")?;
    check(file.eigen.max_iter > 0, "eigen.max_iter", "must be positive")?;

    let c = &file.convergence;
    check(!c.degrees.is_empty(), "convergence.degrees", "must not be empty")?;
    check(!c.sizes.is_empty(), "convergence.sizes", "must not be empty")?;
    for &d in &c.degrees {
        check((2..=MAX_R).contains(&d), "convergence.degrees", format!("{d} outside 2..={MAX_R}"))?;
    }
    for &s in &c.sizes {
        check((1..=256).contains(&s), "convergence.sizes", format!("{s} outside 1..=256"))?;
    }
    if let Some(b) = c.budget_seconds {
        positive(b, "convergence.budget_seconds")?;
    }
    positive(file.solver.rank_tol, "solver.rank_tol")?;

    let out_dir = flags
        .out
        .clone()
        .or_else(|| file.output.dir.clone())
        .or(env_out)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));

    Ok(RunConfig {
        kind,
        n,
        r,
        mult_degree,
        eps: file.material.eps,
        mu: file.material.mu,
        dt,
        steps,
        t_end: dt * steps as f64,
        mode: t.mode,
        dhat_init: t.dhat_init,
        recover_hhat: !t.skip_recovery,
        sigma,
        eigen_tol: file.eigen.tol,
        max_iter: file.eigen.max_iter,
        degrees: c.degrees.clone(),
        sizes: c.sizes.clone(),
        budget_seconds: c.budget_seconds,
        reference: c.reference,
        out_dir,
        vtk_stride: flags.vtk_stride.unwrap_or(file.output.vtk_stride),
        rank_tol: file.solver.rank_tol,
    })
}

impl RunConfig {
    pub fn material(&self) -> Material {
        Material { eps: self.eps, mu: self.mu }
    }

    pub fn time_config(&self) -> TimeConfig {
        TimeConfig {
            n: self.n,
            r: self.r,
            mult_degree: self.mult_degree,
            dt: self.dt,
            steps: self.steps,
            material: self.material(),
            mode: match self.mode {
                ModeChoice::Auto => None,
                ModeChoice::Embedding => Some(Mode::Embedding),
                ModeChoice::Kernel => Some(Mode::Kernel),
            },
            dhat_init: match self.dhat_init {
                DhatChoice::Zero => DhatInit::Zero,
                DhatChoice::Compatible => DhatInit::Compatible,
            },
            recover_hhat: self.recover_hhat,
            rank_tol: self.rank_tol,
        }
    }

    pub fn eigen_config(&self) -> EigenConfig {
        EigenConfig {
            sigma: self.sigma,
            tol: self.eigen_tol,
            max_iter: self.max_iter,
            rank_tol: self.rank_tol,
        }
    }

    pub fn reference(&self) -> Reference {
        match self.reference {
            ReferenceChoice::Analytic => Reference::Analytic,
            ReferenceChoice::Interpolant => Reference::Interpolant,
        }
    }

    /// The resolved settings as a TOML document.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve_str(kind: Kind, text: &str) -> Result<RunConfig> {
        resolve(kind, &parse_config_str(text)?, &Overrides::default(), None)
    }

    #[test]
    fn empty_eigen_config_uses_defaults() {
        let c = resolve_str(Kind::Eigen, "").unwrap();
        assert_eq!((c.n, c.r, c.mult_degree, c.sigma), (16, 2, 3, 2.0));
        assert_eq!((c.eps, c.mu), (1.0, 1.0));
        assert_eq!(c.out_dir, PathBuf::from(DEFAULT_OUT_DIR));
    }

    #[test]
    fn time_defaults_are_the_reference_run() {
        let c = resolve_str(Kind::Time, "kind = \"time\"").unwrap();
        assert_eq!(c.dt, PI / 512.0);
        assert_eq!(c.steps, 1024);
        assert!((c.t_end - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn unknown_keys_name_the_key() {
        let err = resolve_str(Kind::Time, "[mesh]\nn = 4\nsize = 3\n").unwrap_err();
        match err {
            Error::Config { key, .. } => assert_eq!(key, "size"),
            other => panic!("{other:?}"),
        }
        assert!(resolve_str(Kind::Time, "bogus = 1").is_err());
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        for (text, key) in [
            ("[mesh]\nr = 7", "mesh.r"),
            ("[mesh]\nr = 2\nmult_degree = 4", "mesh.mult_degree"),
            ("[time]\ndt = -1.0", "time.dt"),
            ("[time]\ndt = 0.1\nsteps = 10\nt_end = 2.0", "time.t_end"),
            ("[material]\neps = 0.0", "material.eps"),
        ] {
            match resolve_str(Kind::Time, text) {
                Err(Error::Config { key: k, .. }) => assert_eq!(k, key, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn time_step_bookkeeping() {
        let c = resolve_str(Kind::Time, "[time]\nsteps = 10\nt_end = 1.0").unwrap();
        assert!((c.dt - 0.1).abs() < 1e-15);
        let c = resolve_str(Kind::Time, "[time]\ndt = 0.25\nt_end = 1.0").unwrap();
        assert_eq!(c.steps, 4);
        let c = resolve_str(Kind::Time, "[time]\nt_end = 1.0").unwrap();
        assert!((c.dt * c.steps as f64 - 1.0).abs() < 1e-14 && c.dt <= PI / 512.0);
    }

    #[test]
    fn flags_override_file_and_env() {
        let file = parse_config_str("[mesh]\nn = 4\nr = 3\n[output]\ndir = \"from-file\"").unwrap();
        let flags = Overrides { n: Some(8), mult_degree: Some(3), ..Overrides::default() };
        let c = resolve(Kind::Time, &file, &flags, Some("from-env".into())).unwrap();
        assert_eq!((c.n, c.r, c.mult_degree), (8, 3, 3));
        assert_eq!(c.out_dir, PathBuf::from("from-file"));
        let c = resolve(Kind::Time, &ConfigFile::default(), &Overrides::default(), Some("from-env".into())).unwrap();
        assert_eq!(c.out_dir, PathBuf::from("from-env"));
    }

    #[test]
    fn kind_mismatch_is_an_error() {
        assert!(resolve_str(Kind::Eigen, "kind = \"time\"").is_err());
        assert!(resolve_str(Kind::MeshInfo, "kind = \"mesh-info\"").is_ok());
    }

    #[test]
    fn resolved_config_round_trips_to_toml() {
        let c = resolve_str(Kind::Convergence, "").unwrap();
        let text = c.to_toml();
        assert!(text.contains("kind = \"convergence\""));
        assert!(text.contains("degrees = [2, 3, 4, 5]"));
    }
}
