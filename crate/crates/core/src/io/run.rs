//! Experiment drivers behind the CLI subcommands and their result bundles.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::assembly::Discretization;
use crate::diagnostics::{cell_div_norms, cell_means, DiagnosticRecord};
use crate::error::Result;
use crate::frequencydomain::{convergence_study, solve_eigenmode, ConvergenceTable, EigenResult};
use crate::mesh::{Mesh, Rect};
use crate::spaces::FieldCoefficients;
use crate::timedomain::{run_on, TimeProblem, TimeState};

use super::check;
use super::config::{Kind, RunConfig};
use super::vtk::{snapshot_string, CellField};

/// Everything a run produces.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultBundle {
    /// The configuration file exactly as read, if one was given.
    pub config_echo: Option<String>,
    /// Resolved settings after defaults and overrides.
    pub resolved: String,
    /// Output files by name: CSV tables and VTK snapshots.
    pub files: Vec<(String, String)>,
    /// Deterministic run facts: sizes, residuals, iteration counts.
    pub metadata: BTreeMap<String, String>,
    /// Wall-clock seconds per phase; kept apart so other outputs stay reproducible.
    pub timing: BTreeMap<String, f64>,
    /// Human-readable report for standard output.
    pub summary: Vec<String>,
    pub success: bool,
}

impl ResultBundle {
    fn new(config: &RunConfig, echo: Option<String>) -> Self {
        ResultBundle {
            config_echo: echo,
            resolved: config.to_toml(),
            success: true,
            ..ResultBundle::default()
        }
    }

    fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.to_string(), value.to_string());
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    /// Write all artifacts below `dir`, returning the written paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut put = |name: &str, content: &str| -> Result<()> {
            let path = dir.join(name);
            fs::write(&path, content)?;
            written.push(path);
            Ok(())
        };
        if let Some(echo) = &self.config_echo {
            put("config.toml", echo)?;
        }
        put("resolved.toml", &self.resolved)?;
        for (name, content) in &self.files {
            put(name, content)?;
        }
        put("metadata.toml", &toml::to_string(&self.metadata).expect("string map serializes"))?;
        put("timing.toml", &toml::to_string(&self.timing).expect("float map serializes"))?;
        Ok(written)
    }
}

/// Execute the experiment described by `config`.
pub fn run(config: &RunConfig, echo: Option<String>) -> Result<ResultBundle> {
    let mut bundle = ResultBundle::new(config, echo);
    let start = Instant::now();
    match config.kind {
        Kind::Time => run_time(config, &mut bundle)?,
        Kind::Eigen => run_eigen(config, &mut bundle)?,
        Kind::Convergence => run_convergence(config, &mut bundle)?,
        Kind::Check => run_check(&mut bundle),
        Kind::MeshInfo => run_mesh_info(config, &mut bundle)?,
    }
    bundle.timing.insert("total_seconds".into(), start.elapsed().as_secs_f64());
    Ok(bundle)
}

fn discretize(config: &RunConfig, bundle: &mut ResultBundle) -> Result<Discretization> {
    let disc = Discretization::uniform(config.n, config.r, config.mult_degree, config.material())?;
    bundle.meta("N", config.n);
    bundle.meta("r", config.r);
    bundle.meta("mult_degree", config.mult_degree);
    bundle.meta("nonconforming", !disc.is_conforming());
    bundle.meta("broken_dim", disc.broken.dim);
    bundle.meta("multiplier_dim", disc.multiplier.dim);
    bundle.meta("conforming_dim", disc.conforming.dim);
    bundle.meta("div_dim", disc.div.dim);
    if !disc.is_conforming() {
        bundle.summary.push(format!(
            "multiplier degree {} < {}: nonconforming hybrid method",
            config.mult_degree,
            disc.k + 2
        ));
    }
    Ok(disc)
}

/// Time-series CSV with the record header.
pub fn records_csv(records: &[DiagnosticRecord]) -> String {
    let mut out = String::from(DiagnosticRecord::CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

fn field_snapshot(
    disc: &Discretization,
    title: &str,
    d: &FieldCoefficients,
    dhat: &FieldCoefficients,
) -> Result<String> {
    snapshot_string(
        &disc.mesh,
        title,
        &[
            CellField::Vector("D".into(), cell_means(disc, d)?),
            CellField::Vector("Dhat".into(), cell_means(disc, dhat)?),
            CellField::Scalar("div_D".into(), cell_div_norms(disc, d)?),
            CellField::Scalar("div_Dhat".into(), cell_div_norms(disc, dhat)?),
        ],
    )
}

fn run_time(config: &RunConfig, bundle: &mut ResultBundle) -> Result<()> {
    let setup = Instant::now();
    let disc = discretize(config, bundle)?;
    bundle.timing.insert("setup_seconds".into(), setup.elapsed().as_secs_f64());
    let problem = TimeProblem::quadratic_potential(config.time_config());
    let stride = config.vtk_stride;
    let mut snapshots = Vec::new();
    let mut observer = |disc: &Discretization, s: &TimeState, _: &DiagnosticRecord| -> Result<()> {
        if stride > 0 && s.step.is_multiple_of(stride) {
            let title = format!("step {} t {:?}", s.step, s.t);
            snapshots.push((format!("snapshot_{:06}.vtk", s.step), field_snapshot(disc, &title, &s.d, &s.dhat)?));
        }
        Ok(())
    };
    let run = run_on(&disc, &problem, Some(&mut observer))?;
    let max = |f: fn(&DiagnosticRecord) -> f64| run.records.iter().map(f).fold(0.0, f64::max);
    let last = run.records.last().copied().expect("step 0 is always recorded");
    bundle.meta("mode", format!("{:?}", run.mode).to_lowercase());
    bundle.meta("kernel_dim", run.kernel_dim);
    bundle.meta("steps", config.steps);
    bundle.meta("dt", format!("{:?}", config.dt));
    bundle.meta("max_seminorm_Dhat", format!("{:e}", max(|r| r.seminorm_dhat)));
    bundle.meta("max_flux_residual", format!("{:e}", max(|r| r.flux_residual_max)));
    bundle.meta("max_constraint_residual", format!("{:e}", max(|r| r.constraint_residual)));
    bundle.meta("final_seminorm_D", format!("{:e}", last.seminorm_d));
    bundle.meta("final_energy", format!("{:e}", last.energy));
    bundle.timing.insert("run_seconds".into(), run.wall_time.as_secs_f64());
    bundle.summary.push(format!(
        "{} steps to t = {:.6}: max |D̂|div {:.3e}, final |D|div {:.3e}, max flux residual {:.3e}",
        config.steps,
        last.t,
        max(|r| r.seminorm_dhat),
        last.seminorm_d,
        max(|r| r.flux_residual_max)
    ));
    bundle.files.push(("time_series.csv".into(), records_csv(&run.records)));
    bundle.files.extend(snapshots);
    Ok(())
}

fn eigen_bundle(bundle: &mut ResultBundle, res: &EigenResult) {
    bundle.meta("omega2", format!("{:?}", res.omega2));
    bundle.meta("eigen_residual", format!("{:e}", res.residual));
    bundle.meta("eigen_iterations", res.iterations);
}

fn run_eigen(config: &RunConfig, bundle: &mut ResultBundle) -> Result<()> {
    let start = Instant::now();
    let disc = discretize(config, bundle)?;
    let res = solve_eigenmode(&disc, &config.eigen_config())?;
    eigen_bundle(bundle, &res);
    let elapsed = start.elapsed();
    bundle.timing.insert("solve_seconds".into(), elapsed.as_secs_f64());
    let mut table = ConvergenceTable::default();
    let errors = res.errors(&disc, config.reference())?;
    table.push(config.r, config.n, &res, errors, Duration::ZERO);
    bundle.summary.push(format!(
        "ω² = {:.12} (residual {:.2e}); errors H {:.3e}, Ĥ {:.3e}, D {:.3e}, D̂ {:.3e}",
        res.omega2, res.residual, errors.h, errors.hhat, errors.d, errors.dhat
    ));
    bundle.files.push(("errors.csv".into(), table.to_csv()));
    let title = format!("eigenmode omega2 {:?}", res.omega2);
    bundle.files.push(("eigenmode.vtk".into(), field_snapshot(&disc, &title, &res.d, &res.dhat)?));
    Ok(())
}

fn run_convergence(config: &RunConfig, bundle: &mut ResultBundle) -> Result<()> {
    let budget = config.budget_seconds.map(Duration::from_secs_f64);
    let mut lines = Vec::new();
    let table = convergence_study(
        &config.degrees,
        &config.sizes,
        &config.eigen_config(),
        config.reference(),
        budget,
        |row| {
            lines.push(format!(
                "r={} N={:>3}: ω² = {:.12}, errors {:.3e} {:.3e} {:.3e} {:.3e} ({:.1} s)",
                row.r,
                row.n,
                row.omega2,
                row.errors.h,
                row.errors.hhat,
                row.errors.d,
                row.errors.dhat,
                row.wall_time.as_secs_f64()
            ))
        },
    )?;
    bundle.summary.extend(lines);
    for row in &table.rows {
        bundle.timing.insert(format!("r{}_N{}_seconds", row.r, row.n), row.wall_time.as_secs_f64());
        bundle.meta(&format!("r{}_N{}_eigen_residual", row.r, row.n), format!("{:e}", row.residual));
    }
    for &r in &config.degrees {
        let gaps: Vec<f64> = table.rows_for(r).map(|row| (row.omega2 - 2.0).abs()).collect();
        bundle.meta(&format!("r{r}_eigenvalue_monotone"), gaps.windows(2).all(|w| w[1] < w[0]));
        if let Some(rate) = table.rows_for(r).last().and_then(|row| row.rates) {
            bundle.meta(&format!("r{r}_finest_rate_Hhat"), format!("{:.3}", rate.hhat));
        }
    }
    bundle.files.push(("convergence.csv".into(), table.to_csv()));
    bundle.files.push(("eigenvalues.csv".into(), table.eigen_csv()));
    Ok(())
}

fn run_check(bundle: &mut ResultBundle) {
    let mut csv = String::from("suite,status,detail\n");
    for outcome in check::run_all() {
        let status = if outcome.passed { "pass" } else { "fail" };
        bundle.summary.push(format!("{status} {:<13} {}", outcome.name, outcome.detail));
        csv.push_str(&format!("{},{status},\"{}\"\n", outcome.name, outcome.detail.replace('"', "'")));
        bundle.success &= outcome.passed;
    }
    bundle.meta("passed", bundle.success);
    bundle.files.push(("check.csv".into(), csv));
}

fn run_mesh_info(config: &RunConfig, bundle: &mut ResultBundle) -> Result<()> {
    let mesh = Mesh::uniform_grid(config.n, Rect::pi_square())?;
    bundle.meta("N", config.n);
    bundle.meta("vertices", mesh.num_vertices());
    bundle.meta("edges", mesh.num_edges());
    bundle.meta("cells", mesh.num_cells());
    bundle.meta("boundary_edges", mesh.num_boundary_edges());
    bundle.summary.push(format!("N = {}", config.n));
    bundle.summary.push(format!("vertices: {}", mesh.num_vertices()));
    bundle.summary.push(format!("edges: {}", mesh.num_edges()));
    bundle.summary.push(format!("boundary edges: {}", mesh.num_boundary_edges()));
    bundle.summary.push(format!("cells: {}", mesh.num_cells()));
    bundle.files.push(("mesh.vtk".into(), snapshot_string(&mesh, "mesh", &[])?));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::config::{parse_config_str, resolve, Overrides};
    use super::*;

    fn config(kind: Kind, text: &str) -> RunConfig {
        resolve(kind, &parse_config_str(text).unwrap(), &Overrides::default(), None).unwrap()
    }

    #[test]
    fn mesh_info_reports_512_cells() {
        let b = run(&config(Kind::MeshInfo, ""), None).unwrap();
        assert_eq!(b.metadata["cells"], "512");
        assert!(b.summary.iter().any(|l| l == "cells: 512"));
    }

    #[test]
    fn time_run_outputs() {
        let text = "[mesh]\nn = 2\n[time]\nsteps = 4\ndt = 0.05\n[output]\nvtk_stride = 2\n";
        let b = run(&config(Kind::Time, text), Some(text.to_string())).unwrap();
        let csv = b.file("time_series.csv").unwrap();
        assert_eq!(csv.lines().next().unwrap(), DiagnosticRecord::CSV_HEADER);
        assert_eq!(csv.lines().count(), 6);
        assert!(b.file("snapshot_000000.vtk").is_some() && b.file("snapshot_000004.vtk").is_some());
        assert!(b.file("snapshot_000001.vtk").is_none());
        assert_eq!(b.metadata["nonconforming"], "false");
        assert_eq!(b.config_echo.as_deref(), Some(text));
    }

    #[test]
    fn lower_multiplier_degree_is_flagged() {
        let text = "[mesh]\nn = 2\nr = 2\nmult_degree = 2\n[time]\nsteps = 2\ndt = 0.05\n";
        let b = run(&config(Kind::Time, text), None).unwrap();
        assert_eq!(b.metadata["nonconforming"], "true");
        assert_eq!(b.metadata["mode"], "kernel");
        let conf: usize = b.metadata["conforming_dim"].parse().unwrap();
        assert!(b.metadata["kernel_dim"].parse::<usize>().unwrap() > conf);
    }

    #[test]
    fn repeated_runs_are_byte_identical() {
        let text = "[mesh]\nn = 2\n[time]\nsteps = 3\ndt = 0.1\n[output]\nvtk_stride = 1\n";
        let a = run(&config(Kind::Time, text), Some(text.into())).unwrap();
        let b = run(&config(Kind::Time, text), Some(text.into())).unwrap();
        assert_eq!(a.files, b.files);
        assert_eq!(a.metadata, b.metadata);
        let dir = tempfile::tempdir().unwrap();
        let paths = a.write(dir.path()).unwrap();
        assert!(paths.iter().any(|p| p.ends_with("config.toml")));
        assert_eq!(fs::read_to_string(dir.path().join("config.toml")).unwrap(), text);
    }

    #[test]
    fn eigen_and_convergence_outputs() {
        let b = run(&config(Kind::Eigen, "[mesh]\nn = 4\n"), None).unwrap();
        assert!(b.file("eigenmode.vtk").unwrap().contains("VECTORS Dhat double"));
        let c = run(
            &config(Kind::Convergence, "[convergence]\ndegrees = [2]\nsizes = [2, 4]\n"),
            None,
        )
        .unwrap();
        let csv = c.file("convergence.csv").unwrap();
        assert!(csv.starts_with("r,N,err_H,rate_H,"));
        assert!(csv.contains("\n2,2,7.591e-1,,3.648e-1,,"), "{csv}");
        assert_eq!(c.metadata["r2_eigenvalue_monotone"], "true");
    }
}
