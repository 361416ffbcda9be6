//! `hybridem` command-line driver.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hybridem::io::{parse_config_str, resolve, run, ConfigFile, Kind, Overrides};
use hybridem::Error;

#[derive(Parser)]
#[command(name = "hybridem", version, about = "Hybrid finite elements for 2-D Maxwell cavities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Leapfrog time stepping with per-step constraint diagnostics.
    Time(Flags),
    /// The ω² = 2 cavity eigenmode with post-processed fields.
    Eigen(Flags),
    /// Error table over degrees and mesh sizes.
    Convergence(Flags),
    /// Run the invariant suites.
    Check(Flags),
    /// Print mesh statistics.
    MeshInfo(Flags),
}

#[derive(Args)]
struct Flags {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Cells per side of the square grid.
    #[arg(long = "N", short = 'N')]
    n: Option<usize>,
    /// Method degree.
    #[arg(long)]
    r: Option<usize>,
    /// Lagrange multiplier degree (default r + 1).
    #[arg(long)]
    mult_degree: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Eigenvalue shift.
    #[arg(long)]
    sigma: Option<f64>,
    /// Output directory (default: $HYBRIDEM_OUT, then ./hybridem-out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// VTK snapshot stride in steps; 0 disables snapshots.
    #[arg(long)]
    vtk_stride: Option<usize>,
}

fn execute(kind: Kind, flags: Flags) -> Result<bool, Error> {
    let (file, echo) = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            (parse_config_str(&text)?, Some(text))
        }
        None => (ConfigFile::default(), None),
    };
    let overrides = Overrides {
        n: flags.n,
        r: flags.r,
        mult_degree: flags.mult_degree,
        dt: flags.dt,
        steps: flags.steps,
        sigma: flags.sigma,
        out: flags.out,
        vtk_stride: flags.vtk_stride,
    };
    let env_out = std::env::var_os("HYBRIDEM_OUT").map(PathBuf::from);
    let config = resolve(kind, &file, &overrides, env_out)?;
    let bundle = run(&config, echo)?;
    for line in &bundle.summary {
        println!("{line}");
    }
    if kind != Kind::MeshInfo {
        bundle.write(&config.out_dir)?;
        println!("results written to {}", config.out_dir.display());
    }
    Ok(bundle.success)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, flags) = match cli.command {
        Command::Time(f) => (Kind::Time, f),
        Command::Eigen(f) => (Kind::Eigen, f),
        Command::Convergence(f) => (Kind::Convergence, f),
        Command::Check(f) => (Kind::Check, f),
        Command::MeshInfo(f) => (Kind::MeshInfo, f),
    };
    match execute(kind, flags) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error[check]: invariant suites failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(2)
        }
    }
}
