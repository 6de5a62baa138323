mod commands;

use clap::{Parser, Subcommand, ValueEnum};
use cornerwave::config::{BoundaryKind, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Scattering by negative-permittivity polygons with corner layers.
#[derive(Parser, Debug)]
#[command(name = "cornerwave", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; the sharp-triangle preset at ω = 9 when absent.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides `run.out`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Number of uniform refinements of the initial mesh.
    #[arg(long, global = true, value_name = "N")]
    refine: Option<usize>,
    /// Disable the corner layers.
    #[arg(long, global = true)]
    no_pml: bool,
    /// Outer boundary condition.
    #[arg(long, global = true, value_enum)]
    boundary: Option<BoundaryArg>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Singular exponents, black-hole modes and admissible stretch angles per corner.
    Modes,
    /// Build the meshes and write MSH/VTK files.
    Mesh,
    /// Solve for the configured incidence.
    Solve,
    /// Solve for a list of incidences and tabulate the energy fluxes.
    Sweep,
    /// Solve the dual problems and compare coefficient extraction methods.
    Dual,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum BoundaryArg {
    Dtn,
    Abc,
}

fn resolve_config(cli: &Cli) -> cornerwave::Result<(RunConfig, PathBuf)> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => {
            let mut c = RunConfig::sharp_triangle(9.0);
            c.run.alpha_inc = -std::f64::consts::PI / 12.0;
            c
        }
    };
    if let Some(r) = cli.refine {
        config.run.refine = r;
    }
    if cli.no_pml {
        config.pml.enabled = false;
    }
    if let Some(b) = cli.boundary {
        config.run.boundary = match b {
            BoundaryArg::Dtn => BoundaryKind::Dtn,
            BoundaryArg::Abc => BoundaryKind::Abc,
        };
    }
    if let Some(out) = &cli.out {
        config.run.out = out.to_string_lossy().into_owned();
    }
    config.validate()?;
    let out = PathBuf::from(&config.run.out);
    Ok((config, out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> cornerwave::Result<()> {
        let (config, out) = resolve_config(&cli)?;
        std::fs::create_dir_all(&out)?;
        match cli.command {
            Command::Modes => commands::modes(&config, &out),
            Command::Mesh => commands::mesh(&config, &out),
            Command::Solve => commands::solve(&config, &out),
            Command::Sweep => commands::sweep(&config, &out),
            Command::Dual => commands::dual(&config, &out),
        }
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
