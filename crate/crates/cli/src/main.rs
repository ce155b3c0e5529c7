use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use helfrich_cli::commands::{cmd_converge, cmd_energy, cmd_mesh, cmd_optimize};
use helfrich_cli::config::{ExperimentConfig, Overrides};
use helfrich_cli::verify::cmd_verify;
use helfrich_cli::{exit, CliError};

/// Crouzeix-Raviart edge-director discretization of curvature energies.
#[derive(Debug, Parser)]
#[command(name = "helfrich-disc", version)]
struct Cli {
    /// TOML experiment file; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a planar mesh and write it in the text format
    Mesh {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate discrete and continuous energies on one mesh
    Energy,
    /// Refinement study with error rates
    Converge,
    /// Minimize the discrete energy over director fields
    Optimize,
    /// Run the property suite
    Verify,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    config.apply(&cli.overrides);
    match cli.command {
        Command::Mesh { out } => cmd_mesh(&config, out.as_deref()).map(drop),
        Command::Energy => cmd_energy(&config).map(drop),
        Command::Converge => cmd_converge(&config).map(drop),
        Command::Optimize => cmd_optimize(&config).map(drop),
        Command::Verify => cmd_verify(&config).map(drop),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(exit::SUCCESS as u8),
        Err(err) => {
            match &err {
                CliError::Verification(failures) => {
                    eprintln!("error: {err}");
                    for f in failures {
                        let edge = f.edge.map(|(a, b)| format!(" edge ({a}, {b})")).unwrap_or_default();
                        eprintln!("  {} {}{}: {}", f.surface, f.check, edge, f.detail);
                    }
                }
                _ => eprintln!("error: {err}"),
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
