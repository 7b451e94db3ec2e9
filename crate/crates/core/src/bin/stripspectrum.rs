use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stripspectrum::cli::{self, Command, Invocation};

#[derive(Parser)]
#[command(name = "stripspectrum", version, about = "Ground states of -Δu + u = |u|^(p-2)u on strips, staircases and half-spaces")]
struct Args {
    /// key = value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (overrides jobs)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed field in axfield-v1 format
    #[arg(long, global = true)]
    seed_field: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Constrained minimizer on the configured domain
    GroundState,
    /// Strip energies over theta.q_list
    Theta,
    /// Seeded staircase experiment, or the half-space escape control
    Staircase,
    /// Pinned-barycenter estimate at a staircase gap
    Barrier,
    /// Barycenter of a field file
    Barycenter { field: PathBuf },
    /// Diagnostics of a field file
    Diagnose {
        field: PathBuf,
        /// Reference field for the Brezis-Lieb defect
        #[arg(long)]
        reference: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("STRIPSPECTRUM_LOG", "warn")).init();
    let args = Args::parse();
    let cmd = match args.cmd {
        Cmd::GroundState => Command::GroundState,
        Cmd::Theta => Command::Theta,
        Cmd::Staircase => Command::Staircase,
        Cmd::Barrier => Command::Barrier,
        Cmd::Barycenter { field } => Command::Barycenter { field },
        Cmd::Diagnose { field, reference } => Command::Diagnose { field, reference },
    };
    let inv = Invocation { config: args.config, out: args.out, jobs: args.jobs, seed_field: args.seed_field };
    match cli::run(&cmd, &inv, &mut std::io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
