mod commands;
mod config;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use commands::Failure;
use config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "hamvar", version, about = "Two positive solutions of concave-convex Hamiltonian systems")]
struct Cli {
    #[command(flatten)]
    over: Overrides,
    /// Worker threads for `sweep`
    #[arg(long, global = true, env = "HAMVAR_JOBS", default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ball minimum and mountain-pass solution at (lambda, mu)
    Solve,
    /// Trace lambda*(mu) over mu_samples
    Sweep,
    /// Run the inequality and energy-geometry suites
    Verify,
    /// Principal eigenvalue and its convergence over three grids
    Eigen,
    /// Tabulate psi and Psi at mu for the given thetas
    Psi,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let cfg = match RunConfig::resolve(&cli.over) {
        Ok(c) => c,
        Err(m) => {
            eprintln!("error: {m}");
            return ExitCode::from(1);
        }
    };
    let outcome = match cli.cmd {
        Command::Solve => commands::solve(&cfg),
        Command::Sweep => commands::sweep(&cfg, cli.jobs),
        Command::Verify => commands::verify(&cfg).and_then(|ok| {
            if ok {
                Ok(())
            } else {
                Err(Failure::Solver("verification found violations".into()))
            }
        }),
        Command::Eigen => commands::eigen(&cfg),
        Command::Psi => commands::psi(&cfg),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
