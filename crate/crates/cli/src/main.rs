//! `ecolab`: command-line access to the finite-ecology laboratory.
//!
//! Every subcommand writes its data (CSV) and reports (JSON) into
//! `--out-dir` together with a `manifest.json`; stdout gets a short summary.
//! Exit status: 0 on success, 1 when an input violates an invariant,
//! 2 on usage errors.

mod commands;
mod output;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

#[derive(Parser)]
#[command(name = "ecolab", version, about = "Exact finite task ecologies: decomposition, lattice search, selection, geometry and bounds")]
struct Cli {
    /// Directory for data files and the run manifest.
    #[arg(long, global = true, default_value = "ecolab-out")]
    out_dir: PathBuf,
    /// Seed for stochastic steps; falls back to the config file, then ECOLAB_SEED, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: commands::Command,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::dispatch(cli.command, &cli.out_dir, cli.seed) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<parse::Usage>().is_some() {
                eprintln!("run `ecolab --help` for usage");
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
