//! Experiment runner: adaptive iteratively linearized FEM on the L-shaped
//! domain, with CSV logs and SVG convergence plots per run.

use clap::Parser;

use ilg_cli::args::{resolve, Cli, ResolvedCommand};
use ilg_cli::runner;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    let cli = Cli::parse();
    let resolved = match resolve(cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };

    let status = match resolved {
        ResolvedCommand::Run(spec) => runner::run_single(&spec),
        ResolvedCommand::Matrix { max_elements, out } => runner::run_matrix(max_elements, &out),
        ResolvedCommand::Selftest => runner::selftest(),
    };

    match status {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
