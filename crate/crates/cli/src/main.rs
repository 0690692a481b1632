mod args;
mod commands;
mod error;

use clap::Parser;

use args::{Cli, Command};
use commands::Context;
use error::CliError;

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = match cli.threads {
        Some(0) => return Err(CliError::Config("--threads must be at least 1".into())),
        Some(t) => t,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let ctx = Context { threads };
    match &cli.command {
        Command::Generate { circuit, out } => commands::generate(&ctx, circuit, out),
        Command::Simulate(a) => commands::simulate(&ctx, a),
        Command::Sample(a) => commands::sample(&ctx, a),
        Command::Xeb(a) => commands::xeb(&ctx, a),
        Command::Sweep(a) => commands::sweep(&ctx, a),
        Command::Ising(a) => commands::ising(&ctx, a),
        Command::Amplitude(a) => commands::amplitude(&ctx, a),
    }
}

fn main() {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
