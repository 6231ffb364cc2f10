use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gowers_cli::error::EXIT_ARGUMENT;
use gowers_cli::{invoke, Invocation, Overrides};

/// Runs one uniformity-norm experiment described by a JSON config.
///
/// Exit codes: 0 ok, 2 argument or config error, 3 budget exceeded, 4 I/O.
#[derive(Parser, Debug)]
#[command(name = "gowers", version)]
struct Cli {
    /// Optional command name; must match the config's "command".
    command: Option<String>,

    #[arg(long, env = "GOWERS_CONFIG")]
    config: PathBuf,

    /// Overrides the config's seed.
    #[arg(long, env = "GOWERS_SEED")]
    seed: Option<u64>,

    /// Worker threads; results do not depend on it.
    #[arg(long, env = "GOWERS_THREADS")]
    threads: Option<usize>,

    /// Overrides the config's exact-evaluation budget.
    #[arg(long, env = "GOWERS_BUDGET")]
    budget: Option<u64>,

    #[arg(long, env = "GOWERS_OUT", default_value = "out")]
    out: PathBuf,

    /// Plot series to export (repeatable); all of them by default.
    #[arg(long = "plot")]
    plots: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match cli.threads {
        Some(0) => {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_ARGUMENT as u8);
        }
        Some(n) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("error: could not start the thread pool: {e}");
                return ExitCode::from(EXIT_ARGUMENT as u8);
            }
            n
        }
        None => rayon::current_num_threads(),
    };
    let inv = Invocation {
        command: cli.command,
        config: cli.config,
        overrides: Overrides {
            seed: cli.seed,
            budget: cli.budget,
        },
        threads,
        out: cli.out,
        plots: cli.plots,
    };
    match invoke(&inv) {
        Ok(done) => {
            for w in &done.warnings {
                eprintln!("warning: {w}");
            }
            for p in &done.written {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(h) = e.hint() {
                eprintln!("hint: {h}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
