use acforms::cli::{self, RunConfig, Suite};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Thread count override for the node-parallel kernels.
const THREADS_ENV: &str = "ACFORMS_THREADS";

#[derive(Parser)]
#[command(name = "acforms", version, about = "Integrability forms and their functionals on sampled charts")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a suite of identity checks and report residuals against tolerances.
    Verify {
        #[arg(long)]
        suite: Suite,
        #[arg(long)]
        config: PathBuf,
    },
    /// Residuals and verdicts for every structure property.
    Classify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Value of the configured functional.
    Functional {
        #[arg(long)]
        config: PathBuf,
    },
    /// Explicit Euler gradient flow; CSV trace.
    Flow {
        #[arg(long)]
        config: PathBuf,
    },
    /// Functional along a path of structures; CSV table.
    Probe {
        #[arg(long)]
        config: PathBuf,
    },
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got '{raw}'"))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| e.to_string())
}

fn run(command: Command) -> acforms::Result<i32> {
    let load = |p: &PathBuf| RunConfig::load(p);
    match command {
        Command::Verify { suite, config } => cli::cmd_verify(suite, &load(&config)?),
        Command::Classify { config } => cli::cmd_classify(&load(&config)?),
        Command::Functional { config } => cli::cmd_functional(&load(&config)?),
        Command::Flow { config } => cli::cmd_flow(&load(&config)?),
        Command::Probe { config } => cli::cmd_probe(&load(&config)?),
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match run(args.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
