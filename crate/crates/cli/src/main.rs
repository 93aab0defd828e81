use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use memkernel_cli::{check, run, CliError, Options};

/// Build, certify and solve legitimate pairs of CP map families.
#[derive(Parser)]
#[command(name = "memkernel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured model; write the trajectory CSV and report JSON.
    Run(Common),
    /// Certify the configured pair; write the report JSON only.
    Check(Common),
}

#[derive(Args)]
struct Common {
    config: PathBuf,
    /// volterra | series:M | inhomogeneous | all
    #[arg(long)]
    method: Option<String>,
    /// Directory for relative output paths.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// PSD tolerance for the certification checks.
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for randomly drawn states and channels.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Common {
    fn options(&self) -> Options {
        Options {
            method: self.method.clone(),
            out_dir: self.out_dir.clone(),
            tol: self.tol,
            seed: self.seed,
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("MEMKERNEL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::validation(format!("MEMKERNEL_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::validation(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| match &cli.command {
        Command::Run(c) => run(&c.config, &c.options()),
        Command::Check(c) => check(&c.config, &c.options()),
    });
    match result {
        Ok(out) => {
            if matches!(cli.command, Command::Check(_)) {
                print!("{}", out.report.to_json());
            }
            for p in &out.written {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("memkernel: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
