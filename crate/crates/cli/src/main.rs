use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use liouville_cli::{list_presets, output, run_scenario, CliError, Overrides, Status};

#[derive(Parser)]
#[command(name = "liouville-lab", version, about = "Radial experiments for semilinear inequalities on model manifolds")]
struct Cli {
    /// Output directory, overriding the scenario's `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the parallel maps.
    #[arg(long, global = true, env = "LIOUVILLE_LAB_THREADS")]
    threads: Option<usize>,
    /// Seed for the randomized suite, overriding the scenario's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run { config: PathBuf },
    /// Print the preset catalog.
    ListPresets,
}

fn run(cli: Cli) -> Result<Status, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("thread pool is configured once");
    }
    match cli.command {
        Command::ListPresets => {
            print!("{}", list_presets());
            Ok(Status::Passed)
        }
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config).map_err(|e| CliError::io(config.display().to_string(), e))?;
            let over = Overrides {
                seed: cli.seed,
                out: cli.out.map(|p| p.display().to_string()),
            };
            let outcome = run_scenario(&text, &over).map_err(|e| match e {
                CliError::Parse { line, column, message } => CliError::Parse {
                    line,
                    column,
                    message: format!("{message} (in {})", config.display()),
                },
                e => e,
            })?;
            output::write_all(outcome.out_dir.as_ref(), &outcome.files)?;
            print!("{}", outcome.file("report.txt").unwrap_or_default());
            if let Status::AssertionFailed(why) = &outcome.status {
                eprintln!("assertion failed: {why}");
            }
            Ok(outcome.status)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(status) => ExitCode::from(status.exit_code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
