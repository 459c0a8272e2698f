use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use setpoint_core::harness::{run_problem, ExitStatus, Problem, RunOutcome, Task};

#[derive(Parser)]
#[command(
    name = "setpoint",
    version,
    about = "Fixed-point experiments on finite metric spaces"
)]
struct Cli {
    /// Worker threads for parallel tasks; all cores by default.
    #[arg(long, global = true, env = "SETPOINT_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run any problem file.
    Run {
        file: PathBuf,
        #[arg(short, long, default_value = "out")]
        output: PathBuf,
    },
    /// Run a problem file whose task is `scan`.
    Scan {
        file: PathBuf,
        #[arg(short, long, default_value = "out")]
        output: PathBuf,
    },
    /// Check a problem file without running it.
    Validate { file: PathBuf },
}

fn load(file: &Path) -> Result<Problem, ExitCode> {
    let text = fs::read_to_string(file).map_err(|e| {
        eprintln!("error: {}: {e}", file.display());
        ExitCode::from(ExitStatus::Invalid as u8)
    })?;
    Problem::from_json(&text).map_err(|d| {
        eprintln!("error: {d}");
        ExitCode::from(ExitStatus::Invalid as u8)
    })
}

fn finish(outcome: RunOutcome) -> ExitCode {
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    match &outcome.message {
        Some(m) => eprintln!("error: {m}"),
        None => {
            for path in &outcome.written {
                println!("{}", path.display());
            }
        }
    }
    ExitCode::from(outcome.status as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers.filter(|&n| n > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(ExitStatus::Internal as u8);
        }
    }
    let (problem, output) = match &cli.command {
        Command::Validate { file } => {
            return match load(file) {
                Ok(p) => {
                    for w in &p.warnings {
                        eprintln!("warning: {w}");
                    }
                    println!("ok: {} task", p.task().name());
                    ExitCode::SUCCESS
                }
                Err(code) => code,
            };
        }
        Command::Run { file, output } => (load(file), output),
        Command::Scan { file, output } => {
            let p = load(file);
            if let Ok(p) = &p {
                if p.task() != Task::Scan {
                    eprintln!("error: task: expected scan, found {}", p.task().name());
                    return ExitCode::from(ExitStatus::Invalid as u8);
                }
            }
            (p, output)
        }
    };
    match problem {
        Ok(p) => finish(run_problem(&p, output)),
        Err(code) => code,
    }
}
