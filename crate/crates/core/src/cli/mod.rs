//! Command-line entry point: `serve`, `simulate`, `replay`, `report` and
//! `validate`.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | replay divergence, invalid label rows, failed simulation runs, other errors |
//! | 2 | invalid session config |
//! | 3 | cannot bind the listen address |
//! | 4 | simulation could not reach the server |
//! | 5 | invalid simulation plan |
//! | 6 | label, swarm and reference files cover different exams |
//! | 7 | unreadable or malformed label file |
//! | 64 | bad command line |

mod commands;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_BAD_CONFIG: i32 = 2;
pub const EXIT_BIND: i32 = 3;
pub const EXIT_CONNECT: i32 = 4;
pub const EXIT_BAD_PLAN: i32 = 5;
pub const EXIT_MISALIGNED: i32 = 6;
pub const EXIT_PARSE: i32 = 7;
pub const EXIT_USAGE: i32 = 64;

/// Environment variable holding the log filter (`error`, `info`, `debug`, ...).
pub const LOG_ENV: &str = "SWARMLAB_LOG";

#[derive(Debug, Parser)]
#[command(
    name = "swarmlab",
    version,
    about = "Swarm consensus sessions, simulations and agreement reports"
)]
pub struct Cli {
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Host a session over WebSocket until interrupted.
    Serve(ServeArgs),
    /// Run scripted agents against a server.
    Simulate(SimulateArgs),
    /// Re-execute a session trace and check it against the recording.
    Replay(ReplayArgs),
    /// Agreement of raters, their votes and the swarm with references.
    Report(ReportArgs),
    /// Check label files for schema and range errors.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Session config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "127.0.0.1:9000")]
    pub bind: String,
    /// Directory for `<session_id>.trace.jsonl` files.
    #[arg(long, default_value = "traces")]
    pub trace_dir: PathBuf,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("target").required(true).args(["endpoint", "embedded"]))]
pub struct SimulateArgs {
    /// Simulation plan (JSON).
    #[arg(long)]
    pub plan: PathBuf,
    /// Server to run against, e.g. `ws://127.0.0.1:9000`.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Run against an in-process server; traces go to `<out>/traces`.
    #[arg(long)]
    pub embedded: bool,
    /// Output directory for `outcomes.json` and per-run swarm CSVs.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub trace: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MostConfidentArg {
    /// Per exam, the answer of the rater most confident on that exam.
    PerExam,
    /// Every answer of the rater with the highest mean confidence.
    CohortOverall,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// One label CSV per rater; the rater id is the file stem.
    #[arg(long, required = true, num_args = 1..)]
    pub labels: Vec<PathBuf>,
    /// Swarm outcomes as CSV or as a session trace (`.jsonl`).
    #[arg(long)]
    pub swarm: Option<PathBuf>,
    /// Reference labels.
    #[arg(long)]
    pub sor: PathBuf,
    /// Second reference labels.
    #[arg(long)]
    pub sor2: Option<PathBuf>,
    /// Write the report JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "cohort")]
    pub cohort: String,
    /// Bootstrap seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = crate::metrics::DEFAULT_RESAMPLES)]
    pub resamples: usize,
    #[arg(long, value_enum, default_value = "per-exam")]
    pub most_confident: MostConfidentArg,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Rater, reference or swarm CSV files; the kind is taken from the header.
    #[arg(long, required = true, num_args = 1..)]
    pub labels: Vec<PathBuf>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

/// Parse `args` (including the program name), run and return the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    run(cli)
}

pub fn run(cli: Cli) -> i32 {
    let json = cli.json;
    let result = match cli.command {
        Command::Serve(a) => commands::serve(a, json),
        Command::Simulate(a) => commands::simulate(a, json),
        Command::Replay(a) => commands::replay(a, json),
        Command::Report(a) => commands::report(a, json),
        Command::Validate(a) => commands::validate(a, json),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            if json {
                println!(
                    "{}",
                    serde_json::json!({ "status": "error", "exit_code": e.code, "error": e.message })
                );
            }
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env).try_init();
}
