//! `qbm`: negativity traces, phase diagrams, moment runs, closed-form
//! asymptotics and self-validation from a TOML run configuration.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qbm_core::config::RunConfig;
use qbm_core::sweep;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] qbm_core::Error),
    #[error("cannot write {0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid thread count: {0}")]
    Threads(String),
    #[error("validation failed: {0}")]
    ValidationFailed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => e.exit_code() as u8,
            CliError::Threads(_) => 2,
            CliError::ValidationFailed(_) => 4,
            CliError::Io(..) | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "qbm", version, about = "Entanglement of two oscillators in a common bath")]
struct Cli {
    /// Worker threads for sample and grid evaluation (default: all cores).
    #[arg(long, global = true, env = "QBM_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    config: PathBuf,
    /// Override a config value, e.g. `--set bath.temperature=2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Exact E_N(t) with optional moment and asymptotic columns (CSV).
    NegativityTrace(Common),
    /// Phase label for every (r, T) cell of the sweep grid (CSV plus JSON summary).
    PhaseDiagram {
        #[command(flatten)]
        common: Common,
        /// Summary JSON path; defaults to `<output>.summary.json`, or stderr with stdout output.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Moment-equation trajectory from the initial state (CSV).
    Moments(Common),
    /// Closed-form asymptotic quantities for the configured state (JSON).
    Asymptotics(Common),
    /// Invariant and oracle checks on a downsized copy of the configuration (JSON).
    Validate(Common),
}

fn load(c: &Common) -> Result<RunConfig, CliError> {
    Ok(RunConfig::load(&c.config, &c.set)?)
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        log::warn!("{w}");
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Threads("QBM_THREADS must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Threads(e.to_string()))?;
    }
    match cli.command {
        Command::NegativityTrace(c) => {
            let cfg = load(&c)?;
            let out = sweep::negativity_trace_run(&cfg)?;
            warn_all(&out.warnings);
            output::emit(c.output.as_deref(), &cfg, &output::trace_csv(&cfg, &out.records)?)
        }
        Command::Moments(c) => {
            let cfg = load(&c)?;
            let out = sweep::moments_run(&cfg)?;
            warn_all(&out.warnings);
            output::emit(c.output.as_deref(), &cfg, &output::trace_csv(&cfg, &out.records)?)
        }
        Command::PhaseDiagram { common: c, summary } => {
            let cfg = load(&c)?;
            let grid = sweep::phase_diagram(&cfg)?;
            output::emit(c.output.as_deref(), &cfg, &output::phase_csv(&cfg, &grid.rows)?)?;
            let doc = output::json_document(&cfg, "summary", serde_json::to_value(&grid.summary)?)?;
            let summary = summary.or_else(|| {
                c.output.as_ref().map(|p| {
                    let mut s = p.clone().into_os_string();
                    s.push(".summary.json");
                    PathBuf::from(s)
                })
            });
            match summary {
                Some(p) => output::emit(Some(&p), &cfg, &doc),
                None => {
                    eprint!("{}", String::from_utf8_lossy(&doc));
                    Ok(())
                }
            }
        }
        Command::Asymptotics(c) => {
            let cfg = load(&c)?;
            let report = sweep::asymptotics_report(&cfg)?;
            let doc = output::json_document(&cfg, "asymptotics", serde_json::to_value(report)?)?;
            output::emit(c.output.as_deref(), &cfg, &doc)
        }
        Command::Validate(c) => {
            let cfg = load(&c)?;
            let report = sweep::validate_run(&cfg)?;
            let doc = output::json_document(&cfg, "validation", serde_json::to_value(&report)?)?;
            output::emit(c.output.as_deref(), &cfg, &doc)?;
            if report.passed {
                Ok(())
            } else {
                let failed: Vec<String> = report
                    .checks
                    .iter()
                    .filter(|ch| !ch.passed)
                    .map(|ch| format!("{}: {}", ch.name, ch.detail))
                    .collect();
                Err(CliError::ValidationFailed(failed.join("; ")))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
