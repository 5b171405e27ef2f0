use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use jstar::config::{ScenarioConfig, ScenarioKind};
use jstar::report::to_json;
use jstar::runner::{decompose_payload, run, ExitStatus, RunOptions};
use jstar::suite::{builtin_suite, SuiteOptions};
use jstar::{Complex, Error};

/// Scenario runner for J*-homomorphism stability checks.
#[derive(Debug, Parser)]
#[command(name = "jstar", version)]
struct Cli {
    /// Scenario config (JSON).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Overrides the scenario named in the config.
    #[arg(long, value_name = "NAME")]
    scenario: Option<String>,

    /// Overrides sampling.seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Indentation of the JSON report; 0 prints a single line.
    #[arg(long, value_name = "N", default_value_t = 2, global = true)]
    json_indent: usize,

    /// Runs the built-in verification suite instead of a config.
    #[arg(long, conflicts_with = "config")]
    suite: bool,

    /// Comma-separated criterion numbers for --suite; empty selects none.
    #[arg(long, value_name = "LIST", requires = "suite")]
    criteria: Option<String>,

    /// Adds wall time to the report (the output is then not reproducible).
    #[arg(long)]
    timing: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Writes λ as (M/3)(μ₁ + μ₂ + μ₃) with unimodular μᵢ.
    Decompose {
        /// λ as RE,IM.
        #[arg(long, value_name = "RE,IM", allow_hyphen_values = true)]
        lambda: String,
    },
}

fn parse_lambda(s: &str) -> Result<Complex, Error> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [re, im] = parts.as_slice() else {
        return Err(Error::Config(format!("--lambda expects RE,IM, got {s:?}")));
    };
    let num = |t: &str| t.parse::<f64>().map_err(|e| Error::Config(format!("--lambda component {t:?}: {e}")));
    Ok(Complex::new(num(re)?, num(im)?))
}

fn parse_criteria(s: &str) -> Result<Vec<u8>, Error> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| match t.parse::<u8>() {
            Ok(id) if (1..=10).contains(&id) => Ok(id),
            _ => Err(Error::Config(format!("unknown criterion {t:?}"))),
        })
        .collect()
}

// A closed stdout (e.g. piped into `head`) must not change the exit status.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}").and_then(|_| out.flush());
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("JSTAR_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("JSTAR_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn execute(cli: Cli) -> Result<ExitStatus, Error> {
    configure_threads()?;
    let indent = cli.json_indent;

    if let Some(Command::Decompose { lambda }) = &cli.command {
        let payload = decompose_payload(parse_lambda(lambda)?).map_err(|e| Error::Config(e.to_string()))?;
        emit(&to_json(&payload, indent)?);
        return Ok(ExitStatus::from_pass(payload.pass));
    }

    if cli.suite {
        let criteria = cli.criteria.as_deref().map(parse_criteria).transpose()?;
        let report = builtin_suite(&SuiteOptions { criteria, example23_control: None })?;
        emit(&to_json(&report, indent)?);
        return Ok(ExitStatus::from_pass(report.pass));
    }

    let path = cli.config.ok_or_else(|| Error::Config("one of --config, --suite or decompose is required".into()))?;
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut config: ScenarioConfig = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(name) = &cli.scenario {
        config.scenario = name.parse::<ScenarioKind>()?;
    }
    if let Some(seed) = cli.seed {
        config.sampling.seed = seed;
    }
    let report = run(&config, RunOptions { timing: cli.timing })?;
    emit(&to_json(&report, indent)?);
    Ok(report.exit_status())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(e) => {
            eprintln!("jstar: {e}");
            let status = match e {
                Error::Config(_) => ExitStatus::ConfigError,
                _ => ExitStatus::Fail,
            };
            ExitCode::from(status.code() as u8)
        }
    }
}
