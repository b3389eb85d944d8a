use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dpower_cli::config::{normalize_key, read_config_file, Job, JobConfig};
use dpower_cli::record::to_canonical_json;
use dpower_cli::{run_job, CliError};

/// Power analysis and sample-size planning for differentially private tests.
#[derive(Parser)]
#[command(name = "dpower", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo power of a (private) test, or an empirical sample-size search.
    Power(Shared),
    /// Corrected sample size for a private z, t, chi-square or F test.
    Samplesize(Shared),
    /// Release a private statistic of a CSV column.
    Privstat(Shared),
    /// PrivHistogram vs vanilla Gaussian mechanism on synthetic data.
    Compare(Shared),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Paper,
    Stderr,
}

#[derive(Args)]
struct Shared {
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 1 gives cross-platform byte-identical output.
    #[arg(long)]
    workers: Option<usize>,
    /// Result record path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plot-ready CSV path.
    #[arg(long)]
    plot_csv: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Any other job parameter, e.g. `--set gamma=0.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Shared {
    fn overrides(&self) -> Result<BTreeMap<String, String>, CliError> {
        let mut map = BTreeMap::new();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            map.insert(normalize_key(k), v.trim().to_string());
        }
        let named = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("workers", self.workers.map(|v| v.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("plot_csv", self.plot_csv.as_ref().map(|p| p.display().to_string())),
            ("epsilon", self.epsilon.clone()),
            ("delta", self.delta.clone()),
            (
                "mode",
                self.mode.map(|m| match m {
                    Mode::Paper => "paper".to_string(),
                    Mode::Stderr => "stderr".to_string(),
                }),
            ),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                map.insert(k.to_string(), v);
            }
        }
        Ok(map)
    }
}

fn write_file(path: &PathBuf, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (job, shared) = match cli.command {
        Command::Power(s) => (Job::Power, s),
        Command::Samplesize(s) => (Job::SampleSize, s),
        Command::Privstat(s) => (Job::PrivStat, s),
        Command::Compare(s) => (Job::Compare, s),
    };
    let file = match &shared.config {
        Some(path) => read_config_file(path)?,
        None => BTreeMap::new(),
    };
    let cfg = JobConfig::new(job, file, shared.overrides()?)?;
    if cfg.plot_csv.is_some() && matches!(job, Job::SampleSize | Job::PrivStat) {
        return Err(CliError::Config(format!("the {} job has no plot output", job.name())));
    }
    let output = run_job(&cfg)?;
    let json = to_canonical_json(&output.record);
    match &cfg.out {
        Some(path) => write_file(path, &json)?,
        None => std::io::stdout().write_all(&json).map_err(|e| CliError::Io(e.to_string()))?,
    }
    if let (Some(path), Some(csv)) = (&cfg.plot_csv, &output.plot_csv) {
        write_file(path, csv)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({
                "error_class": e.class(),
                "exit_code": e.exit_code(),
                "message": e.to_string(),
            });
            eprintln!("{report}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
