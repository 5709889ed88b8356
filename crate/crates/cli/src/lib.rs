//! Command-line front end: `run`, `compare` and `validate`.

use std::ffi::OsString;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use ranslice_core::output::{write_compare_csv, write_run_dir, write_summary_csv};
use ranslice_core::{load_scenario, run, ParseError, RunResult, Scenario, SharingPolicy};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "ranslice",
    version,
    about = "Multi-tenant RAN slicing simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct SeedArg {
    /// Run seed; overrides RANSLICE_SEED and the scenario's [sim].seed
    #[arg(long, env = "RANSLICE_SEED")]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one scenario
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
        /// Output directory; the summary goes to stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate one scenario under several policies with the same seed
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated policy names, e.g. static-single,shared-multi
        #[arg(long, value_delimiter = ',', required = true)]
        policies: Vec<SharingPolicy>,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a scenario and list every violation
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

enum Failure {
    Invalid(ParseError),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    match load_scenario(path) {
        Ok(s) => Ok(s),
        Err(ParseError::Io { path, source }) => Err(Failure::Runtime(
            anyhow!(source).context(format!("reading {path}")),
        )),
        Err(e) => Err(Failure::Invalid(e)),
    }
}

fn simulate(scenario: &Scenario, seed: u64) -> Result<RunResult> {
    run(scenario, seed, scenario.duration_ttis)
        .with_context(|| format!("policy {}", scenario.policy.name()))
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate { scenario } => {
            load(&scenario)?;
            println!("{}: ok", scenario.display());
        }
        Command::Run {
            scenario,
            seed,
            out,
        } => {
            let scenario = load(&scenario)?;
            let seed = seed.seed.unwrap_or(scenario.seed);
            let result = simulate(&scenario, seed)?;
            match out {
                Some(dir) => write_run_dir(&dir, &result, &scenario)
                    .with_context(|| format!("writing {}", dir.display()))?,
                None => write_summary_csv(io::stdout().lock(), &result.summary)
                    .context("writing summary")?,
            }
        }
        Command::Compare {
            scenario,
            policies,
            seed,
            out,
        } => {
            let base = load(&scenario)?;
            let seed = seed.seed.unwrap_or(base.seed);
            let variants: Vec<Scenario> = policies
                .iter()
                .map(|p| base.with_policy(p.with_period(base.policy.decision_period_ttis)))
                .collect();
            let results: Vec<Result<RunResult>> = std::thread::scope(|s| {
                let handles: Vec<_> = variants
                    .iter()
                    .map(|sc| s.spawn(move || simulate(sc, seed)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| {
                        h.join()
                            .unwrap_or_else(|_| Err(anyhow!("simulation thread panicked")))
                    })
                    .collect()
            });
            let results = results.into_iter().collect::<Result<Vec<_>>>()?;
            for (sc, result) in variants.iter().zip(&results) {
                let dir = out.join(sc.policy.name());
                write_run_dir(&dir, result, sc)
                    .with_context(|| format!("writing {}", dir.display()))?;
            }
            let rows: Vec<(String, &ranslice_core::Summary)> = variants
                .iter()
                .zip(&results)
                .map(|(sc, r)| (sc.policy.name(), &r.summary))
                .collect();
            let path = out.join("compare.csv");
            let file =
                fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_compare_csv(io::BufWriter::new(file), &rows)
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code: 0 ok, 1 runtime failure, 2 invalid scenario or usage.
pub fn execute<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(Failure::Invalid(e)) => {
            eprintln!("invalid scenario:\n{e}");
            EXIT_INVALID
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            EXIT_RUNTIME
        }
    }
}
