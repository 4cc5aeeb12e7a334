//! Command-line entry points.
//!
//! ```text
//! tourney simulate     --spec sim.toml --out DIR
//! tourney infer        --config run.toml --reports reports.csv --out DIR
//! tourney summarize    --config run.toml --draws draws.csv --out DIR
//! tourney oracle-check --config run.toml --reports reports.csv --tolerance 0.02 [--out DIR]
//! ```
//!
//! Exit codes: 0 success, 1 file system failure, 2 validation error,
//! 3 oracle-check tolerance exceeded.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::diagnostics::{summarize, PosteriorSummary};
use crate::graph::Roster;
use crate::io::{
    load_reports, parse_draws, read_text, write_draws, write_graph, write_marginals, write_outputs,
    write_rates, write_reports, write_rhat, write_summary_json, write_truth_rates, IoError,
    ReportData, RunConfig, SimulationConfigFile,
};
use crate::model::StateProbs;
use crate::oracle::{collapsed_exact_posterior, exact_fixed_error_posterior, DEFAULT_MAX_DYADS};
use crate::sampler::gibbs_run;
use crate::simulate::simulate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),

    #[error(
        "oracle check failed: max |sampler - oracle| = {max_diff} exceeds tolerance {tolerance}"
    )]
    Tolerance { max_diff: f64, tolerance: f64 },
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Io(IoError::Model(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(e) if e.is_os_error() => EXIT_IO,
            CliError::Io(_) => EXIT_VALIDATION,
            CliError::Tolerance { .. } => EXIT_TOLERANCE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "tourney",
    version,
    about = "Infer tournament graphs and informant error rates from noisy reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a synthetic dataset; writes reports.csv, truth.csv and truth_rates.csv.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the Gibbs sampler and write draws plus posterior summaries.
    Infer {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        reports: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute posterior summaries from a draws file.
    Summarize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        draws: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare sampler marginals with the exact posterior on a small instance.
    OracleCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        reports: PathBuf,
        #[arg(long)]
        tolerance: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_DYADS)]
        max_dyads: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    Ok(RunConfig::from_toml(&read_text(path)?)?)
}

fn load_data(config: &RunConfig, reports: &Path) -> Result<ReportData, CliError> {
    Ok(load_reports(
        reports,
        &config.roster,
        config.informants.as_deref(),
    )?)
}

fn summary_files(
    summary: &PosteriorSummary,
    roster: &Roster,
    informants: &[String],
) -> Result<Vec<(&'static str, String)>, CliError> {
    Ok(vec![
        (
            "marginals.csv",
            write_marginals(&summary.marginals, roster)?,
        ),
        ("map_graph.csv", write_graph(&summary.map_graph, roster)?),
        ("rates.csv", write_rates(&summary.rates, informants)?),
        ("rhat.csv", write_rhat(&summary.rhat, informants)?),
        (
            "summary.json",
            write_summary_json(summary, roster, informants)?,
        ),
    ])
}

pub fn run_simulate(spec: &Path, out: &Path) -> Result<(), CliError> {
    let spec = SimulationConfigFile::from_toml(&read_text(spec)?)?.to_spec()?;
    let data = simulate(&spec)?;
    let informants: Vec<String> = (1..=spec.n_informants).map(|k| format!("k{k}")).collect();
    let reports = ReportData {
        informants: informants.clone(),
        reports: data.reports.clone(),
        mask: data.mask.clone(),
    };
    write_outputs(
        out,
        &[
            ("reports.csv", write_reports(&reports, &data.roster)?),
            ("truth.csv", write_graph(&data.truth, &data.roster)?),
            (
                "truth_rates.csv",
                write_truth_rates(&data.true_rates, &informants)?,
            ),
        ],
    )?;
    Ok(())
}

pub fn run_infer(config: &Path, reports: &Path, out: &Path) -> Result<PosteriorSummary, CliError> {
    let config = load_config(config)?;
    let data = load_data(&config, reports)?;
    let priors = config.priors_for(&data.informants)?;
    let sampler = config.sampler_for(&data.informants)?;
    let chains = gibbs_run(&data.reports, &data.mask, &config.prior, &priors, &sampler)?;
    let summary = summarize(&chains)?;
    let mut files = vec![(
        "draws.csv",
        write_draws(&chains, &config.roster, &data.informants)?,
    )];
    files.extend(summary_files(&summary, &config.roster, &data.informants)?);
    write_outputs(out, &files)?;
    Ok(summary)
}

pub fn run_summarize(
    config: &Path,
    draws: &Path,
    out: &Path,
) -> Result<PosteriorSummary, CliError> {
    let config = load_config(config)?;
    let draws = parse_draws(&read_text(draws)?, &config.roster)?;
    let summary = summarize(&draws.chains)?;
    write_outputs(
        out,
        &summary_files(&summary, &config.roster, &draws.informants)?,
    )?;
    Ok(summary)
}

/// Per-dyad sampler and oracle marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleComparison {
    pub sampler: Vec<StateProbs>,
    pub oracle: Vec<StateProbs>,
    pub max_diff: Vec<f64>,
    pub fixed_rates: bool,
}

impl OracleComparison {
    pub fn overall(&self) -> f64 {
        self.max_diff.iter().copied().fold(0.0, f64::max)
    }
}

/// Runs the sampler and the matching exact oracle: the fixed-rate oracle
/// when the config clamps error rates, the collapsed enumeration otherwise.
pub fn compare_with_oracle(
    config: &RunConfig,
    data: &ReportData,
    max_dyads: usize,
) -> Result<OracleComparison, CliError> {
    let priors = config.priors_for(&data.informants)?;
    let sampler = config.sampler_for(&data.informants)?;
    let exact = match &sampler.clamp_error_rates {
        Some(rates) => {
            exact_fixed_error_posterior(&data.reports, &data.mask, rates, &config.prior)?
        }
        None => {
            collapsed_exact_posterior(&data.reports, &data.mask, &config.prior, &priors, max_dyads)?
        }
    };
    let chains = gibbs_run(&data.reports, &data.mask, &config.prior, &priors, &sampler)?;
    let summary = summarize(&chains)?;
    let max_diff = summary
        .marginals
        .iter()
        .zip(&exact.marginals)
        .map(|(a, b)| a.max_abs_diff(b))
        .collect();
    Ok(OracleComparison {
        sampler: summary.marginals,
        oracle: exact.marginals,
        max_diff,
        fixed_rates: sampler.clamp_error_rates.is_some(),
    })
}

pub fn run_oracle_check(
    config: &Path,
    reports: &Path,
    tolerance: f64,
    max_dyads: usize,
    out: Option<&Path>,
) -> Result<OracleComparison, CliError> {
    let config = load_config(config)?;
    let data = load_data(&config, reports)?;
    let cmp = compare_with_oracle(&config, &data, max_dyads)?;
    let roster = &config.roster;

    println!(
        "oracle: {}",
        if cmp.fixed_rates {
            "fixed error rates"
        } else {
            "collapsed enumeration"
        }
    );
    for (d, diff) in roster.dyads().zip(&cmp.max_diff) {
        println!(
            "{}\t{}\tmax_abs_diff={diff:.6}",
            roster.label(d.i),
            roster.label(d.j)
        );
    }
    let overall = cmp.overall();
    let pass = overall <= tolerance;
    println!(
        "max_abs_diff={overall:.6} tolerance={tolerance} status={}",
        if pass { "PASS" } else { "FAIL" }
    );

    if let Some(out) = out {
        let oracle_map = cmp.oracle.iter().map(StateProbs::argmax).collect();
        write_outputs(
            out,
            &[
                (
                    "oracle_marginals.csv",
                    write_marginals(&cmp.oracle, roster)?,
                ),
                (
                    "sampler_marginals.csv",
                    write_marginals(&cmp.sampler, roster)?,
                ),
                ("oracle_map_graph.csv", write_graph(&oracle_map, roster)?),
            ],
        )?;
    }
    if pass {
        Ok(cmp)
    } else {
        Err(CliError::Tolerance {
            max_diff: overall,
            tolerance,
        })
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { spec, out } => run_simulate(&spec, &out),
        Command::Infer {
            config,
            reports,
            out,
        } => {
            let s = run_infer(&config, &reports, &out)?;
            println!("retained {} states; wrote {}", s.n_retained, out.display());
            Ok(())
        }
        Command::Summarize { config, draws, out } => {
            let s = run_summarize(&config, &draws, &out)?;
            println!(
                "summarized {} states; wrote {}",
                s.n_retained,
                out.display()
            );
            Ok(())
        }
        Command::OracleCheck {
            config,
            reports,
            tolerance,
            max_dyads,
            out,
        } => run_oracle_check(&config, &reports, tolerance, max_dyads, out.as_deref()).map(|_| ()),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
