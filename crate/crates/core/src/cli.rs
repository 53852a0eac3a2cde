//! Command-line front end. Exit codes: 0 success, 1 failed check or runtime
//! failure, 2 bad usage or config.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::graph_oracle::simulate_dynamic_graph;
use crate::harness::{self, experiment_weights, walk_replicates, ExperimentKind, HarnessError};
use crate::limit_sampler::{er_brownian_path, sample_x_path, LimitError};
use crate::output;
use crate::rng::{derive_seed, Domain};
use crate::theory::{x_cov, SupercriticalCurves, TheoryError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const THREADS_ENV: &str = "GIANTFLUX_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "giantflux",
    version,
    about = "Giant-component fluctuations of dynamic rank-one graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config supercritical margin.
    #[arg(long)]
    margin: Option<f64>,
    /// Worker threads; falls back to GIANTFLUX_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate theta, rho, beta and the limit variances on the grid.
    Theory(Common),
    /// Sample walk replicates and record the longest excursion per lambda.
    Walk(Common),
    /// Simulate the dynamic graph directly (small n only).
    Graph(Common),
    /// Sample the Gaussian limit process on the grid.
    Limit {
        #[command(flatten)]
        common: Common,
        /// Use the Brownian representation (constant weights 1 only).
        #[arg(long)]
        brownian: bool,
    },
    /// Compare walk moments with the limit covariance.
    Fclt(Common),
    /// Compare the walk with the direct graph simulation.
    Compare(Common),
    /// Check the excursion endpoints.
    Endpoints(Common),
    /// Track the size variance across several n.
    Converge(Common),
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Failure(String),
}

impl From<crate::config::ConfigError> for CliError {
    fn from(e: crate::config::ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn theory_error(e: TheoryError) -> CliError {
    match e {
        TheoryError::InvalidLambda { .. }
        | TheoryError::NotSupercritical { .. }
        | TheoryError::EmptyGrid
        | TheoryError::Weights(_) => CliError::Usage(e.to_string()),
        _ => CliError::Failure(e.to_string()),
    }
}

fn harness_error(e: HarnessError) -> CliError {
    match e {
        HarnessError::Theory(t) => theory_error(t),
        HarnessError::Config(_) | HarnessError::Weights(_) => CliError::Usage(e.to_string()),
        _ => CliError::Failure(e.to_string()),
    }
}

fn limit_error(e: LimitError) -> CliError {
    match e {
        LimitError::Theory(t) => theory_error(t),
        _ => CliError::Failure(e.to_string()),
    }
}

/// Parses `args` (including the program name), runs the command, and
/// returns the process exit code. Progress goes to stderr only.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            EXIT_CHECK_FAILED
        }
    }
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::from_path(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(margin) = common.margin {
        if !(margin >= 0.0) {
            return Err(CliError::Usage(format!(
                "--margin must be non-negative, got {margin}"
            )));
        }
        cfg.margin = margin;
    }
    set_threads(common.threads)?;
    Ok(cfg)
}

fn set_threads(flag: Option<usize>) -> Result<(), CliError> {
    let threads = match flag {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| {
                CliError::Usage(format!(
                    "{THREADS_ENV} must be a non-negative integer, got {v:?}"
                ))
            })?),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        // The global pool can only be set once per process; later calls keep it.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    Ok(())
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn execute(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Theory(c) => theory(&c),
        Command::Walk(c) => walk(&c),
        Command::Graph(c) => graph(&c),
        Command::Limit { common, brownian } => limit(&common, brownian),
        Command::Fclt(c) => experiment(&c, ExperimentKind::Fclt),
        Command::Compare(c) => experiment(&c, ExperimentKind::OracleCompare),
        Command::Endpoints(c) => experiment(&c, ExperimentKind::EndpointCheck),
        Command::Converge(c) => experiment(&c, ExperimentKind::ConvergenceStudy),
    }
}

fn theory(c: &Common) -> Result<i32, CliError> {
    let cfg = load(c)?;
    let curves =
        SupercriticalCurves::tabulate(&cfg.model, &cfg.grid(), cfg.margin).map_err(theory_error)?;
    let cov = x_cov(&curves).map_err(theory_error)?;
    write(&c.out, &output::theory_csv(&curves, &cov))?;
    eprintln!(
        "theory: {} grid points -> {}",
        curves.points().len(),
        c.out.display()
    );
    Ok(EXIT_OK)
}

fn walk(c: &Common) -> Result<i32, CliError> {
    let cfg = load(c)?;
    let n = cfg.single_size()?;
    let exp = cfg.settings(ExperimentKind::Fclt)?;
    exp.validate().map_err(harness_error)?;
    eprintln!("walk: n={n}, {} replicates", exp.replicates);
    let paths = walk_replicates(&exp, n, 0).map_err(harness_error)?;
    write(&c.out, &output::walk_csv(&paths))?;
    Ok(EXIT_OK)
}

fn graph(c: &Common) -> Result<i32, CliError> {
    let cfg = load(c)?;
    let n = cfg.single_size()?;
    if n > cfg.graph_cap {
        return Err(CliError::Usage(format!(
            "n={n} exceeds graph_cap={}",
            cfg.graph_cap
        )));
    }
    let mut grid = cfg.grid();
    grid.sort_by(f64::total_cmp);
    let w = experiment_weights(
        &cfg.model,
        n,
        cfg.weight_mode,
        derive_seed(cfg.seed, Domain::Weights, 0),
    )
    .map_err(harness_error)?;
    eprintln!("graph: n={n}, {} replicates", cfg.replicates);
    let reps = (0..cfg.replicates)
        .into_par_iter()
        .map(|rep| {
            let g = simulate_dynamic_graph(
                &w,
                derive_seed(cfg.seed, Domain::Edges, rep as u64),
                cfg.graph_cap,
            )?;
            g.giant_path(&grid)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    write(&c.out, &output::graph_csv(&reps))?;
    Ok(EXIT_OK)
}

fn limit(c: &Common, brownian: bool) -> Result<i32, CliError> {
    let cfg = load(c)?;
    let samples = if brownian {
        if cfg.model != crate::weights::WeightModel::constant(1.0).expect("valid constant") {
            return Err(CliError::Usage(
                "--brownian requires model {\"type\":\"constant\",\"c\":1}".into(),
            ));
        }
        er_brownian_path(&cfg.grid(), cfg.replicates, cfg.seed).map_err(limit_error)?
    } else {
        let curves = SupercriticalCurves::tabulate(&cfg.model, &cfg.grid(), cfg.margin)
            .map_err(theory_error)?;
        sample_x_path(&curves, cfg.replicates, cfg.seed).map_err(limit_error)?
    };
    eprintln!("limit: {} draws -> {}", samples.len(), c.out.display());
    write(&c.out, &output::limit_csv(&samples))?;
    Ok(EXIT_OK)
}

/// `out` receives the CSV report and its `.json` sibling the JSON report. If
/// `out` itself ends in `.json` the CSV goes to the `.csv` sibling.
pub fn report_paths(out: &Path) -> (PathBuf, PathBuf) {
    if out.extension().is_some_and(|e| e == "json") {
        (out.with_extension("csv"), out.to_path_buf())
    } else {
        (out.to_path_buf(), out.with_extension("json"))
    }
}

fn experiment(c: &Common, kind: ExperimentKind) -> Result<i32, CliError> {
    let cfg = load(c)?;
    let exp = cfg.experiment(kind)?;
    exp.validate().map_err(harness_error)?;
    eprintln!(
        "{kind:?}: n={:?}, {} replicates, {} grid points",
        exp.n,
        exp.replicates,
        exp.lambdas.len()
    );
    let report = harness::run(&exp).map_err(harness_error)?;
    let (csv, json) = report_paths(&c.out);
    write(&csv, &output::report_csv(&report))?;
    write(&json, &output::report_json(&report))?;
    for r in report.failures() {
        eprintln!(
            "FAIL lambda={} {}: empirical={} target={} z={:.2}",
            r.lambda, r.stat, r.empirical, r.target, r.z
        );
    }
    if report.all_pass() {
        eprintln!("all checks passed");
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_CHECK_FAILED)
    }
}
