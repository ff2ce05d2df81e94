//! `subsym`: command-line front end.
//!
//! Exit codes: 0 success, 2 negative verdict, 1 error.

mod commands;
mod config;
mod output;
mod suite;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use config::{Command, JobConfig};
use output::Artifacts;
use subsym_core::Error;

#[derive(Parser)]
#[command(name = "subsym", version, about = "Numerical checks for matrix-valued phase-space symbols")]
struct Cli {
    /// JSON job configuration; flags given on the command line override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory for JSON/CSV/markdown artifacts.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Default)]
struct SymbolArgs {
    /// Library model name (see `list-models`).
    #[arg(long)]
    model: Option<String>,
    /// Model parameters as a JSON object.
    #[arg(long)]
    params: Option<String>,
    /// Symbol definition file (JSON).
    #[arg(long)]
    symbol: Option<PathBuf>,
    /// Phase-space point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    point: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Principal-type verdict at a point.
    AnalyzeSymbol(#[command(flatten)] SymbolArgs),
    /// Search for a quasi-symmetrizer on a patch.
    FindSymmetrizer {
        #[command(flatten)]
        sym: SymbolArgs,
        /// Vector field V, comma separated (default: first axis).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        direction: Option<Vec<f64>>,
        /// Coordinates spanned by the patch, comma separated.
        #[arg(long, value_delimiter = ',')]
        axes: Option<Vec<usize>>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Sublevel-set measures along the t-line and the fitted exponent.
    Sublevel {
        #[command(flatten)]
        sym: SymbolArgs,
        /// `lo:hi:n`, log-spaced.
        #[arg(long)]
        deltas: Option<String>,
        /// `a:b`.
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
        #[arg(long)]
        grid: Option<usize>,
        /// full, re, im or auto.
        #[arg(long)]
        part: Option<String>,
    },
    /// Finite-type verdict, exponent and predicted loss.
    FiniteType {
        #[command(flatten)]
        sym: SymbolArgs,
        #[arg(long)]
        lattice: Option<usize>,
    },
    /// Riesz projection onto the eigenvalues near zero.
    SpectralProjection {
        #[command(flatten)]
        sym: SymbolArgs,
        /// Matrix file (JSON rows of reals or [re, im] pairs).
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Smallest-singular-value scaling of a discretized model operator.
    VerifyEstimate {
        #[command(flatten)]
        sym: SymbolArgs,
        /// `lo:hi:n`, log-spaced.
        #[arg(long)]
        h: Option<String>,
        /// dirichlet or periodic.
        #[arg(long)]
        boundary: Option<String>,
        /// Stencil order (2 or 4).
        #[arg(long)]
        order: Option<usize>,
        /// t-window `a:b`.
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
    },
    /// Available library models.
    ListModels,
    /// Reproduce the worked examples as a pass/fail table.
    RunPaperSuite {
        /// Single entry: prtrem, jordan, w2iw3, ex1-sublevel, ex2-sublevel,
        /// scalarex, ex2, ex1, subex, simplex.
        #[arg(long)]
        only: Option<String>,
    },
}

fn symbol_job(s: SymbolArgs) -> Result<JobConfig, Error> {
    let params = match s.params {
        Some(p) => serde_json::from_str(&p).map_err(|e| Error::Input(format!("--params: {e}")))?,
        None => Value::Null,
    };
    Ok(JobConfig { model: s.model, symbol: s.symbol, point: s.point, params, ..Default::default() })
}

fn job_from(cli: Cli) -> Result<JobConfig, Error> {
    let mut top = match cli.command {
        Cmd::AnalyzeSymbol(s) => JobConfig { command: Some(Command::AnalyzeSymbol), ..symbol_job(s)? },
        Cmd::FindSymmetrizer { sym, direction, axes, radius, samples } => JobConfig {
            command: Some(Command::FindSymmetrizer),
            direction,
            axes,
            radius,
            samples,
            ..symbol_job(sym)?
        },
        Cmd::Sublevel { sym, deltas, window, grid, part } => {
            JobConfig { command: Some(Command::Sublevel), deltas, window, grid, part, ..symbol_job(sym)? }
        }
        Cmd::FiniteType { sym, lattice } => JobConfig { command: Some(Command::FiniteType), lattice, ..symbol_job(sym)? },
        Cmd::SpectralProjection { sym, matrix, epsilon, nodes } => {
            JobConfig { command: Some(Command::SpectralProjection), matrix, epsilon, nodes, ..symbol_job(sym)? }
        }
        Cmd::VerifyEstimate { sym, h, boundary, order, window } => {
            JobConfig { command: Some(Command::VerifyEstimate), h, boundary, order, window, ..symbol_job(sym)? }
        }
        Cmd::ListModels => JobConfig { command: Some(Command::ListModels), ..Default::default() },
        Cmd::RunPaperSuite { only } => JobConfig { command: Some(Command::RunPaperSuite), only, ..Default::default() },
    };
    top.seed = cli.seed;
    top.jobs = cli.jobs;
    top.output = cli.output;
    let base = match &cli.config {
        Some(p) => JobConfig::load(p)?,
        None => JobConfig::default(),
    };
    if let (Some(a), Some(b)) = (base.command, top.command) {
        if a != b {
            return Err(Error::Input("config command differs from the subcommand".into()));
        }
    }
    Ok(base.overlay(top))
}

fn execute(cli: Cli) -> Result<u8, Error> {
    let job = job_from(cli)?;
    if let Some(n) = job.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::Input(format!("--jobs: {e}")))?;
    }
    let mut out = Artifacts::new(job.output.clone())?;
    let o = commands::run(&job, &mut out)?;
    let body = match &o.text {
        Some(t) => t.clone(),
        None => serde_json::to_string_pretty(&o.summary)? + "\n",
    };
    // a closed pipe downstream is not an error
    let _ = std::io::stdout().write_all(body.as_bytes());
    Ok(if o.failed {
        1
    } else if o.negative {
        2
    } else {
        0
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(1)
        }
    }
}
