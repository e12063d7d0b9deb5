//! Command-line front end: config ingestion, scenario orchestration and artifact output.
//!
//! Exit codes: 0 when every verdict passes, 1 on a scientific failure, 2 on a usage,
//! configuration or I/O error.

pub mod commands;
pub mod config;
pub mod output;
pub mod reproduce;

use clap::{Args, Parser, Subcommand};
use config::ScenarioConfig;
use output::{Artifacts, Provenance};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{stage} stage failed: {message}")]
    Stage { stage: &'static str, message: String },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io { .. } => 2,
            Self::Stage { .. } => 1,
        }
    }
}

pub const DEFAULT_OUT: &str = "hjlab-out";

#[derive(Debug, Parser)]
#[command(name = "hjlab", version, about = "Periodic Hamilton-Jacobi laboratory")]
pub struct Cli {
    /// TOML scenario file; flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample structural conditions and compare verdicts with expectations.
    Check(CheckArgs),
    /// Evolve the initial data and store snapshots.
    Evolve(ScenarioArgs),
    /// Estimate the additive eigenvalue.
    Eigenvalue(ScenarioArgs),
    /// Eigenvalue, stationary solution, w diagnostics and the large-time limit.
    Asymptotics(AsymptoticsArgs),
    /// Recompute the catalog identities into four files.
    ReproducePaper {
        /// Overrides --out.
        outdir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// fig1, fig2, fig3, quadratic, eikonal, nrquad or user.
    #[arg(long)]
    pub hamiltonian: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// H(x, p) for kind `user`, e.g. "abs(p1) - 1".
    #[arg(long)]
    pub expr: Option<String>,
    /// f(x) for kinds `eikonal` and `nrquad`.
    #[arg(long)]
    pub f_expr: Option<String>,
    /// Grid resolution, one value per axis or one for all.
    #[arg(long, num_args = 1..)]
    pub n: Option<Vec<usize>>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Initial data as an expression in x1[, x2], or `random`.
    #[arg(long)]
    pub initial: Option<String>,
    #[arg(long)]
    pub snapshot_spacing: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Conditions to check, e.g. A6+ A- NR.
    #[arg(long, num_args = 1..)]
    pub kinds: Option<Vec<String>>,
    /// Expected verdicts as KIND:sat|refuted|inconclusive.
    #[arg(long, num_args = 1..)]
    pub expect: Option<Vec<String>>,
    #[arg(long)]
    pub eta0: Option<f64>,
    #[arg(long)]
    pub theta0: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct AsymptoticsArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, num_args = 1..)]
    pub eta: Option<Vec<f64>>,
    #[arg(long, num_args = 1..)]
    pub theta: Option<Vec<f64>>,
}

impl ScenarioArgs {
    fn apply(&self, cfg: &mut ScenarioConfig) {
        let h = &mut cfg.hamiltonian;
        if let Some(k) = &self.hamiltonian {
            h.kind = k.clone();
        }
        if let Some(d) = self.dim {
            h.dim = d;
        }
        if self.expr.is_some() {
            h.expr = self.expr.clone();
        }
        if self.f_expr.is_some() {
            h.f_expr = self.f_expr.clone();
        }
        if let Some(n) = &self.n {
            cfg.grid.n = n.clone();
        }
        if let Some(t) = self.horizon {
            cfg.solver.horizon = t;
        }
        if let Some(i) = &self.initial {
            cfg.solver.initial = i.clone();
        }
        if self.snapshot_spacing.is_some() {
            cfg.solver.snapshot_spacing = self.snapshot_spacing;
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    match &cli.command {
        Command::Check(a) => {
            a.scenario.apply(&mut cfg);
            if let Some(k) = &a.kinds {
                cfg.check.kinds = k.clone();
            }
            if let Some(e) = &a.expect {
                cfg.check.expect = e.clone();
            }
            if let Some(v) = a.eta0 {
                cfg.check.eta0 = v;
            }
            if let Some(v) = a.theta0 {
                cfg.check.theta0 = v;
            }
        }
        Command::Evolve(a) | Command::Eigenvalue(a) => a.apply(&mut cfg),
        Command::Asymptotics(a) => {
            a.scenario.apply(&mut cfg);
            if let Some(e) = &a.eta {
                cfg.w.etas = e.clone();
            }
            if let Some(t) = &a.theta {
                cfg.w.thetas = t.clone();
            }
        }
        Command::ReproducePaper { outdir } => {
            if outdir.is_some() {
                cfg.out = outdir.clone();
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    let cfg = resolve_config(cli)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let mut out = Artifacts::create(&dir, Provenance::new(cfg.hash()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Check(_) => commands::check(&cfg, &mut out),
        Command::Evolve(_) => commands::evolve(&cfg, &mut out),
        Command::Eigenvalue(_) => commands::eigenvalue(&cfg, &mut out),
        Command::Asymptotics(_) => commands::asymptotics(&cfg, &mut out),
        Command::ReproducePaper { .. } => commands::reproduce_paper(&reproduce::PaperHamiltonians::default(), &mut out),
    })
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Writes the identity bundle for the given Hamiltonians into `dir` and returns the exit
/// code; lets a test harness inject altered catalog entries.
pub fn reproduce_with(hs: &reproduce::PaperHamiltonians, dir: &Path) -> i32 {
    let result = Artifacts::create(dir, Provenance::new(ScenarioConfig::default().hash()))
        .and_then(|mut out| commands::reproduce_paper(hs, &mut out));
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
