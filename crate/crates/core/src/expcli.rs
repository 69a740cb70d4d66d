//! Experiment runner behind the `wgeig` binary.
//!
//! Three commands: `solve` computes reference eigenpairs on the fine space,
//! `iterate` runs one of the augmented subspace iterations per coarse mesh and
//! writes the error trace, `rates` fits per-iteration reduction factors over
//! several coarse meshes and compares consecutive ones.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::augsub::{run_algorithm_k, run_algorithm_single, FineProblem, IterationOptions, IterationTrace};
use crate::linalg::{EigenSet, ReferenceOptions};
use crate::mesh::TriMesh;
use crate::wgspace::WgSpace;

pub const CSV_HEADER: &str = "iter,target,lambda,a_err,b_err,a_factor,b_factor";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// First `k` eigenpairs.
    #[value(name = "k")]
    FirstK,
    /// One eigenpair selected by index.
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(#[from] crate::Error),
    #[error("not enough converged iterations to fit a rate for target {target} (coarse n = {coarse_n}): {points} points")]
    InsufficientData { coarse_n: usize, target: usize, points: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 for configuration errors, 2 for everything that fails while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub degree: usize,
    pub coarse_n: Vec<usize>,
    pub fine_n: usize,
    pub algorithm: Algorithm,
    pub k: usize,
    pub target: usize,
    pub iters: usize,
    pub seed: u64,
    pub tol: f64,
    pub cluster_tol: f64,
    /// Accepted interval for consecutive reduction-factor ratios.
    pub ratio_window: [f64; 2],
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            degree: 0,
            coarse_n: vec![8],
            fine_n: 64,
            algorithm: Algorithm::FirstK,
            k: 1,
            target: 1,
            iters: 10,
            seed: 20240101,
            tol: 1e-10,
            cluster_tol: 1e-6,
            ratio_window: [2.5, 6.5],
            out: None,
            format: Format::Csv,
        }
    }
}

impl ExperimentConfig {
    /// Checks everything; [`run_solve`] only needs [`Self::validate_fine`].
    pub fn validate(&self) -> CliResult<()> {
        self.validate_fine()?;
        for &n in &self.coarse_n {
            if n < 2 || !self.fine_n.is_multiple_of(n) || !(self.fine_n / n).is_power_of_two() {
                return Err(CliError::Config(format!(
                    "fine n = {} is not a dyadic refinement of coarse n = {n}",
                    self.fine_n
                )));
            }
        }
        Ok(())
    }

    pub fn validate_fine(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.degree > 1 {
            return bad(format!("degree must be 0 or 1, got {}", self.degree));
        }
        if self.fine_n == 0 {
            return bad("fine n must be positive".into());
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.target == 0 {
            return bad("target is 1-based and must be at least 1".into());
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad(format!("tolerance must be positive, got {}", self.tol));
        }
        if !(self.cluster_tol >= 0.0) {
            return bad("cluster tolerance must be nonnegative".into());
        }
        Ok(())
    }

    fn tracked(&self) -> usize {
        match self.algorithm {
            Algorithm::FirstK => self.k,
            Algorithm::Single => self.target,
        }
    }

    fn iteration_options(&self) -> IterationOptions {
        IterationOptions { iters: self.iters, seed: self.seed, tol: self.tol, cluster_tol: self.cluster_tol }
    }

    fn reference_options(&self) -> ReferenceOptions {
        ReferenceOptions { tol: self.tol, seed: self.seed, ..ReferenceOptions::default() }
    }

    fn fine_problem(&self) -> CliResult<FineProblem> {
        let mesh = Arc::new(TriMesh::build_uniform(self.fine_n)?);
        Ok(FineProblem::new(WgSpace::new(mesh, self.degree)?)?)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub degree: usize,
    pub n: usize,
    pub h: f64,
    pub ndofs: usize,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub block_size: usize,
    pub seed: u64,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvectors: Option<Vec<Vec<f64>>>,
}

pub fn run_solve(cfg: &ExperimentConfig, dump_vectors: bool) -> CliResult<SolveReport> {
    cfg.validate_fine()?;
    let start = Instant::now();
    let problem = cfg.fine_problem()?;
    let (set, info) = problem.reference(cfg.k, &cfg.reference_options())?;
    Ok(SolveReport {
        degree: cfg.degree,
        n: cfg.fine_n,
        h: problem.space.mesh().h(),
        ndofs: problem.ndofs(),
        eigenvalues: set.values.clone(),
        residuals: info.residuals,
        iterations: info.iterations,
        block_size: info.block_size,
        seed: info.seed,
        seconds: start.elapsed().as_secs_f64(),
        eigenvectors: dump_vectors.then(|| (0..set.len()).map(|i| set.vector(i).to_vec()).collect()),
    })
}

/// Fitted reduction factor over a window of consecutive errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fit {
    pub factor: f64,
    pub points: usize,
    pub first: f64,
    pub last: f64,
}

/// Geometric-mean reduction `(e_last / e_first)^(1/(m-1))` over `errors`;
/// needs at least three points.
pub fn fit_factor(errors: &[f64]) -> Option<Fit> {
    let m = errors.len();
    if m < 3 || errors.iter().any(|&e| !(e > 0.0)) {
        return None;
    }
    let (first, last) = (errors[0], errors[m - 1]);
    Some(Fit { factor: (last / first).powf(1.0 / (m - 1) as f64), points: m, first, last })
}

/// Errors used for rate fitting: everything after entry 0 up to the first
/// error below `threshold`.
pub fn fit_window(errors: &[f64], threshold: f64) -> &[f64] {
    let tail = &errors[errors.len().min(1)..];
    let end = tail.iter().position(|&e| e < threshold).unwrap_or(tail.len());
    &tail[..end]
}

#[derive(Debug, Clone, Serialize)]
pub struct TargetFit {
    pub target: usize,
    pub a: Option<Fit>,
    pub b: Option<Fit>,
    /// Smallest a-norm error seen in the whole run.
    pub floor: f64,
}

fn fit_trace(trace: &IterationTrace, tol: f64) -> Vec<TargetFit> {
    let threshold = 10.0 * tol;
    trace
        .targets
        .iter()
        .enumerate()
        .map(|(pos, &target)| {
            let a: Vec<f64> = trace.entries.iter().map(|e| e.a_err[pos]).collect();
            let b: Vec<f64> = trace.entries.iter().map(|e| e.b_err[pos]).collect();
            // both norms share the a-norm window
            let len = fit_window(&a, threshold).len();
            let b_window = &b[b.len().min(1)..][..len];
            TargetFit {
                target,
                a: fit_factor(fit_window(&a, threshold)),
                b: fit_factor(b_window),
                floor: a.iter().copied().fold(f64::INFINITY, f64::min),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub coarse_n: usize,
    pub coarse_h: f64,
    pub trace: IterationTrace,
    pub fits: Vec<TargetFit>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterateReport {
    pub config: ExperimentConfig,
    pub reference: Vec<f64>,
    pub reference_seconds: f64,
    pub runs: Vec<RunResult>,
}

/// Runs the configured iteration once per coarse mesh against a shared
/// reference of `tracked + 2` eigenpairs.
pub fn run_iterate(cfg: &ExperimentConfig) -> CliResult<IterateReport> {
    cfg.validate()?;
    if cfg.coarse_n.is_empty() {
        return Err(CliError::Config("at least one coarse n is required".into()));
    }
    let problem = cfg.fine_problem()?;
    let t = Instant::now();
    let (reference, _) = problem.reference(cfg.tracked() + 2, &cfg.reference_options())?;
    let reference_seconds = t.elapsed().as_secs_f64();
    let runs = cfg
        .coarse_n
        .par_iter()
        .map(|&nc| run_one(cfg, &problem, &reference, nc))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(IterateReport { config: cfg.clone(), reference: reference.values.clone(), reference_seconds, runs })
}

fn run_one(cfg: &ExperimentConfig, problem: &FineProblem, reference: &EigenSet, nc: usize) -> CliResult<RunResult> {
    let t = Instant::now();
    let coarse = TriMesh::build_uniform(nc)?;
    let opts = cfg.iteration_options();
    let trace = match cfg.algorithm {
        Algorithm::FirstK => run_algorithm_k(problem, &coarse, reference, cfg.k, &opts)?,
        Algorithm::Single => run_algorithm_single(problem, &coarse, reference, cfg.target, &opts)?,
    };
    let fits = fit_trace(&trace, cfg.tol);
    Ok(RunResult { coarse_n: nc, coarse_h: coarse.h(), trace, fits, seconds: t.elapsed().as_secs_f64() })
}

fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row per iteration and tracked eigenpair; no timing columns.
pub fn trace_csv(trace: &IterationTrace) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    let fa: Vec<Vec<Option<f64>>> = (0..trace.targets.len()).map(|p| trace.factors(p, true)).collect();
    let fb: Vec<Vec<Option<f64>>> = (0..trace.targets.len()).map(|p| trace.factors(p, false)).collect();
    for (l, e) in trace.entries.iter().enumerate() {
        for (p, &target) in trace.targets.iter().enumerate() {
            let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                e.iter,
                target,
                fmt_num(e.lambdas[p]),
                fmt_num(e.a_err[p]),
                fmt_num(e.b_err[p]),
                opt(fa[p][l]),
                opt(fb[p][l])
            );
        }
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub coarse_n: usize,
    pub coarse_h: f64,
    pub target: usize,
    pub a_factor: f64,
    pub b_factor: Option<f64>,
    pub points: usize,
    pub floor: f64,
    /// Previous (coarser) factor divided by this one.
    pub ratio: Option<f64>,
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub config: ExperimentConfig,
    pub reference: Vec<f64>,
    pub rows: Vec<RateRow>,
    pub pass: bool,
}

impl RateReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("coarse_n,target,a_factor,b_factor,points,floor,ratio,status\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.coarse_n,
                r.target,
                fmt_num(r.a_factor),
                r.b_factor.map(fmt_num).unwrap_or_default(),
                r.points,
                fmt_num(r.floor),
                r.ratio.map(fmt_num).unwrap_or_default(),
                match r.pass {
                    Some(true) => "PASS",
                    Some(false) => "FAIL",
                    None => "",
                }
            );
        }
        s
    }
}

/// Reduction-factor table over coarse meshes sorted from coarse to fine.
pub fn rate_report(report: &IterateReport) -> CliResult<RateReport> {
    let cfg = &report.config;
    let mut runs: Vec<&RunResult> = report.runs.iter().collect();
    runs.sort_by_key(|r| r.coarse_n);
    let [lo, hi] = cfg.ratio_window;
    let mut rows = Vec::new();
    let targets = runs.first().map(|r| r.trace.targets.clone()).unwrap_or_default();
    for (pos, &target) in targets.iter().enumerate() {
        let mut prev: Option<f64> = None;
        for run in &runs {
            let fit = &run.fits[pos];
            let a = fit.a.ok_or(CliError::InsufficientData {
                coarse_n: run.coarse_n,
                target,
                points: fit_window(&run.trace.a_errors(pos), 10.0 * cfg.tol).len(),
            })?;
            let ratio = prev.map(|p| p / a.factor);
            rows.push(RateRow {
                coarse_n: run.coarse_n,
                coarse_h: run.coarse_h,
                target,
                a_factor: a.factor,
                b_factor: fit.b.map(|b| b.factor),
                points: a.points,
                floor: fit.floor,
                ratio,
                pass: ratio.map(|r| (lo..=hi).contains(&r)),
            });
            prev = Some(a.factor);
        }
    }
    let pass = rows.iter().all(|r| r.pass != Some(false));
    Ok(RateReport { config: cfg.clone(), reference: report.reference.clone(), rows, pass })
}

pub fn run_rates(cfg: &ExperimentConfig) -> CliResult<RateReport> {
    cfg.validate()?;
    let mut sizes = cfg.coarse_n.clone();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 2 {
        return Err(CliError::Config("rates needs at least two distinct coarse n".into()));
    }
    rate_report(&run_iterate(cfg)?)
}

#[derive(Debug, Parser)]
#[command(name = "wgeig", about = "Weak Galerkin eigensolver with augmented subspace iterations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reference eigenpairs on the fine space.
    Solve {
        #[command(flatten)]
        opts: CommonArgs,
        /// Include eigenvector coefficients in the JSON report.
        #[arg(long)]
        dump_vectors: bool,
    },
    /// Error trace of one augmented subspace run per coarse mesh.
    Iterate {
        #[command(flatten)]
        opts: CommonArgs,
    },
    /// Reduction factors and their ratios across coarse meshes.
    Rates {
        #[command(flatten)]
        opts: CommonArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long, default_value_t = 0)]
    pub degree: usize,
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = vec![8])]
    pub coarse_n: Vec<usize>,
    #[arg(long, default_value_t = 64)]
    pub fine_n: usize,
    #[arg(long, value_enum, default_value_t = Algorithm::FirstK)]
    pub algo: Algorithm,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub target: usize,
    #[arg(long, default_value_t = 10)]
    pub iters: usize,
    #[arg(long, default_value_t = 20240101)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl CommonArgs {
    fn config(&self, default_format: Format) -> ExperimentConfig {
        ExperimentConfig {
            degree: self.degree,
            coarse_n: self.coarse_n.clone(),
            fine_n: self.fine_n,
            algorithm: self.algo,
            k: self.k,
            target: self.target,
            iters: self.iters,
            seed: self.seed,
            tol: self.tol,
            out: self.out.clone(),
            format: self.format.unwrap_or(default_format),
            ..ExperimentConfig::default()
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

/// Path of the per-coarse-mesh CSV when one run writes several traces.
fn trace_path(out: &Path, coarse_n: usize) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    out.with_file_name(format!("{stem}_n{coarse_n}.{ext}"))
}

/// Summary that accompanies a CSV trace: fitted rates and timings.
#[derive(Debug, Serialize)]
struct IterateSummary<'a> {
    config: &'a ExperimentConfig,
    reference: &'a [f64],
    reference_seconds: f64,
    runs: Vec<RunSummary<'a>>,
}

#[derive(Debug, Serialize)]
struct RunSummary<'a> {
    coarse_n: usize,
    coarse_h: f64,
    fits: &'a [TargetFit],
    final_lambdas: &'a [f64],
    step_seconds: Vec<f64>,
    seconds: f64,
}

fn summary(report: &IterateReport) -> IterateSummary<'_> {
    IterateSummary {
        config: &report.config,
        reference: &report.reference,
        reference_seconds: report.reference_seconds,
        runs: report
            .runs
            .iter()
            .map(|r| RunSummary {
                coarse_n: r.coarse_n,
                coarse_h: r.coarse_h,
                fits: &r.fits,
                final_lambdas: r.trace.final_lambdas(),
                step_seconds: r.trace.entries.iter().map(|e| e.elapsed).collect(),
                seconds: r.seconds,
            })
            .collect(),
    }
}

pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Solve { opts, dump_vectors } => {
            let cfg = opts.config(Format::Json);
            let report = run_solve(&cfg, dump_vectors)?;
            let text = match cfg.format {
                Format::Json => to_json(&report),
                Format::Csv => {
                    let mut s = String::from("index,lambda,residual\n");
                    for (i, (l, r)) in report.eigenvalues.iter().zip(&report.residuals).enumerate() {
                        let _ = writeln!(s, "{},{},{}", i + 1, fmt_num(*l), fmt_num(*r));
                    }
                    s
                }
            };
            emit(cfg.out.as_deref(), &text)
        }
        Command::Iterate { opts } => {
            let cfg = opts.config(Format::Csv);
            let report = run_iterate(&cfg)?;
            match cfg.format {
                Format::Json => emit(cfg.out.as_deref(), &to_json(&report)),
                Format::Csv => {
                    let sum = to_json(&summary(&report));
                    match &cfg.out {
                        Some(out) => {
                            for r in &report.runs {
                                let path = if report.runs.len() == 1 { out.clone() } else { trace_path(out, r.coarse_n) };
                                std::fs::write(path, trace_csv(&r.trace))?;
                            }
                            std::fs::write(out.with_extension("summary.json"), sum)?;
                        }
                        None => {
                            for r in &report.runs {
                                print!("{}", trace_csv(&r.trace));
                            }
                            eprint!("{sum}");
                        }
                    }
                    Ok(())
                }
            }
        }
        Command::Rates { opts } => {
            let cfg = opts.config(Format::Json);
            let report = run_rates(&cfg)?;
            let text = match cfg.format {
                Format::Json => to_json(&report),
                Format::Csv => report.to_csv(),
            };
            emit(cfg.out.as_deref(), &text)
        }
    }
}

/// Parses `args` and runs the command; returns the process exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("wgeig: {e}");
            e.exit_code()
        }
    }
}
