//! Convergence studies, timing benchmarks and least-squares order fits.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::time::Instant;

use crate::density::DensityVector;
use crate::error::{DtqError, Result};
use crate::fp::{fp_solve_with, FpScheme, DEFAULT_KAPPA};
use crate::grid::{select_grid, DomainRule, GridSpec};
use crate::kernel::{AssemblyMode, DEFAULT_DROP_TOL};
use crate::metrics::ErrorReport;
use crate::problem::SdeProblem;
use crate::tracking::evolve_on_grid;

/// Temporal steps used by default (all divide `T = 1`).
pub const DEFAULT_H_LADDER: [f64; 6] = [0.5, 0.2, 0.1, 0.05, 0.02, 0.01];
/// Finer steps enabled by `--extended`.
pub const EXTENDED_H_TAIL: [f64; 3] = [0.005, 0.002, 0.001];
pub const DEFAULT_REPETITIONS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    DtqNaive,
    DtqParallel,
    DtqSparse,
    Fp,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::DtqNaive,
        Method::DtqParallel,
        Method::DtqSparse,
        Method::Fp,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::DtqNaive => "dtq-naive",
            Method::DtqParallel => "dtq-parallel",
            Method::DtqSparse => "dtq-sparse",
            Method::Fp => "fp",
        }
    }

    pub fn assembly_mode(&self) -> Option<AssemblyMode> {
        match self {
            Method::DtqNaive => Some(AssemblyMode::DenseSerial),
            Method::DtqParallel => Some(AssemblyMode::DenseParallel),
            Method::DtqSparse => Some(AssemblyMode::Banded),
            Method::Fp => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = DtqError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| DtqError::InvalidParams(format!("unknown method `{s}`")))
    }
}

/// Domain scaling regime shared by every method in a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainChoice {
    /// The problem's own polynomial rule (`pi/k^2`, or `pi/(2k) - 2` for
    /// problems confined to `(-pi/2, pi/2)`).
    Poly,
    Log {
        epsilon: f64,
    },
}

impl DomainChoice {
    pub fn rule_for(&self, problem: &SdeProblem) -> DomainRule {
        match *self {
            DomainChoice::Poly => problem.domain_rule(),
            DomainChoice::Log { epsilon } => DomainRule::Logarithmic { epsilon },
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            DomainChoice::Poly => "poly",
            DomainChoice::Log { .. } => "log",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub horizon: f64,
    pub rho: f64,
    pub r1: f64,
    pub domain: DomainChoice,
    pub drop_tol: f64,
    pub kappa: f64,
    pub fp_scheme: FpScheme,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            rho: 0.75,
            r1: 1.0,
            domain: DomainChoice::Poly,
            drop_tol: DEFAULT_DROP_TOL,
            kappa: DEFAULT_KAPPA,
            fp_scheme: FpScheme::default(),
        }
    }
}

impl SolveOptions {
    pub fn grid(&self, problem: &SdeProblem, h: f64) -> Result<GridSpec> {
        select_grid(
            h,
            self.horizon,
            self.rho,
            self.r1,
            self.domain.rule_for(problem),
        )
    }
}

/// Runs `method` on a prepared grid.
pub fn solve_on_grid(
    problem: &SdeProblem,
    method: Method,
    grid: &GridSpec,
    opts: &SolveOptions,
) -> Result<DensityVector> {
    match method.assembly_mode() {
        Some(mode) => evolve_on_grid(problem, grid, mode, opts.drop_tol),
        None => fp_solve_with(problem, grid, opts.kappa, opts.fp_scheme),
    }
}

pub fn solve(
    problem: &SdeProblem,
    method: Method,
    h: f64,
    opts: &SolveOptions,
) -> Result<DensityVector> {
    let grid = opts.grid(problem, h)?;
    solve_on_grid(problem, method, &grid, opts)
}

/// Ordinary least-squares slope of `ln(error)` against `ln(h)`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(DtqError::DegenerateFit(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    if let Some(&(h, e)) = points.iter().find(|(h, e)| !(*h > 0.0 && *e > 0.0)) {
        return Err(DtqError::InvalidParams(format!(
            "log-log fit needs positive data, got ({h}, {e})"
        )));
    }
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|(h, e)| (h.ln(), e.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= f64::EPSILON * n * mx.abs().max(1.0) {
        return Err(DtqError::DegenerateFit("all step sizes are equal".into()));
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSlopes {
    pub l1: f64,
    pub linf: f64,
    pub ks: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub problem: String,
    pub method: Method,
    pub rows: Vec<ErrorReport>,
    /// Absent with fewer than two rows or when some error is zero.
    pub slopes: Option<NormSlopes>,
}

impl ConvergenceTable {
    fn fit(rows: &[ErrorReport]) -> Option<NormSlopes> {
        let series = |pick: fn(&ErrorReport) -> f64| -> Option<f64> {
            let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.h(), pick(r))).collect();
            fit_slope(&pts).ok()
        };
        Some(NormSlopes {
            l1: series(|r| r.l1)?,
            linf: series(|r| r.linf)?,
            ks: series(|r| r.ks)?,
        })
    }

    pub fn write_csv<W: Write>(&self, mut out: W, header: bool) -> io::Result<()> {
        if header {
            writeln!(out, "{}", ErrorReport::CSV_HEADER)?;
        }
        for r in &self.rows {
            writeln!(out, "{}", r.csv_row())?;
        }
        Ok(())
    }
}

fn check_ladder(h_list: &[f64]) -> Result<()> {
    if h_list.is_empty() {
        return Err(DtqError::InvalidParams("empty h list".into()));
    }
    if h_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(DtqError::InvalidParams(format!(
            "h values must be strictly decreasing, got {h_list:?}"
        )));
    }
    Ok(())
}

/// Solves at every `h` and compares with the closed form in all three norms.
pub fn run_convergence(
    problem: &SdeProblem,
    h_list: &[f64],
    method: Method,
    opts: &SolveOptions,
) -> Result<ConvergenceTable> {
    if !problem.has_exact_density() {
        return Err(DtqError::MissingExactDensity(problem.name().to_string()));
    }
    check_ladder(h_list)?;
    let mut rows = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let approx = solve(problem, method, h, opts)?;
        let report = ErrorReport::against_exact(problem, &approx)?;
        log::info!(
            "{} h={h} M={} l1={:.3e} linf={:.3e} ks={:.3e}",
            problem.name(),
            report.grid.half_width(),
            report.l1,
            report.linf,
            report.ks
        );
        rows.push(report);
    }
    let slopes = ConvergenceTable::fit(&rows);
    Ok(ConvergenceTable {
        problem: problem.name().to_string(),
        method,
        rows,
        slopes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub report: ErrorReport,
    pub method: Method,
    /// Mean over repetitions of the solve time alone.
    pub wall_seconds: f64,
    pub repetitions: usize,
}

impl RunRecord {
    pub const CSV_HEADER: &'static str =
        "problem,h,k,M,l1,linf,ks,norm_defect,method,wall_seconds,reps";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.6e},{}",
            self.report.csv_row(),
            self.method,
            self.wall_seconds,
            self.repetitions
        )
    }
}

pub fn write_records<W: Write>(records: &[RunRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{}", RunRecord::CSV_HEADER)?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Times one method at one grid. Every repetition recomputes the same
/// deterministic solution; the last one is used for the error.
pub fn time_method(
    problem: &SdeProblem,
    method: Method,
    grid: &GridSpec,
    opts: &SolveOptions,
    repetitions: usize,
) -> Result<RunRecord> {
    if repetitions == 0 {
        return Err(DtqError::InvalidParams(
            "repetitions must be at least 1".into(),
        ));
    }
    let mut total = 0.0;
    let mut last = None;
    for _ in 0..repetitions {
        let start = Instant::now();
        let out = solve_on_grid(problem, method, grid, opts)?;
        total += start.elapsed().as_secs_f64();
        last = Some(out);
    }
    let approx = last.expect("at least one repetition");
    let report = ErrorReport::against_exact(problem, &approx)?;
    Ok(RunRecord {
        report,
        method,
        wall_seconds: (total / repetitions as f64).max(f64::MIN_POSITIVE),
        repetitions,
    })
}

/// Times every method at every `h` on a shared grid per `h`.
pub fn run_benchmark(
    problem: &SdeProblem,
    h_list: &[f64],
    methods: &[Method],
    opts: &SolveOptions,
    repetitions: usize,
) -> Result<Vec<RunRecord>> {
    if !problem.has_exact_density() {
        return Err(DtqError::MissingExactDensity(problem.name().to_string()));
    }
    check_ladder(h_list)?;
    let mut records = Vec::with_capacity(h_list.len() * methods.len());
    for &h in h_list {
        let grid = opts.grid(problem, h)?;
        for &method in methods {
            let rec = time_method(problem, method, &grid, opts, repetitions)?;
            log::info!(
                "{} {method} h={h} M={} l1={:.3e} t={:.3e}s",
                problem.name(),
                grid.half_width(),
                rec.report.l1,
                rec.wall_seconds
            );
            records.push(rec);
        }
    }
    Ok(records)
}
