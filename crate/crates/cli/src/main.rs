use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dtq::harness::{
    time_method, write_records, DEFAULT_H_LADDER, DEFAULT_REPETITIONS, EXTENDED_H_TAIL,
};
use dtq::{
    problem_by_name, problem_names, run_benchmark, run_convergence, solve, DomainChoice, DtqError,
    ErrorReport, FpScheme, Method, RunRecord, SolveOptions,
};

mod config;

use config::FileConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numeric(#[from] DtqError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(DtqError::UnknownProblem { .. } | DtqError::InvalidParams(_)) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "dtq",
    version,
    about = "Density tracking by quadrature for scalar SDEs"
)]
struct Cli {
    /// Log progress to stderr (RUST_LOG overrides).
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve once and write the final density as `node,density` CSV.
    Solve(RunArgs),
    /// Error against the closed form over an h ladder, with fitted slopes.
    Converge(RunArgs),
    /// Wall time and error of several methods on shared grids.
    Bench(RunArgs),
    /// Run a DTQ method and the Fokker-Planck solver on the same grids.
    CompareFp(RunArgs),
    /// Print the builtin problem names.
    ListProblems,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DomainArg {
    Poly,
    Log,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Problem name(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    problem: Vec<String>,
    /// Time step(s), comma separated and strictly decreasing.
    #[arg(long, value_delimiter = ',')]
    h: Vec<f64>,
    /// dtq-naive, dtq-parallel, dtq-sparse or fp; comma separated for bench.
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
    /// Spatial step exponent, k = r1 * h^rho.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    r1: Option<f64>,
    #[arg(long, value_enum)]
    domain: Option<DomainArg>,
    /// Extra factor for the logarithmic domain rule.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Heat-kernel diffusivity for the Fokker-Planck split.
    #[arg(long)]
    kappa: Option<f64>,
    /// Relative cut-off for dropping kernel diagonals.
    #[arg(long)]
    drop_tol: Option<f64>,
    /// Linear algebra for the Fokker-Planck solver: propagator or factored.
    #[arg(long)]
    fp_scheme: Option<String>,
    /// Final time T.
    #[arg(long)]
    horizon: Option<f64>,
    /// Timing repetitions per (h, method).
    #[arg(long)]
    reps: Option<usize>,
    /// Append h = 0.005, 0.002, 0.001 to the ladder.
    #[arg(long)]
    extended: bool,
    /// Output CSV path (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Key-value config file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Solve,
    Converge,
    Bench,
    CompareFp,
}

#[derive(Debug)]
struct Settings {
    problems: Vec<String>,
    h: Vec<f64>,
    methods: Vec<Method>,
    opts: SolveOptions,
    reps: usize,
    out: Option<PathBuf>,
}

const DEFAULT_EPSILON: f64 = 1.0;

fn parse_methods(names: Vec<String>) -> Result<Vec<Method>, CliError> {
    names
        .iter()
        .map(|m| {
            m.parse::<Method>()
                .map_err(|e| CliError::Usage(e.to_string()))
        })
        .collect()
}

fn pick<T>(flag: Vec<T>, file: Option<config::OneOrMany<T>>) -> Vec<T> {
    if !flag.is_empty() {
        flag
    } else {
        file.map(|v| v.into_vec()).unwrap_or_default()
    }
}

impl Settings {
    fn resolve(args: RunArgs, kind: Kind) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };

        let mut problems = pick(args.problem, file.problem);
        if problems.is_empty() {
            problems = match kind {
                Kind::Solve => return Err(CliError::Usage("solve needs --problem".into())),
                Kind::Converge => problem_names(),
                Kind::Bench | Kind::CompareFp => vec!["ex1".into()],
            };
        }
        // fail fast, before any solve
        for p in &problems {
            problem_by_name(p)?;
        }

        let explicit_h = pick(args.h, file.h);
        let mut h = if explicit_h.is_empty() {
            match kind {
                Kind::Solve => vec![0.01],
                _ => DEFAULT_H_LADDER.to_vec(),
            }
        } else {
            explicit_h
        };
        if args.extended || file.extended.unwrap_or(false) {
            let last = h.last().copied().unwrap_or(f64::INFINITY);
            h.extend(EXTENDED_H_TAIL.iter().filter(|&&x| x < last));
            log::warn!(
                "extended ladder down to h = {}: expect long run times and large memory use",
                h.last().unwrap()
            );
        }
        if kind == Kind::Solve && h.len() != 1 {
            return Err(CliError::Usage("solve takes a single --h".into()));
        }

        let mut methods = parse_methods(pick(args.method, file.method))?;
        if methods.is_empty() {
            methods = match kind {
                Kind::Bench => Method::ALL.to_vec(),
                Kind::Solve | Kind::Converge | Kind::CompareFp => vec![Method::DtqSparse],
            };
        }
        match kind {
            Kind::Solve | Kind::Converge if methods.len() != 1 => {
                return Err(CliError::Usage(
                    "only bench and compare-fp accept several methods".into(),
                ))
            }
            Kind::CompareFp if methods.contains(&Method::Fp) => {
                return Err(CliError::Usage(
                    "compare-fp always runs fp; pass DTQ methods only".into(),
                ))
            }
            _ => {}
        }

        let defaults = SolveOptions::default();
        let domain = match args.domain {
            Some(d) => d,
            None => match file.domain.as_deref() {
                None | Some("poly") => DomainArg::Poly,
                Some("log") => DomainArg::Log,
                Some(other) => {
                    return Err(CliError::Usage(format!(
                        "unknown domain `{other}` (poly or log)"
                    )))
                }
            },
        };
        let epsilon = args.epsilon.or(file.epsilon);
        let domain = match domain {
            DomainArg::Poly => {
                if epsilon.is_some() {
                    log::warn!("--epsilon only affects --domain log");
                }
                DomainChoice::Poly
            }
            DomainArg::Log => DomainChoice::Log {
                epsilon: epsilon.unwrap_or(DEFAULT_EPSILON),
            },
        };
        let fp_scheme = match args.fp_scheme.or(file.fp_scheme) {
            Some(s) => s.parse::<FpScheme>()?,
            None => defaults.fp_scheme,
        };
        let opts = SolveOptions {
            horizon: args.horizon.or(file.horizon).unwrap_or(defaults.horizon),
            rho: args.rho.or(file.rho).unwrap_or(defaults.rho),
            r1: args.r1.or(file.r1).unwrap_or(defaults.r1),
            domain,
            drop_tol: args.drop_tol.or(file.drop_tol).unwrap_or(defaults.drop_tol),
            kappa: args.kappa.or(file.kappa).unwrap_or(defaults.kappa),
            fp_scheme,
        };
        let reps = args.reps.or(file.reps).unwrap_or(match kind {
            Kind::Bench => DEFAULT_REPETITIONS,
            _ => 1,
        });
        if reps == 0 {
            return Err(CliError::Usage("--reps must be at least 1".into()));
        }

        Ok(Settings {
            problems,
            h,
            methods,
            opts,
            reps,
            out: args.out.or(file.out),
        })
    }

    fn writer(&self) -> Result<Box<dyn Write>, CliError> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

fn run_solve(s: &Settings) -> Result<(), CliError> {
    let problem = problem_by_name(&s.problems[0])?;
    let density = solve(&problem, s.methods[0], s.h[0], &s.opts)?;
    log::info!(
        "{} {} h={} M={} mass defect {:.3e}",
        problem.name(),
        s.methods[0],
        s.h[0],
        density.grid().half_width(),
        density.normalization_defect()
    );
    let mut out = s.writer()?;
    density.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn run_converge(s: &Settings) -> Result<(), CliError> {
    let mut out = s.writer()?;
    writeln!(out, "{}", ErrorReport::CSV_HEADER)?;
    for name in &s.problems {
        let problem = problem_by_name(name)?;
        let table = run_convergence(&problem, &s.h, s.methods[0], &s.opts)?;
        table.write_csv(&mut out, false)?;
        match table.slopes {
            Some(sl) => eprintln!(
                "{name} {}: slopes l1={:.3} linf={:.3} ks={:.3}",
                table.method, sl.l1, sl.linf, sl.ks
            ),
            None => eprintln!(
                "{name} {}: no slope (needs two h values and nonzero errors)",
                table.method
            ),
        }
    }
    out.flush()?;
    Ok(())
}

fn run_bench(s: &Settings) -> Result<(), CliError> {
    let mut records = Vec::new();
    for name in &s.problems {
        let problem = problem_by_name(name)?;
        records.extend(run_benchmark(&problem, &s.h, &s.methods, &s.opts, s.reps)?);
    }
    let mut out = s.writer()?;
    write_records(&records, &mut out)?;
    out.flush()?;
    Ok(())
}

fn run_compare_fp(s: &Settings) -> Result<(), CliError> {
    let mut records: Vec<RunRecord> = Vec::new();
    for name in &s.problems {
        let problem = problem_by_name(name)?;
        for &h in &s.h {
            let grid = s.opts.grid(&problem, h)?;
            let fp = time_method(&problem, Method::Fp, &grid, &s.opts, s.reps)?;
            for &method in &s.methods {
                let rec = time_method(&problem, method, &grid, &s.opts, s.reps)?;
                eprintln!(
                    "{name} h={h}: {method} l1={:.3e} ({:.3e}s), fp l1={:.3e} ({:.3e}s)",
                    rec.report.l1, rec.wall_seconds, fp.report.l1, fp.wall_seconds
                );
                records.push(rec);
            }
            records.push(fp);
        }
    }
    let mut out = s.writer()?;
    write_records(&records, &mut out)?;
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (kind, args) = match cli.command {
        Command::ListProblems => {
            let mut out = io::stdout().lock();
            for name in problem_names() {
                writeln!(out, "{name}")?;
            }
            return Ok(());
        }
        Command::Solve(a) => (Kind::Solve, a),
        Command::Converge(a) => (Kind::Converge, a),
        Command::Bench(a) => (Kind::Bench, a),
        Command::CompareFp(a) => (Kind::CompareFp, a),
    };
    let settings = Settings::resolve(args, kind)?;
    log::debug!("{settings:?}");
    match kind {
        Kind::Solve => run_solve(&settings),
        Kind::Converge => run_converge(&settings),
        Kind::Bench => run_bench(&settings),
        Kind::CompareFp => run_compare_fp(&settings),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(
        env_logger::Env::default().default_filter_or(if cli.verbose { "info" } else { "warn" }),
    )
    .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
