mod config;

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use tukey_core::bench::{gen_gaussian, inject_outliers, run_bench, BenchPlan, CellStatus, Dataset, Method};
use tukey_core::hardgen::{reduce_to_regression, CnfFormula};
use tukey_core::io::{read_instance, write_instance, CsvLayout};
use tukey_core::msketch::{SketchSpec, SketchedProblem};
use tukey_core::rowsample::{sample_reduce, SampleConfig};
use tukey_core::solver::{solve_instance, SolveOptions};
use tukey_core::{Error, LossKind, LossSpec, RegressionInstance, Result};

use config::{parse_list, Config};

/// Environment variable holding the worker thread count.
const THREADS_VAR: &str = "TUKEY_THREADS";

#[derive(Parser)]
#[command(name = "tukey", version, about = "Reduce and solve Tukey regression problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Gaussian instance, optionally with outliers in b
    Gen(GenArgs),
    /// Apply the oblivious M-sketch and write (SA | Sb) with level weights
    Sketch(SketchArgs),
    /// Reduce an instance by recursive row sampling
    Sample(SampleArgs),
    /// Solve a (weighted) instance with IRLS
    Solve(SolveArgs),
    /// Run the approximation-ratio benchmark
    Bench(BenchArgs),
    /// Build a regression instance from a DIMACS 3-CNF formula
    ReduceSat(ReduceSatArgs),
}

#[derive(Args)]
struct LossArgs {
    /// Loss kind: tukey or clipped
    #[arg(long = "loss", default_value = "tukey")]
    kind: String,
    /// Threshold beyond which the loss is flat
    #[arg(long, default_value_t = 10.0)]
    tau: f64,
    /// Growth exponent (clipped loss only; the bisquare uses 2)
    #[arg(long)]
    p: Option<f64>,
    /// Multiplicative scale of the loss
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
}

impl LossArgs {
    fn spec(&self) -> Result<LossSpec> {
        build_loss(&self.kind, self.tau, self.p, self.scale)
    }
}

fn build_loss(kind: &str, tau: f64, p: Option<f64>, scale: f64) -> Result<LossSpec> {
    let kind: LossKind = kind.parse()?;
    let p = match (kind, p) {
        (LossKind::TukeyBisquare, Some(p)) if p != 2.0 => {
            return Err(Error::Parameter(format!("the bisquare has p = 2, got --p {p}")))
        }
        (_, p) => p.unwrap_or(2.0),
    };
    LossSpec::new(kind, tau, p, scale)
}

#[derive(Args)]
struct InputArgs {
    /// Input CSV (`-` or absent for stdin)
    input: Option<PathBuf>,
    /// The input has no header row
    #[arg(long)]
    no_header: bool,
    /// The first column holds row weights (detected from a `weight` header otherwise)
    #[arg(long)]
    weighted: bool,
}

impl InputArgs {
    fn load(&self) -> Result<RegressionInstance> {
        let text = read_text(self.input.as_deref())?;
        let header = !self.no_header;
        let weighted = self.weighted
            || (header
                && text
                    .lines()
                    .next()
                    .and_then(|l| l.split(',').next())
                    .is_some_and(|f| f.trim().trim_matches('"') == "weight"));
        read_instance(text.as_bytes(), CsvLayout { header, weighted })
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Number of IRLS restarts
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// Iteration cap per restart
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    /// Relative objective decrease below which IRLS stops
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

impl SolverArgs {
    fn options(&self, seed: u64) -> SolveOptions {
        SolveOptions {
            restarts: self.restarts,
            max_iter: self.max_iter,
            tol: self.tol,
            seed,
            ..SolveOptions::default()
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of b entries replaced by the outlier magnitude
    #[arg(long, default_value_t = 0.0)]
    outliers: f64,
    #[arg(long, default_value_t = 1e4)]
    magnitude: f64,
    /// Output CSV (stdout when absent)
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    no_header: bool,
}

#[derive(Args)]
struct SketchArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Buckets per level factor m
    #[arg(long)]
    m: Option<usize>,
    /// Level base b
    #[arg(long)]
    b: Option<usize>,
    /// Bucket multiplier c
    #[arg(long)]
    c: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Upper bound on the number of sketch rows
    #[arg(long)]
    rows_cap: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    loss: LossArgs,
    /// Target number of rows
    #[arg(long)]
    rows: usize,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    loss: LossArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Flat key = value file with defaults for the flags below
    #[arg(long)]
    config: Option<PathBuf>,
    /// Benchmark on this CSV instead of Gaussian data
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    no_header: bool,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long = "loss")]
    kind: Option<String>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    outliers: Option<f64>,
    #[arg(long)]
    magnitude: Option<f64>,
    /// Comma-separated subset of rowsample, msketch, msketch-clipped
    #[arg(long)]
    methods: Option<String>,
    /// Comma-separated target row counts (default 2d, 3d, ..., 10d)
    #[arg(long)]
    sizes: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    /// Per-cell results CSV (stdout when absent)
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Write per-method (size, best_ratio) series here
    #[arg(long)]
    plot_data: Option<PathBuf>,
    /// Write run metadata as JSON here
    #[arg(long)]
    meta: Option<PathBuf>,
}

const BENCH_KEYS: &[&str] = &[
    "input", "no-header", "n", "d", "loss", "tau", "p", "scale", "outliers", "magnitude", "methods", "sizes",
    "reps", "seed", "restarts", "eps", "out", "plot-data", "meta",
];

#[derive(Args)]
struct ReduceSatArgs {
    /// DIMACS CNF file (`-` or absent for stdin)
    input: Option<PathBuf>,
    /// Encoding threshold; variables map to +tau / -tau
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// Loss kind used to price the flat region: tukey or clipped
    #[arg(long = "loss", default_value = "clipped")]
    kind: String,
    #[arg(long)]
    p: Option<f64>,
    /// Instance CSV (stdout when absent)
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// JSON manifest (defaults to the output path with `.manifest.json`, or stderr)
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn read_text(path: Option<&Path>) -> Result<String> {
    let mut text = String::new();
    match path {
        Some(p) if p != Path::new("-") => File::open(p)?.read_to_string(&mut text)?,
        _ => io::stdin().read_to_string(&mut text)?,
    };
    Ok(text)
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) if p != Path::new("-") => Box::new(BufWriter::new(File::create(p)?)),
        _ => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(mut w: impl Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.into()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn gen(args: GenArgs) -> Result<()> {
    let mut inst = gen_gaussian(args.n, args.d, args.seed)?;
    if args.outliers > 0.0 {
        inst = inject_outliers(&inst, args.outliers, args.magnitude, args.seed.wrapping_add(1))?;
    }
    write_instance(sink(args.out.as_deref())?, &inst, !args.no_header)
}

fn sketch(args: SketchArgs) -> Result<()> {
    let inst = args.input.load()?;
    if inst.weights.is_some() {
        return Err(Error::Parameter("the sketch applies to unweighted instances".into()));
    }
    let mut spec = SketchSpec::for_dim(inst.nrows());
    spec.m = args.m.unwrap_or(spec.m);
    spec.b = args.b.unwrap_or(spec.b);
    spec.c = args.c.unwrap_or(spec.c);
    spec.gamma = args.gamma.unwrap_or(spec.gamma);
    spec.eps = args.eps.unwrap_or(spec.eps);
    spec.rows_cap = args.rows_cap;
    let prob = SketchedProblem::new(&inst.a, &inst.b, &spec, args.seed)?;
    let s = &prob.sketch;
    eprintln!(
        "sketch: {} rows ({} levels x {} buckets), b = {}, beta = {:.6}, clip count {}",
        s.rows(),
        s.levels(),
        s.buckets(),
        s.spec().b,
        s.beta(),
        s.clip_count()
    );
    write_instance(sink(args.out.as_deref())?, &prob.instance()?, !args.input.no_header)
}

fn sample(args: SampleArgs) -> Result<()> {
    let inst = args.input.load()?;
    if inst.weights.is_some() {
        return Err(Error::Parameter("row sampling starts from an unweighted instance".into()));
    }
    let mut cfg = SampleConfig::new(&args.loss.spec()?, args.rows);
    cfg.eps = args.eps;
    cfg.seed = args.seed;
    let report = sample_reduce(&inst.a, &inst.b, &cfg)?;
    eprintln!(
        "sample: {} -> {} rows in {} steps, max weight {}",
        inst.nrows(),
        report.weights.nnz(),
        report.depth(),
        report.weights.max()
    );
    let reduced = report.weights.reduce(&inst.a, &inst.b)?;
    write_instance(sink(args.out.as_deref())?, &reduced, !args.input.no_header)
}

#[derive(Serialize)]
struct SolveOutput {
    x: Vec<f64>,
    objective: f64,
    iterations: usize,
    restarts: usize,
    best_restart: usize,
    converged: bool,
}

fn solve(args: SolveArgs) -> Result<()> {
    let inst = args.input.load()?;
    let loss = args.loss.spec()?;
    let r = solve_instance(&inst, &loss, &args.solver.options(args.seed))?;
    let mut w = sink(args.out.as_deref())?;
    match args.format {
        Format::Json => write_json(
            w,
            &SolveOutput {
                x: r.x,
                objective: r.objective,
                iterations: r.iterations,
                restarts: r.restarts_used,
                best_restart: r.best_restart,
                converged: r.converged,
            },
        ),
        Format::Csv => {
            writeln!(w, "name,value")?;
            for (j, v) in r.x.iter().enumerate() {
                writeln!(w, "x{},{v}", j + 1)?;
            }
            writeln!(w, "objective,{}", r.objective)?;
            w.flush()?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct BenchMeta {
    n: usize,
    d: usize,
    loss: LossSpec,
    seed: u64,
    repetitions: usize,
    reference_objective: f64,
    zero_objective: f64,
    reference_note: &'static str,
    best: Vec<BestRow>,
}

#[derive(Serialize)]
struct BestRow {
    method: String,
    size: usize,
    best_ratio: f64,
}

/// Command-line value, then config value, then default.
fn pick<T: std::str::FromStr>(cli: Option<T>, cfg: &Config, key: &str, default: T) -> Result<T> {
    Ok(match cli {
        Some(v) => v,
        None => cfg.get(key)?.unwrap_or(default),
    })
}

fn bench(args: BenchArgs) -> Result<()> {
    let cfg = match &args.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    cfg.check_keys(BENCH_KEYS)?;

    let input: Option<PathBuf> = args.input.or(cfg.get("input")?);
    let no_header = args.no_header || cfg.get("no-header")?.unwrap_or(false);
    let dataset = match &input {
        Some(path) => {
            let text = read_text(Some(path))?;
            let layout = CsvLayout { header: !no_header, weighted: false };
            Dataset::Provided(read_instance(text.as_bytes(), layout)?)
        }
        None => Dataset::Gaussian {
            n: pick(args.n, &cfg, "n", 10_000)?,
            d: pick(args.d, &cfg, "d", 20)?,
        },
    };
    let (n, d) = match &dataset {
        Dataset::Gaussian { n, d } => (*n, *d),
        Dataset::Provided(inst) => (inst.nrows(), inst.ncols()),
    };

    let kind: String = pick(args.kind, &cfg, "loss", "tukey".to_string())?;
    let p = match args.p {
        Some(p) => Some(p),
        None => cfg.get("p")?,
    };
    let loss = build_loss(
        &kind,
        pick(args.tau, &cfg, "tau", 10.0)?,
        p,
        pick(args.scale, &cfg, "scale", 1.0)?,
    )?;

    let mut plan = BenchPlan::new(dataset, loss);
    plan.outlier_fraction = pick(args.outliers, &cfg, "outliers", 0.0)?;
    plan.outlier_magnitude = pick(args.magnitude, &cfg, "magnitude", 1e4)?;
    plan.methods = match args.methods {
        Some(s) => parse_list::<String>(&s)
            .map_err(Error::Parameter)?
            .iter()
            .map(|m| m.parse::<Method>())
            .collect::<Result<_>>()?,
        None => cfg
            .get_list::<String>("methods")?
            .map(|v| v.iter().map(|m| m.parse::<Method>()).collect::<Result<Vec<_>>>())
            .transpose()?
            .unwrap_or_else(|| Method::ALL.to_vec()),
    };
    plan.sizes = match args.sizes {
        Some(s) => parse_list(&s).map_err(Error::Parameter)?,
        None => cfg.get_list("sizes")?.unwrap_or_else(|| BenchPlan::default_sizes(d)),
    };
    plan.repetitions = pick(args.reps, &cfg, "reps", 10)?;
    plan.seed = pick(args.seed, &cfg, "seed", 0)?;
    plan.solve.restarts = pick(args.restarts, &cfg, "restarts", plan.solve.restarts)?;
    plan.eps = pick(args.eps, &cfg, "eps", plan.eps)?;
    let out: Option<PathBuf> = args.out.or(cfg.get("out")?);
    let plot: Option<PathBuf> = args.plot_data.or(cfg.get("plot-data")?);
    let meta: Option<PathBuf> = args.meta.or(cfg.get("meta")?);

    let result = run_bench(&plan)?;
    for row in &result.rows {
        match &row.status {
            CellStatus::Skipped => eprintln!(
                "warning: {} at size {} (rep {}) skipped, size exceeds n = {n}",
                row.method, row.size, row.rep
            ),
            CellStatus::Failed(why) => {
                eprintln!("warning: {} at size {} (rep {}) failed: {why}", row.method, row.size, row.rep)
            }
            CellStatus::Solved => {}
        }
    }
    result.write_csv(sink(out.as_deref())?)?;
    if let Some(path) = plot {
        result.write_plot_data(sink(Some(&path))?)?;
    }

    let mut best = Vec::new();
    for (method, series) in result.plot_series() {
        for (size, ratio) in series {
            eprintln!("best {method:<16} size {size:>6}  ratio {ratio:.4}");
            best.push(BestRow { method: method.to_string(), size, best_ratio: ratio });
        }
    }
    eprintln!(
        "reference objective {:.6e} (best local solution found, not a certified optimum)",
        result.reference_objective
    );
    if let Some(path) = meta {
        write_json(
            sink(Some(&path))?,
            &BenchMeta {
                n,
                d,
                loss,
                seed: plan.seed,
                repetitions: plan.repetitions,
                reference_objective: result.reference_objective,
                zero_objective: result.zero_objective,
                reference_note: "best local solution found by IRLS on the full problem or x = 0; \
                                 not a certified global optimum",
                best,
            },
        )?;
    }
    Ok(())
}

fn reduce_sat(args: ReduceSatArgs) -> Result<()> {
    let phi: CnfFormula = read_text(args.input.as_deref())?.parse()?;
    let loss = build_loss(&args.kind, args.tau, args.p, 1.0)?;
    let hard = reduce_to_regression(&phi, args.tau, &loss)?;
    write_instance(sink(args.out.as_deref())?, &hard.instance, true)?;
    let manifest_path = args.manifest.or_else(|| {
        args.out
            .as_ref()
            .filter(|p| p.as_path() != Path::new("-"))
            .map(|p| PathBuf::from(format!("{}.manifest.json", p.display())))
    });
    match manifest_path {
        Some(p) => write_json(sink(Some(&p))?, &hard.manifest()),
        None => write_json(io::stderr().lock(), &hard.manifest()),
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::Parameter(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Parameter(format!("cannot start {threads} worker threads: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Sketch(a) => sketch(a),
        Command::Sample(a) => sample(a),
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
        Command::ReduceSat(a) => reduce_sat(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
