//! Command-line front end: evaluates survival curves, runs Monte Carlo
//! estimates and prices nth-to-default swaps.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use fptorder_core::bipoisson::{self, BiPoissonParams};
use fptorder_core::cds::par_spread;
use fptorder_core::montecarlo::{simulate_bipoisson, simulate_singlefile, simulate_trivariate};
use fptorder_core::singlefile;
use fptorder_core::validate::run_all;
use fptorder_core::{
    CdsConfig, CdsContract, Curve, FptError, McConfig, QuadTolerance, SpectralParams, TimeGrid, TriPoissonParams,
    TrivariateModel,
};

pub mod output;

pub use output::{CurveFile, Format, Row};

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "FPT_ORDER_THREADS";

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("numerical failure in {op}: {source}")]
    Numerical { op: &'static str, source: FptError },

    #[error("{path}: {source}", path = .0.display(), source = .1)]
    Io(PathBuf, std::io::Error),

    #[error("encoding error: {0}")]
    Encode(String),

    #[error("{0} validation check(s) failed")]
    Validation(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical { .. } => EXIT_NUMERICAL,
            CliError::Io(..) | CliError::Encode(_) | CliError::Validation(_) => EXIT_FAILURE,
        }
    }
}

/// Errors raised while building inputs are the caller's fault.
fn usage(e: FptError) -> CliError {
    CliError::Usage(e.to_string())
}

impl From<FptError> for CliError {
    fn from(e: FptError) -> Self {
        match e.operation() {
            Some(op) => CliError::Numerical { op, source: e },
            None => usage(e),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fptorder", version, about = "Order statistics of first passage times")]
pub struct Cli {
    /// Evaluation grid as start:stop:step (model-specific default).
    #[arg(long, global = true)]
    pub grid: Option<String>,

    #[arg(long, value_enum, default_value = "csv", global = true)]
    pub out: Format,

    /// Directory receiving one file per curve.
    #[arg(long, default_value = ".", global = true)]
    pub out_dir: PathBuf,

    /// Run the invariant self-checks and report each outcome.
    #[arg(long)]
    pub validate: bool,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bivariate Poisson survival curves S², S¹.
    Bipoisson(BiPoissonArgs),
    /// Two-particle single-file diffusion survival curves S², S¹.
    Singlefile(SingleFileArgs),
    /// Trivariate Poisson (barrier 1) survival curves S³, S², S¹.
    Trivariate(TriPoissonArgs),
    /// Par spread of an nth-to-default swap.
    Cds(CdsArgs),
    /// Monte Carlo estimates with standard errors.
    #[command(subcommand)]
    Mc(McCommand),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BiPoissonArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub l1: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub l2: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub l12: f64,
    /// Barrier level.
    #[arg(long = "M", short = 'M')]
    pub barrier: u32,
    /// Also emit the densities F², F¹.
    #[arg(long)]
    #[serde(skip)]
    pub density: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TriPoissonArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub l1: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub l2: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub l3: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub l12: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub l13: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub l23: f64,
    /// Also emit the densities F³, F², F¹.
    #[arg(long)]
    #[serde(skip)]
    pub density: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SingleFileArgs {
    /// Number of retained modes per index.
    #[arg(long, default_value_t = 64)]
    pub k_trunc: usize,
    /// Absolute quadrature tolerance.
    #[arg(long, default_value_t = 1e-13)]
    pub quad_tol: f64,
    /// Smallest admissible evaluation time.
    #[arg(long, default_value_t = 1e-3)]
    pub time_floor: f64,
    /// Also emit the densities F², F¹.
    #[arg(long)]
    #[serde(skip)]
    pub density: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CdsArgs {
    #[arg(long)]
    pub model_file: PathBuf,
    /// Overrides the order `n` from the model file.
    #[arg(long)]
    pub order: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct McArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Number of realizations.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
}

#[derive(Debug, Subcommand)]
pub enum McCommand {
    Bipoisson {
        #[command(flatten)]
        model: BiPoissonArgs,
        #[command(flatten)]
        mc: McArgs,
    },
    Trivariate {
        #[command(flatten)]
        model: TriPoissonArgs,
        #[command(flatten)]
        mc: McArgs,
    },
    Singlefile {
        #[command(flatten)]
        mc: McArgs,
        /// Euler-Maruyama step.
        #[arg(long, default_value_t = 1e-5)]
        dt: f64,
    },
}

/// Parses `argv` (program name first), executes, and returns the exit status.
/// Diagnostics go to stderr, written paths and quotes to stdout.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    match execute(&cli, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("fptorder: {e}");
            e.exit_code()
        }
    }
}

/// Executes a parsed command line, writing the report to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    configure_threads()?;
    if cli.validate {
        validate(out)?;
    }
    let Some(command) = &cli.command else {
        if cli.validate {
            return Ok(());
        }
        return Err(CliError::Usage("no subcommand given; see --help".into()));
    };
    let files = match command {
        Command::Cds(args) => return cds(args, cli.out, out),
        Command::Bipoisson(args) => bipoisson_curves(args, &grid(cli, "0:4:0.05")?)?,
        Command::Trivariate(args) => trivariate_curves(args, &grid(cli, "0:2:0.02")?)?,
        Command::Singlefile(args) => singlefile_curves(args, &grid(cli, "0.01:1:0.01")?)?,
        Command::Mc(mc) => monte_carlo(mc, cli)?,
    };
    write_all(&files, &cli.out_dir, cli.out, out)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV}='{raw}' is not a positive integer")))?;
    // the global pool can be built once per process; later calls keep it
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Io(PathBuf::from("<stdout>"), e)
}

fn validate(out: &mut dyn Write) -> Result<(), CliError> {
    let results = run_all();
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        writeln!(out, "[{status}] {}: {}", r.name, r.detail).map_err(io_err)?;
    }
    match results.iter().filter(|r| !r.passed).count() {
        0 => Ok(()),
        failed => Err(CliError::Validation(failed)),
    }
}

fn grid(cli: &Cli, default: &str) -> Result<TimeGrid, CliError> {
    cli.grid.as_deref().unwrap_or(default).parse().map_err(usage)
}

fn parameters<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).unwrap_or(serde_json::Value::Null)
}

/// Evaluates `f` over the grid in parallel; the first failing time aborts.
fn tabulate_par(grid: &TimeGrid, f: impl Fn(f64) -> fptorder_core::Result<f64> + Sync) -> Result<Curve, CliError> {
    let values = grid
        .times()
        .par_iter()
        .map(|&t| f(t))
        .collect::<fptorder_core::Result<Vec<f64>>>()?;
    Ok(Curve {
        times: grid.clone(),
        values,
    })
}

fn bipoisson_params(a: &BiPoissonArgs) -> Result<BiPoissonParams, CliError> {
    BiPoissonParams::new(a.l1, a.l2, a.l12, a.barrier).map_err(usage)
}

fn tripoisson_params(a: &TriPoissonArgs) -> Result<TriPoissonParams, CliError> {
    TriPoissonParams::new([a.l1, a.l2, a.l3], [a.l12, a.l13, a.l23]).map_err(usage)
}

fn bipoisson_curves(a: &BiPoissonArgs, grid: &TimeGrid) -> Result<Vec<CurveFile>, CliError> {
    let p = bipoisson_params(a)?;
    let meta = parameters(a);
    let mut files = vec![
        CurveFile::analytic(
            "bipoisson",
            "S2",
            meta.clone(),
            &tabulate_par(grid, |t| bipoisson::survival_both(&p, t))?,
        ),
        CurveFile::analytic(
            "bipoisson",
            "S1",
            meta.clone(),
            &tabulate_par(grid, |t| bipoisson::survival_last(&p, t))?,
        ),
    ];
    if a.density {
        files.push(CurveFile::analytic(
            "bipoisson",
            "F2",
            meta.clone(),
            &tabulate_par(grid, |t| bipoisson::fpt_both(&p, t))?,
        ));
        files.push(CurveFile::analytic(
            "bipoisson",
            "F1",
            meta,
            &tabulate_par(grid, |t| bipoisson::fpt_last(&p, t))?,
        ));
    }
    Ok(files)
}

fn trivariate_curves(a: &TriPoissonArgs, grid: &TimeGrid) -> Result<Vec<CurveFile>, CliError> {
    let m = TrivariateModel::new(tripoisson_params(a)?)?;
    let meta = parameters(a);
    let mut files = Vec::new();
    for n in (1..=3).rev() {
        files.push(CurveFile::analytic(
            "trivariate",
            &format!("S{n}"),
            meta.clone(),
            &tabulate_par(grid, |t| m.survival(n, t))?,
        ));
    }
    if a.density {
        for n in (1..=3).rev() {
            files.push(CurveFile::analytic(
                "trivariate",
                &format!("F{n}"),
                meta.clone(),
                &tabulate_par(grid, |t| m.fpt(n, t))?,
            ));
        }
    }
    Ok(files)
}

fn singlefile_curves(a: &SingleFileArgs, grid: &TimeGrid) -> Result<Vec<CurveFile>, CliError> {
    let tol = QuadTolerance::new(
        a.quad_tol,
        QuadTolerance::default().rel_tol,
        QuadTolerance::default().max_subdivisions,
    )
    .map_err(usage)?;
    let sp = SpectralParams::new(a.k_trunc, tol, a.time_floor).map_err(usage)?;
    let meta = parameters(a);
    let mut files = vec![
        CurveFile::analytic(
            "singlefile",
            "S2",
            meta.clone(),
            &tabulate_par(grid, |t| singlefile::survival_both_sf(&sp, t))?,
        ),
        CurveFile::analytic(
            "singlefile",
            "S1",
            meta.clone(),
            &tabulate_par(grid, |t| singlefile::survival_last_sf(&sp, t))?,
        ),
    ];
    if a.density {
        files.push(CurveFile::analytic(
            "singlefile",
            "F2",
            meta.clone(),
            &tabulate_par(grid, |t| singlefile::fpt_both_sf(&sp, t))?,
        ));
        files.push(CurveFile::analytic(
            "singlefile",
            "F1",
            meta,
            &tabulate_par(grid, |t| singlefile::fpt_last_sf(&sp, t))?,
        ));
    }
    Ok(files)
}

#[derive(Serialize)]
struct McMeta<'a, T: Serialize> {
    #[serde(flatten)]
    model: &'a T,
    #[serde(flatten)]
    mc: &'a McArgs,
}

fn monte_carlo(command: &McCommand, cli: &Cli) -> Result<Vec<CurveFile>, CliError> {
    match command {
        McCommand::Bipoisson { model, mc } => {
            let p = bipoisson_params(model)?;
            let cfg = McConfig::jump(mc.n, mc.seed, grid(cli, "0:4:0.05")?).map_err(usage)?;
            let (s2, s1) = simulate_bipoisson(&p, &cfg)?;
            let meta = parameters(&McMeta { model, mc });
            Ok(vec![
                CurveFile::empirical("mc_bipoisson", "S2", meta.clone(), &s2),
                CurveFile::empirical("mc_bipoisson", "S1", meta, &s1),
            ])
        }
        McCommand::Trivariate { model, mc } => {
            let p = tripoisson_params(model)?;
            let cfg = McConfig::jump(mc.n, mc.seed, grid(cli, "0:2:0.02")?).map_err(usage)?;
            let [s3, s2, s1] = simulate_trivariate(&p, &cfg)?;
            let meta = parameters(&McMeta { model, mc });
            Ok(vec![
                CurveFile::empirical("mc_trivariate", "S3", meta.clone(), &s3),
                CurveFile::empirical("mc_trivariate", "S2", meta.clone(), &s2),
                CurveFile::empirical("mc_trivariate", "S1", meta, &s1),
            ])
        }
        McCommand::Singlefile { mc, dt } => {
            let g = grid(cli, "0.01:1:0.01")?;
            let cfg = McConfig::new(mc.n, mc.seed, g.last(), *dt, g).map_err(usage)?;
            let (s2, s1) = simulate_singlefile(&cfg)?;
            let mut meta = parameters(mc);
            if let serde_json::Value::Object(map) = &mut meta {
                map.insert("dt".into(), serde_json::json!(dt));
            }
            Ok(vec![
                CurveFile::empirical("mc_singlefile", "S2", meta.clone(), &s2),
                CurveFile::empirical("mc_singlefile", "S1", meta, &s1),
            ])
        }
    }
}

fn write_all(files: &[CurveFile], dir: &Path, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
    for f in files {
        let path = f.write(dir, format)?;
        writeln!(out, "{}", path.display()).map_err(io_err)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct QuoteReport {
    metadata: serde_json::Value,
    order: usize,
    u: f64,
    fee_pv: f64,
    protection_pv: f64,
}

fn cds(args: &CdsArgs, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.model_file)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.model_file.display())))?;
    let cfg: CdsConfig = text.parse().map_err(usage)?;
    let contract = match args.order {
        Some(order) => CdsContract::new(
            cfg.contract.basket_size(),
            order,
            cfg.contract.payment_times().to_vec(),
            cfg.contract.short_rate(),
        )
        .map_err(usage)?,
        None => cfg.contract.clone(),
    };
    let model = TrivariateModel::new(cfg.params)?;
    let quote = par_spread(&contract, &model)?;
    let report = QuoteReport {
        metadata: serde_json::json!({
            "model": "cds",
            "parameters": { "contract": contract, "intensities": cfg.params },
            "version": env!("CARGO_PKG_VERSION"),
        }),
        order: contract.order(),
        u: quote.u,
        fee_pv: quote.fee_pv,
        protection_pv: quote.protection_pv,
    };
    match format {
        Format::Csv => {
            writeln!(out, "order,u,fee_pv,protection_pv").map_err(io_err)?;
            writeln!(
                out,
                "{},{},{},{}",
                report.order, report.u, report.fee_pv, report.protection_pv
            )
            .map_err(io_err)?;
        }
        Format::Json => {
            let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Encode(e.to_string()))?;
            writeln!(out, "{text}").map_err(io_err)?;
        }
    }
    Ok(())
}
