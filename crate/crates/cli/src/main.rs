//! `wtgv` command-line front end.
//!
//! Exit codes: 0 success, 2 usage (bad flags, missing inputs), 3 configuration
//! or numerical failure, 4 I/O or format failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use wtgv::analysis::{extract_profile, log10_map, ratio_map, score_from_field, tv_equivalence_score};
use wtgv::pdhg::{solve_tgv, solve_tv, DataTerm, Denoising, MriData, PdhgConfig, SolveReport};
use wtgv::search::{grid_search_scalar, log_space, GridSearchResult, GridSpec};
use wtgv::tensor_io::{read_tensor, write_pgm, write_tensor, Dtype, Tensor, TensorScalar, ToTensor};
use wtgv::{
    add_gaussian_noise, make_mask, psnr, ramp_phantom, shepp_like_phantom, simulate_kspace, square_phantom,
    ssim, ComplexGrid, Error, Grid, ParamMap, Regulariser, SamplingMask, ScalarGrid, VectorField,
};

#[derive(Parser)]
#[command(name = "wtgv", version, about = "Weighted TV/TGV reconstruction toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic phantom.
    Synth(SynthArgs),
    /// Add noise (denoise) or simulate an undersampled acquisition (mri).
    Corrupt {
        #[command(subcommand)]
        mode: CorruptMode,
    },
    /// Solve a weighted TV or TGV problem.
    Solve(SolveArgs),
    /// Scalar-parameter grid search scored by SSIM.
    Gridsearch(GridArgs),
    /// Print PSNR and SSIM of an image against a reference.
    Metrics(MetricsArgs),
    /// Parameter-map analysis.
    Analyze {
        #[command(subcommand)]
        what: AnalyzeCmd,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PhantomKind {
    Square,
    Ramp,
    Shepp,
}

#[derive(Args)]
struct SynthArgs {
    kind: PhantomKind,
    #[arg(long, default_value_t = 64)]
    size: usize,
    /// Accepted for interface uniformity; all phantoms are deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    inner_frac: f64,
    #[arg(long, default_value_t = 0.0)]
    lo: f64,
    #[arg(long, default_value_t = 1.0)]
    hi: f64,
    /// Ramp slope along rows.
    #[arg(long, default_value_t = 0.008)]
    gy: f64,
    /// Ramp slope along columns.
    #[arg(long, default_value_t = 0.006)]
    gx: f64,
    #[arg(long, default_value_t = 0.1)]
    offset: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    pgm: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CorruptMode {
    Denoise {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        sd: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    Mri {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 4)]
        accel: u32,
        #[arg(long, default_value_t = 0.08)]
        center_frac: f64,
        #[arg(long, default_value_t = 0.0)]
        sd: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// k-space output.
        #[arg(long)]
        out: PathBuf,
        /// Mask output; a JSON sidecar is written next to it.
        #[arg(long)]
        mask: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    Tv,
    Tgv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Problem {
    Denoise,
    Mri,
}

#[derive(Args, Clone)]
struct StepArgs {
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Use the learned MRI TGV steps, which exceed the convergence bound.
    #[arg(long)]
    trained_steps: bool,
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long, value_enum)]
    model: Model,
    #[arg(long, value_enum, default_value = "denoise")]
    problem: Problem,
    /// Noisy image (denoise) or k-space (mri).
    #[arg(long)]
    input: PathBuf,
    /// Sampling mask, required for mri.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[command(flatten)]
    steps: StepArgs,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long)]
    map0: Option<PathBuf>,
    #[arg(long)]
    map1: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// TGV only: also write the auxiliary field w as [2, H, W].
    #[arg(long)]
    out_field: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    pgm: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Ground truth; complex references are scored on magnitude.
    #[arg(long)]
    reference: PathBuf,
    /// Comma-separated lambda (tv) or lambda1 (tgv) values.
    #[arg(long, value_delimiter = ',')]
    lambda1_grid: Option<Vec<f64>>,
    /// Comma-separated lambda0 values (tgv).
    #[arg(long, value_delimiter = ',')]
    lambda0_grid: Option<Vec<f64>>,
    /// Data range for the metrics; defaults to the reference maximum.
    #[arg(long)]
    range: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    reference: PathBuf,
    /// Data range; defaults to the reference maximum.
    #[arg(long)]
    range: Option<f64>,
}

#[derive(Subcommand)]
enum AnalyzeCmd {
    /// Pointwise lambda0 / lambda1.
    Ratio {
        #[arg(long)]
        map0: PathBuf,
        #[arg(long)]
        map1: PathBuf,
        /// Write log10 of the ratio instead.
        #[arg(long)]
        log: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample a map along a segment and report extrema as CSV.
    Profile {
        #[arg(long)]
        map: PathBuf,
        /// Start point as `row,col`.
        #[arg(long, value_delimiter = ',', required = true)]
        from: Vec<f64>,
        /// End point as `row,col`.
        #[arg(long, value_delimiter = ',', required = true)]
        to: Vec<f64>,
        #[arg(long, default_value_t = 101)]
        samples: usize,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// How TV-like TGV is at an image.
    Score {
        #[arg(long)]
        input: PathBuf,
        /// Use this field instead of solving for it.
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long)]
        lambda0: Option<f64>,
        #[arg(long)]
        lambda1: Option<f64>,
        #[arg(long)]
        map0: Option<PathBuf>,
        #[arg(long)]
        map1: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Format { .. } => 4,
            _ => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure { code: 4, message: format!("{}: {e}", path.display()) }
}

/// Missing inputs are usage errors; unreadable or malformed ones are I/O errors.
fn load(path: &Path) -> CliResult<Tensor> {
    if !path.exists() {
        return Err(usage(format!("input file {} does not exist", path.display())));
    }
    read_tensor(path).map_err(|e| {
        let message = format!("{}: {e}", path.display());
        Failure { message, ..Failure::from(e) }
    })
}

fn save(path: &Path, value: &impl ToTensor) -> CliResult<()> {
    write_tensor(path, value).map_err(|e| match e {
        Error::Io(io) => io_failure(path, io),
        other => other.into(),
    })
}

fn save_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| io_failure(path, e))
}

fn preview<T: wtgv::Scalar>(path: &Path, u: &Grid<T>) -> CliResult<()> {
    write_pgm(path, &wtgv::search::score_image(u)).map_err(Failure::from)
}

fn load_map(path: &Path, shape: (usize, usize)) -> CliResult<ParamMap> {
    let m = load(path)?.into_param_map()?;
    if m.shape() != shape {
        return Err(Error::Shape(format!(
            "map {} is {:?}, data is {:?}",
            path.display(),
            m.shape(),
            shape
        ))
        .into());
    }
    Ok(m)
}

fn resolve_map(
    value: Option<f64>,
    path: Option<&PathBuf>,
    name: &str,
    shape: (usize, usize),
) -> CliResult<ParamMap> {
    match (value, path) {
        (_, Some(p)) => load_map(p, shape),
        (Some(v), None) => Ok(ParamMap::constant(shape.0, shape.1, v)?),
        (None, None) => Err(usage(format!("--{name} or its map file is required"))),
    }
}

fn config(model: Model, problem: Problem, steps: &StepArgs) -> CliResult<PdhgConfig> {
    let mri = problem == Problem::Mri;
    let mut cfg = if steps.trained_steps {
        if model != Model::Tgv || !mri {
            return Err(usage("--trained-steps applies only to tgv mri"));
        }
        PdhgConfig::tgv_mri_trained()
    } else {
        PdhgConfig::defaults(regulariser(model), mri)
    };
    if let Some(v) = steps.sigma {
        cfg.sigma = v;
    }
    if let Some(v) = steps.tau {
        cfg.tau = v;
    }
    if let Some(v) = steps.theta {
        cfg.theta = v;
    }
    if let Some(v) = steps.iters {
        cfg.max_iters = v;
    }
    if let Some(v) = steps.tol {
        cfg.tol = v;
    }
    Ok(cfg)
}

fn regulariser(m: Model) -> Regulariser {
    match m {
        Model::Tv => Regulariser::Tv,
        Model::Tgv => Regulariser::Tgv,
    }
}

fn load_mask(path: &Path) -> CliResult<SamplingMask> {
    let grid = load(path)?.into_scalar_grid()?;
    let cf = fs::read_to_string(path.with_extension("json"))
        .ok()
        .and_then(|s| serde_json::from_str::<MaskSidecar>(&s).ok())
        .map(|s| s.center_fraction)
        .unwrap_or(0.0);
    Ok(SamplingMask::from_grid(&grid, cf)?)
}

/// Builds the data term for the requested problem and hands it to `f`.
fn with_data<R>(
    args: &ProblemArgs,
    real: impl FnOnce(&Denoising<f64>) -> CliResult<R>,
    complex_denoise: impl FnOnce(&Denoising<Complex64>) -> CliResult<R>,
    mri: impl FnOnce(&MriData) -> CliResult<R>,
) -> CliResult<R> {
    let input = load(&args.input)?;
    match args.problem {
        Problem::Denoise => match input.dtype() {
            Dtype::Float32 => real(&Denoising::new(input.into_scalar_grid()?)),
            Dtype::Complex64 => complex_denoise(&Denoising::new(input.into_complex_grid()?)),
        },
        Problem::Mri => {
            let mask_path = args.mask.as_ref().ok_or_else(|| usage("--mask is required for mri"))?;
            let mask = load_mask(mask_path)?;
            mri(&MriData::new(input.into_complex_grid()?, mask)?)
        }
    }
}

#[derive(Serialize)]
struct Report {
    iterations: usize,
    final_energy: f64,
    relative_change_last: Option<f64>,
}

impl From<&SolveReport> for Report {
    fn from(r: &SolveReport) -> Self {
        Report {
            iterations: r.iterations,
            final_energy: r.final_energy,
            relative_change_last: r.last_relative_change(),
        }
    }
}

#[derive(Serialize, serde::Deserialize)]
struct MaskSidecar {
    #[serde(rename = "R")]
    r: u32,
    center_fraction: f64,
    seed: u64,
}

fn solve_one<T: TensorScalar, D: DataTerm<T>>(args: &SolveArgs, data: &D) -> CliResult<()> {
    let p = &args.problem;
    let shape = data.shape();
    let cfg = config(p.model, p.problem, &p.steps)?;
    let (u, w, report) = match p.model {
        Model::Tv => {
            if args.lambda0.is_some() || args.map0.is_some() {
                return Err(usage("tv takes --lambda or --map"));
            }
            let lam = resolve_map(args.lambda.or(args.lambda1), args.map.as_ref().or(args.map1.as_ref()), "lambda", shape)?;
            let s = solve_tv(data, &lam, &cfg, None)?;
            (s.u, None, s.report)
        }
        Model::Tgv => {
            let l0 = resolve_map(args.lambda0, args.map0.as_ref(), "lambda0", shape)?;
            let l1 = resolve_map(args.lambda1, args.map1.as_ref(), "lambda1", shape)?;
            let s = solve_tgv(data, &l0, &l1, &cfg, None)?;
            (s.u, Some(s.w), s.report)
        }
    };
    save(&args.out, &u)?;
    if let Some(path) = &args.out_field {
        match &w {
            Some(w) => save(path, w)?,
            None => return Err(usage("--out-field applies only to tgv")),
        }
    }
    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(&Report::from(&report)).expect("report serialises");
        save_text(path, &(json + "\n"))?;
    }
    if let Some(path) = &args.pgm {
        preview(path, &u)?;
    }
    Ok(())
}

fn run_solve(args: &SolveArgs) -> CliResult<()> {
    with_data(&args.problem, |d| solve_one(args, d), |d| solve_one(args, d), |d| solve_one(args, d))
}

fn reference_image(path: &Path) -> CliResult<ScalarGrid> {
    let t = load(path)?;
    Ok(match t.dtype() {
        Dtype::Float32 => t.into_scalar_grid()?,
        Dtype::Complex64 => t.into_complex_grid()?.magnitude(),
    })
}

fn grid_spec(args: &GridArgs) -> CliResult<GridSpec> {
    let default_tv = || log_space(1e-3, 1.0, 25);
    let default_tgv = || log_space(1e-3, 1.0, 15);
    Ok(match args.problem.model {
        Model::Tv => {
            if args.lambda0_grid.is_some() {
                return Err(usage("--lambda0-grid applies only to tgv"));
            }
            GridSpec::Tv { lambdas: args.lambda1_grid.clone().unwrap_or_else(default_tv) }
        }
        Model::Tgv => GridSpec::Tgv {
            lambda0s: args.lambda0_grid.clone().unwrap_or_else(default_tgv),
            lambda1s: args.lambda1_grid.clone().unwrap_or_else(default_tgv),
        },
    })
}

fn run_gridsearch(args: &GridArgs) -> CliResult<()> {
    let reference = reference_image(&args.reference)?;
    let range = args.range.unwrap_or_else(|| reference.max());
    let spec = grid_spec(args)?;
    let cfg = config(args.problem.model, args.problem.problem, &args.problem.steps)?;
    let result: GridSearchResult = with_data(
        &args.problem,
        |d| Ok(grid_search_scalar(d, &reference, &spec, &cfg, range)?),
        |d| Ok(grid_search_scalar(d, &reference, &spec, &cfg, range)?),
        |d| Ok(grid_search_scalar(d, &reference, &spec, &cfg, range)?),
    )?;
    save_text(&args.out, &result.to_csv())?;
    let b = result.best();
    match b.lambda0 {
        Some(l0) => println!("best lambda0={l0:?} lambda1={:?} psnr={:?} ssim={:?}", b.lambda1, b.psnr, b.ssim),
        None => println!("best lambda={:?} psnr={:?} ssim={:?}", b.lambda1, b.psnr, b.ssim),
    }
    Ok(())
}

fn run_metrics(args: &MetricsArgs) -> CliResult<()> {
    let u = reference_image(&args.input)?;
    let r = reference_image(&args.reference)?;
    let range = args.range.unwrap_or_else(|| r.max());
    println!("psnr={:?} ssim={:?}", psnr(&u, &r, range)?, ssim(&u, &r, range)?);
    Ok(())
}

fn point(v: &[f64], flag: &str) -> CliResult<(f64, f64)> {
    match v {
        [a, b] => Ok((*a, *b)),
        _ => Err(usage(format!("--{flag} expects row,col"))),
    }
}

fn run_analyze(cmd: &AnalyzeCmd) -> CliResult<()> {
    match cmd {
        AnalyzeCmd::Ratio { map0, map1, log, out } => {
            let a = load(map0)?.into_param_map()?;
            let b = load(map1)?.into_param_map()?;
            let r = ratio_map(&a, &b)?;
            let r = if *log { log10_map(&r)? } else { r };
            save(out, &r)
        }
        AnalyzeCmd::Profile { map, from, to, samples, delta, out } => {
            let g = load(map)?.into_scalar_grid()?;
            let p = extract_profile(&g, point(from, "from")?, point(to, "to")?, *samples, *delta)?;
            save_text(out, &p.to_csv())
        }
        AnalyzeCmd::Score { input, field, lambda0, lambda1, map0, map1 } => {
            let t = load(input)?;
            let score = match t.dtype() {
                Dtype::Float32 => score_for(t.into_scalar_grid()?, field, *lambda0, *lambda1, map0, map1)?,
                Dtype::Complex64 => score_for(t.into_complex_grid()?, field, *lambda0, *lambda1, map0, map1)?,
            };
            println!("score={score:?}");
            Ok(())
        }
    }
}

fn score_for<T: TensorScalar>(
    u: Grid<T>,
    field: &Option<PathBuf>,
    lambda0: Option<f64>,
    lambda1: Option<f64>,
    map0: &Option<PathBuf>,
    map1: &Option<PathBuf>,
) -> CliResult<f64> {
    if let Some(path) = field {
        let w: VectorField<T> = load(path)?.into_vector_field()?;
        return Ok(score_from_field(&u, &w)?);
    }
    let shape = u.shape();
    let l0 = resolve_map(lambda0, map0.as_ref(), "lambda0", shape)?;
    let l1 = resolve_map(lambda1, map1.as_ref(), "lambda1", shape)?;
    Ok(tv_equivalence_score(&u, &l0, &l1)?)
}

fn run_synth(a: &SynthArgs) -> CliResult<()> {
    match a.kind {
        PhantomKind::Square => {
            let u = square_phantom(a.size, a.inner_frac, a.lo, a.hi)?;
            save(&a.out, &u)?;
            a.pgm.as_ref().map(|p| preview(p, &u)).transpose()?;
        }
        PhantomKind::Ramp => {
            let u = ramp_phantom(a.size, (a.gy, a.gx), a.offset);
            save(&a.out, &u)?;
            a.pgm.as_ref().map(|p| preview(p, &u)).transpose()?;
        }
        PhantomKind::Shepp => {
            let u = shepp_like_phantom(a.size)?;
            save(&a.out, &u)?;
            a.pgm.as_ref().map(|p| preview(p, &u)).transpose()?;
        }
    }
    Ok(())
}

fn run_corrupt(mode: &CorruptMode) -> CliResult<()> {
    match mode {
        CorruptMode::Denoise { input, sd, seed, out } => {
            let t = load(input)?;
            match t.dtype() {
                Dtype::Float32 => save(out, &add_gaussian_noise(&t.into_scalar_grid()?, *sd, *seed)?),
                Dtype::Complex64 => save(out, &add_gaussian_noise(&t.into_complex_grid()?, *sd, *seed)?),
            }
        }
        CorruptMode::Mri { input, accel, center_frac, sd, seed, out, mask } => {
            let u: ComplexGrid = load(input)?.into_complex_grid()?;
            let m = make_mask(u.shape(), *accel, *center_frac, *seed)?;
            // Distinct stream for the noise so mask and noise are independent.
            let k = simulate_kspace(&u, &m, *sd, seed.wrapping_add(1))?;
            save(out, &k)?;
            save(mask, &m)?;
            let side = MaskSidecar { r: *accel, center_fraction: *center_frac, seed: *seed };
            let json = serde_json::to_string_pretty(&side).expect("sidecar serialises");
            save_text(&mask.with_extension("json"), &(json + "\n"))
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Synth(a) => run_synth(a),
        Command::Corrupt { mode } => run_corrupt(mode),
        Command::Solve(a) => run_solve(a),
        Command::Gridsearch(a) => run_gridsearch(a),
        Command::Metrics(a) => run_metrics(a),
        Command::Analyze { what } => run_analyze(what),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
