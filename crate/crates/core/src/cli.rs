//! Command-line front end.

use std::io::Read;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::anneal::{evolve, fidelity, AnnealSchedule, InitialHamiltonian, Integrator, StepPolicy};
use crate::error::{Error, Result};
use crate::image::{binarize, emit_reconstructions, encode_pgm, encode_pgm_plain, parse_pgm, synthetic_test_image, write_file};
use crate::matrix::{gram, normalize_columns, DataMatrix, GramMode};
use crate::series::{series_sum, series_terms, DEFAULT_TAIL_TOL};
use crate::spectrum::{
    fidelity_against, oracle_top_k, top_k_with_references, PipelineConfig, ScaleMode,
    SpectrumResult, DEFAULT_TIME_PREFACTOR, DEFAULT_TOL,
};
use crate::two_level::{min_gap, min_gap_location, sample_grid, time_scale, TwoLevelParams};

#[derive(Debug, Parser)]
#[command(name = "qa-svd", version, about = "SVD and PCA by simulated quantum annealing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Top-k singular triplets of a text matrix by annealing.
    Decompose(DecomposeArgs),
    /// Top-k singular triplets by classical diagonalization.
    Oracle(OracleArgs),
    /// Two-level model: energy branches, minimum gap and time scale.
    Gap(GapArgs),
    /// Power-series propagation of the anneal, checked against the stepper.
    Series(SeriesArgs),
    /// Decompose a PGM image and write per-layer reconstructions.
    Image(ImageArgs),
    /// Write the synthetic multi-scale test image.
    GenTestimage(GenArgs),
}

#[derive(Debug, Clone, Args)]
pub struct AnnealArgs {
    /// Anneal time per component in units of hbar/epsilon (default: from the two-level model).
    #[arg(long = "T")]
    pub total_time: Option<f64>,
    /// Integration steps per anneal (default: ceil(10 T Hbound)).
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, default_value = "midpoint", value_parser = parse_integrator)]
    pub integrator: Integrator,
    /// Gram scaling: "rowsum", "none", or a positive number.
    #[arg(long, default_value = "rowsum", value_parser = parse_scale)]
    pub scale: ScaleMode,
    /// Residual acceptance, relative to max(lambda, 1).
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda0: f64,
    #[arg(long = "lambda-exc", default_value_t = 1.0)]
    pub lambda_exc: f64,
    #[arg(long = "ground-index", default_value_t = 0)]
    pub ground_index: usize,
    /// Anneals per component before giving up (default n + 1).
    #[arg(long = "max-attempts")]
    pub max_attempts: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TIME_PREFACTOR)]
    pub prefactor: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the anneal trace CSV of component 0 here (component j > 0 gets `_j`).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long = "trace-stride", default_value_t = 100)]
    pub trace_stride: usize,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Matrix text file, or "-" for standard input.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Center and scale columns to unit variance first.
    #[arg(long)]
    pub normalize: bool,
    #[command(flatten)]
    pub anneal: AnnealArgs,
    /// Compute oracle fidelities for the result.
    #[arg(long = "compare-oracle")]
    pub compare_oracle: bool,
    /// Oracle JSON (from the `oracle` command) to compare against.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Output JSON path (default standard output).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long)]
    pub normalize: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GapArgs {
    #[arg(long = "K")]
    pub k: f64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda0: f64,
    /// Points in the CSV grid over x in [0, 1].
    #[arg(long, default_value_t = 1001)]
    pub grid: usize,
    /// Prefactor applied to the time scale in the summary.
    #[arg(long, default_value_t = 1.0)]
    pub prefactor: f64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Summary JSON path (default standard output).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SeriesArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long = "T")]
    pub total_time: f64,
    #[arg(long = "max-order", default_value_t = 400)]
    pub max_order: usize,
    #[arg(long = "tail-tol", default_value_t = DEFAULT_TAIL_TOL)]
    pub tail_tol: f64,
    /// Midpoint steps for the comparison run.
    #[arg(long = "stepper-steps", default_value_t = 100_000)]
    pub stepper_steps: usize,
    #[arg(long, default_value = "rowsum", value_parser = parse_scale)]
    pub scale: ScaleMode,
    #[arg(long)]
    pub normalize: bool,
    #[arg(long, default_value_t = 1.0)]
    pub lambda0: f64,
    #[arg(long = "lambda-exc", default_value_t = 1.0)]
    pub lambda_exc: f64,
    #[arg(long = "ground-index", default_value_t = 0)]
    pub ground_index: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ImageArgs {
    /// PGM image (P2 or P5).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub threshold: Option<u32>,
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    #[command(flatten)]
    pub anneal: AnnealArgs,
    /// Use full diagonalization instead of annealing.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long = "compare-oracle")]
    pub compare_oracle: bool,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    /// Write plain P2 instead of raw P5.
    #[arg(long)]
    pub plain: bool,
    #[arg(long)]
    pub output: PathBuf,
}

fn parse_integrator(s: &str) -> std::result::Result<Integrator, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_scale(s: &str) -> std::result::Result<ScaleMode, String> {
    match s {
        "rowsum" => Ok(ScaleMode::RowSum),
        "none" => Ok(ScaleMode::Unscaled),
        other => match other.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(ScaleMode::Fixed(v)),
            _ => Err(format!("scale must be rowsum, none or a positive number, got {other:?}")),
        },
    }
}

impl AnnealArgs {
    pub fn pipeline_config(&self) -> Result<PipelineConfig> {
        for (name, v) in [("tol", self.tol), ("lambda0", self.lambda0), ("lambda-exc", self.lambda_exc), ("prefactor", self.prefactor)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("--{name} must be positive")));
            }
        }
        if let Some(t) = self.total_time {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter("--T must be positive".into()));
            }
        }
        if self.steps == Some(0) || self.max_attempts == Some(0) {
            return Err(Error::InvalidParameter("--steps and --max-attempts must be positive".into()));
        }
        Ok(PipelineConfig {
            total_time: self.total_time,
            time_prefactor: self.prefactor,
            steps: self.steps.map_or(StepPolicy::Auto, StepPolicy::Fixed),
            integrator: self.integrator,
            lambda0: self.lambda0,
            lambda_exc: self.lambda_exc,
            ground_index: self.ground_index,
            scale: self.scale,
            tol: self.tol,
            max_attempts: self.max_attempts,
            seed: self.seed,
            gram_mode: GramMode::Auto,
            trace_stride: if self.trace.is_some() { self.trace_stride.max(1) } else { 0 },
        })
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    if path.as_os_str() == "-" {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf)?;
        Ok(buf)
    } else {
        std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

fn read_matrix(path: &Path, normalize: bool) -> Result<DataMatrix> {
    let bytes = read_input(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::Parse(e.to_string()))?;
    let a = DataMatrix::parse_text(text)?;
    if normalize {
        normalize_columns(&a)
    } else {
        Ok(a)
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => write_file(p, text.as_bytes()),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn trace_path(base: &Path, j: usize) -> PathBuf {
    if j == 0 {
        return base.to_path_buf();
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}_{j}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{j}"),
    };
    base.with_file_name(name)
}

fn anneal_spectrum(
    a: &DataMatrix,
    k: usize,
    args: &AnnealArgs,
    compare: bool,
    reference: Option<SpectrumResult>,
) -> Result<SpectrumResult> {
    let cfg = args.pipeline_config()?;
    let reference = match reference {
        Some(r) => Some(r),
        None if compare => Some(oracle_top_k(a, k)?),
        None => None,
    };
    let ref_vectors: Option<Vec<Vec<f64>>> = reference
        .as_ref()
        .map(|r| r.components.iter().map(|c| c.v.clone()).collect());
    let mut result = top_k_with_references(a, k, &cfg, ref_vectors.as_deref())?;
    if let Some(r) = &reference {
        result.fidelity_vs_oracle = Some(fidelity_against(&result, r));
    }
    if let Some(base) = &args.trace {
        for (j, t) in result.traces.iter().enumerate() {
            write_file(&trace_path(base, j), t.to_csv().as_bytes())?;
        }
    }
    Ok(result)
}

#[derive(Serialize)]
struct GapSummary {
    min_gap: f64,
    argmin_x: f64,
    time_scale: f64,
}

#[derive(Serialize)]
struct SeriesSummary {
    order_used: usize,
    tail_norm: f64,
    prenorm_norm: f64,
    /// Gauge-fixed amplitudes as `[re, im]` pairs.
    state: Vec<[f64; 2]>,
    fidelity_vs_stepper: f64,
}

fn run_command(cmd: Command) -> Result<()> {
    match cmd {
        Command::Decompose(args) => {
            let a = read_matrix(&args.input, args.normalize)?;
            let reference = match &args.reference {
                Some(p) => {
                    let text = String::from_utf8_lossy(&read_input(p)?).into_owned();
                    Some(SpectrumResult::from_json(&text)?)
                }
                None => None,
            };
            let result = anneal_spectrum(&a, args.k, &args.anneal, args.compare_oracle, reference)?;
            emit(args.output.as_deref(), &result.to_json())
        }
        Command::Oracle(args) => {
            let a = read_matrix(&args.input, args.normalize)?;
            emit(args.output.as_deref(), &oracle_top_k(&a, args.k)?.to_json())
        }
        Command::Gap(args) => {
            let p = TwoLevelParams::new(args.k, args.alpha, args.lambda0)?;
            if let Some(path) = &args.csv {
                let mut csv = String::from("x,E_minus,E_plus,gap,a,b\n");
                for s in sample_grid(&p, args.grid)? {
                    csv.push_str(&format!("{},{},{},{},{},{}\n", s.x, s.e_minus, s.e_plus, s.gap(), s.a, s.b));
                }
                write_file(path, csv.as_bytes())?;
            }
            let summary = GapSummary {
                min_gap: min_gap(&p)?,
                argmin_x: min_gap_location(&p),
                time_scale: args.prefactor * time_scale(&p)?,
            };
            emit(args.output.as_deref(), &serde_json::to_string_pretty(&summary).expect("serializable"))
        }
        Command::Series(args) => {
            let a = read_matrix(&args.input, args.normalize)?;
            let g = gram(&a, GramMode::Auto);
            let g = g.with_scale(args.scale.resolve(&g))?;
            let h0 = InitialHamiltonian::new(args.lambda0, args.lambda_exc, args.ground_index)?;
            let expansion = series_terms(&g, &h0, args.total_time, args.max_order, args.tail_tol)?;
            let (state, prenorm) = series_sum(&expansion);
            let schedule = AnnealSchedule::new(args.total_time).with_steps(args.stepper_steps);
            let (stepped, _) = evolve(&g, &h0, &schedule)?;
            let summary = SeriesSummary {
                order_used: expansion.order(),
                tail_norm: expansion.tail_norm,
                prenorm_norm: prenorm,
                state: state.gauge_fixed().amplitudes.iter().map(|z| [z.re, z.im]).collect(),
                fidelity_vs_stepper: fidelity(&state, &stepped.normalized()),
            };
            emit(args.output.as_deref(), &serde_json::to_string_pretty(&summary).expect("serializable"))
        }
        Command::Image(args) => {
            let img = parse_pgm(&read_input(&args.input)?)?;
            let a = binarize(&img, args.threshold);
            let result = if args.oracle {
                oracle_top_k(&a, args.k)?
            } else {
                anneal_spectrum(&a, args.k, &args.anneal, args.compare_oracle, None)?
            };
            emit_reconstructions(&a, &result, &args.out_dir)?;
            write_file(&args.out_dir.join("result.json"), result.to_json().as_bytes())
        }
        Command::GenTestimage(args) => {
            if args.size == 0 {
                return Err(Error::InvalidParameter("--size must be positive".into()));
            }
            let img = synthetic_test_image(args.size);
            let bytes = if args.plain { encode_pgm_plain(&img).into_bytes() } else { encode_pgm(&img) };
            write_file(&args.output, &bytes)
        }
    }
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotConverged { .. } => 1,
        _ => 2,
    }
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit status: 0 on success, 1 when annealing did not converge,
/// 2 for input and usage errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_command(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
