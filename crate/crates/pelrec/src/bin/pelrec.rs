//! Command-line front end: thin argument parsing over the library's
//! batch runners. Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pelrec::engine::{EngineConfig, EstimatorKind, InitMode};
use pelrec::harness::{
    parse_kv_file, run_cluster, run_compare, run_estimate, run_synth, ClusterArgs, CompareArgs,
    CompareInput, EstimateArgs, RunError, SynthArgs,
};
use pelrec::image::{DisplacementVector, GradientConvention, MaskSpec};
use pelrec::solvers::RegularizerSpec;
use pelrec::synth::{MotionRegion, Rect};

#[derive(Parser)]
#[command(
    name = "pelrec",
    about = "Dense pel-recursive motion estimation with least-squares and principal-component back-ends",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate displacement fields for a PGM frame sequence.
    Estimate(EstimateCli),
    /// Render a synthetic test sequence with known ground truth.
    Synth(SynthCli),
    /// Run several estimators over one sequence and tabulate the results.
    Compare(CompareCli),
    /// Cluster the displacement vectors of a flow field in component space.
    Cluster(ClusterCli),
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Ols,
    Rls,
    Pcr1,
    Pcr2,
}

impl From<EstimatorArg> for EstimatorKind {
    fn from(value: EstimatorArg) -> Self {
        match value {
            EstimatorArg::Ols => EstimatorKind::Ols,
            EstimatorArg::Rls => EstimatorKind::Rls,
            EstimatorArg::Pcr1 => EstimatorKind::Pcr1,
            EstimatorArg::Pcr2 => EstimatorKind::Pcr2,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MaskArg {
    /// Full (2h+1)×(2h+1) window centered on the pixel.
    Square,
    /// Causal half-plane mask ending at the pixel itself.
    Causal,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    /// Seed every pixel with the zero displacement.
    Zero,
    /// Seed from the raster-order predecessor.
    Causal,
}

#[derive(Clone, Copy, ValueEnum)]
enum GradientArg {
    /// Standard bilinear partial derivatives.
    Analytic,
    /// Swapped arrangement kept for comparisons.
    Transposed,
}

/// `--lambda`/`--xi` accept `none`, a scalar, or a comma-separated diagonal.
fn parse_regularizer(s: &str) -> Result<RegularizerSpec, String> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(RegularizerSpec::None);
    }
    let values: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let values = values.map_err(|e| format!("bad regularizer {s:?}: {e}"))?;
    match values.as_slice() {
        [] => Err("empty regularizer".into()),
        [v] => Ok(RegularizerSpec::ScalarIdentity(*v)),
        _ => Ok(RegularizerSpec::Diagonal(values)),
    }
}

/// `--region x,y,width,height,vx,vy`.
fn parse_region(s: &str) -> Result<MotionRegion, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        return Err(format!(
            "expected x,y,width,height,vx,vy (6 values), got {}",
            parts.len()
        ));
    }
    let geom: Result<Vec<usize>, _> = parts[..4].iter().map(|t| t.parse::<usize>()).collect();
    let geom = geom.map_err(|e| format!("bad region geometry in {s:?}: {e}"))?;
    let vx: f64 = parts[4].parse().map_err(|e| format!("bad vx in {s:?}: {e}"))?;
    let vy: f64 = parts[5].parse().map_err(|e| format!("bad vy in {s:?}: {e}"))?;
    Ok(MotionRegion {
        rect: Rect::new(geom[0], geom[1], geom[2], geom[3]),
        velocity: DisplacementVector::new(vx, vy),
    })
}

/// Engine knobs shared by `estimate` and `compare`.
#[derive(Args)]
struct EngineCli {
    /// Regression back-end.
    #[arg(long, value_enum, default_value = "pcr2")]
    estimator: EstimatorArg,
    /// Observation mask shape.
    #[arg(long, value_enum, default_value = "square")]
    mask: MaskArg,
    /// Mask half-width h (square masks use (2h+1)² pixels).
    #[arg(long, default_value_t = 2)]
    mask_half_width: usize,
    /// RLS regularizer: `none`, a scalar, or `a,b` per parameter.
    #[arg(long, value_parser = parse_regularizer, default_value = "1")]
    lambda: RegularizerSpec,
    /// PCR₂ component regularizer: `none`, a scalar, or one value per component.
    #[arg(long, value_parser = parse_regularizer, default_value = "1")]
    xi: RegularizerSpec,
    /// Principal components retained by PCR back-ends (1 or 2).
    #[arg(long, default_value_t = 2)]
    components: usize,
    /// Iteration budget per pixel.
    #[arg(long, default_value_t = 10)]
    max_iters: u32,
    /// Convergence threshold on the correction norm (pixels).
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// Componentwise displacement clamp (pixels).
    #[arg(long, default_value_t = 2.0)]
    clamp: f64,
    /// Displacement seeding policy.
    #[arg(long, value_enum, default_value = "causal")]
    init: InitArg,
    /// Gradient arrangement.
    #[arg(long, value_enum, default_value = "analytic")]
    gradient: GradientArg,
    /// Abandon singular pixels instead of re-solving with a ridge.
    #[arg(long)]
    no_fallback: bool,
}

impl EngineCli {
    fn build(&self) -> Result<EngineConfig, RunError> {
        let mask = match self.mask {
            MaskArg::Square => MaskSpec::square(self.mask_half_width),
            MaskArg::Causal => MaskSpec::causal(self.mask_half_width),
        }
        .map_err(RunError::Usage)?;
        Ok(EngineConfig {
            estimator: self.estimator.into(),
            mask,
            lambda: self.lambda.clone(),
            xi: self.xi.clone(),
            components: self.components,
            max_iterations: self.max_iters,
            convergence_eps: self.eps,
            displacement_clamp: self.clamp,
            init: match self.init {
                InitArg::Zero => InitMode::Zero,
                InitArg::Causal => InitMode::CausalPredecessor,
            },
            gradient: match self.gradient {
                GradientArg::Analytic => GradientConvention::Analytic,
                GradientArg::Transposed => GradientConvention::Transposed,
            },
            rls_fallback: !self.no_fallback,
        })
    }
}

#[derive(Args)]
struct EstimateCli {
    /// Input frames in temporal order (at least 2 PGM files).
    #[arg(required = true, num_args = 2..)]
    frames: Vec<PathBuf>,
    /// Ground-truth flow file per consecutive pair (optional).
    #[arg(long)]
    truth: Vec<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[command(flatten)]
    engine: EngineCli,
}

#[derive(Args, Clone)]
struct SceneCli {
    /// Frame width in pixels.
    #[arg(long)]
    width: Option<usize>,
    /// Frame height in pixels.
    #[arg(long)]
    height: Option<usize>,
    /// Number of frames to render.
    #[arg(long)]
    frames: Option<usize>,
    /// Base RNG seed (texture uses `seed`, noise `seed + 1`).
    #[arg(long)]
    seed: Option<u64>,
    /// Texture smoothing radius (0 = raw noise).
    #[arg(long)]
    smoothness: Option<f64>,
    /// Target signal-to-noise ratio in dB (`inf` for noiseless frames).
    #[arg(long)]
    snr_db: Option<f64>,
    /// Moving region as `x,y,width,height,vx,vy`; repeatable.
    /// Defaults to one centered block moving by (1, 0.5).
    #[arg(long, value_parser = parse_region)]
    region: Vec<MotionRegion>,
    /// Key=value file supplying any of the above (flags win).
    #[arg(long)]
    config: Option<PathBuf>,
}

impl SceneCli {
    /// Resolves defaults, config-file values, and flags (flags win).
    fn resolve(&self, out_dir: &PathBuf) -> Result<SynthArgs, RunError> {
        let mut args = SynthArgs {
            width: 64,
            height: 64,
            frames: 3,
            seed: 1,
            smoothness: 2.0,
            snr_db: f64::INFINITY,
            regions: Vec::new(),
            out_dir: out_dir.clone(),
        };
        if let Some(path) = &self.config {
            let pairs = parse_kv_file(path).map_err(RunError::Usage)?;
            for (key, value) in pairs {
                let bad = |e: String| {
                    RunError::Usage(pelrec::Error::InvalidConfig(format!(
                        "{}: {key}={value}: {e}",
                        path.display()
                    )))
                };
                match key.as_str() {
                    "width" => args.width = value.parse().map_err(|e| bad(format!("{e}")))?,
                    "height" => args.height = value.parse().map_err(|e| bad(format!("{e}")))?,
                    "frames" => args.frames = value.parse().map_err(|e| bad(format!("{e}")))?,
                    "seed" => args.seed = value.parse().map_err(|e| bad(format!("{e}")))?,
                    "smoothness" => {
                        args.smoothness = value.parse().map_err(|e| bad(format!("{e}")))?
                    }
                    "snr_db" => args.snr_db = value.parse().map_err(|e| bad(format!("{e}")))?,
                    "region" => args.regions.push(parse_region(&value).map_err(bad)?),
                    other => {
                        return Err(RunError::Usage(pelrec::Error::InvalidConfig(format!(
                            "{}: unknown key {other:?}",
                            path.display()
                        ))))
                    }
                }
            }
        }
        if let Some(v) = self.width {
            args.width = v;
        }
        if let Some(v) = self.height {
            args.height = v;
        }
        if let Some(v) = self.frames {
            args.frames = v;
        }
        if let Some(v) = self.seed {
            args.seed = v;
        }
        if let Some(v) = self.smoothness {
            args.smoothness = v;
        }
        if let Some(v) = self.snr_db {
            args.snr_db = v;
        }
        if !self.region.is_empty() {
            args.regions = self.region.clone();
        }
        if args.regions.is_empty() {
            args.regions.push(default_region(args.width, args.height));
        }
        Ok(args)
    }
}

/// Centered block covering ~half the frame, moving by (1, 0.5).
fn default_region(width: usize, height: usize) -> MotionRegion {
    let x = width / 4;
    let y = height / 4;
    MotionRegion {
        rect: Rect::new(x, y, width / 2, height / 2),
        velocity: DisplacementVector::new(1.0, 0.5),
    }
}

#[derive(Args)]
struct SynthCli {
    #[command(flatten)]
    scene: SceneCli,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CompareCli {
    /// Input frames (PGM). Without frames, a synthetic sequence is
    /// rendered from the scene flags instead.
    #[arg(num_args = 0.., value_name = "FRAMES")]
    inputs: Vec<PathBuf>,
    /// Ground-truth flow file per consecutive pair (optional).
    #[arg(long)]
    truth: Vec<PathBuf>,
    /// Back-ends to race.
    #[arg(long, value_enum, value_delimiter = ',',
          default_value = "ols,rls,pcr1,pcr2")]
    estimators: Vec<EstimatorArg>,
    #[command(flatten)]
    scene: SceneCli,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[command(flatten)]
    engine: EngineCli,
}

#[derive(Args)]
struct ClusterCli {
    /// Flow file whose vectors are clustered.
    flow: PathBuf,
    /// Per-pixel integer labels (whitespace-separated, raster order).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Principal components to keep (1 or 2).
    #[arg(long, default_value_t = 2)]
    components: usize,
    /// Chi-square quantile for the acceptance radius.
    #[arg(long, default_value_t = 0.975)]
    quantile: f64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

fn dispatch(command: Command) -> Result<String, RunError> {
    match command {
        Command::Estimate(cli) => {
            let args = EstimateArgs {
                frames: cli.frames,
                truth: cli.truth,
                out_dir: cli.out_dir,
                engine: cli.engine.build()?,
            };
            run_estimate(&args).map(|r| r.to_string())
        }
        Command::Synth(cli) => {
            let args = cli.scene.resolve(&cli.out_dir)?;
            run_synth(&args).map(|r| r.to_string())
        }
        Command::Compare(cli) => {
            let input = if cli.inputs.is_empty() {
                let scene = cli.scene.resolve(&cli.out_dir)?;
                CompareInput::Synthetic {
                    noise: scene.noise(),
                    scene: scene.scene(),
                }
            } else {
                CompareInput::Files {
                    frames: cli.inputs,
                    truth: cli.truth,
                }
            };
            let args = CompareArgs {
                input,
                estimators: cli.estimators.into_iter().map(Into::into).collect(),
                engine: cli.engine.build()?,
                out_dir: cli.out_dir,
            };
            run_compare(&args).map(|r| r.to_string())
        }
        Command::Cluster(cli) => {
            let args = ClusterArgs {
                flow: cli.flow,
                labels: cli.labels,
                components: cli.components,
                quantile: cli.quantile,
                out_dir: cli.out_dir,
            };
            run_cluster(&args).map(|r| r.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
