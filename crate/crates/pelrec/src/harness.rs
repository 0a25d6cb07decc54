//! Batch runners behind the command-line interface.
//!
//! Each `run_*` function takes a fully-described job, validates *all* of
//! its inputs before writing anything, and only then produces output
//! files. Failures are split into [`RunError::Usage`] (bad arguments,
//! unreadable or malformed inputs — nothing was written) and
//! [`RunError::Runtime`] (the job itself failed mid-flight), which the
//! binary maps to exit codes 2 and 1.
//!
//! All outputs are deterministic: rerunning a job with the same inputs
//! produces byte-identical files.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::clustering::{
    classify, ellipse_parameters, fit_classes_with, project_dvs, FitOptions, Verdict,
};
use crate::engine::{estimate_sequence, DisplacementField, EngineConfig, EstimatorKind};
use crate::error::{Error, Result};
use crate::image::{DisplacementVector, Frame};
use crate::io::{read_flow, read_pgm, write_flow, write_pgm};
use crate::metrics::{
    compensation_sums, endpoint_error, CompensationSums, EndpointStats,
};
use crate::synth::{make_sequence, MotionRegion, NoiseSpec, SceneSpec};

/// A failed run, tagged with whose fault it was.
#[derive(Debug)]
pub enum RunError {
    /// The job description or its inputs are unusable; nothing was
    /// written. Maps to exit code 2.
    Usage(Error),
    /// The job failed while executing. Maps to exit code 1.
    Runtime(Error),
}

impl RunError {
    /// Process exit code the binary should use.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => 2,
            RunError::Runtime(_) => 1,
        }
    }

    /// The underlying error.
    pub fn error(&self) -> &Error {
        match self {
            RunError::Usage(e) | RunError::Runtime(e) => e,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.error().fmt(f)
    }
}

impl std::error::Error for RunError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(self.error())
    }
}

/// Result alias for runners.
pub type RunResult<T> = std::result::Result<T, RunError>;

fn usage<T>(r: Result<T>) -> RunResult<T> {
    r.map_err(RunError::Usage)
}

fn runtime<T>(r: Result<T>) -> RunResult<T> {
    r.map_err(RunError::Runtime)
}

/// Parses a `key=value` config file: one pair per line, `#` starts a
/// comment, blank lines ignored, duplicate keys preserved in order.
pub fn parse_kv_file(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!(
                "{}:{}: expected key=value, got {line:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

fn create_out_dir(out_dir: &Path) -> RunResult<()> {
    runtime(std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e)))
}

fn write_text(path: &Path, text: &str) -> RunResult<()> {
    runtime(crate::io::write_atomic(path, text.as_bytes()))
}

fn load_frames(paths: &[PathBuf]) -> RunResult<Vec<Frame>> {
    if paths.len() < 2 {
        return Err(RunError::Usage(Error::InvalidConfig(format!(
            "need at least 2 frames, got {}",
            paths.len()
        ))));
    }
    let mut frames = Vec::with_capacity(paths.len());
    for path in paths {
        frames.push(usage(read_pgm(path))?);
    }
    let dims = frames[0].dimensions();
    if frames.iter().any(|f| f.dimensions() != dims) {
        return Err(RunError::Usage(Error::InvalidConfig(
            "all frames must share dimensions".into(),
        )));
    }
    Ok(frames)
}

fn load_truth(paths: &[PathBuf], pairs: usize, dims: (usize, usize)) -> RunResult<Vec<DisplacementField>> {
    if paths.len() != pairs {
        return Err(RunError::Usage(Error::InvalidConfig(format!(
            "{} truth fields for {pairs} frame pairs",
            paths.len()
        ))));
    }
    let mut fields = Vec::with_capacity(paths.len());
    for path in paths {
        let field = usage(read_flow(path))?;
        if field.dimensions() != dims {
            return Err(RunError::Usage(Error::InvalidConfig(format!(
                "truth field {} is {:?}, frames are {:?}",
                path.display(),
                field.dimensions(),
                dims
            ))));
        }
        fields.push(field);
    }
    Ok(fields)
}

/// Formats an `f64` for CSV cells (shortest exact representation).
fn cell(v: f64) -> String {
    format!("{v}")
}

fn optional_cell(v: Option<f64>) -> String {
    v.map(cell).unwrap_or_default()
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

/// Inputs for [`run_estimate`].
#[derive(Debug, Clone)]
pub struct EstimateArgs {
    /// PGM frame paths in temporal order (at least 2).
    pub frames: Vec<PathBuf>,
    /// Optional ground-truth flow files, one per consecutive pair.
    pub truth: Vec<PathBuf>,
    /// Output directory (created on demand).
    pub out_dir: PathBuf,
    /// Engine configuration.
    pub engine: EngineConfig,
}

/// Per-pair numbers reported by [`run_estimate`].
#[derive(Debug, Clone, Copy)]
pub struct PairReport {
    /// 1-based index of the later frame of the pair.
    pub pair: usize,
    pub imc_db: f64,
    /// Present when ground truth was supplied.
    pub epe: Option<EndpointStats>,
    pub valid_fraction: f64,
    pub converged_fraction: f64,
    pub fallback_fraction: f64,
}

/// Everything [`run_estimate`] produced.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub estimator: EstimatorKind,
    pub pairs: Vec<PairReport>,
    pub sequence_imc_db: f64,
    /// Pooled mean endpoint error over all pairs, when truth was given.
    pub mean_epe: Option<f64>,
    pub out_dir: PathBuf,
}

impl fmt::Display for EstimateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.pairs {
            write!(
                f,
                "pair {:>3}: imc {:>9.4} dB, valid {:>6.2}%, converged {:>6.2}%",
                p.pair,
                p.imc_db,
                100.0 * p.valid_fraction,
                100.0 * p.converged_fraction
            )?;
            if let Some(epe) = p.epe {
                write!(f, ", epe mean {:.4} max {:.4}", epe.mean, epe.max)?;
            }
            writeln!(f)?;
        }
        write!(
            f,
            "sequence imc ({}): {:.4} dB",
            self.estimator.name(),
            self.sequence_imc_db
        )?;
        if let Some(mean) = self.mean_epe {
            write!(f, ", mean epe {mean:.4} px")?;
        }
        write!(f, "\noutputs in {}", self.out_dir.display())
    }
}

fn pair_report(
    pair: usize,
    current: &Frame,
    previous: &Frame,
    field: &DisplacementField,
    truth: Option<&DisplacementField>,
) -> Result<(PairReport, CompensationSums)> {
    let sums = compensation_sums(current, previous, field)?;
    let counts = field.counts();
    let total = counts.total() as f64;
    let epe = match truth {
        Some(t) => Some(endpoint_error(field, t)?),
        None => None,
    };
    Ok((
        PairReport {
            pair,
            imc_db: sums.imc_db()?,
            epe,
            valid_fraction: sums.valid_fraction(),
            converged_fraction: counts.converged as f64 / total,
            fallback_fraction: counts.fallback_used as f64 / total,
        },
        sums,
    ))
}

fn write_metrics_csv(path: &Path, pairs: &[PairReport]) -> RunResult<()> {
    let mut text =
        String::from("frame_index,imc_db,mean_epe,valid_fraction,converged_fraction\n");
    for p in pairs {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            p.pair,
            cell(p.imc_db),
            optional_cell(p.epe.map(|e| e.mean)),
            cell(p.valid_fraction),
            cell(p.converged_fraction)
        ));
    }
    write_text(path, &text)
}

fn pooled_mean_epe(pairs: &[PairReport]) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for p in pairs {
        let epe = p.epe?;
        sum += epe.mean * epe.count as f64;
        count += epe.count;
    }
    if count == 0 {
        None
    } else {
        Some(sum / count as f64)
    }
}

/// Estimates displacement fields for a PGM sequence, writing one flow file
/// per pair (`flow_0001.flo`, ...) plus `metrics.csv` and `summary.txt`.
pub fn run_estimate(args: &EstimateArgs) -> RunResult<EstimateReport> {
    // -- validation phase: nothing is written before this completes.
    usage(args.engine.validate())?;
    let frames = load_frames(&args.frames)?;
    let pairs = frames.len() - 1;
    let truth = if args.truth.is_empty() {
        Vec::new()
    } else {
        load_truth(&args.truth, pairs, frames[0].dimensions())?
    };

    // -- execution phase.
    create_out_dir(&args.out_dir)?;
    let fields = runtime(estimate_sequence(&frames, &args.engine))?;
    let mut reports = Vec::with_capacity(pairs);
    let mut pooled = CompensationSums::default();
    for (j, field) in fields.iter().enumerate() {
        let flow_path = args.out_dir.join(format!("flow_{:04}.flo", j + 1));
        runtime(write_flow(&flow_path, field))?;
        let (report, sums) = runtime(pair_report(
            j + 1,
            &frames[j + 1],
            &frames[j],
            field,
            truth.get(j),
        ))?;
        pooled.accumulate(&sums);
        reports.push(report);
    }
    let sequence_imc_db = runtime(pooled.imc_db())?;
    write_metrics_csv(&args.out_dir.join("metrics.csv"), &reports)?;

    let mean_epe = pooled_mean_epe(&reports);
    let mut summary = format!(
        "estimator={}\npairs={}\nsequence_imc_db={}\n",
        args.engine.estimator.name(),
        pairs,
        cell(sequence_imc_db)
    );
    if let Some(mean) = mean_epe {
        summary.push_str(&format!("mean_epe={}\n", cell(mean)));
    }
    write_text(&args.out_dir.join("summary.txt"), &summary)?;

    Ok(EstimateReport {
        estimator: args.engine.estimator,
        pairs: reports,
        sequence_imc_db,
        mean_epe,
        out_dir: args.out_dir.clone(),
    })
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

/// Inputs for [`run_synth`].
#[derive(Debug, Clone)]
pub struct SynthArgs {
    pub width: usize,
    pub height: usize,
    /// Number of frames to render.
    pub frames: usize,
    /// Base seed: the texture uses `seed`, the noise stream `seed + 1`.
    pub seed: u64,
    pub smoothness: f64,
    /// Target SNR in dB (`inf` for noiseless).
    pub snr_db: f64,
    pub regions: Vec<MotionRegion>,
    pub out_dir: PathBuf,
}

impl SynthArgs {
    /// The scene this run renders.
    pub fn scene(&self) -> SceneSpec {
        SceneSpec {
            width: self.width,
            height: self.height,
            texture_seed: self.seed,
            smoothness: self.smoothness,
            motion: self.regions.clone(),
            frame_count: self.frames,
        }
    }

    /// The noise stream this run injects.
    pub fn noise(&self) -> NoiseSpec {
        NoiseSpec {
            snr_db: self.snr_db,
            noise_seed: self.seed.wrapping_add(1),
        }
    }
}

/// What [`run_synth`] wrote.
#[derive(Debug, Clone)]
pub struct SynthReport {
    pub frames: usize,
    pub pairs: usize,
    pub out_dir: PathBuf,
}

impl fmt::Display for SynthReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "wrote {} frames and {} truth fields to {}",
            self.frames,
            self.pairs,
            self.out_dir.display()
        )
    }
}

fn manifest_text(args: &SynthArgs) -> String {
    let mut text = format!(
        "width={}\nheight={}\nframes={}\nseed={}\nsmoothness={}\nsnr_db={}\n",
        args.width, args.height, args.frames, args.seed, args.smoothness, args.snr_db
    );
    for r in &args.regions {
        text.push_str(&format!(
            "region={},{},{},{},{},{}\n",
            r.rect.x, r.rect.y, r.rect.width, r.rect.height, r.velocity.dx, r.velocity.dy
        ));
    }
    text
}

/// Renders a synthetic sequence to `frame_0000.pgm`…, per-pair truth to
/// `truth_0001.flo`…, and a `manifest.txt` that can be fed back as a
/// config file to reproduce the run.
pub fn run_synth(args: &SynthArgs) -> RunResult<SynthReport> {
    let scene = args.scene();
    let noise = args.noise();
    usage(scene.validate())?;
    // Noise validation happens inside make_sequence; check it up front so
    // nothing is written on a bad SNR.
    if noise.snr_db.is_nan() || noise.snr_db == f64::NEG_INFINITY {
        return Err(RunError::Usage(Error::InvalidConfig(format!(
            "snr_db must be a real value or +inf, got {}",
            noise.snr_db
        ))));
    }

    create_out_dir(&args.out_dir)?;
    let sequence = runtime(make_sequence(&scene, &noise))?;
    for (k, frame) in sequence.frames.iter().enumerate() {
        runtime(write_pgm(
            args.out_dir.join(format!("frame_{k:04}.pgm")),
            frame,
        ))?;
    }
    for (j, field) in sequence.truth.iter().enumerate() {
        runtime(write_flow(
            args.out_dir.join(format!("truth_{:04}.flo", j + 1)),
            field,
        ))?;
    }
    write_text(&args.out_dir.join("manifest.txt"), &manifest_text(args))?;
    Ok(SynthReport {
        frames: sequence.frames.len(),
        pairs: sequence.truth.len(),
        out_dir: args.out_dir.clone(),
    })
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

/// Where [`run_compare`] gets its frames.
#[derive(Debug, Clone)]
pub enum CompareInput {
    /// Existing PGM frames, with optional truth flow files.
    Files {
        frames: Vec<PathBuf>,
        truth: Vec<PathBuf>,
    },
    /// A synthetic sequence rendered in memory.
    Synthetic { scene: SceneSpec, noise: NoiseSpec },
}

/// Inputs for [`run_compare`].
#[derive(Debug, Clone)]
pub struct CompareArgs {
    pub input: CompareInput,
    /// Back-ends to race (deduplicated, in order).
    pub estimators: Vec<EstimatorKind>,
    /// Shared engine configuration; its `estimator` field is overridden
    /// per run.
    pub engine: EngineConfig,
    pub out_dir: PathBuf,
}

/// One row of the comparison table.
#[derive(Debug, Clone, Copy)]
pub struct CompareRow {
    pub estimator: EstimatorKind,
    /// 1-based index of the later frame of the pair.
    pub pair: usize,
    pub imc_db: f64,
    pub epe: Option<EndpointStats>,
}

/// Everything [`run_compare`] measured.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    /// Sequence-level IMC per estimator, in run order.
    pub sequence: Vec<(EstimatorKind, f64)>,
    pub out_dir: PathBuf,
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (estimator, imc) in &self.sequence {
            writeln!(f, "{:>5}: sequence imc {imc:>9.4} dB", estimator.name())?;
        }
        write!(f, "details in {}", self.out_dir.join("compare.csv").display())
    }
}

/// Runs several estimators over the same sequence and writes a
/// `compare.csv` of per-pair IMC (and EPE when truth is known) plus a
/// `summary.txt` of sequence-level IMC per estimator.
pub fn run_compare(args: &CompareArgs) -> RunResult<CompareReport> {
    usage(args.engine.validate())?;
    let mut estimators = Vec::new();
    for e in &args.estimators {
        if !estimators.contains(e) {
            estimators.push(*e);
        }
    }
    if estimators.is_empty() {
        return Err(RunError::Usage(Error::InvalidConfig(
            "no estimators selected".into(),
        )));
    }
    let (frames, truth) = match &args.input {
        CompareInput::Files { frames, truth } => {
            let loaded = load_frames(frames)?;
            let pairs = loaded.len() - 1;
            let fields = if truth.is_empty() {
                Vec::new()
            } else {
                load_truth(truth, pairs, loaded[0].dimensions())?
            };
            (loaded, fields)
        }
        CompareInput::Synthetic { scene, noise } => {
            usage(scene.validate())?;
            if scene.frame_count < 2 {
                return Err(RunError::Usage(Error::InvalidConfig(
                    "synthetic comparison needs at least 2 frames".into(),
                )));
            }
            let sequence = usage(make_sequence(scene, noise))?;
            (sequence.frames, sequence.truth)
        }
    };

    create_out_dir(&args.out_dir)?;
    let mut rows = Vec::new();
    let mut sequence_imc = Vec::new();
    for estimator in &estimators {
        let config = EngineConfig {
            estimator: *estimator,
            ..args.engine.clone()
        };
        let fields = runtime(estimate_sequence(&frames, &config))?;
        let mut pooled = CompensationSums::default();
        for (j, field) in fields.iter().enumerate() {
            let sums = runtime(compensation_sums(&frames[j + 1], &frames[j], field))?;
            let epe = match truth.get(j) {
                Some(t) => Some(runtime(endpoint_error(field, t))?),
                None => None,
            };
            rows.push(CompareRow {
                estimator: *estimator,
                pair: j + 1,
                imc_db: runtime(sums.imc_db())?,
                epe,
            });
            pooled.accumulate(&sums);
        }
        sequence_imc.push((*estimator, runtime(pooled.imc_db())?));
    }

    let mut csv = String::from("estimator,frame_index,imc_db,mean_epe\n");
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            row.estimator.name(),
            row.pair,
            cell(row.imc_db),
            optional_cell(row.epe.map(|e| e.mean))
        ));
    }
    write_text(&args.out_dir.join("compare.csv"), &csv)?;

    let mut summary = String::new();
    for (estimator, imc) in &sequence_imc {
        summary.push_str(&format!("sequence_imc_db_{}={}\n", estimator.name(), cell(*imc)));
    }
    write_text(&args.out_dir.join("summary.txt"), &summary)?;

    Ok(CompareReport {
        rows,
        sequence: sequence_imc,
        out_dir: args.out_dir.clone(),
    })
}

// ---------------------------------------------------------------------------
// cluster
// ---------------------------------------------------------------------------

/// Inputs for [`run_cluster`].
#[derive(Debug, Clone)]
pub struct ClusterArgs {
    /// Flow file whose non-skipped vectors are the samples.
    pub flow: PathBuf,
    /// Optional per-pixel label file: one integer per pixel in raster
    /// order (width × height entries); labels of skipped pixels are
    /// ignored. Without labels every sample is class 0.
    pub labels: Option<PathBuf>,
    /// Principal components to keep (1 or 2).
    pub components: usize,
    /// Chi-square quantile for the acceptance radius.
    pub quantile: f64,
    pub out_dir: PathBuf,
}

/// What [`run_cluster`] found.
#[derive(Debug, Clone)]
pub struct ClusterReport {
    pub samples: usize,
    pub components: usize,
    /// `(label, member count)` per class, ascending label.
    pub classes: Vec<(i64, usize)>,
    pub single_class: usize,
    pub multiple_loci: usize,
    pub outliers: usize,
    pub out_dir: PathBuf,
}

impl fmt::Display for ClusterReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} samples over {} classes ({} components)",
            self.samples,
            self.classes.len(),
            self.components
        )?;
        for (label, members) in &self.classes {
            writeln!(f, "  class {label}: {members} members")?;
        }
        write!(
            f,
            "verdicts: {} single-class, {} multiple-loci, {} outliers",
            self.single_class, self.multiple_loci, self.outliers
        )
    }
}

fn parse_labels(path: &Path, expected: usize) -> Result<Vec<i64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = Vec::with_capacity(expected);
    for token in text.split_whitespace() {
        let value = token.parse::<i64>().map_err(|_| {
            Error::InvalidConfig(format!(
                "{}: label {token:?} is not an integer",
                path.display()
            ))
        })?;
        labels.push(value);
    }
    if labels.len() != expected {
        return Err(Error::InvalidConfig(format!(
            "{}: found {} labels, field has {expected} pixels",
            path.display(),
            labels.len()
        )));
    }
    Ok(labels)
}

/// Projects the displacement vectors of a flow field onto their principal
/// components, fits one Gaussian class per label, classifies every sample,
/// and writes `scores.csv`, `verdicts.csv`, and (for 2 components)
/// `ellipses.csv`.
pub fn run_cluster(args: &ClusterArgs) -> RunResult<ClusterReport> {
    if args.components < 1 || args.components > 2 {
        return Err(RunError::Usage(Error::InvalidConfig(format!(
            "components must be 1 or 2, got {}",
            args.components
        ))));
    }
    if !(args.quantile > 0.0 && args.quantile < 1.0) {
        return Err(RunError::Usage(Error::InvalidConfig(format!(
            "quantile must lie strictly between 0 and 1, got {}",
            args.quantile
        ))));
    }
    let field = usage(read_flow(&args.flow))?;
    let (width, height) = field.dimensions();
    let pixel_labels = match &args.labels {
        Some(path) => Some(usage(parse_labels(path, width * height))?),
        None => None,
    };

    // Collect the non-skipped samples and their positions.
    let mut samples: Vec<DisplacementVector> = Vec::new();
    let mut positions: Vec<(usize, usize)> = Vec::new();
    let mut labels: Vec<i64> = Vec::new();
    for (x, y, d, status) in field.pixels() {
        if status == crate::engine::PixelStatus::SkippedBoundary {
            continue;
        }
        samples.push(d);
        positions.push((x, y));
        labels.push(match &pixel_labels {
            Some(all) => all[y * width + x],
            None => 0,
        });
    }

    create_out_dir(&args.out_dir)?;
    let projection = runtime(project_dvs(&samples, args.components))?;
    let options = FitOptions {
        mahalanobis_quantile: args.quantile,
        residual_quantile: args.quantile,
    };
    let model = runtime(fit_classes_with(&projection, &labels, &options))?;

    let m = projection.m();
    let pc_header: String = (1..=m)
        .map(|i| format!("pc{i}"))
        .collect::<Vec<_>>()
        .join(",");
    let mut scores_csv = format!("{pc_header},label\n");
    let mut verdicts_csv = format!("x,y,{pc_header},residual,verdict,members\n");
    let mut single = 0usize;
    let mut multiple = 0usize;
    let mut outliers = 0usize;
    for (i, &d) in samples.iter().enumerate() {
        let outcome = classify(d, &projection, &model);
        let (x, y) = positions[i];
        let score_row: String = (0..m)
            .map(|j| cell(outcome.scores[j]))
            .collect::<Vec<_>>()
            .join(",");
        scores_csv.push_str(&format!("{score_row},{}\n", labels[i]));
        let members = outcome
            .memberships
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(";");
        verdicts_csv.push_str(&format!(
            "{x},{y},{score_row},{},{},{members}\n",
            cell(outcome.residual),
            outcome.verdict.name()
        ));
        match outcome.verdict {
            Verdict::SingleClass => single += 1,
            Verdict::MultipleLoci => multiple += 1,
            Verdict::Outlier => outliers += 1,
        }
    }
    write_text(&args.out_dir.join("scores.csv"), &scores_csv)?;
    write_text(&args.out_dir.join("verdicts.csv"), &verdicts_csv)?;

    if m == 2 {
        let mut csv = String::from(
            "label,center_pc1,center_pc2,semi_major,semi_minor,orientation_rad,mahalanobis_threshold,residual_threshold,members\n",
        );
        for class in model.classes() {
            let e = runtime(ellipse_parameters(class))?;
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                class.label(),
                cell(e.center[0]),
                cell(e.center[1]),
                cell(e.semi_major),
                cell(e.semi_minor),
                cell(e.orientation),
                cell(class.mahalanobis_threshold()),
                cell(class.residual_threshold()),
                class.members()
            ));
        }
        write_text(&args.out_dir.join("ellipses.csv"), &csv)?;
    }

    Ok(ClusterReport {
        samples: samples.len(),
        components: m,
        classes: model
            .classes()
            .iter()
            .map(|c| (c.label(), c.members()))
            .collect(),
        single_class: single,
        multiple_loci: multiple,
        outliers,
        out_dir: args.out_dir.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::DisplacementVector;
    use crate::synth::Rect;

    fn synth_args(dir: &Path) -> SynthArgs {
        SynthArgs {
            width: 24,
            height: 24,
            frames: 3,
            seed: 7,
            smoothness: 2.0,
            snr_db: f64::INFINITY,
            regions: vec![MotionRegion {
                rect: Rect::new(4, 4, 16, 16),
                velocity: DisplacementVector::new(1.0, 0.5),
            }],
            out_dir: dir.to_path_buf(),
        }
    }

    #[test]
    fn synth_then_estimate_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let synth_dir = dir.path().join("seq");
        let report = run_synth(&synth_args(&synth_dir)).unwrap();
        assert_eq!(report.frames, 3);
        assert_eq!(report.pairs, 2);
        assert!(synth_dir.join("frame_0000.pgm").exists());
        assert!(synth_dir.join("truth_0002.flo").exists());
        assert!(synth_dir.join("manifest.txt").exists());

        let est_dir = dir.path().join("est");
        let args = EstimateArgs {
            frames: (0..3).map(|k| synth_dir.join(format!("frame_{k:04}.pgm"))).collect(),
            truth: (1..3).map(|j| synth_dir.join(format!("truth_{j:04}.flo"))).collect(),
            out_dir: est_dir.clone(),
            engine: EngineConfig::default(),
        };
        let report = run_estimate(&args).unwrap();
        assert_eq!(report.pairs.len(), 2);
        assert!(report.sequence_imc_db > 0.0, "imc {}", report.sequence_imc_db);
        assert!(report.mean_epe.unwrap() < 0.5);
        assert!(est_dir.join("flow_0001.flo").exists());
        assert!(est_dir.join("metrics.csv").exists());
        assert!(est_dir.join("summary.txt").exists());
    }

    #[test]
    fn estimate_usage_failures_write_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let args = EstimateArgs {
            frames: vec![dir.path().join("missing_a.pgm"), dir.path().join("missing_b.pgm")],
            truth: vec![],
            out_dir: out.clone(),
            engine: EngineConfig::default(),
        };
        let err = run_estimate(&args).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(!out.exists(), "usage failure must not create outputs");
    }

    #[test]
    fn synth_outputs_are_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        run_synth(&synth_args(&a)).unwrap();
        run_synth(&synth_args(&b)).unwrap();
        for name in ["frame_0000.pgm", "frame_0002.pgm", "truth_0001.flo", "manifest.txt"] {
            let left = std::fs::read(a.join(name)).unwrap();
            let right = std::fs::read(b.join(name)).unwrap();
            assert_eq!(left, right, "{name} differs between identical runs");
        }
    }

    #[test]
    fn manifest_reloads_as_config() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("seq");
        let args = synth_args(&out);
        run_synth(&args).unwrap();
        let pairs = parse_kv_file(out.join("manifest.txt")).unwrap();
        let get = |key: &str| {
            pairs
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.clone())
                .unwrap()
        };
        assert_eq!(get("width"), "24");
        assert_eq!(get("frames"), "3");
        assert_eq!(get("seed"), "7");
        assert_eq!(get("snr_db"), "inf");
        assert_eq!(get("region"), "4,4,16,16,1,0.5");
    }

    #[test]
    fn compare_ranks_all_estimators() {
        let dir = tempfile::tempdir().unwrap();
        let args = CompareArgs {
            input: CompareInput::Synthetic {
                scene: synth_args(dir.path()).scene(),
                noise: NoiseSpec {
                    snr_db: 25.0,
                    noise_seed: 9,
                },
            },
            estimators: EstimatorKind::ALL.to_vec(),
            engine: EngineConfig::default(),
            out_dir: dir.path().join("cmp"),
        };
        let report = run_compare(&args).unwrap();
        assert_eq!(report.sequence.len(), 4);
        assert_eq!(report.rows.len(), 4 * 2);
        assert!(report.rows.iter().all(|r| r.epe.is_some()));
        let csv = std::fs::read_to_string(dir.path().join("cmp/compare.csv")).unwrap();
        assert!(csv.starts_with("estimator,frame_index,imc_db,mean_epe\n"));
        assert_eq!(csv.lines().count(), 1 + 8);
    }

    #[test]
    fn cluster_separates_two_motions() {
        let dir = tempfile::tempdir().unwrap();
        // A hand-built field: left half moves (1, 0), right half (-1, 0.5),
        // with mild deterministic jitter.
        let field = DisplacementField::from_fn(16, 16, |x, y| {
            let jitter = 0.02 * ((x * 7 + y * 13) % 5) as f64;
            if x < 8 {
                DisplacementVector::new(1.0 + jitter, jitter)
            } else {
                DisplacementVector::new(-1.0 - jitter, 0.5 + jitter)
            }
        });
        let flow_path = dir.path().join("field.flo");
        write_flow(&flow_path, &field).unwrap();
        // Per-pixel labels matching the construction.
        let labels: Vec<String> = (0..16 * 16)
            .map(|i| if i % 16 < 8 { "0".into() } else { "1".into() })
            .collect();
        let labels_path = dir.path().join("labels.txt");
        std::fs::write(&labels_path, labels.join("\n")).unwrap();

        let args = ClusterArgs {
            flow: flow_path,
            labels: Some(labels_path),
            components: 2,
            quantile: 0.975,
            out_dir: dir.path().join("out"),
        };
        let report = run_cluster(&args).unwrap();
        assert_eq!(report.samples, 256);
        assert_eq!(report.classes, vec![(0, 128), (1, 128)]);
        assert!(report.single_class > 200, "most samples classify cleanly");
        assert!(dir.path().join("out/scores.csv").exists());
        assert!(dir.path().join("out/verdicts.csv").exists());
        assert!(dir.path().join("out/ellipses.csv").exists());
    }

    #[test]
    fn cluster_rejects_bad_label_files() {
        let dir = tempfile::tempdir().unwrap();
        let field = DisplacementField::from_fn(4, 4, |x, y| {
            DisplacementVector::new(x as f64, y as f64)
        });
        let flow_path = dir.path().join("field.flo");
        write_flow(&flow_path, &field).unwrap();
        let labels_path = dir.path().join("labels.txt");
        std::fs::write(&labels_path, "0 1 2").unwrap(); // 3 labels for 16 pixels
        let args = ClusterArgs {
            flow: flow_path,
            labels: Some(labels_path),
            components: 2,
            quantile: 0.975,
            out_dir: dir.path().join("out"),
        };
        let err = run_cluster(&args).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(!dir.path().join("out").exists());
    }

    #[test]
    fn kv_parser_handles_comments_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.txt");
        std::fs::write(&path, "# comment\nwidth=64\n\nsnr_db = 20\n").unwrap();
        let pairs = parse_kv_file(&path).unwrap();
        assert_eq!(
            pairs,
            vec![
                ("width".to_string(), "64".to_string()),
                ("snr_db".to_string(), "20".to_string())
            ]
        );
        std::fs::write(&path, "width\n").unwrap();
        assert!(parse_kv_file(&path).is_err());
    }
}
