//! The pel-recursive estimation engine.
//!
//! For every pixel `r` the engine refines a displacement through the
//! predictor–corrector recursion
//!
//! ```text
//! d_{i+1} = d_i + u_i
//! ```
//!
//! where each correction `u_i` solves the observation system assembled by
//! [`crate::image::build_system`] at the current estimate, using the
//! configured regression back-end. Iteration stops when the correction norm
//! drops to `convergence_eps` or the iteration budget runs out, and every
//! intermediate estimate is clamped componentwise to
//! `±displacement_clamp`.
//!
//! Estimation is *backward*: the displacement at `r` maps the current frame
//! onto the previous one, i.e. `current(r) ≈ previous(r − d)`.

use crate::error::{Error, Result};
use crate::image::{
    build_system_with, DisplacementVector, Frame, GradientConvention, MaskSpec, ObservationSystem,
    PixelLocation,
};
use crate::solvers::{
    component_solve, effective_components, ols, pca, rls, RegularizerSpec,
    EIGENVALUE_RATIO_FLOOR,
};

/// Ridge weight used when the automatic singularity fallback re-solves a
/// pixel with [`rls`].
pub const FALLBACK_LAMBDA: f64 = 1.0;

/// Regression back-end used for the per-pixel updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Ols,
    Rls,
    Pcr1,
    Pcr2,
}

impl EstimatorKind {
    /// All back-ends, in presentation order.
    pub const ALL: [EstimatorKind; 4] = [
        EstimatorKind::Ols,
        EstimatorKind::Rls,
        EstimatorKind::Pcr1,
        EstimatorKind::Pcr2,
    ];

    /// Stable lowercase name (also the CLI spelling).
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Ols => "ols",
            EstimatorKind::Rls => "rls",
            EstimatorKind::Pcr1 => "pcr1",
            EstimatorKind::Pcr2 => "pcr2",
        }
    }
}

/// How the recursion seeds `d⁰` at each pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMode {
    /// Always start from zero displacement.
    Zero,
    /// Seed from the raster-scan predecessor's final estimate: the left
    /// neighbor, or the pixel above at the start of a row, or zero at the
    /// very first pixel.
    #[default]
    CausalPredecessor,
}

/// Per-pixel outcome of the recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PixelStatus {
    /// The correction norm reached `convergence_eps`.
    Converged,
    /// The iteration budget ran out first.
    MaxIterations,
    /// Too few observations survived boundary clipping at the first
    /// iterate; the seed displacement was kept.
    SkippedBoundary,
    /// At least one iterate needed the ridge fallback (or, with the
    /// fallback disabled, a solver failure abandoned the pixel at its
    /// seed).
    FallbackUsed,
}

/// Final displacement, status, and iteration count for one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelEstimate {
    pub displacement: DisplacementVector,
    pub status: PixelStatus,
    pub iterations: u32,
}

/// Tuning knobs shared by every pixel of a run.
#[derive(Debug, Clone)]
pub struct EngineConfig {
    /// Regression back-end.
    pub estimator: EstimatorKind,
    /// Observation neighborhood.
    pub mask: MaskSpec,
    /// Parameter-domain regularizer for [`EstimatorKind::Rls`].
    pub lambda: RegularizerSpec,
    /// Component-domain regularizer for [`EstimatorKind::Pcr2`].
    pub xi: RegularizerSpec,
    /// Components retained by the PCR back-ends (1 or 2).
    pub components: usize,
    /// Iteration budget per pixel (at least 1).
    pub max_iterations: u32,
    /// Correction norm at which the recursion stops.
    pub convergence_eps: f64,
    /// Componentwise bound on every intermediate displacement.
    pub displacement_clamp: f64,
    /// Seeding policy for `d⁰`.
    pub init: InitMode,
    /// Gradient arrangement fed into the observation system.
    pub gradient: GradientConvention,
    /// Re-solve singular pixels with `rls(Λ = FALLBACK_LAMBDA·I)` instead
    /// of abandoning them.
    pub rls_fallback: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            estimator: EstimatorKind::Pcr2,
            mask: MaskSpec::square(2).expect("half-width 2 is valid"),
            lambda: RegularizerSpec::ScalarIdentity(1.0),
            xi: RegularizerSpec::ScalarIdentity(1.0),
            components: 2,
            max_iterations: 10,
            convergence_eps: 0.01,
            displacement_clamp: 2.0,
            init: InitMode::CausalPredecessor,
            gradient: GradientConvention::Analytic,
            rls_fallback: true,
        }
    }
}

impl EngineConfig {
    /// Checks every knob; call once per run before the pixel loop.
    pub fn validate(&self) -> Result<()> {
        if self.components < 1 || self.components > 2 {
            return Err(Error::InvalidConfig(format!(
                "components must be 1 or 2, got {}",
                self.components
            )));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !self.convergence_eps.is_finite() || self.convergence_eps <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "convergence_eps must be positive and finite, got {}",
                self.convergence_eps
            )));
        }
        if !self.displacement_clamp.is_finite() || self.displacement_clamp <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "displacement_clamp must be positive and finite, got {}",
                self.displacement_clamp
            )));
        }
        // Surface malformed regularizers before the pixel loop rather than
        // on the first singular system.
        self.lambda.diagonal(2)?;
        self.xi.diagonal(self.components)?;
        Ok(())
    }
}

/// A dense per-pixel displacement field with per-pixel status and
/// iteration counts.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    width: usize,
    height: usize,
    vectors: Vec<DisplacementVector>,
    statuses: Vec<PixelStatus>,
    iterations: Vec<u32>,
}

/// Pixel totals per [`PixelStatus`]; the four counts partition the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StatusCounts {
    pub converged: usize,
    pub max_iterations: usize,
    pub skipped_boundary: usize,
    pub fallback_used: usize,
}

impl StatusCounts {
    pub fn total(&self) -> usize {
        self.converged + self.max_iterations + self.skipped_boundary + self.fallback_used
    }
}

impl DisplacementField {
    /// A field of identical vectors, all marked converged.
    ///
    /// Panics if either dimension is zero.
    pub fn uniform(width: usize, height: usize, d: DisplacementVector) -> Self {
        assert!(width > 0 && height > 0, "field dimensions must be positive");
        DisplacementField {
            width,
            height,
            vectors: vec![d; width * height],
            statuses: vec![PixelStatus::Converged; width * height],
            iterations: vec![0; width * height],
        }
    }

    /// The all-zero field.
    pub fn zero(width: usize, height: usize) -> Self {
        DisplacementField::uniform(width, height, DisplacementVector::zero())
    }

    /// Builds a field by evaluating `f(x, y)` at every pixel, all marked
    /// converged.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> DisplacementVector,
    ) -> Self {
        let mut field = DisplacementField::zero(width, height);
        for y in 0..height {
            for x in 0..width {
                field.vectors[y * width + x] = f(x, y);
            }
        }
        field
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    fn index(&self, x: usize, y: usize) -> usize {
        assert!(x < self.width && y < self.height, "pixel index out of range");
        y * self.width + x
    }

    /// Displacement at `(x, y)`.
    pub fn vector(&self, x: usize, y: usize) -> DisplacementVector {
        self.vectors[self.index(x, y)]
    }

    /// Status at `(x, y)`.
    pub fn status(&self, x: usize, y: usize) -> PixelStatus {
        self.statuses[self.index(x, y)]
    }

    /// Iterations spent at `(x, y)`.
    pub fn iterations(&self, x: usize, y: usize) -> u32 {
        self.iterations[self.index(x, y)]
    }

    /// Stores a pixel estimate.
    pub fn set(&mut self, x: usize, y: usize, estimate: PixelEstimate) {
        let i = self.index(x, y);
        self.vectors[i] = estimate.displacement;
        self.statuses[i] = estimate.status;
        self.iterations[i] = estimate.iterations;
    }

    /// Stores just a vector and status (file decoders, synthetic truth).
    pub fn set_entry(&mut self, x: usize, y: usize, d: DisplacementVector, status: PixelStatus) {
        let i = self.index(x, y);
        self.vectors[i] = d;
        self.statuses[i] = status;
        self.iterations[i] = 0;
    }

    /// Iterates `(x, y, vector, status)` in raster order.
    pub fn pixels(
        &self,
    ) -> impl Iterator<Item = (usize, usize, DisplacementVector, PixelStatus)> + '_ {
        (0..self.height).flat_map(move |y| {
            (0..self.width).map(move |x| (x, y, self.vector(x, y), self.status(x, y)))
        })
    }

    /// Status totals over the whole field.
    pub fn counts(&self) -> StatusCounts {
        let mut counts = StatusCounts::default();
        for status in &self.statuses {
            match status {
                PixelStatus::Converged => counts.converged += 1,
                PixelStatus::MaxIterations => counts.max_iterations += 1,
                PixelStatus::SkippedBoundary => counts.skipped_boundary += 1,
                PixelStatus::FallbackUsed => counts.fallback_used += 1,
            }
        }
        counts
    }

    /// Total iterations spent over all pixels.
    pub fn total_iterations(&self) -> u64 {
        self.iterations.iter().map(|&i| u64::from(i)).sum()
    }
}

fn finish_status(fallback_used: bool, otherwise: PixelStatus) -> PixelStatus {
    if fallback_used {
        PixelStatus::FallbackUsed
    } else {
        otherwise
    }
}

/// One displacement update from an assembled system, honoring the
/// configured back-end. PCR back-ends reduce the retained component count
/// when trailing eigenvalues fall below the relative floor, and report the
/// system as singular when even the leading one vanishes.
fn solve_update(sys: &ObservationSystem, config: &EngineConfig) -> Result<crate::solvers::UpdateVector> {
    match config.estimator {
        EstimatorKind::Ols => ols(sys),
        EstimatorKind::Rls => rls(sys, &config.lambda),
        EstimatorKind::Pcr1 | EstimatorKind::Pcr2 => {
            let factors = pca(sys, config.components, false)?;
            let k_eff = effective_components(&factors, EIGENVALUE_RATIO_FLOOR);
            if k_eff == 0 {
                return Err(Error::SingularSystem {
                    condition: f64::INFINITY,
                });
            }
            let k_use = k_eff.min(config.components);
            let factors = if k_use < factors.k() {
                factors.truncated(k_use)
            } else {
                factors
            };
            if config.estimator == EstimatorKind::Pcr1 {
                component_solve(&factors, sys.observations(), None)
            } else {
                let full = config.xi.diagonal(config.components)?;
                let xi = full.rows(0, k_use).into_owned();
                component_solve(&factors, sys.observations(), Some(&xi))
            }
        }
    }
}

/// Runs the recursion for a single pixel.
///
/// Boundary and solver failures are folded into the returned status rather
/// than errors: a pixel whose first observation window cannot be assembled
/// is skipped (keeping its clamped seed), and a solver failure either
/// reroutes through the ridge fallback or abandons the pixel at its seed.
/// `config` is assumed valid; [`estimate_field`] validates once per run.
pub fn estimate_pixel(
    current: &Frame,
    previous: &Frame,
    r: PixelLocation,
    d0: DisplacementVector,
    config: &EngineConfig,
) -> PixelEstimate {
    let seed = d0.clamped(config.displacement_clamp);
    let mut d = seed;
    let mut fallback_used = false;
    for iteration in 1..=config.max_iterations {
        let sys = match build_system_with(current, previous, r, d, &config.mask, config.gradient) {
            Ok(sys) => sys,
            Err(_) => {
                return if iteration == 1 {
                    PixelEstimate {
                        displacement: seed,
                        status: PixelStatus::SkippedBoundary,
                        iterations: 0,
                    }
                } else {
                    // The displaced window drifted out of frame after real
                    // progress; keep the progress.
                    PixelEstimate {
                        displacement: d,
                        status: finish_status(fallback_used, PixelStatus::MaxIterations),
                        iterations: iteration - 1,
                    }
                };
            }
        };
        let update = match solve_update(&sys, config) {
            Ok(u) => u,
            Err(_) => {
                if !config.rls_fallback {
                    return PixelEstimate {
                        displacement: seed,
                        status: PixelStatus::FallbackUsed,
                        iterations: iteration,
                    };
                }
                match rls(&sys, &RegularizerSpec::ScalarIdentity(FALLBACK_LAMBDA)) {
                    Ok(u) => {
                        fallback_used = true;
                        u
                    }
                    Err(_) => {
                        return PixelEstimate {
                            displacement: seed,
                            status: PixelStatus::FallbackUsed,
                            iterations: iteration,
                        }
                    }
                }
            }
        };
        let step = DisplacementVector::new(update[0], update[1]);
        d = (d + step).clamped(config.displacement_clamp);
        if step.norm() <= config.convergence_eps {
            return PixelEstimate {
                displacement: d,
                status: finish_status(fallback_used, PixelStatus::Converged),
                iterations: iteration,
            };
        }
    }
    PixelEstimate {
        displacement: d,
        status: finish_status(fallback_used, PixelStatus::MaxIterations),
        iterations: config.max_iterations,
    }
}

/// Estimates the dense backward displacement field mapping `current` onto
/// `previous`, scanning pixels in raster order.
pub fn estimate_field(
    current: &Frame,
    previous: &Frame,
    config: &EngineConfig,
) -> Result<DisplacementField> {
    config.validate()?;
    if current.dimensions() != previous.dimensions() {
        return Err(Error::InvalidConfig(format!(
            "frame dimensions differ: {:?} vs {:?}",
            current.dimensions(),
            previous.dimensions()
        )));
    }
    let (width, height) = current.dimensions();
    let mut field = DisplacementField::zero(width, height);
    for y in 0..height {
        for x in 0..width {
            let d0 = match config.init {
                InitMode::Zero => DisplacementVector::zero(),
                InitMode::CausalPredecessor => {
                    if x > 0 {
                        field.vector(x - 1, y)
                    } else if y > 0 {
                        field.vector(x, y - 1)
                    } else {
                        DisplacementVector::zero()
                    }
                }
            };
            let estimate = estimate_pixel(
                current,
                previous,
                PixelLocation::new(x as f64, y as f64),
                d0,
                config,
            );
            field.set(x, y, estimate);
        }
    }
    Ok(field)
}

/// Estimates one field per consecutive frame pair: the `j`-th field maps
/// `frames[j + 1]` back onto `frames[j]`.
pub fn estimate_sequence(frames: &[Frame], config: &EngineConfig) -> Result<Vec<DisplacementField>> {
    if frames.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "sequence estimation needs at least 2 frames, got {}",
            frames.len()
        )));
    }
    let dims = frames[0].dimensions();
    if frames.iter().any(|f| f.dimensions() != dims) {
        return Err(Error::InvalidConfig(
            "all frames in a sequence must share dimensions".into(),
        ));
    }
    frames
        .windows(2)
        .map(|pair| estimate_field(&pair[1], &pair[0], config))
        .collect()
}
