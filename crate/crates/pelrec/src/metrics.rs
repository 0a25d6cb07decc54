//! Motion-compensation quality metrics.
//!
//! The improvement in motion compensation (IMC) compares the plain frame
//! difference against the displaced frame difference produced by a
//! displacement field:
//!
//! ```text
//! IMC(dB) = 10·log₁₀( Σ (current(r) − previous(r))²
//!                   / Σ (current(r) − previous(r − d(r)))² )
//! ```
//!
//! A field that explains the motion shrinks the denominator and scores
//! positive; the zero field scores exactly 0 dB because both sums coincide
//! term by term. Sums run over pixels whose displaced position can be
//! sampled and whose status is not skipped, and the result is capped at
//! ±[`IMC_CAP_DB`] to keep perfectly compensated pairs finite.
//!
//! Sequence-level IMC accumulates both sums across every pair before taking
//! a single ratio, which weighs pairs by their energy rather than averaging
//! per-pair decibels.

use crate::engine::{DisplacementField, PixelStatus};
use crate::error::{Error, Result};
use crate::image::{bilinear_sample, Frame, PixelLocation};

/// Cap on the reported IMC magnitude in dB.
pub const IMC_CAP_DB: f64 = 99.0;

/// Sums below this count as exactly zero energy.
pub const SSD_FLOOR: f64 = 1e-12;

/// Raw and compensated SSD sums plus the number of contributing pixels.
///
/// This is the aggregation [`imc_frame`] and [`imc_sequence`] are built
/// from; it is public so callers can pool pairs or report coverage.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CompensationSums {
    /// `Σ (current(r) − previous(r))²` over contributing pixels.
    pub raw_ssd: f64,
    /// `Σ (current(r) − previous(r − d(r)))²` over contributing pixels.
    pub compensated_ssd: f64,
    /// Pixels that contributed to both sums.
    pub valid: usize,
    /// Total pixels in the frame.
    pub total: usize,
}

impl CompensationSums {
    /// Merges sums from another pair.
    pub fn accumulate(&mut self, other: &CompensationSums) {
        self.raw_ssd += other.raw_ssd;
        self.compensated_ssd += other.compensated_ssd;
        self.valid += other.valid;
        self.total += other.total;
    }

    /// Fraction of pixels that contributed.
    pub fn valid_fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.valid as f64 / self.total as f64
        }
    }

    /// The capped dB ratio of the two sums; zero energy on both sides is
    /// 0 dB by convention.
    pub fn imc_db(&self) -> Result<f64> {
        if self.valid == 0 {
            return Err(Error::EmptyDomain);
        }
        let raw_zero = self.raw_ssd < SSD_FLOOR;
        let comp_zero = self.compensated_ssd < SSD_FLOOR;
        Ok(match (raw_zero, comp_zero) {
            (true, true) => 0.0,
            (false, true) => IMC_CAP_DB,
            (true, false) => -IMC_CAP_DB,
            (false, false) => {
                (10.0 * (self.raw_ssd / self.compensated_ssd).log10())
                    .clamp(-IMC_CAP_DB, IMC_CAP_DB)
            }
        })
    }
}

/// Accumulates the raw and compensated SSD sums for one frame pair.
///
/// A pixel contributes only when its field status is not
/// [`PixelStatus::SkippedBoundary`] and its displaced position `r − d(r)`
/// can be sampled in `previous`; excluded pixels are removed from *both*
/// sums so the ratio stays comparable.
pub fn compensation_sums(
    current: &Frame,
    previous: &Frame,
    field: &DisplacementField,
) -> Result<CompensationSums> {
    if current.dimensions() != previous.dimensions() {
        return Err(Error::InvalidConfig(format!(
            "frame dimensions differ: {:?} vs {:?}",
            current.dimensions(),
            previous.dimensions()
        )));
    }
    if field.dimensions() != current.dimensions() {
        return Err(Error::InvalidConfig(format!(
            "field dimensions {:?} do not match frames {:?}",
            field.dimensions(),
            current.dimensions()
        )));
    }
    let (width, height) = current.dimensions();
    let mut sums = CompensationSums {
        total: width * height,
        ..CompensationSums::default()
    };
    for y in 0..height {
        for x in 0..width {
            if field.status(x, y) == PixelStatus::SkippedBoundary {
                continue;
            }
            let d = field.vector(x, y);
            let displaced = PixelLocation::new(x as f64 - d.dx, y as f64 - d.dy);
            let compensated = match bilinear_sample(previous, displaced) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let here = current.get(x, y);
            let raw = here - previous.get(x, y);
            let moved = here - compensated;
            sums.raw_ssd += raw * raw;
            sums.compensated_ssd += moved * moved;
            sums.valid += 1;
        }
    }
    Ok(sums)
}

/// IMC in dB for one frame pair under a displacement field.
pub fn imc_frame(current: &Frame, previous: &Frame, field: &DisplacementField) -> Result<f64> {
    compensation_sums(current, previous, field)?.imc_db()
}

/// IMC in dB for a whole sequence: SSD sums are pooled across all pairs
/// before the single ratio. `fields[j]` must map `frames[j + 1]` onto
/// `frames[j]`.
pub fn imc_sequence(frames: &[Frame], fields: &[DisplacementField]) -> Result<f64> {
    if frames.len() < 2 || fields.len() != frames.len() - 1 {
        return Err(Error::InvalidConfig(format!(
            "need one field per consecutive pair: {} frames vs {} fields",
            frames.len(),
            fields.len()
        )));
    }
    let mut pooled = CompensationSums::default();
    for (j, field) in fields.iter().enumerate() {
        let sums = compensation_sums(&frames[j + 1], &frames[j], field)?;
        pooled.accumulate(&sums);
    }
    pooled.imc_db()
}

/// Endpoint-error statistics between an estimated field and the truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointStats {
    /// Mean Euclidean error over the compared pixels.
    pub mean: f64,
    /// Largest error.
    pub max: f64,
    /// Number of compared pixels.
    pub count: usize,
}

/// Endpoint error over all non-skipped pixels (in either field).
pub fn endpoint_error(
    estimated: &DisplacementField,
    truth: &DisplacementField,
) -> Result<EndpointStats> {
    endpoint_error_with_margin(estimated, truth, 0)
}

/// Endpoint error restricted to pixels at least `margin` pixels away from
/// every frame edge, still excluding skipped pixels.
pub fn endpoint_error_with_margin(
    estimated: &DisplacementField,
    truth: &DisplacementField,
    margin: usize,
) -> Result<EndpointStats> {
    if estimated.dimensions() != truth.dimensions() {
        return Err(Error::InvalidConfig(format!(
            "field dimensions differ: {:?} vs {:?}",
            estimated.dimensions(),
            truth.dimensions()
        )));
    }
    let (width, height) = estimated.dimensions();
    if 2 * margin >= width || 2 * margin >= height {
        return Err(Error::InvalidConfig(format!(
            "margin {margin} leaves no interior in a {width}x{height} field"
        )));
    }
    let mut sum = 0.0;
    let mut max = 0.0_f64;
    let mut count = 0usize;
    for y in margin..height - margin {
        for x in margin..width - margin {
            if estimated.status(x, y) == PixelStatus::SkippedBoundary
                || truth.status(x, y) == PixelStatus::SkippedBoundary
            {
                continue;
            }
            let err = (estimated.vector(x, y) - truth.vector(x, y)).norm();
            sum += err;
            max = max.max(err);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyDomain);
    }
    Ok(EndpointStats {
        mean: sum / count as f64,
        max,
        count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::PixelStatus;
    use crate::image::DisplacementVector;
    use crate::synth::{make_sequence, MotionRegion, NoiseSpec, Rect, SceneSpec};
    use approx::assert_abs_diff_eq;

    fn scene() -> SceneSpec {
        SceneSpec {
            width: 24,
            height: 24,
            texture_seed: 5,
            smoothness: 2.0,
            motion: vec![MotionRegion {
                rect: Rect::new(3, 3, 18, 18),
                velocity: DisplacementVector::new(1.0, 0.5),
            }],
            frame_count: 2,
        }
    }

    #[test]
    fn zero_field_is_exactly_zero_db() {
        let seq = make_sequence(&scene(), &NoiseSpec::noiseless()).unwrap();
        let zero = DisplacementField::zero(24, 24);
        let v = imc_frame(&seq.frames[1], &seq.frames[0], &zero).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn identical_frames_with_zero_field_are_zero_db() {
        let f = Frame::from_fn(16, 16, |x, y| ((x * 3 + y * 5) % 11) as f64);
        let zero = DisplacementField::zero(16, 16);
        assert_eq!(imc_frame(&f, &f, &zero).unwrap(), 0.0);
    }

    #[test]
    fn perfect_compensation_hits_the_cap() {
        let seq = make_sequence(&scene(), &NoiseSpec::noiseless()).unwrap();
        let v = imc_frame(&seq.frames[1], &seq.frames[0], &seq.truth[0]).unwrap();
        assert_eq!(v, IMC_CAP_DB);
    }

    #[test]
    fn truth_beats_zero_field() {
        let seq = make_sequence(
            &scene(),
            &NoiseSpec {
                snr_db: 25.0,
                noise_seed: 2,
            },
        )
        .unwrap();
        let zero = imc_frame(&seq.frames[1], &seq.frames[0], &DisplacementField::zero(24, 24))
            .unwrap();
        let truth = imc_frame(&seq.frames[1], &seq.frames[0], &seq.truth[0]).unwrap();
        assert_eq!(zero, 0.0);
        assert!(truth > zero, "truth {truth} dB should beat zero {zero} dB");
    }

    #[test]
    fn skipped_and_unsampleable_pixels_leave_both_sums() {
        let f = Frame::from_fn(8, 8, |x, y| (x * y) as f64);
        let mut field = DisplacementField::zero(8, 8);
        // One skipped pixel with a wild vector must not poison the sums...
        field.set_entry(
            3,
            3,
            DisplacementVector::new(1e6, 1e6),
            PixelStatus::SkippedBoundary,
        );
        // ...and one valid pixel whose displaced source is out of frame is
        // dropped from both sums.
        field.set_entry(0, 0, DisplacementVector::new(5.0, 0.0), PixelStatus::Converged);
        let sums = compensation_sums(&f, &f, &field).unwrap();
        assert_eq!(sums.valid, 8 * 8 - 2);
        assert_eq!(sums.total, 64);
        assert_abs_diff_eq!(sums.valid_fraction(), 62.0 / 64.0, epsilon = 1e-12);
        assert_eq!(sums.imc_db().unwrap(), 0.0);
    }

    #[test]
    fn empty_domain_is_an_error() {
        let f = Frame::from_fn(4, 4, |x, _| x as f64);
        let mut field = DisplacementField::zero(4, 4);
        for y in 0..4 {
            for x in 0..4 {
                field.set_entry(x, y, DisplacementVector::zero(), PixelStatus::SkippedBoundary);
            }
        }
        assert!(matches!(
            imc_frame(&f, &f, &field),
            Err(Error::EmptyDomain)
        ));
    }

    #[test]
    fn sequence_imc_pools_sums_not_decibels() {
        let mut scene = scene();
        scene.frame_count = 3;
        let seq = make_sequence(
            &scene,
            &NoiseSpec {
                snr_db: 15.0,
                noise_seed: 9,
            },
        )
        .unwrap();
        let fields = vec![seq.truth[0].clone(), DisplacementField::zero(24, 24)];
        let a = compensation_sums(&seq.frames[1], &seq.frames[0], &fields[0]).unwrap();
        let b = compensation_sums(&seq.frames[2], &seq.frames[1], &fields[1]).unwrap();
        let expected =
            10.0 * ((a.raw_ssd + b.raw_ssd) / (a.compensated_ssd + b.compensated_ssd)).log10();
        let got = imc_sequence(&seq.frames, &fields).unwrap();
        assert_abs_diff_eq!(got, expected, epsilon = 1e-12);
        // Pooling is not the mean of the per-pair dB values here.
        let mean_db = (a.imc_db().unwrap() + b.imc_db().unwrap()) / 2.0;
        assert!((got - mean_db).abs() > 1e-6);
    }

    #[test]
    fn sequence_length_validation() {
        let f = Frame::from_fn(8, 8, |x, y| (x + y) as f64);
        let fields = vec![DisplacementField::zero(8, 8)];
        assert!(imc_sequence(&[f.clone()], &fields).is_err());
        assert!(imc_sequence(&[f.clone(), f.clone(), f.clone()], &fields).is_err());
        assert!(imc_sequence(&[f.clone(), f], &fields).is_ok());
    }

    #[test]
    fn endpoint_error_statistics() {
        let truth = DisplacementField::uniform(6, 6, DisplacementVector::new(1.0, 0.0));
        let mut estimated = truth.clone();
        // One pixel off by (0.3, 0.4) → error 0.5; one skipped pixel is
        // excluded.
        estimated.set_entry(
            2,
            2,
            DisplacementVector::new(1.3, 0.4),
            PixelStatus::Converged,
        );
        estimated.set_entry(0, 0, DisplacementVector::zero(), PixelStatus::SkippedBoundary);
        let stats = endpoint_error(&estimated, &truth).unwrap();
        assert_eq!(stats.count, 35);
        assert_abs_diff_eq!(stats.max, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(stats.mean, 0.5 / 35.0, epsilon = 1e-12);
    }

    #[test]
    fn endpoint_error_margin_excludes_the_border() {
        let truth = DisplacementField::uniform(8, 8, DisplacementVector::zero());
        let mut estimated = truth.clone();
        // Large error only on the border ring.
        for i in 0..8 {
            estimated.set_entry(i, 0, DisplacementVector::new(3.0, 0.0), PixelStatus::Converged);
            estimated.set_entry(i, 7, DisplacementVector::new(3.0, 0.0), PixelStatus::Converged);
            estimated.set_entry(0, i, DisplacementVector::new(3.0, 0.0), PixelStatus::Converged);
            estimated.set_entry(7, i, DisplacementVector::new(3.0, 0.0), PixelStatus::Converged);
        }
        let all = endpoint_error(&estimated, &truth).unwrap();
        assert!(all.mean > 0.0);
        let interior = endpoint_error_with_margin(&estimated, &truth, 1).unwrap();
        assert_eq!(interior.count, 36);
        assert_eq!(interior.mean, 0.0);
        // A margin that consumes the whole field is rejected.
        assert!(endpoint_error_with_margin(&estimated, &truth, 4).is_err());
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let a = Frame::from_fn(8, 8, |x, _| x as f64);
        let b = Frame::from_fn(9, 8, |x, _| x as f64);
        let field8 = DisplacementField::zero(8, 8);
        let field9 = DisplacementField::zero(9, 8);
        assert!(compensation_sums(&a, &b, &field8).is_err());
        assert!(compensation_sums(&a, &a, &field9).is_err());
        assert!(endpoint_error(&field8, &field9).is_err());
    }
}
