//! Synthetic ground-truth sequences: seeded textures, exact sub-pixel
//! warping, and SNR-calibrated Gaussian noise.
//!
//! A [`SceneSpec`] describes a frame full of smoothed random texture and a
//! set of disjoint rectangular regions that translate with constant
//! velocity. [`make_sequence`] renders the frames by *sequentially* warping
//! each clean frame into the next (so the per-pair ground truth registers
//! consecutive frames exactly) and then adds per-frame Gaussian noise whose
//! variance is calibrated against the clean signal:
//!
//! ```text
//! SNR(dB) = 10·log₁₀(σ²_signal / σ²_noise)   ⇒   σ²_noise = σ²_signal / 10^(SNR/10)
//! ```
//!
//! Frame 0 is always the noise-free reference.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::engine::DisplacementField;
use crate::error::{Error, Result};
use crate::image::{bilinear_sample, DisplacementVector, Frame, PixelLocation};

/// Number of horizontal+vertical box-blur rounds applied to the raw
/// texture noise.
const BLUR_PASSES: usize = 2;

/// An axis-aligned pixel rectangle (inclusive of `x..x+width`,
/// `y..y+height` exclusive ends).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Rect {
            x,
            y,
            width,
            height,
        }
    }

    /// Whether the pixel `(px, py)` lies inside.
    pub fn contains(&self, px: usize, py: usize) -> bool {
        px >= self.x && px < self.x + self.width && py >= self.y && py < self.y + self.height
    }

    /// Whether two rectangles share any pixel.
    pub fn intersects(&self, other: &Rect) -> bool {
        self.x < other.x + other.width
            && other.x < self.x + self.width
            && self.y < other.y + other.height
            && other.y < self.y + self.height
    }
}

/// A rectangle translating with constant per-frame velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionRegion {
    pub rect: Rect,
    pub velocity: DisplacementVector,
}

/// Full description of a synthetic scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    /// Seed for the texture generator.
    pub texture_seed: u64,
    /// Box-blur radius (in pixels, rounded) applied to the raw noise;
    /// larger is smoother, `0` keeps the raw noise.
    pub smoothness: f64,
    /// Disjoint moving regions; pixels outside all regions are static.
    pub motion: Vec<MotionRegion>,
    /// Number of frames to render (at least 1).
    pub frame_count: usize,
}

impl SceneSpec {
    /// Checks dimensions, smoothness, and that every region stays warpable
    /// inside the frame for its velocity.
    pub fn validate(&self) -> Result<()> {
        if self.width < 2 || self.height < 2 {
            return Err(Error::InvalidConfig(format!(
                "scene must be at least 2x2, got {}x{}",
                self.width, self.height
            )));
        }
        if !self.smoothness.is_finite() || self.smoothness < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "smoothness must be finite and nonnegative, got {}",
                self.smoothness
            )));
        }
        if self.frame_count < 1 {
            return Err(Error::InvalidConfig("frame_count must be at least 1".into()));
        }
        for (i, region) in self.motion.iter().enumerate() {
            let r = &region.rect;
            if r.width == 0 || r.height == 0 {
                return Err(Error::InvalidConfig(format!(
                    "region {i} has an empty rectangle"
                )));
            }
            if r.x + r.width > self.width || r.y + r.height > self.height {
                return Err(Error::InvalidConfig(format!(
                    "region {i} exceeds the {}x{} frame",
                    self.width, self.height
                )));
            }
            let v = region.velocity;
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "region {i} has a non-finite velocity"
                )));
            }
            // Every pixel of the region must be able to sample its warp
            // source r − v inside the frame.
            let x_lo = r.x as f64 - v.dx;
            let x_hi = (r.x + r.width - 1) as f64 - v.dx;
            let y_lo = r.y as f64 - v.dy;
            let y_hi = (r.y + r.height - 1) as f64 - v.dy;
            if x_lo < 0.0
                || y_lo < 0.0
                || x_hi > (self.width - 1) as f64
                || y_hi > (self.height - 1) as f64
            {
                return Err(Error::InvalidConfig(format!(
                    "region {i} moving at ({}, {}) would sample outside the frame",
                    v.dx, v.dy
                )));
            }
            for (j, other) in self.motion.iter().enumerate().skip(i + 1) {
                if r.intersects(&other.rect) {
                    return Err(Error::InvalidConfig(format!(
                        "regions {i} and {j} overlap"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Noise injection parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Target signal-to-noise ratio in dB; `f64::INFINITY` means
    /// noiseless.
    pub snr_db: f64,
    /// Seed for the noise generator.
    pub noise_seed: u64,
}

impl NoiseSpec {
    /// No noise at all.
    pub fn noiseless() -> Self {
        NoiseSpec {
            snr_db: f64::INFINITY,
            noise_seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::InvalidConfig(format!(
                "snr_db must be a real value or +inf, got {}",
                self.snr_db
            )));
        }
        Ok(())
    }
}

/// Frames plus the per-pair ground-truth displacement fields: `truth[j]`
/// maps `frames[j + 1]` back onto `frames[j]`.
#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub frames: Vec<Frame>,
    pub truth: Vec<DisplacementField>,
}

/// Noise power implied by a signal power and a target SNR in dB:
/// `σ²_noise = signal_variance / 10^(snr_db / 10)`.
pub fn noise_variance(signal_variance: f64, snr_db: f64) -> f64 {
    signal_variance * 10f64.powf(-snr_db / 10.0)
}

/// Measured `10·log₁₀(σ²_signal / σ²_noise)` between a clean frame and its
/// noisy counterpart; infinite when they are identical.
pub fn measured_snr_db(clean: &Frame, noisy: &Frame) -> Result<f64> {
    if clean.dimensions() != noisy.dimensions() {
        return Err(Error::InvalidConfig(
            "frames must share dimensions to measure SNR".into(),
        ));
    }
    let n = clean.data().len() as f64;
    let mean_diff = clean
        .data()
        .iter()
        .zip(noisy.data())
        .map(|(c, o)| o - c)
        .sum::<f64>()
        / n;
    let noise_var = clean
        .data()
        .iter()
        .zip(noisy.data())
        .map(|(c, o)| {
            let d = o - c - mean_diff;
            d * d
        })
        .sum::<f64>()
        / n;
    if noise_var <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (clean.variance() / noise_var).log10())
}

/// One normalized box-blur pass along an axis; the window is clamped to
/// the frame, so values stay inside the input range (a convex average).
fn box_blur_pass(data: &mut Vec<f64>, width: usize, height: usize, radius: usize, horizontal: bool) {
    if radius == 0 {
        return;
    }
    let mut out = vec![0.0; width * height];
    if horizontal {
        let mut prefix = vec![0.0; width + 1];
        for y in 0..height {
            for x in 0..width {
                prefix[x + 1] = prefix[x] + data[y * width + x];
            }
            for x in 0..width {
                let lo = x.saturating_sub(radius);
                let hi = (x + radius).min(width - 1);
                out[y * width + x] = (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64;
            }
        }
    } else {
        let mut prefix = vec![0.0; height + 1];
        for x in 0..width {
            for y in 0..height {
                prefix[y + 1] = prefix[y] + data[y * width + x];
            }
            for y in 0..height {
                let lo = y.saturating_sub(radius);
                let hi = (y + radius).min(height - 1);
                out[y * width + x] = (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64;
            }
        }
    }
    *data = out;
}

/// Renders the seeded base texture of a scene: uniform noise in
/// `[0, 255)` smoothed by repeated box blurs of radius
/// `round(smoothness)`. Deterministic in `texture_seed`.
pub fn generate_texture(scene: &SceneSpec) -> Result<Frame> {
    scene.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(scene.texture_seed);
    let mut data: Vec<f64> = (0..scene.width * scene.height)
        .map(|_| rng.random::<f64>() * 255.0)
        .collect();
    let radius = scene.smoothness.round() as usize;
    for _ in 0..BLUR_PASSES {
        box_blur_pass(&mut data, scene.width, scene.height, radius, true);
        box_blur_pass(&mut data, scene.width, scene.height, radius, false);
    }
    Frame::new(scene.width, scene.height, data)
}

/// Backward-warps a frame by a displacement field:
/// `out(r) = frame(r − d(r))`, sampled bilinearly. Every displaced
/// position must stay inside the frame; field statuses are ignored and the
/// vectors used verbatim.
pub fn warp_frame(frame: &Frame, field: &DisplacementField) -> Result<Frame> {
    if frame.dimensions() != field.dimensions() {
        return Err(Error::InvalidConfig(format!(
            "warp field dimensions {:?} do not match frame {:?}",
            field.dimensions(),
            frame.dimensions()
        )));
    }
    let (width, height) = frame.dimensions();
    let mut data = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let d = field.vector(x, y);
            let source = PixelLocation::new(x as f64 - d.dx, y as f64 - d.dy);
            data.push(bilinear_sample(frame, source)?);
        }
    }
    Frame::new(width, height, data)
}

fn add_noise_with(frame: &Frame, snr_db: f64, rng: &mut ChaCha8Rng) -> Result<Frame> {
    if snr_db == f64::INFINITY {
        return Ok(frame.clone());
    }
    let signal_variance = frame.variance();
    if signal_variance <= 0.0 {
        return Err(Error::CannotCalibrate);
    }
    let sigma = noise_variance(signal_variance, snr_db).sqrt();
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidConfig(format!("noise distribution: {e}")))?;
    let data = frame
        .data()
        .iter()
        .map(|v| v + normal.sample(rng))
        .collect();
    Frame::new(frame.width(), frame.height(), data)
}

/// Adds zero-mean Gaussian noise calibrated to `spec.snr_db` against the
/// frame's own variance. Deterministic in `noise_seed`; a constant frame
/// cannot be calibrated.
pub fn add_noise(frame: &Frame, spec: &NoiseSpec) -> Result<Frame> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.noise_seed);
    add_noise_with(frame, spec.snr_db, &mut rng)
}

/// The per-pair ground-truth field of a scene: each pixel carries its
/// region's velocity (zero outside all regions).
pub fn truth_field(scene: &SceneSpec) -> DisplacementField {
    DisplacementField::from_fn(scene.width, scene.height, |x, y| {
        scene
            .motion
            .iter()
            .find(|r| r.rect.contains(x, y))
            .map(|r| r.velocity)
            .unwrap_or_else(DisplacementVector::zero)
    })
}

/// Renders a full sequence: frame 0 is the clean seeded texture, each
/// later frame is the previous *clean* frame warped by the truth field
/// with fresh calibrated noise added on top. Consecutive clean frames
/// therefore satisfy `clean_{k}(r) = clean_{k-1}(r − d_truth(r))` exactly.
pub fn make_sequence(scene: &SceneSpec, noise: &NoiseSpec) -> Result<SyntheticSequence> {
    scene.validate()?;
    noise.validate()?;
    let truth = truth_field(scene);
    let mut clean = generate_texture(scene)?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.noise_seed);
    let mut frames = Vec::with_capacity(scene.frame_count);
    let mut truths = Vec::with_capacity(scene.frame_count.saturating_sub(1));
    frames.push(clean.clone());
    for _ in 1..scene.frame_count {
        let next = warp_frame(&clean, &truth)?;
        frames.push(add_noise_with(&next, noise.snr_db, &mut rng)?);
        truths.push(truth.clone());
        clean = next;
    }
    Ok(SyntheticSequence {
        frames,
        truth: truths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::PixelStatus;
    use crate::image::dfd;
    use approx::assert_abs_diff_eq;

    fn basic_scene() -> SceneSpec {
        SceneSpec {
            width: 32,
            height: 32,
            texture_seed: 7,
            smoothness: 2.0,
            motion: vec![MotionRegion {
                rect: Rect::new(4, 4, 24, 24),
                velocity: DisplacementVector::new(1.0, 0.5),
            }],
            frame_count: 3,
        }
    }

    #[test]
    fn noise_variance_formula() {
        assert_abs_diff_eq!(noise_variance(100.0, 20.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(noise_variance(50.0, 10.0), 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(noise_variance(42.0, 0.0), 42.0, epsilon = 1e-12);
        assert_eq!(noise_variance(100.0, f64::INFINITY), 0.0);
    }

    #[test]
    fn texture_is_deterministic_and_in_range() {
        let scene = basic_scene();
        let a = generate_texture(&scene).unwrap();
        let b = generate_texture(&scene).unwrap();
        assert_eq!(a, b);
        assert!(a.data().iter().all(|&v| (0.0..=255.0).contains(&v)));
        assert!(a.variance() > 1.0, "texture should keep visible contrast");

        let other = SceneSpec {
            texture_seed: 8,
            ..scene
        };
        assert_ne!(generate_texture(&other).unwrap(), a);
    }

    #[test]
    fn extreme_smoothing_flattens_the_texture() {
        let scene = SceneSpec {
            smoothness: 64.0,
            ..basic_scene()
        };
        let frame = generate_texture(&scene).unwrap();
        let min = frame.data().iter().cloned().fold(f64::INFINITY, f64::min);
        let max = frame
            .data()
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(max - min < 1.0, "range {} too wide", max - min);
    }

    #[test]
    fn zero_smoothness_keeps_raw_noise() {
        let scene = SceneSpec {
            smoothness: 0.0,
            ..basic_scene()
        };
        let frame = generate_texture(&scene).unwrap();
        // Raw uniform noise on [0,255) has variance ≈ 255²/12 ≈ 5419.
        assert!(frame.variance() > 3000.0);
    }

    #[test]
    fn warp_shifts_a_ramp_exactly() {
        let previous = Frame::from_fn(8, 8, |x, _| x as f64);
        let mut field = DisplacementField::zero(8, 8);
        for y in 0..8 {
            for x in 1..8 {
                field.set_entry(x, y, DisplacementVector::new(1.0, 0.0), PixelStatus::Converged);
            }
        }
        let warped = warp_frame(&previous, &field).unwrap();
        for y in 0..8 {
            for x in 1..8 {
                assert_eq!(warped.get(x, y), (x - 1) as f64);
            }
        }
    }

    #[test]
    fn warp_rejects_out_of_frame_sources() {
        let frame = Frame::from_fn(8, 8, |x, y| (x + y) as f64);
        let field = DisplacementField::uniform(8, 8, DisplacementVector::new(1.0, 0.0));
        // Pixel x = 0 would sample x = −1.
        assert!(warp_frame(&frame, &field).is_err());
    }

    #[test]
    fn add_noise_is_calibrated_and_deterministic() {
        let scene = SceneSpec {
            width: 128,
            height: 128,
            ..basic_scene()
        };
        let clean = generate_texture(&scene).unwrap();
        let spec = NoiseSpec {
            snr_db: 20.0,
            noise_seed: 11,
        };
        let noisy = add_noise(&clean, &spec).unwrap();
        let again = add_noise(&clean, &spec).unwrap();
        assert_eq!(noisy, again);
        let measured = measured_snr_db(&clean, &noisy).unwrap();
        assert!(
            (measured - 20.0).abs() < 0.5,
            "measured SNR {measured} dB, wanted 20 dB"
        );
    }

    #[test]
    fn add_noise_rejects_constant_frames_and_bad_snr() {
        let flat = Frame::filled(16, 16, 42.0).unwrap();
        assert!(matches!(
            add_noise(&flat, &NoiseSpec { snr_db: 20.0, noise_seed: 0 }),
            Err(Error::CannotCalibrate)
        ));
        let textured = Frame::from_fn(16, 16, |x, y| (x * y) as f64);
        assert!(add_noise(
            &textured,
            &NoiseSpec {
                snr_db: f64::NAN,
                noise_seed: 0
            }
        )
        .is_err());
        // Infinite SNR is a no-op.
        let same = add_noise(&textured, &NoiseSpec::noiseless()).unwrap();
        assert_eq!(same, textured);
    }

    #[test]
    fn sequence_registers_exactly_when_noiseless() {
        let scene = basic_scene();
        let seq = make_sequence(&scene, &NoiseSpec::noiseless()).unwrap();
        assert_eq!(seq.frames.len(), 3);
        assert_eq!(seq.truth.len(), 2);
        // Every pair satisfies current(r) = previous(r − d) exactly, so the
        // displaced frame difference is bitwise zero.
        for pair in 0..2 {
            let current = &seq.frames[pair + 1];
            let previous = &seq.frames[pair];
            let truth = &seq.truth[pair];
            for y in 0..scene.height {
                for x in 0..scene.width {
                    let v = dfd(
                        current,
                        previous,
                        PixelLocation::new(x as f64, y as f64),
                        truth.vector(x, y),
                    )
                    .unwrap();
                    assert_eq!(v, 0.0, "pair {pair}, pixel ({x}, {y})");
                }
            }
        }
    }

    #[test]
    fn truth_field_marks_regions() {
        let scene = basic_scene();
        let truth = truth_field(&scene);
        assert_eq!(truth.vector(16, 16), DisplacementVector::new(1.0, 0.5));
        assert_eq!(truth.vector(0, 0), DisplacementVector::zero());
        assert_eq!(truth.counts().converged, 32 * 32);
    }

    #[test]
    fn noisy_frames_differ_but_frame_zero_stays_clean() {
        let scene = basic_scene();
        let clean = make_sequence(&scene, &NoiseSpec::noiseless()).unwrap();
        let noisy = make_sequence(
            &scene,
            &NoiseSpec {
                snr_db: 20.0,
                noise_seed: 3,
            },
        )
        .unwrap();
        assert_eq!(clean.frames[0], noisy.frames[0]);
        assert_ne!(clean.frames[1], noisy.frames[1]);
        assert_ne!(clean.frames[2], noisy.frames[2]);
    }

    #[test]
    fn scene_validation_catches_bad_regions() {
        let mut scene = basic_scene();
        scene.motion.push(MotionRegion {
            rect: Rect::new(10, 10, 4, 4), // overlaps the main region
            velocity: DisplacementVector::zero(),
        });
        assert!(scene.validate().is_err());

        let mut scene = basic_scene();
        scene.motion[0].rect = Rect::new(30, 30, 8, 8); // exceeds the frame
        assert!(scene.validate().is_err());

        let mut scene = basic_scene();
        scene.motion[0].velocity = DisplacementVector::new(40.0, 0.0); // cannot warp
        assert!(scene.validate().is_err());

        let mut scene = basic_scene();
        scene.motion[0].rect = Rect::new(0, 0, 32, 32); // no margin for motion
        assert!(scene.validate().is_err());

        let mut scene = basic_scene();
        scene.smoothness = f64::NAN;
        assert!(scene.validate().is_err());

        let mut scene = basic_scene();
        scene.frame_count = 0;
        assert!(scene.validate().is_err());
    }
}
