//! Frames, sub-pixel sampling, and observation-system assembly.
//!
//! Intensities live on an integer grid with `x` growing rightwards and `y`
//! growing downwards; `(0, 0)` is the top-left pixel. Sub-pixel reads use
//! bilinear interpolation over the cell containing the query point: with
//! `θx = x − ⌊x⌋`, `θy = y − ⌊y⌋` and `f_ij = f(⌊x⌋ + i, ⌊y⌋ + j)`,
//!
//! ```text
//! f(x, y) = (1−θx)(1−θy)·f00 + θx(1−θy)·f10 + (1−θx)θy·f01 + θx·θy·f11
//! ```
//!
//! The interpolant is differentiable inside each cell, which yields the
//! closed-form spatial gradient used by the motion estimator:
//!
//! ```text
//! ∂f/∂x = (1−θy)(f10 − f00) + θy(f11 − f01)
//! ∂f/∂y = (1−θx)(f01 − f00) + θx(f11 − f10)
//! ```
//!
//! [`build_system`] stacks these gradients and displaced frame differences
//! over a neighborhood mask into the linear model `z ≈ G·u` whose solution
//! `u` is the displacement update for the pixel under consideration.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Minimum number of observation rows required to pose an update system.
pub const MIN_OBSERVATIONS: usize = 3;

/// A grayscale frame with `f64` intensities stored in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Frame {
    /// Wraps row-major intensity data into a frame.
    ///
    /// Fails when the buffer length does not match `width × height`, when
    /// either dimension is zero, or when any intensity is non-finite.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidConfig(format!(
                "frame dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidConfig(format!(
                "frame buffer holds {} samples, expected {}",
                data.len(),
                width * height
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "frame intensities must be finite, found {bad}"
            )));
        }
        Ok(Frame {
            width,
            height,
            data,
        })
    }

    /// Builds a constant frame.
    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Frame::new(width, height, vec![value; width * height])
    }

    /// Builds a frame by evaluating `f(x, y)` at every pixel.
    ///
    /// Panics if the dimensions are zero or `f` produces a non-finite value;
    /// intended for tests and synthetic inputs where both are programmer
    /// errors.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Frame::new(width, height, data).expect("generator produced an invalid frame")
    }

    /// Frame width in pixels.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Frame height in pixels.
    pub fn height(&self) -> usize {
        self.height
    }

    /// `(width, height)` pair.
    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Intensity at integer coordinates.
    ///
    /// Panics when out of range; use [`bilinear_sample`] for checked
    /// sub-pixel access.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        assert!(x < self.width && y < self.height, "pixel index out of range");
        self.data[y * self.width + x]
    }

    /// Row-major intensity buffer.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mean intensity.
    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Population variance of the intensities.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / self.data.len() as f64
    }
}

/// A continuous pixel position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelLocation {
    pub x: f64,
    pub y: f64,
}

impl PixelLocation {
    pub fn new(x: f64, y: f64) -> Self {
        PixelLocation { x, y }
    }
}

/// A two-component displacement `(dx, dy)` in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacementVector {
    pub dx: f64,
    pub dy: f64,
}

impl DisplacementVector {
    pub fn new(dx: f64, dy: f64) -> Self {
        DisplacementVector { dx, dy }
    }

    /// The zero displacement.
    pub fn zero() -> Self {
        DisplacementVector { dx: 0.0, dy: 0.0 }
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.dx.hypot(self.dy)
    }

    /// Componentwise clamp to `[-limit, limit]`.
    pub fn clamped(&self, limit: f64) -> Self {
        DisplacementVector {
            dx: self.dx.clamp(-limit, limit),
            dy: self.dy.clamp(-limit, limit),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.dx.is_finite() && self.dy.is_finite()
    }
}

impl std::ops::Add for DisplacementVector {
    type Output = DisplacementVector;

    fn add(self, rhs: DisplacementVector) -> DisplacementVector {
        DisplacementVector::new(self.dx + rhs.dx, self.dy + rhs.dy)
    }
}

impl std::ops::Sub for DisplacementVector {
    type Output = DisplacementVector;

    fn sub(self, rhs: DisplacementVector) -> DisplacementVector {
        DisplacementVector::new(self.dx - rhs.dx, self.dy - rhs.dy)
    }
}

/// Which finite differences feed the two gradient components.
///
/// [`GradientConvention::Analytic`] is the default: it returns the exact
/// partial derivatives of the bilinear interpolant, so a linear ramp
/// `f(x, y) = a·x + b·y + c` reports `(a, b)` everywhere. The
/// [`GradientConvention::Transposed`] variant swaps the roles of the two
/// cell axes — the arrangement that results from reading the interpolation
/// weights with the cell-corner indices flipped — and is kept for
/// comparison experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientConvention {
    #[default]
    Analytic,
    Transposed,
}

/// Shape of the observation neighborhood around a working pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskKind {
    /// Full `(2h+1) × (2h+1)` window centered on the pixel.
    SquareWindow,
    /// Rows strictly above, the same row strictly left, and the pixel
    /// itself — the neighbors already visited by a raster scan.
    CausalHalf,
}

/// A neighborhood mask: a kind plus its half-width `h ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskSpec {
    kind: MaskKind,
    half_width: usize,
}

impl MaskSpec {
    /// Creates a mask; `half_width` must be at least 1.
    pub fn new(kind: MaskKind, half_width: usize) -> Result<Self> {
        if half_width == 0 {
            return Err(Error::InvalidConfig(
                "mask half-width must be at least 1".into(),
            ));
        }
        Ok(MaskSpec { kind, half_width })
    }

    /// Full square window of half-width `h`.
    pub fn square(half_width: usize) -> Result<Self> {
        MaskSpec::new(MaskKind::SquareWindow, half_width)
    }

    /// Causal half-plane mask of half-width `h`.
    pub fn causal(half_width: usize) -> Result<Self> {
        MaskSpec::new(MaskKind::CausalHalf, half_width)
    }

    pub fn kind(&self) -> MaskKind {
        self.kind
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Integer offsets `(ox, oy)` of the mask in raster order
    /// (top-to-bottom, then left-to-right within a row).
    pub fn offsets(&self) -> Vec<(i64, i64)> {
        let h = self.half_width as i64;
        let mut out = Vec::with_capacity(self.len());
        match self.kind {
            MaskKind::SquareWindow => {
                for oy in -h..=h {
                    for ox in -h..=h {
                        out.push((ox, oy));
                    }
                }
            }
            MaskKind::CausalHalf => {
                for oy in -h..=-1 {
                    for ox in -h..=h {
                        out.push((ox, oy));
                    }
                }
                for ox in -h..=0 {
                    out.push((ox, 0));
                }
            }
        }
        out
    }

    /// Number of offsets in the mask.
    pub fn len(&self) -> usize {
        let h = self.half_width;
        match self.kind {
            MaskKind::SquareWindow => (2 * h + 1) * (2 * h + 1),
            MaskKind::CausalHalf => h * (2 * h + 1) + h + 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Locates the interpolation cell for `(x, y)` and the fractional offsets
/// within it. Queries exactly on the right or bottom frame edge reuse the
/// last interior cell with a fractional offset of 1, which evaluates to the
/// stored boundary sample without extrapolating.
fn interpolation_cell(frame: &Frame, x: f64, y: f64) -> Result<(usize, usize, f64, f64)> {
    let (w, h) = frame.dimensions();
    let max_x = (w - 1) as f64;
    let max_y = (h - 1) as f64;
    if !x.is_finite() || !y.is_finite() || x < 0.0 || y < 0.0 || x > max_x || y > max_y {
        return Err(Error::OutOfBounds { x, y });
    }
    if w < 2 || h < 2 {
        // A single row or column has no interpolation cell.
        return Err(Error::OutOfBounds { x, y });
    }
    let x0 = (x.floor() as usize).min(w - 2);
    let y0 = (y.floor() as usize).min(h - 2);
    Ok((x0, y0, x - x0 as f64, y - y0 as f64))
}

/// Bilinear intensity at a continuous position.
///
/// The position must satisfy `0 ≤ x ≤ width−1` and `0 ≤ y ≤ height−1`;
/// anything else is an out-of-bounds error. Integer positions return the
/// stored intensity exactly, and the sample always lies within the range of
/// the four surrounding corner values.
pub fn bilinear_sample(frame: &Frame, at: PixelLocation) -> Result<f64> {
    let (x0, y0, tx, ty) = interpolation_cell(frame, at.x, at.y)?;
    let f00 = frame.get(x0, y0);
    let f10 = frame.get(x0 + 1, y0);
    let f01 = frame.get(x0, y0 + 1);
    let f11 = frame.get(x0 + 1, y0 + 1);
    Ok((1.0 - tx) * (1.0 - ty) * f00
        + tx * (1.0 - ty) * f10
        + (1.0 - tx) * ty * f01
        + tx * ty * f11)
}

/// Spatial gradient `(∂f/∂x, ∂f/∂y)` of the bilinear interpolant at a
/// continuous position, using the default [`GradientConvention::Analytic`]
/// arrangement.
pub fn spatial_gradient(frame: &Frame, at: PixelLocation) -> Result<(f64, f64)> {
    spatial_gradient_with(frame, at, GradientConvention::Analytic)
}

/// Spatial gradient with an explicit [`GradientConvention`].
pub fn spatial_gradient_with(
    frame: &Frame,
    at: PixelLocation,
    convention: GradientConvention,
) -> Result<(f64, f64)> {
    let (x0, y0, tx, ty) = interpolation_cell(frame, at.x, at.y)?;
    let f00 = frame.get(x0, y0);
    let f10 = frame.get(x0 + 1, y0);
    let f01 = frame.get(x0, y0 + 1);
    let f11 = frame.get(x0 + 1, y0 + 1);
    match convention {
        GradientConvention::Analytic => Ok((
            (1.0 - ty) * (f10 - f00) + ty * (f11 - f01),
            (1.0 - tx) * (f01 - f00) + tx * (f11 - f10),
        )),
        GradientConvention::Transposed => Ok((
            (1.0 - ty) * (f01 - f00) + ty * (f11 - f10),
            (1.0 - tx) * (f10 - f00) + tx * (f11 - f01),
        )),
    }
}

/// Displaced frame difference at `r` under displacement `d`:
///
/// ```text
/// Δ(r; d) = current(r) − previous(r − d)
/// ```
///
/// `r` must have integer-grid validity in `current` and `r − d` must be
/// samplable in `previous`. A displacement that registers the two frames
/// perfectly drives the difference to zero.
pub fn dfd(
    current: &Frame,
    previous: &Frame,
    r: PixelLocation,
    d: DisplacementVector,
) -> Result<f64> {
    let here = bilinear_sample(current, r)?;
    let moved = bilinear_sample(previous, PixelLocation::new(r.x - d.dx, r.y - d.dy))?;
    Ok(here - moved)
}

/// The stacked linear observation model `z ≈ G·u` for one displacement
/// update.
///
/// Each usable mask offset contributes one row: the observation entry is
/// `previous(r_j − d) − current(r_j)` — the *negated* displaced frame
/// difference — and the matching matrix row holds the spatial gradient of
/// `previous` at `r_j − d`. With that sign choice a first-order expansion
/// of the displaced frame difference around `d` gives `z = G·u + noise`
/// where `u` is the correction that moves `d` toward the true displacement,
/// so solvers can feed `u` straight into the additive update `d + u`.
#[derive(Debug, Clone)]
pub struct ObservationSystem {
    gradients: DMatrix<f64>,
    observations: DVector<f64>,
    locations: Vec<PixelLocation>,
}

impl ObservationSystem {
    /// Wraps a pre-assembled `N × p` gradient matrix and length-`N`
    /// observation vector. `locations` may be left empty for synthetic
    /// systems; when present it records the pixel behind each row.
    pub fn new(gradients: DMatrix<f64>, observations: DVector<f64>) -> Result<Self> {
        ObservationSystem::with_locations(gradients, observations, Vec::new())
    }

    /// As [`ObservationSystem::new`], additionally tracking row positions.
    pub fn with_locations(
        gradients: DMatrix<f64>,
        observations: DVector<f64>,
        locations: Vec<PixelLocation>,
    ) -> Result<Self> {
        let n = gradients.nrows();
        if gradients.ncols() == 0 {
            return Err(Error::InvalidConfig(
                "observation system needs at least one parameter column".into(),
            ));
        }
        if observations.len() != n {
            return Err(Error::InvalidConfig(format!(
                "gradient matrix has {n} rows but observation vector has {}",
                observations.len()
            )));
        }
        if !locations.is_empty() && locations.len() != n {
            return Err(Error::InvalidConfig(format!(
                "gradient matrix has {n} rows but {} locations were supplied",
                locations.len()
            )));
        }
        if n < MIN_OBSERVATIONS {
            return Err(Error::InsufficientObservations {
                got: n,
                need: MIN_OBSERVATIONS,
            });
        }
        if gradients.iter().any(|v| !v.is_finite())
            || observations.iter().any(|v| !v.is_finite())
        {
            return Err(Error::InvalidConfig(
                "observation system entries must be finite".into(),
            ));
        }
        Ok(ObservationSystem {
            gradients,
            observations,
            locations,
        })
    }

    /// Number of observation rows `N`.
    pub fn len(&self) -> usize {
        self.gradients.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of parameters `p` (2 for planar motion).
    pub fn dim(&self) -> usize {
        self.gradients.ncols()
    }

    /// The `N × p` gradient matrix `G`.
    pub fn gradients(&self) -> &DMatrix<f64> {
        &self.gradients
    }

    /// The length-`N` observation vector `z` (negated displaced frame
    /// differences when built by [`build_system`]).
    pub fn observations(&self) -> &DVector<f64> {
        &self.observations
    }

    /// Pixel positions behind each row; empty for synthetic systems.
    pub fn locations(&self) -> &[PixelLocation] {
        &self.locations
    }

    /// The `p × p` normal matrix `GᵀG`.
    pub fn normal_matrix(&self) -> DMatrix<f64> {
        self.gradients.transpose() * &self.gradients
    }

    /// The right-hand side `Gᵀz`.
    pub fn rhs(&self) -> DVector<f64> {
        self.gradients.transpose() * &self.observations
    }
}

/// Assembles the observation system for pixel `r` of `current` at the
/// displacement estimate `d`, collecting rows over `mask` with the default
/// gradient convention.
///
/// Offsets are visited in raster order; an offset only contributes a row
/// when both its position in `current` and its displaced position in
/// `previous` can be sampled, so windows near frame borders shrink rather
/// than clamp. Fewer than [`MIN_OBSERVATIONS`] surviving rows is an error.
pub fn build_system(
    current: &Frame,
    previous: &Frame,
    r: PixelLocation,
    d: DisplacementVector,
    mask: &MaskSpec,
) -> Result<ObservationSystem> {
    build_system_with(current, previous, r, d, mask, GradientConvention::Analytic)
}

/// As [`build_system`], with an explicit [`GradientConvention`].
pub fn build_system_with(
    current: &Frame,
    previous: &Frame,
    r: PixelLocation,
    d: DisplacementVector,
    mask: &MaskSpec,
    convention: GradientConvention,
) -> Result<ObservationSystem> {
    if !r.x.is_finite() || !r.y.is_finite() {
        return Err(Error::OutOfBounds { x: r.x, y: r.y });
    }
    if !d.is_finite() {
        return Err(Error::InvalidConfig(
            "displacement estimate must be finite".into(),
        ));
    }
    let mut rows: Vec<[f64; 2]> = Vec::with_capacity(mask.len());
    let mut z: Vec<f64> = Vec::with_capacity(mask.len());
    let mut locations: Vec<PixelLocation> = Vec::with_capacity(mask.len());
    for (ox, oy) in mask.offsets() {
        let rj = PixelLocation::new(r.x + ox as f64, r.y + oy as f64);
        let here = match bilinear_sample(current, rj) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let displaced = PixelLocation::new(rj.x - d.dx, rj.y - d.dy);
        let moved = match bilinear_sample(previous, displaced) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let (gx, gy) = spatial_gradient_with(previous, displaced, convention)?;
        rows.push([gx, gy]);
        z.push(moved - here);
        locations.push(rj);
    }
    if rows.len() < MIN_OBSERVATIONS {
        return Err(Error::InsufficientObservations {
            got: rows.len(),
            need: MIN_OBSERVATIONS,
        });
    }
    let n = rows.len();
    let gradients = DMatrix::from_fn(n, 2, |i, j| rows[i][j]);
    let observations = DVector::from_vec(z);
    ObservationSystem::with_locations(gradients, observations, locations)
}
