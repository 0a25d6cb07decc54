//! PCA projection and Mahalanobis classification of displacement vectors.
//!
//! Displacement vectors gathered from a field (or several) are projected
//! onto the principal components of their own scatter. Labeled groups are
//! then modeled as Gaussians in that component space: a vector belongs to a
//! class when its Mahalanobis distance
//!
//! ```text
//! D(y) = √((y − c)ᵀ Σ⁻¹ (y − c))
//! ```
//!
//! falls inside the class's chi-square quantile radius *and* its
//! off-subspace residual stays within the class's residual threshold.
//! Membership in exactly one class is a single-class verdict, in several
//! overlapping classes a multiple-loci verdict, and in none an outlier.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::image::DisplacementVector;
use crate::solvers::pca_of_matrix;

/// Default chi-square quantile for the Mahalanobis acceptance radius.
pub const DEFAULT_MAHALANOBIS_QUANTILE: f64 = 0.975;

/// Default quantile of the training residuals used as residual threshold.
pub const DEFAULT_RESIDUAL_QUANTILE: f64 = 0.975;

/// Floor applied to covariance eigenvalues so degenerate (collinear)
/// classes stay invertible.
pub const COVARIANCE_EIGENVALUE_FLOOR: f64 = 1e-9;

/// Floor on the residual threshold; with a full-rank projection the
/// training residuals are numerically zero.
pub const RESIDUAL_THRESHOLD_FLOOR: f64 = 1e-9;

/// A PCA projection of displacement vectors onto `m` principal components.
#[derive(Debug, Clone)]
pub struct PcProjection {
    basis: DMatrix<f64>,
    sample_mean: DVector<f64>,
    scores: DMatrix<f64>,
    explained_variance: DVector<f64>,
    residuals: Vec<f64>,
}

impl PcProjection {
    /// Number of retained components.
    pub fn m(&self) -> usize {
        self.basis.ncols()
    }

    /// Number of training samples.
    pub fn len(&self) -> usize {
        self.scores.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Orthonormal `2 × m` basis of the component space.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Mean displacement subtracted before projecting.
    pub fn sample_mean(&self) -> &DVector<f64> {
        &self.sample_mean
    }

    /// `n × m` training scores.
    pub fn scores(&self) -> &DMatrix<f64> {
        &self.scores
    }

    /// Sample variance explained per component, nonincreasing.
    pub fn explained_variance(&self) -> &DVector<f64> {
        &self.explained_variance
    }

    /// Off-subspace residual norm of each training sample.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// Projects one displacement vector: returns its component-space
    /// coordinates and its off-subspace residual norm.
    pub fn project(&self, d: DisplacementVector) -> (DVector<f64>, f64) {
        let centered = DVector::from_vec(vec![
            d.dx - self.sample_mean[0],
            d.dy - self.sample_mean[1],
        ]);
        let scores = self.basis.transpose() * &centered;
        let residual = (&centered - &self.basis * &scores).norm();
        (scores, residual)
    }
}

/// Projects displacement vectors onto their `m ∈ {1, 2}` leading principal
/// components (centered). Needs at least `m + 1` samples with nonzero
/// scatter.
pub fn project_dvs(samples: &[DisplacementVector], m: usize) -> Result<PcProjection> {
    if m < 1 || m > 2 {
        return Err(Error::InvalidConfig(format!(
            "component count must be 1 or 2, got {m}"
        )));
    }
    if samples.len() < m + 1 {
        return Err(Error::InvalidConfig(format!(
            "need at least {} samples for {m} components, got {}",
            m + 1,
            samples.len()
        )));
    }
    if let Some(bad) = samples.iter().find(|d| !d.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "displacement samples must be finite, found ({}, {})",
            bad.dx, bad.dy
        )));
    }
    let n = samples.len();
    let data = DMatrix::from_fn(n, 2, |i, j| if j == 0 { samples[i].dx } else { samples[i].dy });
    let factors = pca_of_matrix(&data, m, true)?;
    if factors.eigenvalues()[0] <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let basis = factors.loadings().clone();
    let sample_mean = factors.column_means().clone();
    let scores = factors.scores().clone();
    // Eigenvalues of the centered Gram matrix scale to sample variance by
    // 1/(n − 1).
    let explained_variance = factors.eigenvalues() / (n as f64 - 1.0);
    let mut residuals = Vec::with_capacity(n);
    for i in 0..n {
        let centered = DVector::from_vec(vec![
            data[(i, 0)] - sample_mean[0],
            data[(i, 1)] - sample_mean[1],
        ]);
        let y = scores.row(i).transpose();
        residuals.push((&centered - &basis * &y).norm());
    }
    Ok(PcProjection {
        basis,
        sample_mean,
        scores,
        explained_variance,
        residuals,
    })
}

/// Quantile knobs for class fitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Chi-square quantile defining the Mahalanobis acceptance radius.
    pub mahalanobis_quantile: f64,
    /// Quantile of training residuals defining the residual threshold.
    pub residual_quantile: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            mahalanobis_quantile: DEFAULT_MAHALANOBIS_QUANTILE,
            residual_quantile: DEFAULT_RESIDUAL_QUANTILE,
        }
    }
}

impl FitOptions {
    fn validate(&self) -> Result<()> {
        for (name, q) in [
            ("mahalanobis_quantile", self.mahalanobis_quantile),
            ("residual_quantile", self.residual_quantile),
        ] {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie strictly between 0 and 1, got {q}"
                )));
            }
        }
        Ok(())
    }
}

/// A Gaussian class model in component space.
#[derive(Debug, Clone)]
pub struct ClassModel {
    label: i64,
    center: DVector<f64>,
    covariance: DMatrix<f64>,
    inverse_covariance: DMatrix<f64>,
    mahalanobis_threshold: f64,
    residual_threshold: f64,
    members: usize,
}

impl ClassModel {
    pub fn label(&self) -> i64 {
        self.label
    }

    /// Class mean in component space.
    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    /// Regularized sample covariance in component space.
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Acceptance radius: the square root of the chi-square quantile.
    pub fn mahalanobis_threshold(&self) -> f64 {
        self.mahalanobis_threshold
    }

    /// Largest tolerated off-subspace residual.
    pub fn residual_threshold(&self) -> f64 {
        self.residual_threshold
    }

    /// Training samples behind this class.
    pub fn members(&self) -> usize {
        self.members
    }

    /// Mahalanobis distance of a component-space point to this class.
    pub fn mahalanobis(&self, scores: &DVector<f64>) -> f64 {
        let diff = scores - &self.center;
        let q = (&self.inverse_covariance * &diff).dot(&diff);
        q.max(0.0).sqrt()
    }

    /// Whether a projected point belongs to this class.
    pub fn accepts(&self, scores: &DVector<f64>, residual: f64) -> bool {
        self.mahalanobis(scores) <= self.mahalanobis_threshold
            && residual <= self.residual_threshold
    }
}

/// The set of fitted classes over one projection.
#[derive(Debug, Clone)]
pub struct ClusterModel {
    m: usize,
    classes: Vec<ClassModel>,
}

impl ClusterModel {
    /// Component-space dimensionality.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Fitted classes, ordered by ascending label.
    pub fn classes(&self) -> &[ClassModel] {
        &self.classes
    }

    /// Looks a class up by label.
    pub fn class(&self, label: i64) -> Option<&ClassModel> {
        self.classes.iter().find(|c| c.label == label)
    }
}

/// Classification verdict for one displacement vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Accepted by exactly one class.
    SingleClass,
    /// Accepted by several classes at once.
    MultipleLoci,
    /// Accepted by none.
    Outlier,
}

impl Verdict {
    /// Stable lowercase name used in reports.
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::SingleClass => "single-class",
            Verdict::MultipleLoci => "multiple-loci",
            Verdict::Outlier => "outlier",
        }
    }
}

/// Outcome of classifying one displacement vector.
#[derive(Debug, Clone)]
pub struct Classification {
    /// Component-space coordinates of the vector.
    pub scores: DVector<f64>,
    /// Off-subspace residual norm.
    pub residual: f64,
    /// Labels of accepting classes, nearest (by Mahalanobis distance)
    /// first.
    pub memberships: Vec<i64>,
    pub verdict: Verdict,
}

/// Nearest-rank quantile of an unsorted slice.
fn quantile(values: &[f64], q: f64) -> f64 {
    debug_assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite residuals"));
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Fits one Gaussian class per distinct label with default [`FitOptions`].
pub fn fit_classes(projection: &PcProjection, labels: &[i64]) -> Result<ClusterModel> {
    fit_classes_with(projection, labels, &FitOptions::default())
}

/// Fits one Gaussian class per distinct label.
///
/// `labels[i]` tags training sample `i` of the projection. Every class
/// needs at least `m + 1` members; covariance eigenvalues are floored at
/// [`COVARIANCE_EIGENVALUE_FLOOR`] so collinear classes stay usable.
pub fn fit_classes_with(
    projection: &PcProjection,
    labels: &[i64],
    options: &FitOptions,
) -> Result<ClusterModel> {
    options.validate()?;
    if labels.len() != projection.len() {
        return Err(Error::InvalidConfig(format!(
            "{} labels for {} samples",
            labels.len(),
            projection.len()
        )));
    }
    let m = projection.m();
    let chi = ChiSquared::new(m as f64)
        .map_err(|e| Error::InvalidConfig(format!("chi-square setup: {e}")))?;
    let mahalanobis_threshold = chi.inverse_cdf(options.mahalanobis_quantile).sqrt();

    let mut distinct: Vec<i64> = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();

    let mut classes = Vec::with_capacity(distinct.len());
    for &label in &distinct {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == label).collect();
        if members.len() < m + 1 {
            return Err(Error::InsufficientMembers {
                label,
                got: members.len(),
                need: m + 1,
            });
        }
        let count = members.len() as f64;
        let mut center = DVector::zeros(m);
        for &i in &members {
            center += projection.scores().row(i).transpose();
        }
        center /= count;

        let mut covariance = DMatrix::zeros(m, m);
        for &i in &members {
            let diff = projection.scores().row(i).transpose() - &center;
            covariance += &diff * diff.transpose();
        }
        covariance /= count - 1.0;

        // Floor the spectrum so collinear classes keep an invertible model.
        let eigen = SymmetricEigen::new(covariance);
        let floored = eigen.eigenvalues.map(|l| l.max(COVARIANCE_EIGENVALUE_FLOOR));
        let vectors = &eigen.eigenvectors;
        let covariance =
            vectors * DMatrix::from_diagonal(&floored) * vectors.transpose();
        let inverse_covariance =
            vectors * DMatrix::from_diagonal(&floored.map(|l| 1.0 / l)) * vectors.transpose();

        let residuals: Vec<f64> = members
            .iter()
            .map(|&i| projection.residuals()[i])
            .collect();
        let residual_threshold =
            quantile(&residuals, options.residual_quantile).max(RESIDUAL_THRESHOLD_FLOOR);

        classes.push(ClassModel {
            label,
            center,
            covariance,
            inverse_covariance,
            mahalanobis_threshold,
            residual_threshold,
            members: members.len(),
        });
    }
    Ok(ClusterModel { m, classes })
}

/// Classifies one displacement vector against a fitted model.
pub fn classify(
    d: DisplacementVector,
    projection: &PcProjection,
    model: &ClusterModel,
) -> Classification {
    let (scores, residual) = projection.project(d);
    let mut hits: Vec<(f64, i64)> = model
        .classes()
        .iter()
        .filter(|class| class.accepts(&scores, residual))
        .map(|class| (class.mahalanobis(&scores), class.label()))
        .collect();
    hits.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let memberships: Vec<i64> = hits.into_iter().map(|(_, label)| label).collect();
    let verdict = match memberships.len() {
        0 => Verdict::Outlier,
        1 => Verdict::SingleClass,
        _ => Verdict::MultipleLoci,
    };
    Classification {
        scores,
        residual,
        memberships,
        verdict,
    }
}

/// The acceptance ellipse of a two-component class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassEllipse {
    pub label: i64,
    /// Center in component space.
    pub center: [f64; 2],
    /// Semi-axis along the major principal direction.
    pub semi_major: f64,
    /// Semi-axis along the minor principal direction.
    pub semi_minor: f64,
    /// Major-axis angle in radians, normalized to `[0, π)`.
    pub orientation: f64,
}

/// Extracts the acceptance ellipse of a class fitted in a two-component
/// space (`m = 2` only).
pub fn ellipse_parameters(class: &ClassModel) -> Result<ClassEllipse> {
    if class.center().len() != 2 {
        return Err(Error::InvalidConfig(format!(
            "ellipses require a 2-component space, class has {}",
            class.center().len()
        )));
    }
    let eigen = SymmetricEigen::new(class.covariance().clone());
    let (major, minor) = if eigen.eigenvalues[0] >= eigen.eigenvalues[1] {
        (0, 1)
    } else {
        (1, 0)
    };
    let radius = class.mahalanobis_threshold();
    let axis = eigen.eigenvectors.column(major);
    let mut orientation = axis[1].atan2(axis[0]);
    if orientation < 0.0 {
        orientation += std::f64::consts::PI;
    }
    if orientation >= std::f64::consts::PI {
        orientation -= std::f64::consts::PI;
    }
    Ok(ClassEllipse {
        label: class.label(),
        center: [class.center()[0], class.center()[1]],
        semi_major: radius * eigen.eigenvalues[major].max(0.0).sqrt(),
        semi_minor: radius * eigen.eigenvalues[minor].max(0.0).sqrt(),
        orientation,
    })
}
