//! Regression back-ends for the displacement-update system `z ≈ G·u`.
//!
//! All four solvers consume an [`ObservationSystem`] and return the update
//! vector `u` they estimate:
//!
//! * [`ols`] — ordinary least squares, `u = (GᵀG)⁻¹ Gᵀz`;
//! * [`rls`] — ridge-regularized least squares, `u = (GᵀG + Λ)⁻¹ Gᵀz`;
//! * [`pcr1`] — regression on the `k` leading principal components of `G`:
//!   with the factorization `G = T·Pᵀ`, `u = P (TᵀT)⁻¹ Tᵀ z`;
//! * [`pcr2`] — as `pcr1` but with a regularizer `Ξ` added in the component
//!   domain, `u = P (TᵀT + Ξ)⁻¹ Tᵀ z`.
//!
//! The component domain is diagonal (`TᵀT = diag(λ₁ ≥ λ₂ ≥ …)`, the
//! eigenvalues of `GᵀG`), so the PCR solves are simple per-component
//! divisions and the family collapses predictably: `pcr1` with all
//! components equals `ols`, `pcr2` with `Ξ = 0` equals `pcr1`, and at full
//! rank `pcr2` with `Ξ = λI` equals `rls` with `Λ = λI`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::image::ObservationSystem;

/// Solved displacement update (length `p`).
pub type UpdateVector = DVector<f64>;

/// Condition-number ceiling beyond which a normal matrix counts as
/// singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Absolute floor for a usable component-domain denominator; retained
/// eigenvalues (plus their regularizer entry) below this are degenerate.
pub const COMPONENT_EIGENVALUE_FLOOR: f64 = 1e-12;

/// Relative eigenvalue floor used by [`effective_components`]: components
/// whose eigenvalue falls below `λ_max ×` this ratio carry no usable
/// signal.
pub const EIGENVALUE_RATIO_FLOOR: f64 = 1e-8;

/// A regularizer for [`rls`] (parameter domain) or [`pcr2`] (component
/// domain).
#[derive(Debug, Clone, PartialEq)]
pub enum RegularizerSpec {
    /// No regularization (`Λ = 0`).
    None,
    /// `λ · I` with a single nonnegative scale.
    ScalarIdentity(f64),
    /// An explicit nonnegative diagonal.
    Diagonal(Vec<f64>),
}

impl RegularizerSpec {
    /// The regularizer's diagonal, expanded to length `dim`.
    pub fn diagonal(&self, dim: usize) -> Result<DVector<f64>> {
        match self {
            RegularizerSpec::None => Ok(DVector::zeros(dim)),
            RegularizerSpec::ScalarIdentity(lambda) => {
                if !lambda.is_finite() || *lambda < 0.0 {
                    return Err(Error::InvalidRegularizer(format!(
                        "scalar weight must be finite and nonnegative, got {lambda}"
                    )));
                }
                Ok(DVector::from_element(dim, *lambda))
            }
            RegularizerSpec::Diagonal(entries) => {
                if entries.len() != dim {
                    return Err(Error::InvalidRegularizer(format!(
                        "diagonal has {} entries, problem needs {dim}",
                        entries.len()
                    )));
                }
                if let Some(bad) = entries.iter().find(|v| !v.is_finite() || **v < 0.0) {
                    return Err(Error::InvalidRegularizer(format!(
                        "diagonal entries must be finite and nonnegative, found {bad}"
                    )));
                }
                Ok(DVector::from_vec(entries.clone()))
            }
        }
    }

    /// The regularizer as a `dim × dim` matrix.
    pub fn matrix(&self, dim: usize) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_diagonal(&self.diagonal(dim)?))
    }
}

/// Spectral condition estimate `λ_max / λ_min` of a symmetric PSD matrix;
/// infinite when the smallest eigenvalue is non-positive.
fn spectral_condition(matrix: &DMatrix<f64>) -> f64 {
    let eigen = SymmetricEigen::new(matrix.clone());
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    for &value in eigen.eigenvalues.iter() {
        max = max.max(value);
        min = min.min(value);
    }
    if min <= 0.0 || max <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn solve_normal_equations(matrix: DMatrix<f64>, rhs: DVector<f64>) -> Result<UpdateVector> {
    let condition = spectral_condition(&matrix);
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return Err(Error::SingularSystem { condition });
    }
    match Cholesky::new(matrix) {
        Some(chol) => Ok(chol.solve(&rhs)),
        None => Err(Error::SingularSystem { condition }),
    }
}

/// Ordinary least squares: `u = (GᵀG)⁻¹ Gᵀz`.
///
/// Fails with a singularity error when `GᵀG` is rank-deficient or its
/// condition estimate exceeds [`CONDITION_LIMIT`].
pub fn ols(sys: &ObservationSystem) -> Result<UpdateVector> {
    solve_normal_equations(sys.normal_matrix(), sys.rhs())
}

/// Regularized least squares: `u = (GᵀG + Λ)⁻¹ Gᵀz`.
///
/// `Λ = 0` reproduces [`ols`] exactly, including its failure on singular
/// systems; any strictly positive diagonal guarantees solvability.
pub fn rls(sys: &ObservationSystem, lambda: &RegularizerSpec) -> Result<UpdateVector> {
    let matrix = sys.normal_matrix() + lambda.matrix(sys.dim())?;
    solve_normal_equations(matrix, sys.rhs())
}

/// Principal-component factorization `G = T·Pᵀ` of an observation matrix.
///
/// `loadings` (`p × k`) holds orthonormal eigenvectors of `GᵀG` (of the
/// column-centered matrix when centering was requested), ordered by
/// descending eigenvalue. `scores = G·P` (`N × k`) are the projections of
/// the rows onto those directions, so `TᵀT` is the diagonal of
/// `eigenvalues`. Each loading column's sign is fixed by making its
/// largest-magnitude entry positive, which keeps the factorization
/// reproducible across runs.
#[derive(Debug, Clone)]
pub struct PcaFactors {
    loadings: DMatrix<f64>,
    scores: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    column_means: DVector<f64>,
    rank_deficient: bool,
}

impl PcaFactors {
    /// Number of retained components `k`.
    pub fn k(&self) -> usize {
        self.loadings.ncols()
    }

    /// Orthonormal loading matrix `P` (`p × k`).
    pub fn loadings(&self) -> &DMatrix<f64> {
        &self.loadings
    }

    /// Score matrix `T = G·P` (`N × k`).
    pub fn scores(&self) -> &DMatrix<f64> {
        &self.scores
    }

    /// Eigenvalues of `GᵀG` for the retained components, descending.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Column means that were subtracted (zero when centering was off).
    pub fn column_means(&self) -> &DVector<f64> {
        &self.column_means
    }

    /// True when a retained eigenvalue is numerically negligible relative
    /// to the largest one, i.e. `k` exceeds the effective rank.
    pub fn is_rank_deficient(&self) -> bool {
        self.rank_deficient
    }

    /// The same factorization restricted to the `k` leading components
    /// (`1 ≤ k ≤ self.k()`).
    pub fn truncated(&self, k: usize) -> PcaFactors {
        assert!(k >= 1 && k <= self.k(), "truncation must keep 1..=k components");
        let eigenvalues = self.eigenvalues.rows(0, k).into_owned();
        let lambda_max = eigenvalues.max();
        let rank_deficient = lambda_max <= 0.0
            || eigenvalues
                .iter()
                .any(|&l| l < lambda_max * EIGENVALUE_RATIO_FLOOR);
        PcaFactors {
            loadings: self.loadings.columns(0, k).into_owned(),
            scores: self.scores.columns(0, k).into_owned(),
            eigenvalues,
            column_means: self.column_means.clone(),
            rank_deficient,
        }
    }

    /// Rebuilds the data as `T·Pᵀ` plus the stored column means. Exact (to
    /// rounding) when `k` covers the full rank; otherwise the best rank-`k`
    /// approximation.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut rec = &self.scores * self.loadings.transpose();
        for j in 0..rec.ncols() {
            let mean = self.column_means[j];
            for i in 0..rec.nrows() {
                rec[(i, j)] += mean;
            }
        }
        rec
    }
}

/// PCA of a raw data matrix; see [`pca`] for the observation-system entry
/// point used by the motion solvers.
pub(crate) fn pca_of_matrix(data: &DMatrix<f64>, k: usize, center: bool) -> Result<PcaFactors> {
    let (n, p) = data.shape();
    if k < 1 || k > p {
        return Err(Error::InvalidConfig(format!(
            "component count must satisfy 1 <= k <= {p}, got {k}"
        )));
    }
    if n < k {
        return Err(Error::InvalidConfig(format!(
            "need at least {k} samples for {k} components, got {n}"
        )));
    }

    let mut column_means = DVector::zeros(p);
    let mut working = data.clone();
    if center {
        for j in 0..p {
            let mean = data.column(j).sum() / n as f64;
            column_means[j] = mean;
            for i in 0..n {
                working[(i, j)] -= mean;
            }
        }
    }

    let svd = working.clone().svd(true, true);
    let v_t = svd
        .v_t
        .expect("SVD was requested with right singular vectors");
    let singular = &svd.singular_values;

    // Sort component indices by descending singular value; nalgebra already
    // orders them, but the explicit sort makes the contract local.
    let mut order: Vec<usize> = (0..singular.len()).collect();
    order.sort_by(|&a, &b| singular[b].partial_cmp(&singular[a]).expect("finite singular values"));

    let mut loadings = DMatrix::zeros(p, k);
    let mut eigenvalues = DVector::zeros(k);
    for (col, &idx) in order.iter().take(k).enumerate() {
        let sigma = singular[idx];
        eigenvalues[col] = sigma * sigma;
        for row in 0..p {
            loadings[(row, col)] = v_t[(idx, row)];
        }
    }

    // Deterministic sign: the largest-magnitude entry of each loading
    // column points in the positive direction.
    for col in 0..k {
        let mut pivot = 0;
        let mut best = 0.0_f64;
        for row in 0..p {
            let mag = loadings[(row, col)].abs();
            if mag > best {
                best = mag;
                pivot = row;
            }
        }
        if best > 0.0 && loadings[(pivot, col)] < 0.0 {
            for row in 0..p {
                loadings[(row, col)] = -loadings[(row, col)];
            }
        }
    }

    let scores = &working * &loadings;
    let lambda_max = eigenvalues.max();
    let rank_deficient = lambda_max <= 0.0
        || eigenvalues
            .iter()
            .any(|&l| l < lambda_max * EIGENVALUE_RATIO_FLOOR);

    Ok(PcaFactors {
        loadings,
        scores,
        eigenvalues,
        column_means,
        rank_deficient,
    })
}

/// Principal-component factorization of the gradient matrix of `sys`,
/// retaining `k` components (`1 ≤ k ≤ p`, `N ≥ k`).
///
/// Motion solving uses `center = false` so that `G = T·Pᵀ` holds for the
/// raw gradients; clustering centers its samples first.
pub fn pca(sys: &ObservationSystem, k: usize, center: bool) -> Result<PcaFactors> {
    pca_of_matrix(sys.gradients(), k, center)
}

/// Number of components whose eigenvalue reaches `ratio × λ_max`. Zero
/// when even the leading eigenvalue vanishes.
pub fn effective_components(factors: &PcaFactors, ratio: f64) -> usize {
    let lambda_max = factors.eigenvalues().max();
    if lambda_max <= 0.0 {
        return 0;
    }
    factors
        .eigenvalues()
        .iter()
        .filter(|&&l| l >= lambda_max * ratio)
        .count()
}

/// Shared component-domain regression `u = P (TᵀT + Ξ)⁻¹ Tᵀ z` on a
/// precomputed factorization. `xi = None` means `Ξ = 0`.
fn component_regression(
    factors: &PcaFactors,
    z: &DVector<f64>,
    xi: Option<&DVector<f64>>,
) -> Result<UpdateVector> {
    if factors.scores().nrows() != z.len() {
        return Err(Error::InvalidConfig(format!(
            "factorization has {} rows but observation vector has {}",
            factors.scores().nrows(),
            z.len()
        )));
    }
    let k = factors.k();
    let mut coefficients = DVector::zeros(k);
    for i in 0..k {
        let eigenvalue = factors.eigenvalues()[i];
        let denom = eigenvalue + xi.map_or(0.0, |v| v[i]);
        if denom < COMPONENT_EIGENVALUE_FLOOR {
            return Err(Error::DegenerateComponent {
                index: i,
                eigenvalue,
            });
        }
        coefficients[i] = factors.scores().column(i).dot(z) / denom;
    }
    Ok(factors.loadings() * coefficients)
}

/// Principal-component regression on the `k` leading components:
/// `u = P (TᵀT)⁻¹ Tᵀ z` with uncentered factors.
///
/// With `k = p` on a well-conditioned system this reproduces [`ols`];
/// smaller `k` discards the weakest gradient directions. A retained
/// eigenvalue below [`COMPONENT_EIGENVALUE_FLOOR`] is a degenerate-component
/// error — drop to a smaller `k` instead.
pub fn pcr1(sys: &ObservationSystem, k: usize) -> Result<UpdateVector> {
    let factors = pca(sys, k, false)?;
    component_regression(&factors, sys.observations(), None)
}

/// Principal-component regression with a component-domain regularizer:
/// `u = P (TᵀT + Ξ)⁻¹ Tᵀ z`.
///
/// `Ξ = 0` collapses to [`pcr1`]; at full rank (`k = p`) a scalar
/// `Ξ = λI` coincides with [`rls`] under `Λ = λI`, because `P` is then a
/// complete orthonormal basis.
pub fn pcr2(sys: &ObservationSystem, k: usize, xi: &RegularizerSpec) -> Result<UpdateVector> {
    let factors = pca(sys, k, false)?;
    let xi = xi.diagonal(k)?;
    component_regression(&factors, sys.observations(), Some(&xi))
}

/// Solves on an existing factorization, avoiding a second SVD when the
/// caller already holds one (the estimation engine's hot path).
pub(crate) fn component_solve(
    factors: &PcaFactors,
    z: &DVector<f64>,
    xi: Option<&DVector<f64>>,
) -> Result<UpdateVector> {
    component_regression(factors, z, xi)
}
