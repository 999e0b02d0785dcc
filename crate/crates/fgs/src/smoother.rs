//! The forest-guided local linear smoother.
//!
//! An [`FgsModel`] bundles a forest trained on one half of the data
//! (supplying weights and bandwidth matrices), a disjoint smoothing
//! half, and a variance model. At a query (x, h) it fits weighted
//! least squares with kernel K(·; hH_x), yielding the prediction
//! β̂₀ = ℓ·Y, local slopes β̂, and standard errors.
//!
//! Numerics:
//! - Kernel weights are computed in log space and normalized by their
//!   maximum. The coefficient rows are exactly invariant to rescaling
//!   the weight diagonal, so this changes nothing but avoids underflow
//!   at small h.
//! - The WLS system is solved in displacement-balanced coordinates
//!   (slope columns divided by the RMS weighted displacement), another
//!   exact reparameterization of the coefficient rows.
//! - An ill-conditioned Gram (condition > 1e12) receives a ridge on its
//!   slope block only, and the fit is flagged. Leaving the intercept
//!   row untouched keeps Σℓ = 1 exactly, so degenerate fits fall back
//!   toward a weighted mean rather than shrinking toward zero.
//! - The hard error is reserved for designs where no point carries any
//!   kernel weight at all (possible for the compactly supported
//!   kernel); every other case yields a fit, flagged if regularized.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bandwidth::{bandwidth_at, BandwidthMatrix, KernelFamily, KernelSpec};
use crate::dataset::{split, Dataset, DatasetRepr};
use crate::error::{FgsError, Result};
use crate::forest::{
    train_forest, train_variance_model, ForestConfig, ForestModel, ForestModelRepr, VarianceModel,
    VarianceModelRepr, DEFAULT_VARIANCE_INFLATION,
};
use crate::linalg::normal_quantile;
use crate::parallel;
use crate::rng::{derive_seed, Stream};
use crate::Interval;

/// Default resolution: h = 1 is the direct approximation to the forest.
pub const DEFAULT_H: f64 = 1.0;

/// Gram condition number beyond which the slope-block ridge engages.
const GRAM_CONDITION_LIMIT: f64 = 1e12;

/// Ridge size as a fraction of trace(G)/(d+1).
const GRAM_RIDGE_REL: f64 = 1e-10;

/// Normalized kernel weights at or below this level do not count
/// toward the effectively-weighted point total.
const EFFECTIVE_WEIGHT_TOL: f64 = 1e-12;

/// Model-file schema version.
pub const FORMAT_VERSION: u32 = 1;

/// Pipeline settings for fitting an [`FgsModel`]. The forest seed acts
/// as the master seed for the split, the forest, and the variance
/// forest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FgsConfig {
    pub forest: ForestConfig,
    /// Inflation factor c applied to σ̂ (variance scales by c²).
    pub inflation: f64,
    pub kernel: KernelFamily,
    /// Relative ridge threshold for bandwidth regularization.
    pub eps_rel: f64,
}

impl Default for FgsConfig {
    fn default() -> Self {
        FgsConfig {
            forest: ForestConfig::default(),
            inflation: DEFAULT_VARIANCE_INFLATION,
            kernel: KernelFamily::Gaussian,
            eps_rel: crate::bandwidth::DEFAULT_EPS_REL,
        }
    }
}

/// Local linear fit at a query point and resolution.
#[derive(Debug, Clone)]
pub struct LocalFit {
    pub x: DVector<f64>,
    pub h: f64,
    /// Intercept β̂₀ = μ̂_h(x).
    pub beta0: f64,
    /// Local slopes β̂.
    pub beta: DVector<f64>,
    /// Smoother weight vector ℓ over the smoothing rows.
    pub ell: DVector<f64>,
    pub se_beta0: f64,
    pub se_beta: DVector<f64>,
    /// Sum of max-normalized kernel weights: the effective number of
    /// points backing the fit.
    pub effective_count: f64,
    /// True when the Gram ridge or the bandwidth ridge engaged.
    pub regularized: bool,
}

/// Slopes with standard errors and bands at one resolution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradientBands {
    pub slopes: Vec<f64>,
    pub ses: Vec<f64>,
    pub bands: Vec<Interval>,
}

/// One grid entry of [`FgsModel::gradient_path`]: either bands or the
/// error message for that h. Per-h failures are recorded, not fatal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradientStep {
    pub h: f64,
    pub bands: Option<GradientBands>,
    pub error: Option<String>,
}

/// Default resolution grid for gradient paths: 20 log-spaced points in
/// [0.1, 10], augmented with h = 1.
pub fn default_gradient_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..20)
        .map(|k| 10f64.powf(-1.0 + 2.0 * k as f64 / 19.0))
        .collect();
    grid.push(1.0);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Forest-guided smoother: guide forest, smoothing data, variance
/// model, kernel, and the bandwidth ridge threshold.
#[derive(Debug, Clone)]
pub struct FgsModel {
    forest: ForestModel,
    smoothing: Dataset,
    variance: VarianceModel,
    kernel: KernelSpec,
    eps_rel: f64,
    sigma2_at_smoothing: Vec<f64>,
}

/// Serialization form of [`FgsModel`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FgsModelRepr {
    pub format_version: u32,
    pub forest: ForestModelRepr,
    pub smoothing: DatasetRepr,
    pub variance: VarianceModelRepr,
    pub kernel: KernelSpec,
    pub eps_rel: f64,
}

/// Per-query geometry shared across resolutions: the bandwidth matrix
/// H_x and whitened displacements of the smoothing rows.
pub(crate) struct QueryGeometry {
    x: DVector<f64>,
    bandwidth: BandwidthMatrix,
    /// Row i holds u_i = X_i − x.
    displacements: DMatrix<f64>,
    /// Row i holds z_i = H_x^{-1} u_i; the profile at resolution h uses
    /// z_i / h.
    whitened: DMatrix<f64>,
}

struct LocalSolve {
    /// (d+1) × n₂ coefficient rows: row 0 is ℓ, row j the gradient row.
    coef: DMatrix<f64>,
    effective_count: f64,
    regularized: bool,
}

impl FgsModel {
    /// Fits the full pipeline on `data`: two-way split, guide forest on
    /// the first half, variance model, smoothing data from the second.
    pub fn fit(data: &Dataset, config: &FgsConfig) -> Result<Self> {
        let master = config.forest.seed;
        let parts = split(data, 2, master)?;
        let (d1, d2) = (parts[0].clone(), parts[1].clone());
        Self::fit_on_parts(&d1, d2, config)
    }

    /// Fits the pipeline with an explicit guide half and smoothing
    /// half, for callers that manage their own splits.
    pub fn fit_on_parts(guide: &Dataset, smoothing: Dataset, config: &FgsConfig) -> Result<Self> {
        let master = config.forest.seed;
        let forest = train_forest(guide, &config.forest)?;
        let var_config = ForestConfig {
            seed: derive_seed(master, Stream::VarianceForest, 0),
            ..config.forest.clone()
        };
        let variance = train_variance_model(&forest, &var_config, config.inflation)?;
        FgsModel::from_parts(forest, smoothing, variance, config.kernel, config.eps_rel)
    }

    /// Assembles a model from already-trained parts and caches σ̂² at
    /// the smoothing rows.
    pub fn from_parts(
        forest: ForestModel,
        smoothing: Dataset,
        variance: VarianceModel,
        kernel: KernelFamily,
        eps_rel: f64,
    ) -> Result<Self> {
        if smoothing.dim() != forest.data().dim() {
            return Err(FgsError::DimensionMismatch {
                expected: forest.data().dim(),
                actual: smoothing.dim(),
            });
        }
        let spec = KernelSpec {
            family: kernel,
            dim: smoothing.dim(),
        };
        let sigma2 = parallel::try_map_indices(smoothing.num_rows(), |i| {
            variance.predict_sigma2(&smoothing.point(i))
        })?;
        Ok(FgsModel {
            forest,
            smoothing,
            variance,
            kernel: spec,
            eps_rel,
            sigma2_at_smoothing: sigma2,
        })
    }

    pub fn forest(&self) -> &ForestModel {
        &self.forest
    }

    pub fn smoothing_data(&self) -> &Dataset {
        &self.smoothing
    }

    pub fn variance_model(&self) -> &VarianceModel {
        &self.variance
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn eps_rel(&self) -> f64 {
        self.eps_rel
    }

    pub fn dim(&self) -> usize {
        self.smoothing.dim()
    }

    /// Cached σ̂²(X_i) (inflated) at the smoothing rows.
    pub fn sigma2_at_smoothing(&self) -> &[f64] {
        &self.sigma2_at_smoothing
    }

    /// Bandwidth matrix H_x induced by the guide forest at x.
    pub fn bandwidth_matrix(&self, x: &DVector<f64>) -> Result<BandwidthMatrix> {
        bandwidth_at(&self.forest, self.forest.data(), x, self.eps_rel)
    }

    /// True when x lies inside the per-coordinate range of the
    /// smoothing rows.
    pub fn in_support(&self, x: &DVector<f64>) -> bool {
        (0..self.dim()).all(|j| {
            let col = self.smoothing.features().column(j);
            let (lo, hi) = col
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
                    (l.min(v), h.max(v))
                });
            x[j] >= lo && x[j] <= hi
        })
    }

    /// Computes the per-query geometry once; resolutions share it.
    pub(crate) fn query_geometry(&self, x: &DVector<f64>) -> Result<QueryGeometry> {
        if x.len() != self.dim() {
            return Err(FgsError::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let bw = bandwidth_at(&self.forest, self.forest.data(), x, self.eps_rel)?;
        let n2 = self.smoothing.num_rows();
        let d = self.dim();
        let mut displacements = DMatrix::zeros(n2, d);
        let mut whitened = DMatrix::zeros(n2, d);
        for i in 0..n2 {
            let u = self.smoothing.point(i) - x;
            let z = bw.solve(&u)?;
            displacements.row_mut(i).copy_from(&u.transpose());
            whitened.row_mut(i).copy_from(&z.transpose());
        }
        Ok(QueryGeometry {
            x: x.clone(),
            bandwidth: bw,
            displacements,
            whitened,
        })
    }

    fn solve_local(&self, geom: &QueryGeometry, h: f64) -> Result<LocalSolve> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(FgsError::InvalidConfig(format!(
                "resolution h must be positive and finite, got {h}"
            )));
        }
        let n2 = self.smoothing.num_rows();
        let d = self.dim();

        // Log-profile per row at resolution h, then max-normalize.
        let mut profiles = vec![f64::NEG_INFINITY; n2];
        let mut pmax = f64::NEG_INFINITY;
        let mut z = DVector::zeros(d);
        for (i, profile) in profiles.iter_mut().enumerate() {
            for j in 0..d {
                z[j] = geom.whitened[(i, j)] / h;
            }
            let p = self.kernel.log_profile(&z);
            *profile = p;
            pmax = pmax.max(p);
        }
        if pmax == f64::NEG_INFINITY {
            return Err(FgsError::SingularDesign {
                h,
                effective_count: 0.0,
            });
        }
        let weights: Vec<f64> = profiles.iter().map(|&p| (p - pmax).exp()).collect();
        let effective_count: f64 = weights.iter().sum();
        let active = weights
            .iter()
            .filter(|&&w| w > EFFECTIVE_WEIGHT_TOL)
            .count();

        // Balance: divide slope columns by the RMS weighted displacement.
        let weight_total: f64 = effective_count;
        let disp2: f64 = (0..n2)
            .map(|i| weights[i] * geom.displacements.row(i).norm_squared())
            .sum();
        let scale = (disp2.max(1e-300) / (d as f64 * weight_total))
            .sqrt()
            .max(1e-150);

        // Gram and weighted design in balanced coordinates.
        let mut gram = DMatrix::zeros(d + 1, d + 1);
        let mut design_w = DMatrix::zeros(d + 1, n2);
        let mut xi = DVector::zeros(d + 1);
        for i in 0..n2 {
            let w = weights[i];
            if w == 0.0 {
                continue;
            }
            xi[0] = 1.0;
            for j in 0..d {
                xi[j + 1] = geom.displacements[(i, j)] / scale;
            }
            gram.syger(w, &xi, &xi, 1.0);
            for j in 0..=d {
                design_w[(j, i)] = w * xi[j];
            }
        }
        for i in 0..=d {
            for j in (i + 1)..=d {
                gram[(i, j)] = gram[(j, i)];
            }
        }

        let condition = crate::linalg::sym_condition(&gram);
        let mut regularized = geom.bandwidth.regularized();
        if condition.is_nan() || condition > GRAM_CONDITION_LIMIT || active < d + 1 {
            // Slope-block ridge: the intercept row stays untouched, so
            // G_r e₁ = G e₁ and Σℓ = 1 survives exactly.
            let delta = GRAM_RIDGE_REL * gram.trace() / (d + 1) as f64;
            for j in 1..=d {
                gram[(j, j)] += delta;
            }
            regularized = true;
        }

        let chol = gram.clone().cholesky().ok_or_else(|| {
            FgsError::Numerical(
                "local Gram matrix is not positive definite after regularization".into(),
            )
        })?;
        let mut coef = chol.solve(&design_w);

        // Undo the balancing on the slope rows.
        for j in 1..=d {
            for i in 0..n2 {
                coef[(j, i)] /= scale;
            }
        }
        Ok(LocalSolve {
            coef,
            effective_count,
            regularized,
        })
    }

    /// Coefficient weight row at (x, h): index 0 returns ℓ (the
    /// prediction weights), index j ∈ [1, d] the gradient row for
    /// coordinate j.
    pub fn smoother_weights(
        &self,
        x: &DVector<f64>,
        h: f64,
        coefficient_index: usize,
    ) -> Result<DVector<f64>> {
        if coefficient_index > self.dim() {
            return Err(FgsError::InvalidConfig(format!(
                "coefficient index must be in [0, {}], got {coefficient_index}",
                self.dim()
            )));
        }
        let geom = self.query_geometry(x)?;
        let solve = self.solve_local(&geom, h)?;
        Ok(solve.coef.row(coefficient_index).transpose())
    }

    pub(crate) fn predict_with_geometry(&self, geom: &QueryGeometry, h: f64) -> Result<LocalFit> {
        let solve = self.solve_local(geom, h)?;
        let y = self.smoothing.response();
        let d = self.dim();
        let beta_all = &solve.coef * y;
        let mut se = DVector::zeros(d + 1);
        for j in 0..=d {
            let mut s2 = 0.0;
            for i in 0..self.smoothing.num_rows() {
                let c = solve.coef[(j, i)];
                s2 += self.sigma2_at_smoothing[i] * c * c;
            }
            se[j] = s2.sqrt();
        }
        Ok(LocalFit {
            x: geom.x.clone(),
            h,
            beta0: beta_all[0],
            beta: beta_all.rows(1, d).into_owned(),
            ell: solve.coef.row(0).transpose(),
            se_beta0: se[0],
            se_beta: se.rows(1, d).into_owned(),
            effective_count: solve.effective_count,
            regularized: solve.regularized,
        })
    }

    /// Local linear fit at (x, h).
    pub fn predict(&self, x: &DVector<f64>, h: f64) -> Result<LocalFit> {
        let geom = self.query_geometry(x)?;
        self.predict_with_geometry(&geom, h)
    }

    /// Variability interval β̂₀ ± z_{α/2}·se(β̂₀): honest about
    /// variance, silent about bias.
    pub fn variability_interval(&self, x: &DVector<f64>, h: f64, alpha: f64) -> Result<Interval> {
        check_alpha(alpha)?;
        let fit = self.predict(x, h)?;
        let z = normal_quantile(1.0 - alpha / 2.0)?;
        Ok(Interval {
            lo: fit.beta0 - z * fit.se_beta0,
            hi: fit.beta0 + z * fit.se_beta0,
        })
    }

    /// Slopes with bands over a resolution grid. Failures at single h
    /// values are recorded in the step, not returned as errors.
    pub fn gradient_path(
        &self,
        x: &DVector<f64>,
        h_grid: &[f64],
        alpha: f64,
    ) -> Result<Vec<GradientStep>> {
        check_alpha(alpha)?;
        if h_grid.is_empty() {
            return Err(FgsError::InvalidConfig("empty resolution grid".into()));
        }
        if h_grid.windows(2).any(|w| w[0] >= w[1]) || h_grid[0] <= 0.0 {
            return Err(FgsError::InvalidConfig(
                "resolution grid must be strictly positive and ascending".into(),
            ));
        }
        let z = normal_quantile(1.0 - alpha / 2.0)?;
        let geom = self.query_geometry(x)?;
        Ok(h_grid
            .iter()
            .map(|&h| match self.predict_with_geometry(&geom, h) {
                Ok(fit) => {
                    let d = self.dim();
                    let bands = (0..d)
                        .map(|j| Interval {
                            lo: fit.beta[j] - z * fit.se_beta[j],
                            hi: fit.beta[j] + z * fit.se_beta[j],
                        })
                        .collect();
                    GradientStep {
                        h,
                        bands: Some(GradientBands {
                            slopes: fit.beta.iter().cloned().collect(),
                            ses: fit.se_beta.iter().cloned().collect(),
                            bands,
                        }),
                        error: None,
                    }
                }
                Err(e) => GradientStep {
                    h,
                    bands: None,
                    error: Some(e.to_string()),
                },
            })
            .collect())
    }

    pub fn to_repr(&self) -> FgsModelRepr {
        FgsModelRepr {
            format_version: FORMAT_VERSION,
            forest: self.forest.to_repr(),
            smoothing: (&self.smoothing).into(),
            variance: self.variance.to_repr(),
            kernel: self.kernel,
            eps_rel: self.eps_rel,
        }
    }

    pub fn from_repr(repr: FgsModelRepr) -> Result<Self> {
        if repr.format_version != FORMAT_VERSION {
            return Err(FgsError::InvalidData(format!(
                "unsupported model format version {} (expected {})",
                repr.format_version, FORMAT_VERSION
            )));
        }
        let forest = ForestModel::from_repr(repr.forest)?;
        let smoothing: Dataset = repr.smoothing.try_into()?;
        let variance = VarianceModel::from_repr(repr.variance)?;
        FgsModel::from_parts(
            forest,
            smoothing,
            variance,
            repr.kernel.family,
            repr.eps_rel,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_repr())?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        FgsModel::from_repr(serde_json::from_str(json)?)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(FgsError::InvalidConfig(format!(
            "alpha must be in (0,1), got {alpha}"
        )));
    }
    Ok(())
}
