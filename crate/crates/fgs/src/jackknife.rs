//! Generalized-jackknife bias correction and confidence intervals.
//!
//! The smoother is evaluated on a grid of resolutions h₁ < … < h_b,
//! giving m̂ = (μ̂_{h₁}(x), …, μ̂_{h_b}(x)). Least squares against the
//! polynomial design with rows (1, h², h³, …, h^t) splits m̂ into a
//! debiased level μ†(x) (the intercept) and an explicit bias estimate
//! B̂(x,h). Because m̂ = L·Y is linear in the responses, μ† = ℓ̃·Y has
//! an exact variance expression s² = Σ ℓ̃_i² σ̂²(X_i), which yields the
//! interval μ† ± z_{α/2} s.
//!
//! Invariant: the design has no h¹ column; the bias expansion starts
//! at h².

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Deserialize, Serialize};

use crate::error::{FgsError, Result};
use crate::linalg::normal_quantile;
use crate::parallel;
use crate::smoother::FgsModel;
use crate::Interval;

/// Resolution grid, polynomial order, and confidence level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JackknifeConfig {
    /// Strictly positive, strictly ascending resolutions.
    pub h_grid: Vec<f64>,
    /// Bias polynomial order t; the expansion is Σ_{j=2}^t κ_j h^j.
    pub t: usize,
    pub alpha: f64,
}

impl Default for JackknifeConfig {
    fn default() -> Self {
        JackknifeConfig {
            h_grid: default_h_grid(),
            t: 2,
            alpha: 0.05,
        }
    }
}

impl JackknifeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t < 2 {
            return Err(FgsError::InvalidConfig(format!(
                "polynomial order t must be >= 2, got {}",
                self.t
            )));
        }
        if self.h_grid.len() <= self.t + 1 {
            return Err(FgsError::InvalidConfig(format!(
                "need more than t+1 = {} grid resolutions, got {}",
                self.t + 1,
                self.h_grid.len()
            )));
        }
        check_grid(&self.h_grid)?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(FgsError::InvalidConfig(format!(
                "alpha must be in (0,1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

fn check_grid(h_grid: &[f64]) -> Result<()> {
    if h_grid.is_empty() {
        return Err(FgsError::InvalidConfig("empty resolution grid".into()));
    }
    if h_grid[0] <= 0.0 || h_grid.iter().any(|h| !h.is_finite()) {
        return Err(FgsError::InvalidConfig(
            "resolution grid must be strictly positive and finite".into(),
        ));
    }
    if h_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FgsError::InvalidConfig(
            "resolution grid must be strictly ascending (duplicates are rank-deficient)".into(),
        ));
    }
    Ok(())
}

/// Default grid: 20 equally spaced resolutions spanning [0.1, 10] with
/// the value nearest 1 snapped to exactly 1, so the grid contains the
/// default resolution.
pub fn default_h_grid() -> Vec<f64> {
    let mut grid = equally_spaced(0.1, 10.0, 20);
    let nearest = (0..grid.len())
        .min_by(|&i, &j| (grid[i] - 1.0).abs().total_cmp(&(grid[j] - 1.0).abs()))
        .expect("grid is nonempty");
    grid[nearest] = 1.0;
    grid
}

/// Equally spaced grid of `count` values from `min` to `max` inclusive.
pub fn equally_spaced(min: f64, max: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && max > min);
    (0..count)
        .map(|k| min + (max - min) * k as f64 / (count - 1) as f64)
        .collect()
}

/// The b×t design with rows (1, h_j², h_j³, …, h_j^t). Requires b ≥ t
/// for full column rank; inference additionally needs b > t+1, which
/// [`JackknifeConfig::validate`] enforces.
pub fn design_matrix(h_grid: &[f64], t: usize) -> Result<DMatrix<f64>> {
    if t < 2 {
        return Err(FgsError::InvalidConfig(format!(
            "polynomial order t must be >= 2, got {t}"
        )));
    }
    check_grid(h_grid)?;
    let b = h_grid.len();
    if b < t {
        return Err(FgsError::InvalidConfig(format!(
            "grid of {b} resolutions cannot identify {t} coefficients"
        )));
    }
    Ok(DMatrix::from_fn(b, t, |j, k| {
        if k == 0 {
            1.0
        } else {
            h_grid[j].powi(k as i32 + 1)
        }
    }))
}

/// The projector P = (𝓗ᵀ𝓗)^{-1}𝓗ᵀ (t×b) via QR of 𝓗.
pub fn jackknife_projector(h_grid: &[f64], t: usize) -> Result<DMatrix<f64>> {
    let design = design_matrix(h_grid, t)?;
    let qr = design.qr();
    let q = qr.q();
    let r = qr.r();
    if (0..t).any(|k| r[(k, k)].abs() < 1e-12) {
        return Err(FgsError::Numerical(
            "rank-deficient jackknife design".into(),
        ));
    }
    r.solve_upper_triangular(&q.transpose())
        .ok_or_else(|| FgsError::Numerical("rank-deficient jackknife design".into()))
}

/// κ̂ = (𝓗ᵀ𝓗)^{-1}𝓗ᵀ m̂: least-squares coefficients of the bias
/// polynomial fitted to smoother values across the grid. Entry 0 is
/// the debiased level; entry k ≥ 1 multiplies h^{k+1}.
pub fn fit_bias_polynomial(h_grid: &[f64], t: usize, m_hat: &DVector<f64>) -> Result<DVector<f64>> {
    if m_hat.len() != h_grid.len() {
        return Err(FgsError::DimensionMismatch {
            expected: h_grid.len(),
            actual: m_hat.len(),
        });
    }
    Ok(jackknife_projector(h_grid, t)? * m_hat)
}

/// B̂(x,h) evaluated from fitted coefficients: Σ_{j=2}^t κ̂_j h^j.
pub fn bias_from_kappa(kappa: &DVector<f64>, h: f64) -> f64 {
    (1..kappa.len())
        .map(|k| kappa[k] * h.powi(k as i32 + 1))
        .sum()
}

/// Debiased estimate with its variance and interval at one query point.
#[derive(Debug, Clone)]
pub struct JackknifeResult {
    pub x: DVector<f64>,
    /// Fitted coefficients (μ†, κ̂₂, …, κ̂_t).
    pub kappa_hat: DVector<f64>,
    pub mu_dagger: f64,
    /// ℓ̃ = e₁ᵀ(𝓗ᵀ𝓗)^{-1}𝓗ᵀL over the smoothing rows.
    pub ell_tilde: DVector<f64>,
    pub s2: f64,
    pub interval: Interval,
    /// Smoother values m̂_j across the grid.
    pub m_hat: DVector<f64>,
    pub h_grid: Vec<f64>,
}

impl JackknifeResult {
    /// Estimated bias of μ̂_h(x) at resolution h.
    pub fn bias_at(&self, h: f64) -> f64 {
        bias_from_kappa(&self.kappa_hat, h)
    }

    pub fn s(&self) -> f64 {
        self.s2.sqrt()
    }
}

/// Stacks the smoother weight rows ℓ(x; h_j H_x) into L (b×n₂), so
/// L·Y = m̂. Fails naming the first offending resolution.
pub fn stack_smoother_rows(
    model: &FgsModel,
    x: &DVector<f64>,
    h_grid: &[f64],
) -> Result<DMatrix<f64>> {
    check_grid(h_grid)?;
    let geom = model.query_geometry(x)?;
    stack_rows_with_geometry(model, &geom, h_grid)
}

fn stack_rows_with_geometry(
    model: &FgsModel,
    geom: &crate::smoother::QueryGeometry,
    h_grid: &[f64],
) -> Result<DMatrix<f64>> {
    let rows: Vec<DVector<f64>> = parallel::try_map_indices(h_grid.len(), |j| {
        model
            .predict_with_geometry(geom, h_grid[j])
            .map(|fit| fit.ell)
            .map_err(|e| match e {
                FgsError::SingularDesign { h, effective_count } => {
                    FgsError::SingularDesign { h, effective_count }
                }
                other => {
                    FgsError::Numerical(format!("smoother row at h={} failed: {other}", h_grid[j]))
                }
            })
    })?;
    let n2 = model.smoothing_data().num_rows();
    let mut l = DMatrix::zeros(h_grid.len(), n2);
    for (j, row) in rows.iter().enumerate() {
        l.row_mut(j).copy_from(&row.transpose());
    }
    Ok(l)
}

/// Full generalized-jackknife computation at x: fit the bias
/// polynomial across the grid, return μ†, ℓ̃, s², and the interval.
pub fn debias(
    model: &FgsModel,
    x: &DVector<f64>,
    cfg: &JackknifeConfig,
) -> Result<JackknifeResult> {
    cfg.validate()?;
    if !model.in_support(x) {
        log::warn!(
            "query point lies outside the support of the smoothing data; \
             the pointwise theory applies at interior points"
        );
    }
    let geom = model.query_geometry(x)?;
    let l = stack_rows_with_geometry(model, &geom, &cfg.h_grid)?;
    let projector = jackknife_projector(&cfg.h_grid, cfg.t)?;

    let y = model.smoothing_data().response();
    let m_hat = &l * y;
    let kappa_hat = &projector * &m_hat;
    let ell_tilde: RowDVector<f64> = projector.row(0) * &l;
    let ell_tilde = ell_tilde.transpose();
    let mu_dagger = kappa_hat[0];

    let sigma2 = model.sigma2_at_smoothing();
    let s2: f64 = (0..ell_tilde.len())
        .map(|i| ell_tilde[i] * ell_tilde[i] * sigma2[i])
        .sum();
    let z = normal_quantile(1.0 - cfg.alpha / 2.0)?;
    let s = s2.sqrt();
    Ok(JackknifeResult {
        x: x.clone(),
        kappa_hat,
        mu_dagger,
        ell_tilde,
        s2,
        interval: Interval {
            lo: mu_dagger - z * s,
            hi: mu_dagger + z * s,
        },
        m_hat,
        h_grid: cfg.h_grid.clone(),
    })
}

/// The debiased confidence interval C_n(x) = μ†(x) ± z_{α/2} s(x).
pub fn confidence_interval(
    model: &FgsModel,
    x: &DVector<f64>,
    cfg: &JackknifeConfig,
) -> Result<Interval> {
    Ok(debias(model, x, cfg)?.interval)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::ForestConfig;
    use crate::smoother::FgsConfig;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn design_matrix_small_cases() {
        let m = design_matrix(&[1.0, 2.0, 3.0], 2).unwrap();
        assert_eq!(m.nrows(), 3);
        assert_eq!(m.ncols(), 2);
        assert_eq!(m.row(0).iter().cloned().collect::<Vec<_>>(), vec![1.0, 1.0]);
        assert_eq!(m.row(1).iter().cloned().collect::<Vec<_>>(), vec![1.0, 4.0]);
        assert_eq!(m.row(2).iter().cloned().collect::<Vec<_>>(), vec![1.0, 9.0]);

        let m3 = design_matrix(&[1.0, 2.0, 3.0, 4.0], 3).unwrap();
        assert_eq!(
            m3.row(1).iter().cloned().collect::<Vec<_>>(),
            vec![1.0, 4.0, 8.0]
        );
    }

    #[test]
    fn design_matrix_rejects_duplicates_and_bad_orders() {
        assert!(design_matrix(&[1.0, 1.0, 2.0], 2).is_err());
        assert!(design_matrix(&[1.0, 2.0], 1).is_err());
        assert!(design_matrix(&[2.0, 1.0], 2).is_err());
        assert!(design_matrix(&[0.0, 1.0], 2).is_err());
    }

    #[test]
    fn default_grid_contains_one() {
        let grid = default_h_grid();
        assert_eq!(grid.len(), 20);
        assert!(grid.contains(&1.0));
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(grid[0], 0.1);
        assert_eq!(grid[19], 10.0);
    }

    #[test]
    fn injected_polynomial_is_recovered_exactly() {
        let mut rng = crate::rng::stream_rng(1, crate::rng::Stream::QueryPoints, 0);
        for _ in 0..50 {
            let a = rng.random_range(-5.0..5.0);
            let c = rng.random_range(-2.0..2.0);
            let start = rng.random_range(0.1..2.0);
            let step = rng.random_range(0.1..1.0);
            let grid: Vec<f64> = (0..8).map(|k| start + step * k as f64).collect();
            let m_hat = DVector::from_fn(8, |j, _| a + c * grid[j] * grid[j]);
            let kappa = fit_bias_polynomial(&grid, 2, &m_hat).unwrap();
            assert_abs_diff_eq!(kappa[0], a, epsilon = 1e-10);
            assert_abs_diff_eq!(kappa[1], c, epsilon = 1e-10);
        }
    }

    #[test]
    fn constant_m_hat_gives_zero_bias() {
        let grid = equally_spaced(0.5, 4.0, 6);
        let m_hat = DVector::from_element(6, 7.25);
        let kappa = fit_bias_polynomial(&grid, 3, &m_hat).unwrap();
        assert_abs_diff_eq!(kappa[0], 7.25, epsilon = 1e-10);
        for &h in &grid {
            assert_abs_diff_eq!(bias_from_kappa(&kappa, h), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn grid_rescaling_leaves_intercept_invariant() {
        let base = equally_spaced(0.5, 3.0, 7);
        for &c in &[0.1, 1.0, 4.0] {
            let grid: Vec<f64> = base.iter().map(|h| c * h).collect();
            let m_hat = DVector::from_fn(7, |j, _| 2.5 - 0.3 * grid[j] * grid[j]);
            let kappa = fit_bias_polynomial(&grid, 2, &m_hat).unwrap();
            assert_abs_diff_eq!(kappa[0], 2.5, epsilon = 1e-9);
        }
    }

    fn affine_model(seed: u64) -> FgsModel {
        let mut rng = crate::rng::stream_rng(seed, crate::rng::Stream::SimDesign, 0);
        let features = nalgebra::DMatrix::from_fn(200, 2, |_, _| rng.random_range(0.0..1.0));
        let response =
            nalgebra::DVector::from_fn(200, |i, _| 1.0 + 2.0 * features[(i, 0)] - features[(i, 1)]);
        let data = crate::dataset::Dataset::with_default_names(features, response).unwrap();
        let config = FgsConfig {
            forest: ForestConfig {
                num_trees: 30,
                seed,
                ..ForestConfig::default()
            },
            ..FgsConfig::default()
        };
        FgsModel::fit(&data, &config).unwrap()
    }

    fn wide_cfg() -> JackknifeConfig {
        JackknifeConfig {
            h_grid: equally_spaced(3.0, 20.0, 8),
            t: 2,
            alpha: 0.1,
        }
    }

    #[test]
    fn m_hat_matches_smoother_predictions() {
        let model = affine_model(21);
        let x = nalgebra::DVector::from_vec(vec![0.5, 0.5]);
        let cfg = wide_cfg();
        let res = debias(&model, &x, &cfg).unwrap();
        for (j, &h) in cfg.h_grid.iter().enumerate() {
            let fit = model.predict(&x, h).unwrap();
            assert_abs_diff_eq!(res.m_hat[j], fit.beta0, epsilon = 1e-10);
        }
    }

    #[test]
    fn ell_tilde_reproduces_mu_dagger() {
        let model = affine_model(22);
        let x = nalgebra::DVector::from_vec(vec![0.4, 0.7]);
        let res = debias(&model, &x, &wide_cfg()).unwrap();
        let via_ell = res.ell_tilde.dot(model.smoothing_data().response());
        assert_abs_diff_eq!(via_ell, res.mu_dagger, epsilon = 1e-10);
    }

    #[test]
    fn bias_identity_reproduces_fitted_values() {
        let model = affine_model(23);
        let x = nalgebra::DVector::from_vec(vec![0.6, 0.3]);
        let cfg = wide_cfg();
        let res = debias(&model, &x, &cfg).unwrap();
        let design = design_matrix(&cfg.h_grid, cfg.t).unwrap();
        let fitted = design * &res.kappa_hat;
        for (j, &h) in cfg.h_grid.iter().enumerate() {
            assert_abs_diff_eq!(res.mu_dagger + res.bias_at(h), fitted[j], epsilon = 1e-10);
        }
    }

    #[test]
    fn affine_data_debiases_to_truth() {
        let model = affine_model(24);
        let x = nalgebra::DVector::from_vec(vec![0.5, 0.5]);
        let res = debias(&model, &x, &wide_cfg()).unwrap();
        let truth = 1.0 + 2.0 * 0.5 - 0.5;
        assert_abs_diff_eq!(res.mu_dagger, truth, epsilon = 1e-7);
        // The variance model sees the forest's own approximation error
        // even on noiseless data, so s > 0; the interval stays honest.
        assert!(res.s() > 0.0);
        assert!(res.interval.contains(truth));
    }

    #[test]
    fn mu_dagger_is_linear_in_response() {
        let model = affine_model(25);
        let x = nalgebra::DVector::from_vec(vec![0.5, 0.5]);
        let cfg = wide_cfg();
        let base = debias(&model, &x, &cfg).unwrap();

        let shifted = model
            .smoothing_data()
            .with_response(model.smoothing_data().response().map(|v| -2.0 * v + 3.0))
            .unwrap();
        let model2 = FgsModel::from_parts(
            model.forest().clone(),
            shifted,
            model.variance_model().clone(),
            model.kernel().family,
            model.eps_rel(),
        )
        .unwrap();
        let res2 = debias(&model2, &x, &cfg).unwrap();
        assert_abs_diff_eq!(res2.mu_dagger, -2.0 * base.mu_dagger + 3.0, epsilon = 1e-8);
    }

    #[test]
    fn config_validation_rejects_bad_setups() {
        let cfg = JackknifeConfig {
            t: 1,
            ..JackknifeConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg2 = JackknifeConfig {
            h_grid: vec![1.0, 2.0, 3.0],
            ..JackknifeConfig::default()
        };
        assert!(cfg2.validate().is_err(), "b <= t+1 must fail");
        let cfg3 = JackknifeConfig {
            alpha: 1.0,
            ..JackknifeConfig::default()
        };
        assert!(cfg3.validate().is_err());
        assert!(JackknifeConfig::default().validate().is_ok());
    }

    #[test]
    fn interval_is_centered_with_quantile_halfwidth() {
        let model = affine_model(26);
        let x = nalgebra::DVector::from_vec(vec![0.5, 0.5]);
        let mut cfg = wide_cfg();
        cfg.alpha = 0.05;
        let res = debias(&model, &x, &cfg).unwrap();
        let half = 0.5 * res.interval.width();
        assert_abs_diff_eq!(half, 1.959964 * res.s(), epsilon = 1e-5 * half.max(1e-12));
        assert_abs_diff_eq!(res.interval.center(), res.mu_dagger, epsilon = 1e-10);
    }
}
