//! Structural summaries of the smoother family.
//!
//! The bandwidth matrices {H_x} are compared in the Bures-Wasserstein
//! geometry of centered Gaussians, with each H_x plugged into the
//! covariance slot. The barycenter H̄ is the empirical fixed point of
//! H̄ = (1/N)Σ(H̄^{1/2}H_iH̄^{1/2})^{1/2}, the Fréchet variance the
//! mean squared distance to it. Per-coordinate effective bandwidths
//! Δ_j = c/√((H^{-1})_jj) expose which directions a matrix smooths
//! over. Γ compares forest and smoother accuracy on held-out blocks.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{split, Dataset};
use crate::error::{FgsError, Result};
use crate::forest::{train_forest, ForestConfig};
use crate::jackknife::{debias, JackknifeConfig};
use crate::linalg::{inv_pd, normal_quantile, sqrtm_psd, sym_eigen, symmetrize};
use crate::parallel;
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::smoother::{FgsConfig, FgsModel};
use crate::Interval;

/// Fixed-point defect tolerance for the barycenter iteration.
pub const BARYCENTER_TOL: f64 = 1e-9;

/// Iteration cap for the barycenter fixed point.
pub const BARYCENTER_MAX_ITER: usize = 500;

const SYMMETRY_TOL: f64 = 1e-8;

/// Serializes a matrix as row-major nested arrays.
mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..m.nrows())
            .map(|i| m.row(i).iter().cloned().collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
            return Err(D::Error::custom("expected a nonempty rectangular matrix"));
        }
        Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }
}

/// Barycenter of a family of bandwidth matrices with its dispersion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarycenterSummary {
    /// Fixed point H̄ (symmetric positive definite).
    #[serde(with = "matrix_rows")]
    pub h_bar: DMatrix<f64>,
    /// Mean squared Wasserstein distance from H̄ to the inputs.
    pub frechet_variance: f64,
    /// Update steps performed before the defect fell below tolerance.
    pub iterations: usize,
    /// Final fixed-point defect ‖H̄ − mean_i(H̄^{1/2}H_iH̄^{1/2})^{1/2}‖_F.
    pub residual: f64,
}

/// Accuracy gap estimate between the forest and the smoother.
/// Positive values mean the smoother has larger squared error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub gamma_hat: f64,
    pub tau_hat: f64,
    pub interval: Interval,
    /// Per-block evaluation size (the smaller block when they differ).
    pub m: usize,
}

fn check_pd(h: &DMatrix<f64>, role: &str) -> Result<()> {
    if h.nrows() != h.ncols() || h.nrows() == 0 {
        return Err(FgsError::InvalidData(format!(
            "{role} must be square and nonempty, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let asym = (h - h.transpose()).abs().max();
    let scale = h.abs().max().max(1.0);
    if asym > SYMMETRY_TOL * scale {
        return Err(FgsError::InvalidData(format!(
            "{role} is not symmetric (max asymmetry {asym:.3e})"
        )));
    }
    let (vals, _) = sym_eigen(h);
    if vals[0] <= 0.0 {
        return Err(FgsError::InvalidData(format!(
            "{role} is not positive definite (smallest eigenvalue {:.3e})",
            vals[0]
        )));
    }
    Ok(())
}

/// Squared Bures-Wasserstein distance between centered Gaussians with
/// covariances H1 and H2:
/// W² = tr(H1) + tr(H2) − 2·tr((H1^{1/2} H2 H1^{1/2})^{1/2}).
pub fn wasserstein2_gaussian(h1: &DMatrix<f64>, h2: &DMatrix<f64>) -> Result<f64> {
    check_pd(h1, "first matrix")?;
    check_pd(h2, "second matrix")?;
    if h1.nrows() != h2.nrows() {
        return Err(FgsError::DimensionMismatch {
            expected: h1.nrows(),
            actual: h2.nrows(),
        });
    }
    let s1 = sqrtm_psd(h1);
    let cross = sqrtm_psd(&(&s1 * h2 * &s1));
    let w2 = h1.trace() + h2.trace() - 2.0 * cross.trace();
    Ok(w2.max(0.0))
}

/// Wasserstein barycenter of `h_list` via the covariance fixed-point
/// iteration H̄ ← H̄^{-1/2}((1/N)Σ(H̄^{1/2}H_iH̄^{1/2})^{1/2})²H̄^{-1/2},
/// initialized at the Euclidean mean.
pub fn barycenter(h_list: &[DMatrix<f64>], tol: f64, max_iter: usize) -> Result<BarycenterSummary> {
    if h_list.is_empty() {
        return Err(FgsError::InvalidData("empty bandwidth list".into()));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(FgsError::InvalidConfig(format!(
            "barycenter tolerance must be positive, got {tol}"
        )));
    }
    let d = h_list[0].nrows();
    for h in h_list {
        check_pd(h, "bandwidth matrix")?;
        if h.nrows() != d {
            return Err(FgsError::DimensionMismatch {
                expected: d,
                actual: h.nrows(),
            });
        }
    }

    let mut h_bar = DMatrix::zeros(d, d);
    for h in h_list {
        h_bar += h;
    }
    h_bar /= h_list.len() as f64;

    let mut iterations = 0;
    loop {
        let root = sqrtm_psd(&h_bar);
        let mean_root = mean_inner_roots(h_list, &root);
        let residual = (&h_bar - &mean_root).norm();
        if residual <= tol {
            let frechet_variance = frechet_variance(h_list, &h_bar)?;
            return Ok(BarycenterSummary {
                h_bar,
                frechet_variance,
                iterations,
                residual,
            });
        }
        if iterations >= max_iter {
            return Err(FgsError::NonConvergence {
                max_iter,
                residual,
                tol,
            });
        }
        let inv_root = crate::linalg::inv_sqrtm_pd(&h_bar)?;
        h_bar = &inv_root * (&mean_root * &mean_root) * &inv_root;
        symmetrize(&mut h_bar);
        iterations += 1;
    }
}

fn mean_inner_roots(h_list: &[DMatrix<f64>], root: &DMatrix<f64>) -> DMatrix<f64> {
    let d = root.nrows();
    let roots = parallel::map_indices(h_list.len(), |i| sqrtm_psd(&(root * &h_list[i] * root)));
    let mut mean = DMatrix::zeros(d, d);
    for r in &roots {
        mean += r;
    }
    mean /= h_list.len() as f64;
    mean
}

/// Bandwidth matrices H_{X_i} sampled at the model's smoothing rows:
/// the empirical family that the barycenter and Fréchet variance
/// summarize.
pub fn smoothing_bandwidths(model: &FgsModel) -> Result<Vec<DMatrix<f64>>> {
    parallel::try_map_indices(model.smoothing_data().num_rows(), |i| {
        Ok::<_, FgsError>(
            model
                .bandwidth_matrix(&model.smoothing_data().point(i))?
                .matrix()
                .clone(),
        )
    })
}

/// Mean squared Wasserstein distance from `h_bar` to each matrix.
pub fn frechet_variance(h_list: &[DMatrix<f64>], h_bar: &DMatrix<f64>) -> Result<f64> {
    if h_list.is_empty() {
        return Err(FgsError::InvalidData("empty bandwidth list".into()));
    }
    let dists =
        parallel::try_map_indices(h_list.len(), |i| wasserstein2_gaussian(h_bar, &h_list[i]))?;
    Ok(dists.iter().sum::<f64>() / h_list.len() as f64)
}

/// Per-coordinate effective bandwidths Δ_j = c/√((H^{-1})_jj): the
/// half-width of the kernel's unit ellipsoid along coordinate j.
pub fn effective_bandwidths(h: &DMatrix<f64>, c: f64) -> Result<DVector<f64>> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(FgsError::InvalidConfig(format!(
            "effective bandwidth scale c must be positive, got {c}"
        )));
    }
    check_pd(h, "bandwidth matrix")?;
    let inv = inv_pd(h)?;
    Ok(DVector::from_fn(h.nrows(), |j, _| c / inv[(j, j)].sqrt()))
}

/// Γ estimate from held-out squared errors: `rf_sq_err` are the
/// forest's on its block, `fgs_sq_err` the smoother's on a disjoint
/// block. Γ̂ = s̄ − r̄, so positive values favor the forest.
pub fn gamma_from_errors(
    rf_sq_err: &[f64],
    fgs_sq_err: &[f64],
    alpha: f64,
) -> Result<GammaEstimate> {
    let (m_r, m_s) = (rf_sq_err.len(), fgs_sq_err.len());
    if m_r < 2 || m_s < 2 {
        return Err(FgsError::InvalidData(format!(
            "need at least 2 evaluation points per block, got {m_r} and {m_s}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(FgsError::InvalidConfig(format!(
            "alpha must be in (0,1), got {alpha}"
        )));
    }
    let r_bar = rf_sq_err.iter().sum::<f64>() / m_r as f64;
    let s_bar = fgs_sq_err.iter().sum::<f64>() / m_s as f64;
    let var_r = rf_sq_err.iter().map(|r| (r - r_bar).powi(2)).sum::<f64>() / m_r as f64;
    let var_s = fgs_sq_err.iter().map(|s| (s - s_bar).powi(2)).sum::<f64>() / m_s as f64;
    let m = m_r.min(m_s);
    // Equal blocks reduce to τ̂² = m^{-1}(Σ(r−r̄)² + Σ(s−s̄)²).
    let tau_hat = (m as f64 * (var_r / m_r as f64 + var_s / m_s as f64)).sqrt();
    let gamma_hat = s_bar - r_bar;
    let z = normal_quantile(1.0 - alpha / 2.0)?;
    let half = z * tau_hat / (m as f64).sqrt();
    Ok(GammaEstimate {
        gamma_hat,
        tau_hat,
        interval: Interval {
            lo: gamma_hat - half,
            hi: gamma_hat + half,
        },
        m,
    })
}

/// Four-way comparison: forest trained on block 1 and scored on block
/// 3, smoother built from block 2 (halved internally into guide and
/// smoothing data) and scored on block 4 via its debiased predictions.
/// With `permute > 0`, the procedure repeats on that many random block
/// role permutations and Γ̂ and τ̂ are averaged across arrangements.
pub fn gamma_compare(
    data: &Dataset,
    forest_cfg: &ForestConfig,
    jk_cfg: &JackknifeConfig,
    alpha: f64,
    seed: u64,
    permute: usize,
) -> Result<GammaEstimate> {
    forest_cfg.validate(data.num_rows() / 8, data.dim())?;
    jk_cfg.validate()?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(FgsError::InvalidConfig(format!(
            "alpha must be in (0,1), got {alpha}"
        )));
    }
    let blocks = split(data, 4, seed)?;

    let mut arrangements = vec![[0usize, 1, 2, 3]];
    for p in 1..=permute {
        let mut rng = stream_rng(seed, Stream::Permutation, p as u64);
        let mut roles = [0usize, 1, 2, 3];
        use rand::seq::SliceRandom;
        roles.shuffle(&mut rng);
        arrangements.push(roles);
    }

    let mut gamma_sum = 0.0;
    let mut tau_sum = 0.0;
    let mut m_min = usize::MAX;
    for (a, roles) in arrangements.iter().enumerate() {
        let est = gamma_one_arrangement(
            &blocks[roles[0]],
            &blocks[roles[1]],
            &blocks[roles[2]],
            &blocks[roles[3]],
            forest_cfg,
            jk_cfg,
            alpha,
            derive_seed(seed, Stream::Replicate, 2 * a as u64),
            derive_seed(seed, Stream::Replicate, 2 * a as u64 + 1),
        )?;
        gamma_sum += est.gamma_hat;
        tau_sum += est.tau_hat;
        m_min = m_min.min(est.m);
    }
    let count = arrangements.len() as f64;
    let gamma_hat = gamma_sum / count;
    let tau_hat = tau_sum / count;
    let z = normal_quantile(1.0 - alpha / 2.0)?;
    let half = z * tau_hat / (m_min as f64).sqrt();
    Ok(GammaEstimate {
        gamma_hat,
        tau_hat,
        interval: Interval {
            lo: gamma_hat - half,
            hi: gamma_hat + half,
        },
        m: m_min,
    })
}

#[allow(clippy::too_many_arguments)]
fn gamma_one_arrangement(
    d1: &Dataset,
    d2: &Dataset,
    d3: &Dataset,
    d4: &Dataset,
    forest_cfg: &ForestConfig,
    jk_cfg: &JackknifeConfig,
    alpha: f64,
    rf_seed: u64,
    fgs_seed: u64,
) -> Result<GammaEstimate> {
    let rf_cfg = ForestConfig {
        seed: rf_seed,
        ..forest_cfg.clone()
    };
    let forest = train_forest(d1, &rf_cfg)?;

    let fgs_cfg = FgsConfig {
        forest: ForestConfig {
            seed: fgs_seed,
            ..forest_cfg.clone()
        },
        ..FgsConfig::default()
    };
    let fgs = FgsModel::fit(d2, &fgs_cfg)?;

    let r = parallel::try_map_indices(d3.num_rows(), |i| {
        let pred = forest.predict(&d3.point(i))?;
        Ok::<f64, FgsError>((d3.response()[i] - pred).powi(2))
    })?;
    let s = parallel::try_map_indices(d4.num_rows(), |i| {
        let res = debias(&fgs, &d4.point(i), jk_cfg)?;
        Ok::<f64, FgsError>((d4.response()[i] - res.mu_dagger).powi(2))
    })?;
    gamma_from_errors(&r, &s, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn random_pd(d: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        &a * a.transpose() + DMatrix::identity(d, d) * 0.5
    }

    #[test]
    fn wasserstein_identical_inputs_vanish() {
        let mut rng = stream_rng(3, Stream::QueryPoints, 0);
        for _ in 0..10 {
            let h = random_pd(3, &mut rng);
            assert_abs_diff_eq!(wasserstein2_gaussian(&h, &h).unwrap(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn wasserstein_scalar_case() {
        let h1 = DMatrix::from_element(1, 1, 1.0);
        let h2 = DMatrix::from_element(1, 1, 4.0);
        let w2 = wasserstein2_gaussian(&h1, &h2).unwrap();
        assert_abs_diff_eq!(w2, (1.0f64 - 2.0).powi(2), epsilon = 1e-12);
    }

    #[test]
    fn wasserstein_commuting_diagonal_case() {
        let h1 = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        let h2 = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        // tr(H1)+tr(H2)−2tr((H1H2)^{1/2}) = 5+5−2·4 = 2.
        assert_abs_diff_eq!(
            wasserstein2_gaussian(&h1, &h2).unwrap(),
            2.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn wasserstein_is_symmetric_nonnegative_separating() {
        let mut rng = stream_rng(4, Stream::QueryPoints, 0);
        for _ in 0..20 {
            let h1 = random_pd(2, &mut rng);
            let h2 = random_pd(2, &mut rng);
            let a = wasserstein2_gaussian(&h1, &h2).unwrap();
            let b = wasserstein2_gaussian(&h2, &h1).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
            assert!(a >= 0.0);
            if (&h1 - &h2).abs().max() > 1e-3 {
                assert!(a > 1e-9, "distinct inputs must separate");
            }
        }
    }

    #[test]
    fn wasserstein_rejects_bad_inputs() {
        let good = DMatrix::identity(2, 2);
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.5, 1.0]);
        assert!(wasserstein2_gaussian(&good, &asym).is_err());
        let indef = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -0.1]));
        assert!(wasserstein2_gaussian(&good, &indef).is_err());
        let wrong_dim = DMatrix::identity(3, 3);
        assert!(wasserstein2_gaussian(&good, &wrong_dim).is_err());
    }

    #[test]
    fn barycenter_of_identical_inputs_is_the_input() {
        let mut rng = stream_rng(5, Stream::QueryPoints, 0);
        let h = random_pd(3, &mut rng);
        let list = vec![h.clone(), h.clone(), h.clone()];
        let summary = barycenter(&list, BARYCENTER_TOL, BARYCENTER_MAX_ITER).unwrap();
        assert!((&summary.h_bar - &h).abs().max() < 1e-8);
        assert_abs_diff_eq!(summary.frechet_variance, 0.0, epsilon = 1e-9);
        assert!(summary.residual <= BARYCENTER_TOL);
    }

    #[test]
    fn barycenter_of_singleton_is_the_input() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let summary = barycenter(
            std::slice::from_ref(&h),
            BARYCENTER_TOL,
            BARYCENTER_MAX_ITER,
        )
        .unwrap();
        assert!((&summary.h_bar - &h).abs().max() < 1e-9);
    }

    #[test]
    fn barycenter_one_dimensional_closed_form() {
        let list = vec![
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 4.0),
        ];
        let summary = barycenter(&list, BARYCENTER_TOL, BARYCENTER_MAX_ITER).unwrap();
        // √H̄ is the mean of √H_i, so H̄ = ((1+2)/2)² = 2.25.
        assert_abs_diff_eq!(summary.h_bar[(0, 0)], 2.25, epsilon = 1e-9);
        assert_abs_diff_eq!(summary.frechet_variance, 0.25, epsilon = 1e-9);
    }

    #[test]
    fn barycenter_commuting_family_closed_form() {
        // For commuting inputs the barycenter is (mean of H_i^{1/2})².
        let list = vec![
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0])),
            DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0])),
        ];
        let summary = barycenter(&list, BARYCENTER_TOL, BARYCENTER_MAX_ITER).unwrap();
        assert_abs_diff_eq!(summary.h_bar[(0, 0)], 2.25, epsilon = 1e-8);
        assert_abs_diff_eq!(summary.h_bar[(1, 1)], 2.25, epsilon = 1e-8);
        assert_abs_diff_eq!(summary.h_bar[(0, 1)], 0.0, epsilon = 1e-8);
    }

    #[test]
    fn barycenter_is_order_invariant() {
        let mut rng = stream_rng(6, Stream::QueryPoints, 0);
        let list: Vec<DMatrix<f64>> = (0..5).map(|_| random_pd(2, &mut rng)).collect();
        let mut reversed = list.clone();
        reversed.reverse();
        let a = barycenter(&list, BARYCENTER_TOL, BARYCENTER_MAX_ITER).unwrap();
        let b = barycenter(&reversed, BARYCENTER_TOL, BARYCENTER_MAX_ITER).unwrap();
        assert!((&a.h_bar - &b.h_bar).abs().max() < 1e-8);
        assert_abs_diff_eq!(a.frechet_variance, b.frechet_variance, epsilon = 1e-8);
    }

    #[test]
    fn barycenter_reports_nonconvergence() {
        let list = vec![
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 4.0),
        ];
        let err = barycenter(&list, 1e-12, 0).unwrap_err();
        match err {
            FgsError::NonConvergence { residual, .. } => assert!(residual > 0.0),
            other => panic!("expected NonConvergence, got {other}"),
        }
    }

    #[test]
    fn frechet_variance_matches_hand_case() {
        let list = vec![
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 4.0),
        ];
        let h_bar = DMatrix::from_element(1, 1, 2.25);
        let v = frechet_variance(&list, &h_bar).unwrap();
        assert_abs_diff_eq!(v, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn effective_bandwidths_match_diagonal_cases() {
        let eye = DMatrix::identity(3, 3);
        let unit = effective_bandwidths(&eye, 1.0).unwrap();
        for j in 0..3 {
            assert_abs_diff_eq!(unit[j], 1.0, epsilon = 1e-12);
        }
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        let delta = effective_bandwidths(&h, 1.0).unwrap();
        assert_abs_diff_eq!(delta[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(delta[1], 1.0, epsilon = 1e-12);
        let doubled = effective_bandwidths(&h, 2.0).unwrap();
        assert_abs_diff_eq!(doubled[0], 4.0, epsilon = 1e-12);
        assert!(effective_bandwidths(&h, 0.0).is_err());
        let singular = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        assert!(effective_bandwidths(&singular, 1.0).is_err());
    }

    #[test]
    fn gamma_identical_blocks_give_zero() {
        let errs = vec![0.4, 1.1, 0.2, 0.9, 0.5];
        let est = gamma_from_errors(&errs, &errs, 0.05).unwrap();
        assert_eq!(est.gamma_hat, 0.0);
        assert!(est.tau_hat > 0.0);
        assert!(est.interval.contains(0.0));
        assert_eq!(est.m, 5);
    }

    #[test]
    fn gamma_matches_hand_computation() {
        let r = vec![1.0, 2.0, 3.0];
        let s = vec![2.0, 2.0, 5.0];
        let est = gamma_from_errors(&r, &s, 0.05).unwrap();
        assert_abs_diff_eq!(est.gamma_hat, 1.0, epsilon = 1e-12);
        // τ̂² = (Σ(r−r̄)² + Σ(s−s̄)²)/m = (2 + 6)/3.
        assert_abs_diff_eq!(est.tau_hat, (8.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        let half = 1.959964 * est.tau_hat / 3.0f64.sqrt();
        assert_abs_diff_eq!(est.interval.hi - est.gamma_hat, half, epsilon = 1e-5);
    }

    #[test]
    fn gamma_unequal_blocks_use_min_block_size() {
        let r = vec![1.0, 2.0, 3.0, 4.0];
        let s = vec![2.0, 4.0, 6.0];
        let est = gamma_from_errors(&r, &s, 0.1).unwrap();
        assert_eq!(est.m, 3);
        let var_r = 1.25;
        let var_s = 8.0 / 3.0;
        let expected_tau = (3.0f64 * (var_r / 4.0 + var_s / 3.0)).sqrt();
        assert_abs_diff_eq!(est.tau_hat, expected_tau, epsilon = 1e-12);
    }

    #[test]
    fn gamma_rejects_degenerate_blocks() {
        assert!(gamma_from_errors(&[1.0], &[1.0, 2.0], 0.05).is_err());
        assert!(gamma_from_errors(&[1.0, 2.0], &[1.0, 2.0], 0.0).is_err());
    }

    #[test]
    fn gamma_compare_runs_and_is_deterministic() {
        let mut rng = stream_rng(11, Stream::SimDesign, 0);
        let n = 160;
        let features = DMatrix::from_fn(n, 2, |_, _| rng.random_range(0.0..1.0));
        let response = DVector::from_fn(n, |i, _| {
            2.0 * features[(i, 0)] + features[(i, 1)] + 0.05 * rng.random_range(-1.0..1.0)
        });
        let data = Dataset::with_default_names(features, response).unwrap();
        let forest_cfg = ForestConfig {
            num_trees: 25,
            min_leaf_size: 3,
            ..ForestConfig::default()
        };
        let jk_cfg = JackknifeConfig {
            h_grid: crate::jackknife::equally_spaced(1.0, 10.0, 5),
            t: 2,
            alpha: 0.1,
        };
        let a = gamma_compare(&data, &forest_cfg, &jk_cfg, 0.1, 7, 2).unwrap();
        let b = gamma_compare(&data, &forest_cfg, &jk_cfg, 0.1, 7, 2).unwrap();
        assert_eq!(a.gamma_hat, b.gamma_hat);
        assert_eq!(a.tau_hat, b.tau_hat);
        assert!(a.gamma_hat.is_finite() && a.tau_hat > 0.0);
        assert_eq!(a.m, n / 4);
        assert!(a.interval.contains(a.gamma_hat));
    }
}
