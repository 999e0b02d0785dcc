//! Bandwidth matrices distilled from forest weights.
//!
//! The local geometry at a query point x is the matrix
//! H_x = ((1/n) Σ w_i(x)(X_i−x)(X_i−x)ᵀ)^{1/2}, the square root of the
//! forest-weighted scatter of displacements. The explicit 1/n factor is
//! part of the definition even though the weights sum to one; the large
//! default h grids elsewhere assume this small-H convention.
//!
//! The square root and all spectral operations use symmetric
//! eigendecomposition: d is small, so O(d³) per query is cheap and
//! numerically robust.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{FgsError, Result};
use crate::forest::{ForestModel, WeightVector};

/// Eigenvalues below this absolute level count as zero when deciding
/// whether a scatter matrix is materially negative.
const NEGATIVE_EIG_TOL: f64 = 1e-10;

/// Asymmetry tolerance for inputs to the matrix square root.
const SYMMETRY_TOL: f64 = 1e-8;

/// Floor entering the ridge size so that an exactly zero matrix still
/// receives a strictly positive ridge.
const LAMBDA_FLOOR: f64 = 1e-8;

/// Default relative ridge threshold for [`regularize`].
pub const DEFAULT_EPS_REL: f64 = 1e-8;

/// Base kernel family. The Gaussian is the default; the Epanechnikov
/// product kernel is compactly supported for users who want that
/// property literally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Gaussian,
    EpanechnikovProduct,
}

impl std::str::FromStr for KernelFamily {
    type Err = FgsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelFamily::Gaussian),
            "epanechnikov_product" => Ok(KernelFamily::EpanechnikovProduct),
            other => Err(FgsError::InvalidConfig(format!(
                "unknown kernel '{other}' (expected gaussian or epanechnikov_product)"
            ))),
        }
    }
}

/// Kernel family plus ambient dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub dim: usize,
}

impl KernelSpec {
    pub fn gaussian(dim: usize) -> Self {
        KernelSpec {
            family: KernelFamily::Gaussian,
            dim,
        }
    }

    /// Base kernel K(z), integrating to one over R^d.
    pub fn eval_base(&self, z: &DVector<f64>) -> f64 {
        match self.family {
            KernelFamily::Gaussian => {
                let norm = (2.0 * std::f64::consts::PI).powf(-(self.dim as f64) / 2.0);
                norm * (-0.5 * z.norm_squared()).exp()
            }
            KernelFamily::EpanechnikovProduct => {
                z.iter().map(|&v| 0.75 * (1.0 - v * v).max(0.0)).product()
            }
        }
    }

    /// Unnormalized log-space profile used by the smoother, where the
    /// constant normalizer cancels. For the Gaussian this is −‖z‖²/2;
    /// for the product kernel it is the log of the product part, with
    /// −∞ outside the support.
    pub fn log_profile(&self, z: &DVector<f64>) -> f64 {
        match self.family {
            KernelFamily::Gaussian => -0.5 * z.norm_squared(),
            KernelFamily::EpanechnikovProduct => {
                let mut total = 0.0;
                for &v in z.iter() {
                    let term = 1.0 - v * v;
                    if term <= 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    total += term.ln();
                }
                total
            }
        }
    }
}

/// Symmetric PSD bandwidth matrix with cached spectral decomposition.
/// Eigenvalues are stored in descending order.
#[derive(Debug, Clone)]
pub struct BandwidthMatrix {
    matrix: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    regularized: bool,
}

/// Serialization form of [`BandwidthMatrix`]: row-major entries plus
/// the eigenvalues, for reports and external plotting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandwidthRepr {
    pub matrix: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub regularized: bool,
}

impl BandwidthMatrix {
    fn from_spectrum(
        eigenvalues: DVector<f64>,
        eigenvectors: DMatrix<f64>,
        regularized: bool,
    ) -> Self {
        let matrix =
            &eigenvectors * DMatrix::from_diagonal(&eigenvalues) * eigenvectors.transpose();
        let mut sym = matrix;
        crate::linalg::symmetrize(&mut sym);
        BandwidthMatrix {
            matrix: sym,
            eigenvalues,
            eigenvectors,
            regularized,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn regularized(&self) -> bool {
        self.regularized
    }

    pub fn det(&self) -> f64 {
        self.eigenvalues.iter().product()
    }

    fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// H^{-1} u via the cached spectrum. Errors when H is singular.
    pub fn solve(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        if self.min_eigenvalue() <= 0.0 {
            return Err(FgsError::Numerical(
                "singular bandwidth matrix: zero eigenvalue".into(),
            ));
        }
        let mut coeffs = self.eigenvectors.transpose() * u;
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c /= self.eigenvalues[k];
        }
        Ok(&self.eigenvectors * coeffs)
    }

    /// Full inverse H^{-1}. Errors when H is singular.
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        if self.min_eigenvalue() <= 0.0 {
            return Err(FgsError::Numerical(
                "singular bandwidth matrix: zero eigenvalue".into(),
            ));
        }
        let inv_diag = DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&v| 1.0 / v),
        );
        let mut out =
            &self.eigenvectors * DMatrix::from_diagonal(&inv_diag) * self.eigenvectors.transpose();
        crate::linalg::symmetrize(&mut out);
        Ok(out)
    }

    /// The matrix h·H with its spectrum rescaled in place.
    pub fn scaled(&self, h: f64) -> BandwidthMatrix {
        BandwidthMatrix {
            matrix: &self.matrix * h,
            eigenvalues: &self.eigenvalues * h,
            eigenvectors: self.eigenvectors.clone(),
            regularized: self.regularized,
        }
    }

    pub fn to_repr(&self) -> BandwidthRepr {
        let d = self.dim();
        BandwidthRepr {
            matrix: (0..d)
                .map(|i| self.matrix.row(i).iter().cloned().collect())
                .collect(),
            eigenvalues: self.eigenvalues.iter().cloned().collect(),
            regularized: self.regularized,
        }
    }
}

/// The scatter S = (1/n) Σ w_i (X_i−x)(X_i−x)ᵀ of Eq. (1), before the
/// square root. Note the explicit 1/n on top of sum-to-one weights.
pub fn weighted_scatter(
    weights: &WeightVector,
    data: &Dataset,
    x: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let n = data.num_rows();
    let d = data.dim();
    if weights.weights().len() != n {
        return Err(FgsError::DimensionMismatch {
            expected: n,
            actual: weights.weights().len(),
        });
    }
    if x.len() != d {
        return Err(FgsError::DimensionMismatch {
            expected: d,
            actual: x.len(),
        });
    }
    let mut scatter = DMatrix::zeros(d, d);
    for i in 0..n {
        let w = weights.weights()[i];
        if w == 0.0 {
            continue;
        }
        let u = data.point(i) - x;
        scatter.syger(w, &u, &u, 1.0);
    }
    // syger fills the lower triangle; mirror it.
    for i in 0..d {
        for j in (i + 1)..d {
            scatter[(i, j)] = scatter[(j, i)];
        }
    }
    scatter /= n as f64;
    Ok(scatter)
}

/// Principal square root of a symmetric PSD scatter matrix.
/// Eigenvalues in [−1e-10, 0) are clamped to zero; anything more
/// negative is an error.
pub fn matrix_sqrt(scatter: &DMatrix<f64>) -> Result<BandwidthMatrix> {
    let d = scatter.nrows();
    if scatter.ncols() != d {
        return Err(FgsError::DimensionMismatch {
            expected: d,
            actual: scatter.ncols(),
        });
    }
    let asym = (scatter - scatter.transpose()).abs().max();
    let scale = scatter.abs().max().max(1.0);
    if asym > SYMMETRY_TOL * scale {
        return Err(FgsError::Numerical(format!(
            "scatter matrix is not symmetric (max asymmetry {asym:.3e})"
        )));
    }
    let mut sym = scatter.clone();
    crate::linalg::symmetrize(&mut sym);
    let (vals_asc, vecs_asc) = crate::linalg::sym_eigen(&sym);
    let dmin = vals_asc[0];
    if dmin < -NEGATIVE_EIG_TOL {
        return Err(FgsError::Numerical(format!(
            "scatter matrix has materially negative eigenvalue {dmin:.3e}"
        )));
    }
    // Flip to descending order and take square roots.
    let k = vals_asc.len();
    let eigenvalues =
        DVector::from_iterator(k, (0..k).map(|i| vals_asc[k - 1 - i].max(0.0).sqrt()));
    let mut eigenvectors = DMatrix::zeros(d, d);
    for i in 0..k {
        eigenvectors.set_column(i, &vecs_asc.column(k - 1 - i));
    }
    Ok(BandwidthMatrix::from_spectrum(
        eigenvalues,
        eigenvectors,
        false,
    ))
}

/// Ridge regularization: when λ_min < δ with δ = eps_rel·max(λ_max,
/// λ_floor), returns H + δI flagged as regularized; otherwise returns
/// the input unchanged.
pub fn regularize(h: &BandwidthMatrix, eps_rel: f64) -> BandwidthMatrix {
    let lam_max = h.eigenvalues()[0];
    let delta = eps_rel * lam_max.max(LAMBDA_FLOOR);
    if h.min_eigenvalue() >= delta {
        return h.clone();
    }
    let eigenvalues = h.eigenvalues().map(|v| v + delta);
    BandwidthMatrix::from_spectrum(eigenvalues, h.eigenvectors().clone(), true)
}

/// Scaled kernel K(u; H) = det(H)^{-1} K_base(H^{-1} u).
pub fn kernel_eval(u: &DVector<f64>, h: &BandwidthMatrix, spec: &KernelSpec) -> Result<f64> {
    if u.len() != h.dim() || spec.dim != h.dim() {
        return Err(FgsError::DimensionMismatch {
            expected: h.dim(),
            actual: u.len(),
        });
    }
    let z = h.solve(u)?;
    Ok(spec.eval_base(&z) / h.det())
}

/// End-to-end bandwidth at a query point: weights, scatter, square
/// root, ridge.
pub fn bandwidth_at(
    model: &ForestModel,
    data: &Dataset,
    x: &DVector<f64>,
    eps_rel: f64,
) -> Result<BandwidthMatrix> {
    if data.num_rows() != model.data().num_rows() {
        return Err(FgsError::DimensionMismatch {
            expected: model.data().num_rows(),
            actual: data.num_rows(),
        });
    }
    let weights = model.weights(x)?;
    let scatter = weighted_scatter(&weights, data, x)?;
    Ok(regularize(&matrix_sqrt(&scatter)?, eps_rel))
}
