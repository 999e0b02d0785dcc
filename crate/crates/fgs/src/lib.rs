//! Forest-guided smoothing.
//!
//! Purpose: distill a trained random forest into a family of spatially
//! adaptive local linear smoothers and use that family for inference
//! and interpretation. The forest's weight function at a query point
//! induces a bandwidth matrix; a local linear fit under that bandwidth
//! approximates the forest while exposing the standard machinery of
//! kernel smoothing: debiased confidence intervals via a generalized
//! jackknife across resolutions, local slopes as multiresolution
//! variable importance, and geometric summaries of the bandwidth
//! family (Wasserstein barycenter, effective bandwidths, and a
//! forest-versus-smoother accuracy gap).
//!
//! Pipeline: split the data in two; train the guide forest and a
//! variance forest on the first half; smooth the second half with
//! kernels K(·; hH_x) scaled from the forest-induced H_x.
//!
//! Design notes:
//! - Determinism contract: every output depends only on (data, config).
//!   Randomized stages draw from substreams derived from the master
//!   seed; parallel loops map over independent units and reduce in a
//!   fixed order, so the `parallel` feature and the thread count never
//!   change a result.
//! - Errors are values: [`FgsError`] distinguishes usage, data, and
//!   numerical failures so callers (the CLI in particular) can map them
//!   to exit codes.
//!
//! Non-goals: classification forests, honest-within-tree splitting,
//! higher-order local polynomials, and non-Gaussian optimal transport.

pub mod bandwidth;
pub mod dataset;
mod error;
pub mod explore;
pub mod forest;
pub mod jackknife;
pub mod linalg;
mod parallel;
pub mod rng;
pub mod simulate;
pub mod smoother;

pub use error::{FgsError, Result};

use serde::{Deserialize, Serialize};

/// Closed interval, used for confidence and variability intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}
