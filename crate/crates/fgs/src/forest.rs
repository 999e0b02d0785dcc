//! Regression random forest with per-query weight extraction.
//!
//! Trees are CART-style variance-reduction trees over bootstrap or
//! subsample draws. Beyond point prediction, the forest exposes the
//! weight vector w(x): the prediction is exactly Σ w_i(x) Y_i, where
//! w_i(x) averages per-leaf uniform mass over the trees whose subsample
//! contains row i. Those weights are the raw material for the bandwidth
//! matrices downstream.
//!
//! Invariants:
//! - Training is deterministic given (data, config); per-tree seeds are
//!   derived from the master seed by a counter scheme, so parallel and
//!   sequential training agree bitwise.
//! - Every in-bag row of a tree lies in exactly one of its leaves, and
//!   every leaf holds at least `min_leaf_size` members.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetRepr};
use crate::error::{FgsError, Result};
use crate::parallel;
use crate::rng::{stream_rng, Stream};

/// Relative node-impurity threshold below which a node is treated as
/// pure and not split further.
const PURE_NODE_REL: f64 = 1e-12;

/// Minimum relative impurity decrease for a split to be accepted.
const MIN_GAIN_REL: f64 = 1e-12;

/// Variance predictions are floored here before inflation, keeping
/// downstream standard errors strictly positive.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Hyperparameters of a regression forest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestConfig {
    /// Number of trees B.
    pub num_trees: usize,
    /// Fraction of rows drawn for each tree, in (0, 1].
    pub sample_fraction: f64,
    /// Bootstrap (true) versus subsample without replacement (false).
    pub with_replacement: bool,
    /// Features tried per node; `None` means max(1, ceil(d/3)).
    pub mtry: Option<usize>,
    /// Minimum rows per leaf.
    pub min_leaf_size: usize,
    /// Optional depth cap; `None` grows until leaves are small or pure.
    pub max_depth: Option<usize>,
    /// Master seed for all randomness in training.
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            num_trees: 500,
            sample_fraction: 0.632,
            with_replacement: false,
            mtry: None,
            min_leaf_size: 5,
            max_depth: None,
            seed: 0,
        }
    }
}

impl ForestConfig {
    /// Features tried per node for dimension `d`.
    pub fn resolved_mtry(&self, d: usize) -> usize {
        self.mtry.unwrap_or_else(|| (d.div_ceil(3)).max(1))
    }

    /// Checks the settings against a training size and dimension.
    pub fn validate(&self, n: usize, d: usize) -> Result<()> {
        if self.num_trees == 0 {
            return Err(FgsError::InvalidConfig("num_trees must be >= 1".into()));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(FgsError::InvalidConfig(format!(
                "sample_fraction must be in (0,1], got {}",
                self.sample_fraction
            )));
        }
        if self.min_leaf_size == 0 {
            return Err(FgsError::InvalidConfig("min_leaf_size must be >= 1".into()));
        }
        if let Some(m) = self.mtry {
            if m == 0 || m > d {
                return Err(FgsError::InvalidConfig(format!(
                    "mtry must be in [1, {d}], got {m}"
                )));
            }
        }
        if n < 2 * self.min_leaf_size {
            return Err(FgsError::InvalidData(format!(
                "need n >= 2*min_leaf_size = {}, got n={n}",
                2 * self.min_leaf_size
            )));
        }
        if self.subsample_size(n) < self.min_leaf_size {
            return Err(FgsError::InvalidConfig(format!(
                "sample_fraction {} draws fewer rows than min_leaf_size {}",
                self.sample_fraction, self.min_leaf_size
            )));
        }
        Ok(())
    }

    fn subsample_size(&self, n: usize) -> usize {
        ((self.sample_fraction * n as f64).round() as usize).clamp(1, n)
    }
}

/// Node of a regression tree. Leaves store the in-bag rows they hold
/// (global row indices, with multiplicity under bootstrap) and the mean
/// response of those rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        members: Vec<usize>,
        mean: f64,
    },
}

impl TreeNode {
    /// Leaf containing `x`. Points on a threshold go left.
    fn leaf_for(&self, x: &DVector<f64>) -> &TreeNode {
        match self {
            TreeNode::Leaf { .. } => self,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.leaf_for(x)
                } else {
                    right.leaf_for(x)
                }
            }
        }
    }

    fn visit_leaves(&self, f: &mut impl FnMut(&[usize])) {
        match self {
            TreeNode::Leaf { members, .. } => f(members),
            TreeNode::Split { left, right, .. } => {
                left.visit_leaves(f);
                right.visit_leaves(f);
            }
        }
    }
}

/// Forest weight vector at a query point: nonnegative, sums to one,
/// and represents the forest prediction as Σ w_i(x) Y_i.
#[derive(Debug, Clone)]
pub struct WeightVector {
    weights: DVector<f64>,
    query: DVector<f64>,
}

impl WeightVector {
    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn query(&self) -> &DVector<f64> {
        &self.query
    }
}

/// Trained regression forest, owning its training data.
#[derive(Debug, Clone)]
pub struct ForestModel {
    trees: Vec<TreeNode>,
    in_bag: Vec<Vec<usize>>,
    data: Dataset,
    config: ForestConfig,
}

/// Serialization form of [`ForestModel`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestModelRepr {
    pub config: ForestConfig,
    pub data: DatasetRepr,
    pub trees: Vec<TreeNode>,
    pub in_bag: Vec<Vec<usize>>,
}

struct TreeBuilder<'a> {
    data: &'a Dataset,
    features_per_node: usize,
    min_leaf: usize,
    max_depth: Option<usize>,
}

impl TreeBuilder<'_> {
    fn build(
        &self,
        members: Vec<usize>,
        depth: usize,
        rng: &mut rand_chacha::ChaCha8Rng,
    ) -> TreeNode {
        let y = self.data.response();
        let m = members.len() as f64;
        let sum: f64 = members.iter().map(|&i| y[i]).sum();
        let sum2: f64 = members.iter().map(|&i| y[i] * y[i]).sum();
        let mean = sum / m;
        let node_sse = (sum2 - sum * sum / m).max(0.0);

        let depth_stop = self.max_depth.is_some_and(|cap| depth >= cap);
        let pure = node_sse <= PURE_NODE_REL * m * (1.0 + mean * mean);
        if members.len() < 2 * self.min_leaf || depth_stop || pure {
            return TreeNode::Leaf { members, mean };
        }

        let d = self.data.dim();
        let mut candidates = rand::seq::index::sample(rng, d, self.features_per_node).into_vec();
        candidates.sort_unstable();

        let mut best: Option<(usize, f64, f64)> = None; // (feature, threshold, child sse)
        let mut scratch: Vec<(f64, f64)> = Vec::with_capacity(members.len());
        for &f in &candidates {
            scratch.clear();
            scratch.extend(
                members
                    .iter()
                    .map(|&i| (self.data.features()[(i, f)], y[i])),
            );
            scratch.sort_by(|a, b| a.0.total_cmp(&b.0));

            let mut left_sum = 0.0;
            let mut left_sum2 = 0.0;
            let total = members.len();
            for k in 1..total {
                left_sum += scratch[k - 1].1;
                left_sum2 += scratch[k - 1].1 * scratch[k - 1].1;
                if k < self.min_leaf || total - k < self.min_leaf {
                    continue;
                }
                let (lo, hi) = (scratch[k - 1].0, scratch[k].0);
                if lo >= hi {
                    continue;
                }
                let kl = k as f64;
                let kr = (total - k) as f64;
                let right_sum = sum - left_sum;
                let right_sum2 = sum2 - left_sum2;
                let sse = (left_sum2 - left_sum * left_sum / kl).max(0.0)
                    + (right_sum2 - right_sum * right_sum / kr).max(0.0);
                if best.is_none_or(|(_, _, s)| sse < s) {
                    best = Some((f, 0.5 * (lo + hi), sse));
                }
            }
        }

        match best {
            Some((feature, threshold, child_sse))
                if node_sse - child_sse > MIN_GAIN_REL * node_sse =>
            {
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = members
                    .into_iter()
                    .partition(|&i| self.data.features()[(i, feature)] <= threshold);
                let left = Box::new(self.build(left_rows, depth + 1, rng));
                let right = Box::new(self.build(right_rows, depth + 1, rng));
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                }
            }
            _ => TreeNode::Leaf { members, mean },
        }
    }
}

/// Trains a regression forest on `data`.
pub fn train_forest(data: &Dataset, config: &ForestConfig) -> Result<ForestModel> {
    let n = data.num_rows();
    let d = data.dim();
    config.validate(n, d)?;
    let sample_size = config.subsample_size(n);
    let builder = TreeBuilder {
        data,
        features_per_node: config.resolved_mtry(d),
        min_leaf: config.min_leaf_size,
        max_depth: config.max_depth,
    };

    let built: Vec<(TreeNode, Vec<usize>)> = parallel::map_indices(config.num_trees, |b| {
        let mut boot_rng = stream_rng(config.seed, Stream::Bootstrap, b as u64);
        let mut members: Vec<usize> = if config.with_replacement {
            use rand::Rng;
            (0..sample_size)
                .map(|_| boot_rng.random_range(0..n))
                .collect()
        } else {
            rand::seq::index::sample(&mut boot_rng, n, sample_size).into_vec()
        };
        members.sort_unstable();
        let mut bag = members.clone();
        bag.dedup();

        let mut feat_rng = stream_rng(config.seed, Stream::FeatureSubsample, b as u64);
        let tree = builder.build(members, 0, &mut feat_rng);
        (tree, bag)
    });

    let (trees, in_bag): (Vec<_>, Vec<_>) = built.into_iter().unzip();
    Ok(ForestModel {
        trees,
        in_bag,
        data: data.clone(),
        config: config.clone(),
    })
}

impl ForestModel {
    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.data.dim() {
            return Err(FgsError::DimensionMismatch {
                expected: self.data.dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Forest prediction: average over trees of the mean response in the
    /// leaf containing `x`.
    pub fn predict(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_dim(x)?;
        let total: f64 = self
            .trees
            .iter()
            .map(|tree| match tree.leaf_for(x) {
                TreeNode::Leaf { mean, .. } => *mean,
                TreeNode::Split { .. } => unreachable!("leaf_for returns a leaf"),
            })
            .sum();
        Ok(total / self.trees.len() as f64)
    }

    /// Weight vector over training rows at `x`:
    /// w_i(x) = (1/B) Σ_b 1{i ∈ leaf_b(x)} / |leaf_b(x)|.
    pub fn weights(&self, x: &DVector<f64>) -> Result<WeightVector> {
        self.check_dim(x)?;
        let n = self.data.num_rows();
        let mut weights = DVector::zeros(n);
        let scale = 1.0 / self.trees.len() as f64;
        for tree in &self.trees {
            if let TreeNode::Leaf { members, .. } = tree.leaf_for(x) {
                let mass = scale / members.len() as f64;
                for &i in members {
                    weights[i] += mass;
                }
            }
        }
        Ok(WeightVector {
            weights,
            query: x.clone(),
        })
    }

    /// Out-of-bag prediction at training row `i`: the average over trees
    /// whose subsample misses row i. `None` when every tree saw the row.
    pub fn oob_prediction(&self, i: usize) -> Option<f64> {
        let x = self.data.point(i);
        let mut total = 0.0;
        let mut count = 0usize;
        for (tree, bag) in self.trees.iter().zip(&self.in_bag) {
            if bag.binary_search(&i).is_err() {
                if let TreeNode::Leaf { mean, .. } = tree.leaf_for(&x) {
                    total += mean;
                    count += 1;
                }
            }
        }
        (count > 0).then(|| total / count as f64)
    }

    /// Training residuals Y_i − μ̂(X_i). These under-estimate the noise
    /// level, which the variance inflation factor compensates for.
    pub fn residuals(&self) -> Result<DVector<f64>> {
        let n = self.data.num_rows();
        let preds = parallel::try_map_indices(n, |i| self.predict(&self.data.point(i)))?;
        Ok(DVector::from_fn(n, |i, _| {
            self.data.response()[i] - preds[i]
        }))
    }

    /// Checks structural invariants; used by tests and model loading.
    pub fn check_invariants(&self) -> Result<()> {
        for (tree, bag) in self.trees.iter().zip(&self.in_bag) {
            let mut seen: Vec<usize> = Vec::new();
            let mut min_leaf_ok = true;
            tree.visit_leaves(&mut |members| {
                seen.extend_from_slice(members);
                min_leaf_ok &= members.len() >= self.config.min_leaf_size;
            });
            if !min_leaf_ok {
                return Err(FgsError::InvalidData(format!(
                    "leaf smaller than min_leaf_size {}",
                    self.config.min_leaf_size
                )));
            }
            seen.sort_unstable();
            let mut unique = seen.clone();
            unique.dedup();
            if unique != *bag {
                return Err(FgsError::InvalidData(
                    "tree leaves do not partition the in-bag rows".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn to_repr(&self) -> ForestModelRepr {
        ForestModelRepr {
            config: self.config.clone(),
            data: (&self.data).into(),
            trees: self.trees.clone(),
            in_bag: self.in_bag.clone(),
        }
    }

    pub fn from_repr(repr: ForestModelRepr) -> Result<Self> {
        let data: Dataset = repr.data.try_into()?;
        if repr.trees.len() != repr.in_bag.len() {
            return Err(FgsError::InvalidData(
                "serialized forest has mismatched trees and in-bag sets".into(),
            ));
        }
        let n = data.num_rows();
        for tree in &repr.trees {
            let mut ok = true;
            tree.visit_leaves(&mut |members| {
                ok &= !members.is_empty() && members.iter().all(|&i| i < n);
            });
            if !ok {
                return Err(FgsError::InvalidData(
                    "serialized tree references rows outside the dataset".into(),
                ));
            }
        }
        Ok(ForestModel {
            trees: repr.trees,
            in_bag: repr.in_bag,
            data,
            config: repr.config,
        })
    }
}

/// Forest over squared residuals plus the inflation factor c applied on
/// the standard-deviation scale.
#[derive(Debug, Clone)]
pub struct VarianceModel {
    forest: ForestModel,
    inflation: f64,
}

/// Serialization form of [`VarianceModel`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarianceModelRepr {
    pub forest: ForestModelRepr,
    pub inflation: f64,
}

/// Fits the variance model: regress squared forest residuals on the
/// features with another forest.
pub fn train_variance_model(
    model: &ForestModel,
    config: &ForestConfig,
    inflation: f64,
) -> Result<VarianceModel> {
    if inflation <= 0.0 {
        return Err(FgsError::InvalidConfig(format!(
            "variance inflation factor must be positive, got {inflation}"
        )));
    }
    let residuals = model.residuals()?;
    let squared = residuals.map(|r| r * r);
    let var_data = model.data().with_response(squared)?;
    let forest = train_forest(&var_data, config)?;
    Ok(VarianceModel { forest, inflation })
}

impl VarianceModel {
    /// σ̂²(x): the floored raw prediction times c², so the inflation c
    /// acts on the standard-deviation scale.
    pub fn predict_sigma2(&self, x: &DVector<f64>) -> Result<f64> {
        let raw = self.forest.predict(x)?;
        Ok(raw.max(VARIANCE_FLOOR) * self.inflation * self.inflation)
    }

    pub fn inflation(&self) -> f64 {
        self.inflation
    }

    pub fn forest(&self) -> &ForestModel {
        &self.forest
    }

    pub fn to_repr(&self) -> VarianceModelRepr {
        VarianceModelRepr {
            forest: self.forest.to_repr(),
            inflation: self.inflation,
        }
    }

    pub fn from_repr(repr: VarianceModelRepr) -> Result<Self> {
        if repr.inflation <= 0.0 {
            return Err(FgsError::InvalidData(
                "serialized variance model has non-positive inflation".into(),
            ));
        }
        Ok(VarianceModel {
            forest: ForestModel::from_repr(repr.forest)?,
            inflation: repr.inflation,
        })
    }
}

/// Default inflation factor for the variance model.
pub const DEFAULT_VARIANCE_INFLATION: f64 = 1.5;
