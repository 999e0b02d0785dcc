//! Synthetic designs and Monte Carlo coverage experiments.
//!
//! Designs draw X uniformly on the unit cube and add Gaussian noise to
//! a known mean function, so empirical coverage of the debiased
//! intervals can be measured against the truth. Replicates derive
//! their seeds from the design seed, run the full pipeline (split,
//! forest, smoother, debias) independently, and fold into a report
//! that does not depend on execution order.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::str::FromStr;

use crate::dataset::Dataset;
use crate::error::{FgsError, Result};
use crate::forest::ForestConfig;
use crate::jackknife::{debias, equally_spaced, JackknifeConfig};
use crate::parallel;
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::smoother::{FgsConfig, FgsModel};
use crate::Interval;

/// Fraction of replicates allowed to fail before the report errors.
pub const MAX_FAILURE_FRACTION: f64 = 0.05;

/// Mean functions from the simulation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignName {
    Sin4x,
    Step,
    Doppler,
    FriedmanMu1,
    SigmoidMu2,
}

impl DesignName {
    pub fn dim(self) -> usize {
        match self {
            DesignName::Sin4x | DesignName::Step | DesignName::Doppler => 1,
            DesignName::FriedmanMu1 | DesignName::SigmoidMu2 => 5,
        }
    }
}

impl FromStr for DesignName {
    type Err = FgsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sin4x" => Ok(DesignName::Sin4x),
            "step" => Ok(DesignName::Step),
            "doppler" => Ok(DesignName::Doppler),
            "friedman_mu1" => Ok(DesignName::FriedmanMu1),
            "sigmoid_mu2" => Ok(DesignName::SigmoidMu2),
            other => Err(FgsError::InvalidConfig(format!(
                "unknown design '{other}' (expected sin4x, step, doppler, friedman_mu1, sigmoid_mu2)"
            ))),
        }
    }
}

/// A synthetic data-generating process: X ~ Unif(0,1)^d,
/// Y = μ(X) + σ·N(0,1).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimDesign {
    pub name: DesignName,
    pub n: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl SimDesign {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(FgsError::InvalidConfig("design needs n >= 1".into()));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(FgsError::InvalidConfig(format!(
                "noise level must be finite and >= 0, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.name.dim()
    }
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Exact mean function μ(x) of the design at x in [0,1]^d.
pub fn true_mean(design: &SimDesign, x: &DVector<f64>) -> Result<f64> {
    let d = design.dim();
    if x.len() != d {
        return Err(FgsError::DimensionMismatch {
            expected: d,
            actual: x.len(),
        });
    }
    if x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(FgsError::InvalidData(format!(
            "point {:?} leaves the design domain [0,1]^{d}",
            x.iter().cloned().collect::<Vec<_>>()
        )));
    }
    Ok(match design.name {
        DesignName::Sin4x => (4.0 * x[0]).sin(),
        DesignName::Step => {
            if x[0] > 0.5 {
                0.5
            } else {
                -0.5
            }
        }
        DesignName::Doppler => {
            // The printed radicand x(1−x)sin(2.1π/(x+0.35)) goes
            // negative on parts of (0,1); evaluate as sign(r)√|r|.
            let r = x[0] * (1.0 - x[0]) * (2.1 * PI / (x[0] + 0.35)).sin();
            r.signum() * r.abs().sqrt()
        }
        DesignName::FriedmanMu1 => {
            10.0 * (PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4]
        }
        DesignName::SigmoidMu2 => {
            10.0 * sigmoid(10.0 * (x[0] - 0.5)) + 5.0 * sigmoid(10.0 * (x[1] - 0.5))
        }
    })
}

/// Draws one dataset from the design, deterministically in its seed.
pub fn generate(design: &SimDesign) -> Result<Dataset> {
    design.validate()?;
    let (n, d) = (design.n, design.dim());
    let mut design_rng = stream_rng(design.seed, Stream::SimDesign, 0);
    let features = DMatrix::from_fn(n, d, |_, _| design_rng.random_range(0.0..1.0));

    let mut noise_rng = stream_rng(design.seed, Stream::SimNoise, 0);
    let mut response = DVector::zeros(n);
    for i in 0..n {
        let mu = true_mean(design, &features.row(i).transpose())?;
        let eps: f64 = StandardNormal.sample(&mut noise_rng);
        response[i] = mu + design.sigma * eps;
    }
    Dataset::with_default_names(features, response)
}

/// Where coverage is evaluated.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuerySpec {
    /// Explicit coordinates.
    Points(Vec<Vec<f64>>),
    /// Points drawn uniformly on the domain, fixed across replicates.
    Random { count: usize },
    /// Equally spaced one-dimensional grid (d = 1 designs only).
    Grid1d { min: f64, max: f64, count: usize },
    /// Rows of the smoothing half drawn fresh each replicate; slot k
    /// aggregates over replicates, so reported coordinates are the
    /// first replicate's draw.
    SampledRows { count: usize },
}

/// Resolves the spec into concrete query points for a design.
pub fn resolve_queries(design: &SimDesign, spec: &QuerySpec) -> Result<Vec<DVector<f64>>> {
    let d = design.dim();
    match spec {
        QuerySpec::Points(points) => {
            if points.is_empty() {
                return Err(FgsError::InvalidConfig("no query points given".into()));
            }
            points
                .iter()
                .map(|p| {
                    if p.len() != d {
                        return Err(FgsError::DimensionMismatch {
                            expected: d,
                            actual: p.len(),
                        });
                    }
                    Ok(DVector::from_vec(p.clone()))
                })
                .collect()
        }
        QuerySpec::Random { count } => {
            if *count == 0 {
                return Err(FgsError::InvalidConfig("no query points given".into()));
            }
            let mut rng = stream_rng(design.seed, Stream::QueryPoints, 0);
            Ok((0..*count)
                .map(|_| DVector::from_fn(d, |_, _| rng.random_range(0.0..1.0)))
                .collect())
        }
        QuerySpec::Grid1d { min, max, count } => {
            if d != 1 {
                return Err(FgsError::InvalidConfig(format!(
                    "a 1-D grid cannot query a {d}-dimensional design"
                )));
            }
            if !(*min >= 0.0 && *max <= 1.0 && min < max && *count >= 2) {
                return Err(FgsError::InvalidConfig(
                    "grid needs 0 <= min < max <= 1 and count >= 2".into(),
                ));
            }
            Ok(equally_spaced(*min, *max, *count)
                .into_iter()
                .map(|v| DVector::from_vec(vec![v]))
                .collect())
        }
        QuerySpec::SampledRows { .. } => Err(FgsError::InvalidConfig(
            "sampled-row queries are resolved per replicate, not up front".into(),
        )),
    }
}

/// Coverage and interval length at one query point, aggregated over
/// the replicates that completed. For sampled-row queries the slot
/// moves between replicates and `x`/`true_mean` echo the first one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointCoverage {
    pub x: Vec<f64>,
    pub true_mean: f64,
    /// Fraction of completed replicates whose interval contains μ(x).
    pub coverage: f64,
    pub mean_length: f64,
    pub hits: usize,
    pub evaluations: usize,
}

/// Monte Carlo coverage summary with the configuration echoed back.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageReport {
    pub design: SimDesign,
    pub jackknife: JackknifeConfig,
    pub replicates: usize,
    pub completed: usize,
    pub failed: usize,
    pub per_point: Vec<PointCoverage>,
}

impl CoverageReport {
    /// Coverage averaged over the query points.
    pub fn mean_coverage(&self) -> f64 {
        self.per_point.iter().map(|p| p.coverage).sum::<f64>() / self.per_point.len() as f64
    }

    /// Interval length averaged over points and replicates.
    pub fn mean_length(&self) -> f64 {
        self.per_point.iter().map(|p| p.mean_length).sum::<f64>() / self.per_point.len() as f64
    }
}

/// One interval evaluated inside a replicate, with the point and truth
/// it was tested against.
struct SlotEval {
    x: DVector<f64>,
    truth: f64,
    interval: Interval,
}

/// Full-pipeline coverage experiment: per replicate, regenerate data
/// with a derived seed, fit the smoother, debias at each query point,
/// and test whether the interval contains μ(x). The forest seed in
/// `fgs_cfg` is overridden by the per-replicate derivation so the
/// design seed alone determines the experiment.
pub fn coverage_experiment(
    design: &SimDesign,
    fgs_cfg: &FgsConfig,
    jk: &JackknifeConfig,
    points: &QuerySpec,
    replicates: usize,
) -> Result<CoverageReport> {
    design.validate()?;
    jk.validate()?;
    if replicates == 0 {
        return Err(FgsError::InvalidConfig(
            "need at least one replicate".into(),
        ));
    }
    let fixed = match points {
        QuerySpec::SampledRows { count } => {
            if *count == 0 {
                return Err(FgsError::InvalidConfig("no query points given".into()));
            }
            None
        }
        _ => {
            let queries = resolve_queries(design, points)?;
            let truths: Vec<f64> = queries
                .iter()
                .map(|x| true_mean(design, x))
                .collect::<Result<_>>()?;
            Some((queries, truths))
        }
    };
    let num_slots = match (&fixed, points) {
        (Some((queries, _)), _) => queries.len(),
        (None, QuerySpec::SampledRows { count }) => *count,
        _ => unreachable!(),
    };

    run_replicates(design, jk, replicates, num_slots, |rep| {
        let rep_seed = derive_seed(design.seed, Stream::Replicate, rep as u64);
        let rep_design = SimDesign {
            seed: rep_seed,
            ..design.clone()
        };
        let data = generate(&rep_design)?;
        let cfg = FgsConfig {
            forest: ForestConfig {
                seed: rep_seed,
                ..fgs_cfg.forest.clone()
            },
            ..fgs_cfg.clone()
        };
        let model = FgsModel::fit(&data, &cfg)?;
        let queries: Vec<DVector<f64>> = match &fixed {
            Some((queries, _)) => queries.clone(),
            None => {
                let smoothing = model.smoothing_data();
                if num_slots > smoothing.num_rows() {
                    return Err(FgsError::InvalidConfig(format!(
                        "cannot sample {num_slots} rows from a smoothing half of {}",
                        smoothing.num_rows()
                    )));
                }
                let mut rng = stream_rng(rep_seed, Stream::QueryPoints, 0);
                rand::seq::index::sample(&mut rng, smoothing.num_rows(), num_slots)
                    .iter()
                    .map(|i| smoothing.point(i))
                    .collect()
            }
        };
        queries
            .iter()
            .enumerate()
            .map(|(k, x)| {
                let truth = match &fixed {
                    Some((_, truths)) => truths[k],
                    None => true_mean(design, x)?,
                };
                Ok(SlotEval {
                    x: x.clone(),
                    truth,
                    interval: debias(&model, x, jk)?.interval,
                })
            })
            .collect()
    })
}

/// Shared harness: evaluates `evals_for(replicate)` per replicate in
/// parallel and folds hits and lengths in replicate order. Failures
/// are excluded and counted; more than [`MAX_FAILURE_FRACTION`] of
/// them fails the report. Reported coordinates and truths echo the
/// first completed replicate.
fn run_replicates(
    design: &SimDesign,
    jk: &JackknifeConfig,
    replicates: usize,
    num_slots: usize,
    evals_for: impl Fn(usize) -> Result<Vec<SlotEval>> + Sync,
) -> Result<CoverageReport> {
    let outcomes: Vec<Result<Vec<SlotEval>>> = parallel::map_indices(replicates, &evals_for);

    let mut hits = vec![0usize; num_slots];
    let mut lengths = vec![0.0f64; num_slots];
    let mut repr: Vec<Option<(Vec<f64>, f64)>> = vec![None; num_slots];
    let mut completed = 0usize;
    let mut failed = 0usize;
    for outcome in outcomes {
        match outcome {
            Ok(evals) => {
                if evals.len() != num_slots {
                    return Err(FgsError::Numerical(
                        "replicate produced the wrong number of intervals".into(),
                    ));
                }
                completed += 1;
                for (k, eval) in evals.iter().enumerate() {
                    if eval.interval.contains(eval.truth) {
                        hits[k] += 1;
                    }
                    lengths[k] += eval.interval.width();
                    if repr[k].is_none() {
                        repr[k] = Some((eval.x.iter().cloned().collect(), eval.truth));
                    }
                }
            }
            Err(e) => {
                log::warn!("replicate failed and was excluded: {e}");
                failed += 1;
            }
        }
    }
    if (failed as f64) > MAX_FAILURE_FRACTION * replicates as f64 {
        return Err(FgsError::Numerical(format!(
            "{failed} of {replicates} replicates failed (more than {:.0}%)",
            MAX_FAILURE_FRACTION * 100.0
        )));
    }

    let per_point = (0..num_slots)
        .map(|k| {
            let (x, truth) = repr[k]
                .clone()
                .expect("at least one replicate completed under the failure threshold");
            PointCoverage {
                x,
                true_mean: truth,
                coverage: hits[k] as f64 / completed as f64,
                mean_length: lengths[k] / completed as f64,
                hits: hits[k],
                evaluations: completed,
            }
        })
        .collect();
    Ok(CoverageReport {
        design: design.clone(),
        jackknife: jk.clone(),
        replicates,
        completed,
        failed,
        per_point,
    })
}

/// Named experiment presets reproducing the simulation study setups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Table1,
    Table2,
    Fig3Sin,
    Fig3Step,
    Fig3Doppler,
}

impl FromStr for Preset {
    type Err = FgsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table1" => Ok(Preset::Table1),
            "table2" => Ok(Preset::Table2),
            "fig3-sin" => Ok(Preset::Fig3Sin),
            "fig3-step" => Ok(Preset::Fig3Step),
            "fig3-doppler" => Ok(Preset::Fig3Doppler),
            other => Err(FgsError::InvalidConfig(format!(
                "unknown preset '{other}' (expected table1, table2, fig3-sin, fig3-step, fig3-doppler)"
            ))),
        }
    }
}

/// A fully specified coverage experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub design: SimDesign,
    pub fgs: FgsConfig,
    pub jackknife: JackknifeConfig,
    pub points: QuerySpec,
    pub replicates: usize,
}

/// Builds the preset experiment under a master seed. Tables build
/// ninety percent intervals at ten data rows sampled fresh each
/// replicate; the one-dimensional figures use a fixed grid over the
/// unit interval at 95% nominal. Table forests bootstrap the full
/// sample and grow deep trees, calibrated so interval lengths land on
/// the published scale; the figures keep the library defaults.
pub fn preset_experiment(preset: Preset, seed: u64) -> Experiment {
    let (name, n, sigma, alpha, h_lo, h_hi) = match preset {
        Preset::Table1 => (DesignName::FriedmanMu1, 500, 1.0, 0.10, 1.0, 5.0),
        Preset::Table2 => (DesignName::SigmoidMu2, 500, 5.0, 0.10, 1.0, 30.0),
        Preset::Fig3Sin => (DesignName::Sin4x, 1000, 0.1, 0.05, 0.1, 2.0),
        Preset::Fig3Step => (DesignName::Step, 1000, 0.03, 0.05, 0.1, 2.0),
        Preset::Fig3Doppler => (DesignName::Doppler, 1000, 0.03, 0.05, 0.1, 2.0),
    };
    let (points, fgs) = match preset {
        Preset::Table1 | Preset::Table2 => {
            let min_leaf_size = if preset == Preset::Table1 { 1 } else { 4 };
            (
                QuerySpec::SampledRows { count: 10 },
                FgsConfig {
                    forest: ForestConfig {
                        sample_fraction: 1.0,
                        with_replacement: true,
                        min_leaf_size,
                        ..ForestConfig::default()
                    },
                    ..FgsConfig::default()
                },
            )
        }
        _ => (
            QuerySpec::Grid1d {
                min: 0.05,
                max: 0.95,
                count: 19,
            },
            FgsConfig::default(),
        ),
    };
    Experiment {
        design: SimDesign {
            name,
            n,
            sigma,
            seed,
        },
        fgs,
        jackknife: JackknifeConfig {
            h_grid: equally_spaced(h_lo, h_hi, 20),
            t: 2,
            alpha,
        },
        points,
        replicates: 100,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn design(name: DesignName, n: usize, sigma: f64, seed: u64) -> SimDesign {
        SimDesign {
            name,
            n,
            sigma,
            seed,
        }
    }

    #[test]
    fn true_mean_hand_values() {
        let mu2 = design(DesignName::SigmoidMu2, 10, 1.0, 0);
        let x = DVector::from_vec(vec![0.5, 0.5, 0.5, 0.5, 0.5]);
        assert_abs_diff_eq!(true_mean(&mu2, &x).unwrap(), 7.5, epsilon = 1e-12);

        let mu1 = design(DesignName::FriedmanMu1, 10, 1.0, 0);
        let expect = 10.0 * (PI * 0.25).sin() + 5.0 + 2.5;
        assert_abs_diff_eq!(true_mean(&mu1, &x).unwrap(), expect, epsilon = 1e-12);
        assert_abs_diff_eq!(true_mean(&mu1, &x).unwrap(), 14.5711, epsilon = 1e-4);

        let step = design(DesignName::Step, 10, 1.0, 0);
        let quarter = DVector::from_vec(vec![0.25]);
        assert_abs_diff_eq!(true_mean(&step, &quarter).unwrap(), -0.5, epsilon = 1e-15);
        let half = DVector::from_vec(vec![0.5]);
        assert_abs_diff_eq!(true_mean(&step, &half).unwrap(), -0.5, epsilon = 1e-15);

        let sin = design(DesignName::Sin4x, 10, 1.0, 0);
        let p = DVector::from_vec(vec![0.3]);
        assert_abs_diff_eq!(true_mean(&sin, &p).unwrap(), 1.2f64.sin(), epsilon = 1e-12);
    }

    #[test]
    fn doppler_uses_signed_root() {
        let dop = design(DesignName::Doppler, 10, 1.0, 0);
        // At x=0.9 the sine factor is negative, so the signed-root
        // convention must produce a negative value.
        let x = DVector::from_vec(vec![0.9]);
        let r = 0.9 * 0.1 * (2.1 * PI / 1.25).sin();
        assert!(r < 0.0);
        let v = true_mean(&dop, &x).unwrap();
        assert_abs_diff_eq!(v, -(r.abs().sqrt()), epsilon = 1e-12);
    }

    #[test]
    fn true_mean_rejects_domain_violations() {
        let sin = design(DesignName::Sin4x, 10, 1.0, 0);
        assert!(true_mean(&sin, &DVector::from_vec(vec![1.2])).is_err());
        assert!(true_mean(&sin, &DVector::from_vec(vec![-0.1])).is_err());
        assert!(true_mean(&sin, &DVector::from_vec(vec![0.5, 0.5])).is_err());
    }

    #[test]
    fn generate_is_deterministic_and_noiseless_at_sigma_zero() {
        let d = design(DesignName::Sin4x, 50, 0.0, 9);
        let a = generate(&d).unwrap();
        let b = generate(&d).unwrap();
        assert_eq!(a.features(), b.features());
        assert_eq!(a.response(), b.response());
        for i in 0..50 {
            let mu = true_mean(&d, &a.point(i)).unwrap();
            assert_eq!(a.response()[i], mu);
        }
        let other = generate(&design(DesignName::Sin4x, 50, 0.0, 10)).unwrap();
        assert_ne!(a.features(), other.features());
    }

    #[test]
    fn generated_noise_is_centered() {
        let d = design(DesignName::Sin4x, 100_000, 1.0, 3);
        let data = generate(&d).unwrap();
        let mut sum = 0.0;
        for i in 0..d.n {
            sum += data.response()[i] - true_mean(&d, &data.point(i)).unwrap();
        }
        let mean = sum / d.n as f64;
        // CLT bound: |mean| < 4σ/√n.
        assert!(mean.abs() < 4.0 / (d.n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn resolve_queries_covers_all_variants() {
        let d5 = design(DesignName::FriedmanMu1, 10, 1.0, 4);
        let random = resolve_queries(&d5, &QuerySpec::Random { count: 7 }).unwrap();
        assert_eq!(random.len(), 7);
        assert!(random.iter().all(|x| x.len() == 5));
        let again = resolve_queries(&d5, &QuerySpec::Random { count: 7 }).unwrap();
        assert_eq!(random, again, "query draws must be seed-determined");

        let explicit =
            resolve_queries(&d5, &QuerySpec::Points(vec![vec![0.5; 5], vec![0.25; 5]])).unwrap();
        assert_eq!(explicit.len(), 2);
        assert!(resolve_queries(&d5, &QuerySpec::Points(vec![vec![0.5; 3]])).is_err());

        let d1 = design(DesignName::Sin4x, 10, 1.0, 4);
        let grid = resolve_queries(
            &d1,
            &QuerySpec::Grid1d {
                min: 0.1,
                max: 0.9,
                count: 5,
            },
        )
        .unwrap();
        assert_eq!(grid.len(), 5);
        assert_abs_diff_eq!(grid[0][0], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(grid[4][0], 0.9, epsilon = 1e-15);
        assert!(resolve_queries(
            &d5,
            &QuerySpec::Grid1d {
                min: 0.1,
                max: 0.9,
                count: 5
            }
        )
        .is_err());
    }

    fn tiny_jk() -> JackknifeConfig {
        JackknifeConfig {
            h_grid: equally_spaced(0.5, 4.0, 6),
            t: 2,
            alpha: 0.1,
        }
    }

    #[test]
    fn oracle_intervals_exercise_the_harness() {
        let d = design(DesignName::Sin4x, 20, 0.1, 5);
        let jk = tiny_jk();
        let queries = resolve_queries(
            &d,
            &QuerySpec::Grid1d {
                min: 0.2,
                max: 0.8,
                count: 4,
            },
        )
        .unwrap();
        let truths: Vec<f64> = queries.iter().map(|x| true_mean(&d, x).unwrap()).collect();

        let slots = |iv: Interval| -> Result<Vec<SlotEval>> {
            Ok(queries
                .iter()
                .zip(&truths)
                .map(|(x, &truth)| SlotEval {
                    x: x.clone(),
                    truth,
                    interval: iv,
                })
                .collect())
        };

        let perfect = run_replicates(&d, &jk, 8, queries.len(), |_| {
            slots(Interval {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            })
        })
        .unwrap();
        assert!(perfect.per_point.iter().all(|p| p.coverage == 1.0));

        let empty = run_replicates(&d, &jk, 8, queries.len(), |_| {
            slots(Interval { lo: 1.0, hi: -1.0 })
        })
        .unwrap();
        assert!(empty.per_point.iter().all(|p| p.coverage == 0.0));
    }

    #[test]
    fn failures_are_excluded_until_the_threshold() {
        let d = design(DesignName::Sin4x, 20, 0.1, 6);
        let jk = tiny_jk();
        let queries = [DVector::from_vec(vec![0.5])];
        let truths = [true_mean(&d, &queries[0]).unwrap()];

        let hit = || {
            Ok(vec![SlotEval {
                x: queries[0].clone(),
                truth: truths[0],
                interval: Interval {
                    lo: truths[0] - 1.0,
                    hi: truths[0] + 1.0,
                },
            }])
        };

        let one_bad = run_replicates(&d, &jk, 40, 1, |rep| {
            if rep == 3 {
                Err(FgsError::Numerical("synthetic failure".into()))
            } else {
                hit()
            }
        })
        .unwrap();
        assert_eq!(one_bad.failed, 1);
        assert_eq!(one_bad.completed, 39);
        assert_eq!(one_bad.per_point[0].coverage, 1.0);

        let too_many = run_replicates(&d, &jk, 40, 1, |rep| {
            if rep < 4 {
                Err(FgsError::Numerical("synthetic failure".into()))
            } else {
                hit()
            }
        });
        assert!(too_many.is_err());
    }

    #[test]
    fn pipeline_coverage_runs_on_a_small_design() {
        let d = design(DesignName::Sin4x, 120, 0.1, 7);
        let fgs = FgsConfig {
            forest: ForestConfig {
                num_trees: 25,
                ..ForestConfig::default()
            },
            ..FgsConfig::default()
        };
        let jk = tiny_jk();
        let spec = QuerySpec::Points(vec![vec![0.5]]);
        let report = coverage_experiment(&d, &fgs, &jk, &spec, 4).unwrap();
        assert_eq!(report.completed, 4);
        assert_eq!(report.per_point.len(), 1);
        let p = &report.per_point[0];
        assert!(p.coverage >= 0.0 && p.coverage <= 1.0);
        assert!(p.mean_length > 0.0);

        let again = coverage_experiment(&d, &fgs, &jk, &spec, 4).unwrap();
        assert_eq!(p.coverage, again.per_point[0].coverage);
        assert_eq!(p.mean_length, again.per_point[0].mean_length);
    }

    #[test]
    fn presets_match_the_study_setups() {
        let t1 = preset_experiment(Preset::Table1, 1);
        assert_eq!(t1.design.name, DesignName::FriedmanMu1);
        assert_eq!(t1.design.n, 500);
        assert_eq!(t1.design.sigma, 1.0);
        assert_eq!(t1.jackknife.alpha, 0.10);
        assert_eq!(t1.jackknife.h_grid.len(), 20);
        assert_eq!(t1.jackknife.h_grid[0], 1.0);
        assert_eq!(t1.jackknife.h_grid[19], 5.0);

        let t2 = preset_experiment(Preset::Table2, 1);
        assert_eq!(t2.design.name, DesignName::SigmoidMu2);
        assert_eq!(t2.design.sigma, 5.0);
        assert_eq!(t2.jackknife.h_grid[19], 30.0);

        let f3 = preset_experiment(Preset::Fig3Sin, 1);
        assert_eq!(f3.design.n, 1000);
        assert_eq!(f3.design.sigma, 0.1);
        assert_eq!(f3.jackknife.alpha, 0.05);
        assert_eq!(f3.jackknife.h_grid[0], 0.1);
        assert_eq!(f3.jackknife.h_grid[19], 2.0);

        assert_eq!("table1".parse::<Preset>().unwrap(), Preset::Table1);
        assert_eq!(
            "fig3-doppler".parse::<Preset>().unwrap(),
            Preset::Fig3Doppler
        );
        assert!("fig4".parse::<Preset>().is_err());
        assert_eq!(
            "sigmoid_mu2".parse::<DesignName>().unwrap(),
            DesignName::SigmoidMu2
        );
        assert!("mu3".parse::<DesignName>().is_err());
    }
}
