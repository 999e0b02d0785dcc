//! Config file loading and setting resolution.
//!
//! Every setting has a built-in default. A JSON config file may set
//! any of them, and command-line flags override the file. Handlers
//! resolve each setting with [`pick`] and echo the result in their
//! reports, so every emitted number is reproducible from its header.

use serde::{Deserialize, Serialize};
use std::path::Path;

use fgs::bandwidth::KernelFamily;
use fgs::forest::ForestConfig;
use fgs::jackknife::{default_h_grid, equally_spaced, JackknifeConfig};
use fgs::smoother::FgsConfig;
use fgs::{FgsError, Result};

/// Schema version accepted in config files.
pub const CONFIG_VERSION: u32 = 1;

/// Optional settings readable from a JSON config file. Field names are
/// the long flag names with dashes replaced by underscores.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub config_version: Option<u32>,
    pub seed: Option<u64>,
    pub trees: Option<usize>,
    pub sample_fraction: Option<f64>,
    pub mtry: Option<usize>,
    pub min_leaf: Option<usize>,
    pub max_depth: Option<usize>,
    pub inflation: Option<f64>,
    pub kernel: Option<String>,
    pub eps_rel: Option<f64>,
    pub alpha: Option<f64>,
    pub h_grid: Option<String>,
    pub order: Option<usize>,
    pub target: Option<String>,
    pub features: Option<Vec<String>>,
    pub log_cols: Option<Vec<String>>,
    pub format: Option<String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)?;
        let cfg: FileConfig = serde_json::from_str(&text)
            .map_err(|e| FgsError::InvalidConfig(format!("config file {}: {e}", path.display())))?;
        if let Some(v) = cfg.config_version {
            if v != CONFIG_VERSION {
                return Err(FgsError::InvalidConfig(format!(
                    "unsupported config_version {v} (expected {CONFIG_VERSION})"
                )));
            }
        }
        Ok(cfg)
    }
}

/// Flag beats file beats default.
pub fn pick<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Like [`pick`] without a default (for settings that stay optional).
pub fn pick_opt<T: Clone>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

/// Parses a resolution grid: `min:max:count` for an equally spaced
/// grid, or comma-separated explicit values.
pub fn parse_h_grid(spec: &str) -> Result<Vec<f64>> {
    let grid = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(FgsError::InvalidConfig(format!(
                "grid spec '{spec}' must be min:max:count"
            )));
        }
        let min: f64 = parse_num(parts[0], "grid min")?;
        let max: f64 = parse_num(parts[1], "grid max")?;
        let count: usize = parts[2].parse().map_err(|_| {
            FgsError::InvalidConfig(format!("grid count '{}' is not an integer", parts[2]))
        })?;
        if !(min > 0.0 && max > min && count >= 2) {
            return Err(FgsError::InvalidConfig(format!(
                "grid spec '{spec}' needs 0 < min < max and count >= 2"
            )));
        }
        equally_spaced(min, max, count)
    } else {
        spec.split(',')
            .map(|tok| parse_num(tok.trim(), "grid value"))
            .collect::<Result<Vec<f64>>>()?
    };
    if grid.is_empty() || grid[0] <= 0.0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FgsError::InvalidConfig(format!(
            "grid '{spec}' must be strictly positive and ascending"
        )));
    }
    Ok(grid)
}

/// Parses a comma-separated coordinate list into a point.
pub fn parse_point(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|tok| parse_num(tok.trim(), "coordinate"))
        .collect()
}

fn parse_num(tok: &str, what: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| FgsError::InvalidConfig(format!("{what} '{tok}' is not a number")))?;
    if !v.is_finite() {
        return Err(FgsError::InvalidConfig(format!(
            "{what} '{tok}' is not finite"
        )));
    }
    Ok(v)
}

/// Resolution grid flags shared by interval-producing commands:
/// either `--h-grid` or the `--h-min/--h-max/--h-count` triple.
#[derive(Debug, Clone, clap::Args)]
pub struct GridFlags {
    /// Resolution grid: `min:max:count` or comma-separated values
    #[arg(long, value_name = "SPEC")]
    pub h_grid: Option<String>,
    /// Smallest grid resolution (with --h-max and --h-count)
    #[arg(long, conflicts_with = "h_grid")]
    pub h_min: Option<f64>,
    /// Largest grid resolution
    #[arg(long, conflicts_with = "h_grid")]
    pub h_max: Option<f64>,
    /// Number of grid resolutions
    #[arg(long, conflicts_with = "h_grid")]
    pub h_count: Option<usize>,
}

impl GridFlags {
    /// Resolves the grid from flags or the config file; `None` when
    /// nothing was specified.
    pub fn resolve_opt(&self, file: &FileConfig) -> Result<Option<Vec<f64>>> {
        match (&self.h_min, &self.h_max, &self.h_count) {
            (None, None, None) => {}
            (Some(min), Some(max), Some(count)) => {
                return parse_h_grid(&format!("{min}:{max}:{count}")).map(Some);
            }
            _ => {
                return Err(FgsError::InvalidConfig(
                    "--h-min, --h-max, and --h-count must be given together".into(),
                ));
            }
        }
        match pick_opt(self.h_grid.clone(), file.h_grid.clone()) {
            Some(spec) => parse_h_grid(&spec).map(Some),
            None => Ok(None),
        }
    }

    /// Resolves the grid, falling back to the default jackknife grid.
    pub fn resolve(&self, file: &FileConfig) -> Result<Vec<f64>> {
        Ok(self.resolve_opt(file)?.unwrap_or_else(default_h_grid))
    }
}

/// Forest and kernel flags shared by commands that train models.
#[derive(Debug, Clone, clap::Args)]
pub struct ForestFlags {
    /// Number of trees
    #[arg(long)]
    pub trees: Option<usize>,
    /// Fraction of rows subsampled per tree
    #[arg(long)]
    pub sample_fraction: Option<f64>,
    /// Features considered per split (default: ceil(d/3))
    #[arg(long)]
    pub mtry: Option<usize>,
    /// Minimum rows per leaf
    #[arg(long)]
    pub min_leaf: Option<usize>,
    /// Depth cap (default: unlimited)
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Variance inflation factor c
    #[arg(long)]
    pub inflation: Option<f64>,
    /// Kernel family: gaussian or epanechnikov_product
    #[arg(long)]
    pub kernel: Option<String>,
    /// Relative bandwidth ridge threshold
    #[arg(long)]
    pub eps_rel: Option<f64>,
}

impl ForestFlags {
    /// Resolves the full pipeline settings under `seed`.
    pub fn resolve(&self, file: &FileConfig, seed: u64) -> Result<FgsConfig> {
        let defaults = ForestConfig::default();
        let forest = ForestConfig {
            num_trees: pick(self.trees, file.trees, defaults.num_trees),
            sample_fraction: pick(
                self.sample_fraction,
                file.sample_fraction,
                defaults.sample_fraction,
            ),
            with_replacement: defaults.with_replacement,
            mtry: pick_opt(self.mtry, file.mtry),
            min_leaf_size: pick(self.min_leaf, file.min_leaf, defaults.min_leaf_size),
            max_depth: pick_opt(self.max_depth, file.max_depth),
            seed,
        };
        let fgs_defaults = FgsConfig::default();
        let kernel = match pick_opt(self.kernel.clone(), file.kernel.clone()) {
            Some(name) => name.parse::<KernelFamily>()?,
            None => fgs_defaults.kernel,
        };
        Ok(FgsConfig {
            forest,
            inflation: pick(self.inflation, file.inflation, fgs_defaults.inflation),
            kernel,
            eps_rel: pick(self.eps_rel, file.eps_rel, fgs_defaults.eps_rel),
        })
    }
}

/// Jackknife flags shared by interval-producing commands.
#[derive(Debug, Clone, clap::Args)]
pub struct JackknifeFlags {
    /// Miscoverage level of the intervals
    #[arg(long)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    pub grid: GridFlags,
    /// Bias polynomial order t
    #[arg(long)]
    pub order: Option<usize>,
}

impl JackknifeFlags {
    pub fn resolve(&self, file: &FileConfig, default_alpha: f64) -> Result<JackknifeConfig> {
        let cfg = JackknifeConfig {
            h_grid: self.grid.resolve(file)?,
            t: pick(self.order, file.order, 2),
            alpha: pick(self.alpha, file.alpha, default_alpha),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
