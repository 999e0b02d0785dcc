//! Subcommand implementations.
//!
//! Every report echoes the fully resolved configuration, so any
//! emitted number can be reproduced from the report alone.

use std::path::{Path, PathBuf};

use clap::Args;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::json;

use fgs::dataset::{load_csv, standardize, ScalingParams};
use fgs::explore::{self, BARYCENTER_MAX_ITER, BARYCENTER_TOL};
use fgs::jackknife::debias;
use fgs::simulate::{
    coverage_experiment, preset_experiment, DesignName, Experiment, Preset, QuerySpec, SimDesign,
};
use fgs::smoother::{FgsModel, FgsModelRepr, DEFAULT_H};
use fgs::{FgsError, Result};

use crate::config::{
    parse_point, pick, pick_opt, FileConfig, ForestFlags, GridFlags, JackknifeFlags, CONFIG_VERSION,
};
use crate::query::QueryFlags;
use crate::report::{
    emit, local_report, num, render_csv, render_table, to_pretty_json, OutputFormat,
};

/// On-disk model envelope written by `fit`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub config_version: u32,
    /// Transform applied to the training data, when one was requested.
    pub scaling: Option<ScalingParams>,
    pub model: FgsModelRepr,
}

/// Loads a model envelope written by `fit`.
pub fn load_model(path: &Path) -> Result<(FgsModel, Option<ScalingParams>)> {
    let text = std::fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| FgsError::InvalidData(format!("model file {}: {e}", path.display())))?;
    if file.config_version != CONFIG_VERSION {
        return Err(FgsError::InvalidData(format!(
            "unsupported model file version {} (expected {CONFIG_VERSION})",
            file.config_version
        )));
    }
    Ok((FgsModel::from_repr(file.model)?, file.scaling))
}

fn resolve_format(
    flag: Option<OutputFormat>,
    file: &FileConfig,
    default: OutputFormat,
) -> Result<OutputFormat> {
    match (flag, &file.format) {
        (Some(f), _) => Ok(f),
        (None, Some(name)) => name.parse(),
        (None, None) => Ok(default),
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Training data CSV
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,

    /// Response column (default: y)
    #[arg(long)]
    pub target: Option<String>,

    /// Feature columns (default: every non-target column)
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,

    /// Columns to log-transform (naming the target logs the response)
    #[arg(long = "log-cols", value_delimiter = ',')]
    pub log_cols: Option<Vec<String>>,

    /// Standardize features to mean zero, unit variance
    #[arg(long)]
    pub standardize: bool,

    /// Master seed for the split, the forest, and the variance forest
    #[arg(long)]
    pub seed: Option<u64>,

    #[command(flatten)]
    pub forest: ForestFlags,

    /// Output model file (JSON)
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

pub fn cmd_fit(args: &FitArgs, file: &FileConfig) -> Result<()> {
    let target = pick(args.target.clone(), file.target.clone(), "y".into());
    let features = pick_opt(args.features.clone(), file.features.clone());
    let data = load_csv(&args.input, &target, features.as_deref())?;
    let log_cols = pick_opt(args.log_cols.clone(), file.log_cols.clone()).unwrap_or_default();
    let (data, scaling) = if args.standardize || !log_cols.is_empty() {
        let (scaled, params) = standardize(&data, &log_cols, &target)?;
        (scaled, Some(params))
    } else {
        (data, None)
    };
    let seed = pick(args.seed, file.seed, 0);
    let cfg = args.forest.resolve(file, seed)?;
    let model = FgsModel::fit(&data, &cfg)?;
    let envelope = ModelFile {
        config_version: CONFIG_VERSION,
        scaling,
        model: model.to_repr(),
    };
    let mut text = serde_json::to_string(&envelope)?;
    text.push('\n');
    std::fs::write(&args.out, &text)?;
    println!(
        "fit: n={} d={} trees={} seed={} -> {}",
        data.num_rows(),
        data.dim(),
        cfg.forest.num_trees,
        seed,
        args.out.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model file written by `fit`
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,

    #[command(flatten)]
    pub query: QueryFlags,

    /// Resolution of the local fit
    #[arg(long)]
    pub h: Option<f64>,

    /// Seed for --random query points
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output format (default: table)
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,

    /// Output file (default: stdout)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn cmd_predict(args: &PredictArgs, file: &FileConfig) -> Result<()> {
    let (model, scaling) = load_model(&args.model)?;
    let seed = pick(args.seed, file.seed, 0);
    let queries = args.query.resolve(model.smoothing_data(), seed)?;
    let h = args.h.unwrap_or(DEFAULT_H);
    let format = resolve_format(args.format, file, OutputFormat::Table)?;
    let reports = queries
        .iter()
        .map(|x| local_report(&model, x, Some(h)))
        .collect::<Result<Vec<_>>>()?;
    let names = model.smoothing_data().feature_names();

    let text = match format {
        OutputFormat::Json => to_pretty_json(&json!({
            "command": "predict",
            "model": args.model.display().to_string(),
            "h": h,
            "seed": seed,
            "standardized": scaling.is_some(),
            "results": reports,
        }))?,
        OutputFormat::Csv | OutputFormat::Table => {
            let mut headers: Vec<String> = vec!["point_id".into()];
            headers.extend(names.iter().map(|n| format!("x_{n}")));
            headers.extend(["h".into(), "mu_hat".into(), "se_mu".into()]);
            headers.extend(names.iter().map(|n| format!("beta_{n}")));
            headers.extend(names.iter().map(|n| format!("se_beta_{n}")));
            let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
            let rows: Vec<Vec<String>> = reports
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let mut row = vec![i.to_string()];
                    row.extend(r.x.iter().map(|v| num(*v)));
                    row.extend([num(r.h), num(r.mu_hat), num(r.se_mu)]);
                    row.extend(r.coefficients.iter().map(|c| num(c.beta_hat)));
                    row.extend(r.coefficients.iter().map(|c| num(c.std_error)));
                    row
                })
                .collect();
            if format == OutputFormat::Csv {
                render_csv(&header_refs, &rows)?
            } else {
                let mut text = String::new();
                for (i, r) in reports.iter().enumerate() {
                    let coords: Vec<String> = r.x.iter().map(|v| num(*v)).collect();
                    text.push_str(&format!(
                        "point {i}: x = ({}), h = {}\n",
                        coords.join(", "),
                        num(h)
                    ));
                    text.push_str(&r.to_table());
                    text.push('\n');
                }
                text
            }
        }
    };
    emit(args.out.as_deref(), &text)
}

#[derive(Debug, Args)]
pub struct CiArgs {
    /// Model file written by `fit`
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,

    #[command(flatten)]
    pub query: QueryFlags,

    #[command(flatten)]
    pub jackknife: JackknifeFlags,

    /// Seed for --random query points
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output format (default: csv)
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,

    /// Output file (default: stdout)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn cmd_ci(args: &CiArgs, file: &FileConfig) -> Result<()> {
    let (model, _) = load_model(&args.model)?;
    let jk = args.jackknife.resolve(file, 0.05)?;
    let seed = pick(args.seed, file.seed, 0);
    let queries = args.query.resolve(model.smoothing_data(), seed)?;
    let format = resolve_format(args.format, file, OutputFormat::Csv)?;

    struct CiRow {
        x: Vec<f64>,
        mu_hat_h1: f64,
        mu_dagger: f64,
        s: f64,
        lo: f64,
        hi: f64,
    }
    let mut rows = Vec::with_capacity(queries.len());
    for x in &queries {
        let res = debias(&model, x, &jk)?;
        let at_one = model.predict(x, 1.0)?;
        rows.push(CiRow {
            x: x.iter().cloned().collect(),
            mu_hat_h1: at_one.beta0,
            mu_dagger: res.mu_dagger,
            s: res.s(),
            lo: res.interval.lo,
            hi: res.interval.hi,
        });
    }

    let text = match format {
        OutputFormat::Json => to_pretty_json(&json!({
            "command": "ci",
            "model": args.model.display().to_string(),
            "jackknife": jk,
            "seed": seed,
            "results": rows
                .iter()
                .enumerate()
                .map(|(i, r)| json!({
                    "point_id": i,
                    "x": r.x,
                    "mu_hat_h1": r.mu_hat_h1,
                    "mu_dagger": r.mu_dagger,
                    "s": r.s,
                    "lo": r.lo,
                    "hi": r.hi,
                }))
                .collect::<Vec<_>>(),
        }))?,
        OutputFormat::Csv | OutputFormat::Table => {
            let headers = ["point_id", "mu_hat_h1", "mu_dagger", "s", "lo", "hi"];
            let cells: Vec<Vec<String>> = rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    vec![
                        i.to_string(),
                        num(r.mu_hat_h1),
                        num(r.mu_dagger),
                        num(r.s),
                        num(r.lo),
                        num(r.hi),
                    ]
                })
                .collect();
            if format == OutputFormat::Csv {
                render_csv(&headers, &cells)?
            } else {
                render_table(&headers, &cells)
            }
        }
    };
    emit(args.out.as_deref(), &text)
}

#[derive(Debug, Args)]
pub struct VarimpArgs {
    /// Model file written by `fit`
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,

    /// Query point as comma-separated coordinates
    #[arg(long, value_name = "X1,..,XD")]
    pub point: String,

    /// Miscoverage level of the slope bands
    #[arg(long)]
    pub alpha: Option<f64>,

    #[command(flatten)]
    pub grid: GridFlags,

    /// Output format (default: csv)
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,

    /// Output file (default: stdout)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn cmd_varimp(args: &VarimpArgs, file: &FileConfig) -> Result<()> {
    let (model, _) = load_model(&args.model)?;
    let coords = parse_point(&args.point)?;
    if coords.len() != model.dim() {
        return Err(FgsError::DimensionMismatch {
            expected: model.dim(),
            actual: coords.len(),
        });
    }
    let x = DVector::from_vec(coords);
    let alpha = pick(args.alpha, file.alpha, 0.05);
    let h_grid = args
        .grid
        .resolve_opt(file)?
        .unwrap_or_else(fgs::smoother::default_gradient_grid);
    let format = resolve_format(args.format, file, OutputFormat::Csv)?;
    let steps = model.gradient_path(&x, &h_grid, alpha)?;
    let names = model.smoothing_data().feature_names();

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut tidy = Vec::new();
    let mut failures = Vec::new();
    for step in &steps {
        match (&step.bands, &step.error) {
            (Some(bands), _) => {
                for (j, name) in names.iter().enumerate() {
                    rows.push(vec![
                        num(step.h),
                        name.clone(),
                        num(bands.slopes[j]),
                        num(bands.ses[j]),
                        num(bands.bands[j].lo),
                        num(bands.bands[j].hi),
                    ]);
                    tidy.push(json!({
                        "h": step.h,
                        "coefficient": name,
                        "slope": bands.slopes[j],
                        "se": bands.ses[j],
                        "lo": bands.bands[j].lo,
                        "hi": bands.bands[j].hi,
                    }));
                }
            }
            (None, Some(message)) => failures.push(json!({"h": step.h, "error": message})),
            (None, None) => unreachable!("gradient step carries bands or an error"),
        }
    }

    let headers = ["h", "coefficient", "slope", "se", "lo", "hi"];
    let text = match format {
        OutputFormat::Json => to_pretty_json(&json!({
            "command": "varimp",
            "model": args.model.display().to_string(),
            "point": x.iter().cloned().collect::<Vec<f64>>(),
            "alpha": alpha,
            "h_grid": h_grid,
            "rows": tidy,
            "failures": failures,
        }))?,
        OutputFormat::Csv => render_csv(&headers, &rows)?,
        OutputFormat::Table => {
            let mut text = render_table(&headers, &rows);
            for f in &failures {
                text.push_str(&format!("h = {}: {}\n", f["h"], f["error"]));
            }
            text
        }
    };
    emit(args.out.as_deref(), &text)
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// Model file written by `fit`
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,

    /// Resolutions for the per-point slope file
    #[arg(long = "h-values", value_name = "H1,..,HK")]
    pub h_values: Option<String>,

    /// Effective-bandwidth scale factor c
    #[arg(long)]
    pub c: Option<f64>,

    /// Directory receiving the summary files
    #[arg(long = "out-dir", value_name = "DIR")]
    pub out_dir: PathBuf,
}

pub fn cmd_summarize(args: &SummarizeArgs, _file: &FileConfig) -> Result<()> {
    let (model, _) = load_model(&args.model)?;
    let names = model.smoothing_data().feature_names().to_vec();
    let c = args.c.unwrap_or(1.0);
    let h_values = match &args.h_values {
        Some(spec) => {
            let values = parse_point(spec)?;
            if values.iter().any(|&h| h <= 0.0) {
                return Err(FgsError::InvalidConfig(
                    "--h-values must be strictly positive".into(),
                ));
            }
            values
        }
        None => vec![DEFAULT_H],
    };

    let bandwidths = explore::smoothing_bandwidths(&model)?;
    let summary = explore::barycenter(&bandwidths, BARYCENTER_TOL, BARYCENTER_MAX_ITER)?;
    std::fs::create_dir_all(&args.out_dir)?;

    let barycenter_path = args.out_dir.join("barycenter.json");
    std::fs::write(
        &barycenter_path,
        to_pretty_json(&json!({
            "command": "summarize",
            "model": args.model.display().to_string(),
            "feature_names": names,
            "c": c,
            "barycenter": summary,
        }))?,
    )?;

    let mut delta_headers = vec!["point_id".to_string()];
    delta_headers.extend(names.iter().map(|n| format!("delta_{n}")));
    let delta_refs: Vec<&str> = delta_headers.iter().map(String::as_str).collect();
    let delta_rows: Vec<Vec<String>> = bandwidths
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let delta = explore::effective_bandwidths(h, c)?;
            let mut row = vec![i.to_string()];
            row.extend(delta.iter().map(|v| num(*v)));
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let delta_path = args.out_dir.join("effective_bandwidths.csv");
    std::fs::write(&delta_path, render_csv(&delta_refs, &delta_rows)?)?;

    let smoothing = model.smoothing_data();
    let mut slope_rows = Vec::new();
    for i in 0..smoothing.num_rows() {
        let x = smoothing.point(i);
        for &h in &h_values {
            let fit = model.predict(&x, h)?;
            for (j, name) in names.iter().enumerate() {
                slope_rows.push(vec![
                    i.to_string(),
                    num(h),
                    name.clone(),
                    num(fit.beta[j]),
                    num(fit.se_beta[j]),
                ]);
            }
        }
    }
    let slopes_path = args.out_dir.join("slopes.csv");
    std::fs::write(
        &slopes_path,
        render_csv(
            &["point_id", "h", "coefficient", "slope", "se"],
            &slope_rows,
        )?,
    )?;

    let mut heat_headers = vec![""];
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    heat_headers.extend(&name_refs);
    let heat_rows: Vec<Vec<String>> = (0..names.len())
        .map(|i| {
            let mut row = vec![names[i].clone()];
            row.extend((0..names.len()).map(|j| num(summary.h_bar[(i, j)])));
            row
        })
        .collect();
    print!(
        "barycenter H-bar\n{}",
        render_table(&heat_headers, &heat_rows)
    );
    println!("frechet_variance  {}", num(summary.frechet_variance));
    println!(
        "converged in {} iterations (residual {})",
        summary.iterations,
        num(summary.residual)
    );
    println!("wrote {}", barycenter_path.display());
    println!("wrote {}", delta_path.display());
    println!("wrote {}", slopes_path.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Data CSV for the four-way comparison
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,

    /// Response column (default: y)
    #[arg(long)]
    pub target: Option<String>,

    /// Feature columns (default: every non-target column)
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,

    /// Seed for the block split and forest training
    #[arg(long)]
    pub seed: Option<u64>,

    #[command(flatten)]
    pub forest: ForestFlags,

    #[command(flatten)]
    pub jackknife: JackknifeFlags,

    /// Random block-role permutations averaged in (0: identity only)
    #[arg(long)]
    pub permute: Option<usize>,

    /// Output file (default: stdout)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn cmd_compare(args: &CompareArgs, file: &FileConfig) -> Result<()> {
    let target = pick(args.target.clone(), file.target.clone(), "y".into());
    let features = pick_opt(args.features.clone(), file.features.clone());
    let data = load_csv(&args.input, &target, features.as_deref())?;
    let seed = pick(args.seed, file.seed, 0);
    let fgs_cfg = args.forest.resolve(file, seed)?;
    let jk = args.jackknife.resolve(file, 0.05)?;
    let permute = args.permute.unwrap_or(0);
    let est = explore::gamma_compare(&data, &fgs_cfg.forest, &jk, jk.alpha, seed, permute)?;
    let text = to_pretty_json(&json!({
        "command": "compare",
        "input": args.input.display().to_string(),
        "seed": seed,
        "permute": permute,
        "forest": fgs_cfg.forest,
        "jackknife": jk,
        "blocks": "data is split into four blocks; the smoother block is halved internally into guide and smoothing data",
        "interpretation": "positive gamma_hat means the smoother has larger squared error than the forest",
        "gamma": est,
    }))?;
    emit(args.out.as_deref(), &text)
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Preset experiment: table1, table2, fig3-sin, fig3-step, fig3-doppler
    #[arg(long, conflicts_with = "design")]
    pub preset: Option<String>,

    /// Design name: sin4x, step, doppler, friedman_mu1, sigmoid_mu2
    #[arg(long)]
    pub design: Option<String>,

    /// Training rows per replicate
    #[arg(long)]
    pub n: Option<usize>,

    /// Noise standard deviation
    #[arg(long)]
    pub sigma: Option<f64>,

    /// Monte Carlo replicates
    #[arg(long)]
    pub replicates: Option<usize>,

    /// Master seed for data, forests, and query points
    #[arg(long)]
    pub seed: Option<u64>,

    /// Number of random query points
    #[arg(long = "random-points", conflicts_with = "query_grid")]
    pub random_points: Option<usize>,

    /// One-dimensional query grid min:max:count on [0,1]
    #[arg(long = "query-grid", value_name = "SPEC")]
    pub query_grid: Option<String>,

    #[command(flatten)]
    pub forest: ForestFlags,

    /// Miscoverage level of the intervals
    #[arg(long)]
    pub alpha: Option<f64>,

    #[command(flatten)]
    pub grid: GridFlags,

    /// Bias polynomial order t
    #[arg(long)]
    pub order: Option<usize>,

    /// JSON report file (default: stdout)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,

    /// Per-point CSV file
    #[arg(long = "out-csv", value_name = "FILE")]
    pub out_csv: Option<PathBuf>,
}

fn parse_query_grid(spec: &str) -> Result<QuerySpec> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(FgsError::InvalidConfig(format!(
            "query grid '{spec}' must be min:max:count"
        )));
    }
    let min: f64 = parts[0]
        .parse()
        .map_err(|_| FgsError::InvalidConfig(format!("query grid min '{}'", parts[0])))?;
    let max: f64 = parts[1]
        .parse()
        .map_err(|_| FgsError::InvalidConfig(format!("query grid max '{}'", parts[1])))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| FgsError::InvalidConfig(format!("query grid count '{}'", parts[2])))?;
    Ok(QuerySpec::Grid1d { min, max, count })
}

pub fn cmd_simulate(args: &SimulateArgs, file: &FileConfig) -> Result<()> {
    let seed = pick(args.seed, file.seed, 0);
    let mut exp: Experiment = match (&args.preset, &args.design) {
        (Some(name), None) => preset_experiment(name.parse::<Preset>()?, seed),
        (None, Some(name)) => {
            let design_name = name.parse::<DesignName>()?;
            let design = SimDesign {
                name: design_name,
                n: 500,
                sigma: 1.0,
                seed,
            };
            let points = if design.dim() == 1 {
                QuerySpec::Grid1d {
                    min: 0.05,
                    max: 0.95,
                    count: 19,
                }
            } else {
                QuerySpec::Random { count: 10 }
            };
            Experiment {
                design,
                fgs: Default::default(),
                jackknife: Default::default(),
                points,
                replicates: 100,
            }
        }
        _ => {
            return Err(FgsError::InvalidConfig(
                "either --preset or --design is required".into(),
            ));
        }
    };

    if let Some(n) = args.n {
        exp.design.n = n;
    }
    if let Some(sigma) = args.sigma {
        exp.design.sigma = sigma;
    }
    if let Some(r) = args.replicates {
        exp.replicates = r;
    }
    exp.fgs = args.forest.resolve(file, seed)?;
    if let Some(alpha) = pick_opt(args.alpha, file.alpha) {
        exp.jackknife.alpha = alpha;
    }
    if let Some(t) = pick_opt(args.order, file.order) {
        exp.jackknife.t = t;
    }
    if let Some(grid) = args.grid.resolve_opt(file)? {
        exp.jackknife.h_grid = grid;
    }
    exp.jackknife.validate()?;
    if let Some(k) = args.random_points {
        exp.points = QuerySpec::Random { count: k };
    } else if let Some(spec) = &args.query_grid {
        exp.points = parse_query_grid(spec)?;
    }

    let report = coverage_experiment(
        &exp.design,
        &exp.fgs,
        &exp.jackknife,
        &exp.points,
        exp.replicates,
    )?;

    let text = to_pretty_json(&json!({
        "command": "simulate",
        "preset": args.preset,
        "forest": exp.fgs,
        "points": exp.points,
        "mean_coverage": report.mean_coverage(),
        "mean_length": report.mean_length(),
        "report": report,
    }))?;

    if let Some(csv_path) = &args.out_csv {
        let d = exp.design.dim();
        let mut headers = vec!["point_id".to_string()];
        headers.extend((1..=d).map(|j| format!("x{j}")));
        headers.extend(
            [
                "true_mean",
                "coverage",
                "mean_length",
                "hits",
                "evaluations",
            ]
            .map(String::from),
        );
        let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
        let rows: Vec<Vec<String>> = report
            .per_point
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut row = vec![i.to_string()];
                row.extend(p.x.iter().map(|v| num(*v)));
                row.extend([
                    num(p.true_mean),
                    num(p.coverage),
                    num(p.mean_length),
                    p.hits.to_string(),
                    p.evaluations.to_string(),
                ]);
                row
            })
            .collect();
        std::fs::write(csv_path, render_csv(&header_refs, &rows)?)?;
    }

    emit(args.out.as_deref(), &text)?;
    if args.out.is_some() {
        println!(
            "simulate: mean coverage {} mean length {} ({} of {} replicates completed)",
            num(report.mean_coverage()),
            num(report.mean_length()),
            report.completed,
            report.replicates
        );
    }
    Ok(())
}
