//! Command-line front end: CSV ingestion with standardization, the fit /
//! path / cv / simulate / predict commands and their machine-readable
//! outputs.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::admm::{fit_multi, fit_single, ConvergenceReport};
use crate::error::{Error, Result};
use crate::model::{predict, CoefficientSet, DesignData, Hyperparameters, RhoAdapt};
use crate::path::{evaluate, fit_path, kfold_cv, PathPoint, PathSpec};
use crate::sim::{generate, Scenario, SimConfig};
use crate::tree::{cluster_responses, ResponseTree};

/// Exit codes: 0 success, 2 validation error, 3 solver non-convergence
/// (artifacts are still written).
pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "pliable-admm",
    about = "Pliable lasso and tree-guided multi-response regression via ADMM",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one model at fixed penalty levels.
    Fit(FitArgs),
    /// Fit a decreasing lambda grid with warm starts.
    Path(PathArgs),
    /// K-fold cross-validation over a lambda grid, then refit at the
    /// selected lambda.
    Cv(CvArgs),
    /// Generate one of the simulation designs as CSV files.
    Simulate(SimArgs),
    /// Predict responses from a saved coefficients.json.
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Covariate matrix CSV (N x p, headers required).
    #[arg(long)]
    pub x: PathBuf,
    /// Modifier matrix CSV (N x K, headers required).
    #[arg(long)]
    pub z: PathBuf,
    /// Response matrix CSV (N x D, headers required).
    #[arg(long)]
    pub y: PathBuf,
    /// Response tree JSON; defaults to complete-linkage clustering of Y.
    #[arg(long)]
    pub tree: Option<PathBuf>,
    /// Output directory (created if absent).
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for fold/grid fan-out.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub eps_abs: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub eps_rel: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value_t = RhoRule::Balance)]
    pub rho_rule: RhoRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RhoRule {
    Fixed,
    Published,
    Balance,
}

impl SolverArgs {
    fn hyper(&self, l1: f64, l2: f64, l3: f64) -> Hyperparameters {
        Hyperparameters {
            lambda1: l1,
            lambda2: l2,
            lambda3: l3,
            alpha: self.alpha,
            rho_init: self.rho,
            eps_abs: self.eps_abs,
            eps_rel: self.eps_rel,
            max_iter: self.max_iter,
            rho_adapt: match self.rho_rule {
                RhoRule::Fixed => RhoAdapt::Fixed,
                RhoRule::Published => RhoAdapt::Published,
                RhoRule::Balance => RhoAdapt::ResidualBalance,
            },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 50)]
    pub n_lambda: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lambda_min_ratio: f64,
    /// Couples lambda1 = c1 * lambda along the grid.
    #[arg(long, default_value_t = 0.0)]
    pub c1: f64,
    /// Couples lambda2 = c2 * lambda along the grid.
    #[arg(long, default_value_t = 0.0)]
    pub c2: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 0.0)]
    pub lambda1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lambda2: f64,
    #[arg(long)]
    pub lambda3: f64,
}

#[derive(Debug, Args)]
pub struct PathArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Select the one-standard-error lambda instead of the minimizer.
    #[arg(long, default_value_t = false)]
    pub one_se: bool,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, value_enum)]
    pub scenario: SimScenario,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub test_n: Option<usize>,
    #[arg(long)]
    pub noise_scale: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimScenario {
    Single,
    Multi1,
    Multi2,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// coefficients.json from a previous fit/cv run.
    #[arg(long)]
    pub coefficients: PathBuf,
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub z: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Column standardization recorded during ingestion: X is centered and
/// scaled, Y centered per response; Z is used as given.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Standardization {
    pub x_mean: Vec<f64>,
    pub x_sd: Vec<f64>,
    pub y_mean: Vec<f64>,
}

/// coefficients.json payload: original-scale coefficients plus fit metadata.
#[derive(Debug, Serialize, Deserialize)]
pub struct CoefficientsFile {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub alpha: f64,
    pub coefficients: CoefficientSet,
    pub tree: Option<ResponseTree>,
    pub converged: bool,
    pub iterations: usize,
}

pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_VALIDATION
        }
    }
}

pub fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Path(args) => cmd_path(args),
        Command::Cv(args) => cmd_cv(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Predict(args) => cmd_predict(args),
    }
}

fn init_threads(threads: usize) {
    if threads > 0 {
        // Ignore the error when a pool already exists (tests, repeat calls).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

fn load_tree(data: &DesignData, path: &Option<PathBuf>) -> Result<Option<ResponseTree>> {
    if data.d() == 1 {
        return Ok(None);
    }
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Ok(Some(ResponseTree::from_json(&text)?))
        }
        None => Ok(Some(cluster_responses(data.y())?)),
    }
}

fn cmd_fit(args: FitArgs) -> Result<i32> {
    init_threads(args.data.threads);
    let (data, std) = ingest(&args.data.x, &args.data.z, &args.data.y)?;
    let tree = load_tree(&data, &args.data.tree)?;
    let hp = args.solver.hyper(args.lambda1, args.lambda2, args.lambda3);
    let (coef, report) = match &tree {
        None => fit_single(&data, &hp)?,
        Some(t) => fit_multi(&data, &hp, t)?,
    };
    fs::create_dir_all(&args.data.out).map_err(|e| Error::io(&args.data.out, e))?;
    write_fit_outputs(&args.data.out, &coef, &std, &hp, tree.as_ref(), &report, &data)?;
    Ok(if report.converged { EXIT_OK } else { EXIT_NONCONVERGENCE })
}

fn cmd_path(args: PathArgs) -> Result<i32> {
    init_threads(args.data.threads);
    let (data, std) = ingest(&args.data.x, &args.data.z, &args.data.y)?;
    let tree = load_tree(&data, &args.data.tree)?;
    let spec = PathSpec {
        n_lambda: args.grid.n_lambda,
        lambda_min_ratio: args.grid.lambda_min_ratio,
        lambdas: None,
        alpha: args.solver.alpha,
        c1: args.grid.c1,
        c2: args.grid.c2,
    };
    let base = args.solver.hyper(0.0, 0.0, 0.0);
    let points = fit_path(&data, &spec, &base, tree.as_ref())?;
    fs::create_dir_all(&args.data.out).map_err(|e| Error::io(&args.data.out, e))?;
    write_path_csv(&args.data.out.join("path.csv"), &points)?;
    // Coefficients at the final (smallest-lambda) grid point.
    let last = points.last().expect("non-empty grid");
    let hp = Hyperparameters {
        lambda1: spec.c1 * last.lambda,
        lambda2: spec.c2 * last.lambda,
        lambda3: last.lambda,
        ..base
    };
    write_fit_outputs(
        &args.data.out,
        &last.coef,
        &std,
        &hp,
        tree.as_ref(),
        &last.report,
        &data,
    )?;
    let ok = points.iter().all(|p| p.report.converged);
    Ok(if ok { EXIT_OK } else { EXIT_NONCONVERGENCE })
}

fn cmd_cv(args: CvArgs) -> Result<i32> {
    init_threads(args.data.threads);
    let (data, std) = ingest(&args.data.x, &args.data.z, &args.data.y)?;
    let tree = load_tree(&data, &args.data.tree)?;
    let spec = PathSpec {
        n_lambda: args.grid.n_lambda,
        lambda_min_ratio: args.grid.lambda_min_ratio,
        lambdas: None,
        alpha: args.solver.alpha,
        c1: args.grid.c1,
        c2: args.grid.c2,
    };
    let base = args.solver.hyper(0.0, 0.0, 0.0);
    let cv = kfold_cv(&data, &spec, &base, args.folds, args.seed)?;
    fs::create_dir_all(&args.data.out).map_err(|e| Error::io(&args.data.out, e))?;
    write_cv_csv(&args.data.out.join("cv.csv"), &cv)?;

    let lambda = if args.one_se { cv.one_se_lambda } else { cv.best_lambda };
    let hp = Hyperparameters {
        lambda1: spec.c1 * lambda,
        lambda2: spec.c2 * lambda,
        lambda3: lambda,
        ..base
    };
    let (coef, report) = match &tree {
        None => fit_single(&data, &hp)?,
        Some(t) => fit_multi(&data, &hp, t)?,
    };
    write_fit_outputs(&args.data.out, &coef, &std, &hp, tree.as_ref(), &report, &data)?;
    Ok(if report.converged { EXIT_OK } else { EXIT_NONCONVERGENCE })
}

fn cmd_simulate(args: SimArgs) -> Result<i32> {
    let mut cfg = match args.scenario {
        SimScenario::Single => SimConfig::single(args.seed),
        SimScenario::Multi1 => SimConfig::multi1(args.seed),
        SimScenario::Multi2 => SimConfig::multi2(args.seed),
    };
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(p) = args.p {
        cfg.p = p;
    }
    if let Some(t) = args.test_n {
        cfg.test_n = t;
    }
    if let Some(s) = args.noise_scale {
        cfg.noise_scale = s;
    }
    let sim = generate(&cfg)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    write_design(&args.out, "", &sim.train)?;
    if let Some(test) = &sim.test {
        write_design(&args.out, "_test", test)?;
    }
    let truth_json =
        serde_json::to_string_pretty(&sim.truth).map_err(Error::Json)?;
    write_text(&args.out.join("truth.json"), &truth_json)?;
    if sim.train.d() > 1 {
        let tree = cluster_responses(sim.train.y())?;
        write_text(&args.out.join("tree.json"), &tree.to_json()?)?;
    }
    let cfg_json = serde_json::to_string_pretty(&cfg).map_err(Error::Json)?;
    write_text(&args.out.join("sim_config.json"), &cfg_json)?;
    Ok(EXIT_OK)
}

fn cmd_predict(args: PredictArgs) -> Result<i32> {
    let text =
        fs::read_to_string(&args.coefficients).map_err(|e| Error::io(&args.coefficients, e))?;
    let file: CoefficientsFile = serde_json::from_str(&text).map_err(Error::Json)?;
    let (_, x) = read_matrix_csv(&args.x)?;
    let (_, z) = read_matrix_csv(&args.z)?;
    let d = file.coefficients.d();
    // DesignData requires a Y; predictions only need its shape.
    let n = x.nrows();
    let data = DesignData::new(x, z, Array2::zeros((n, d)))?;
    let yhat = predict(&data, &file.coefficients)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let headers: Vec<String> = (1..=d).map(|i| format!("y{i}")).collect();
    write_matrix_csv(&args.out.join("predictions.csv"), &headers, &yhat)?;
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// CSV / JSON plumbing
// ---------------------------------------------------------------------------

/// Reads an RFC-4180 numeric CSV with a mandatory header row.
pub fn read_matrix_csv(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, 0, e.to_string()))?;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(path, 1, e.to_string()))?
        .iter()
        .map(|s| s.to_string())
        .collect();
    let ncols = headers.len();
    let mut values: Vec<f64> = Vec::new();
    let mut nrows = 0usize;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2; // header is line 1
        let rec = rec.map_err(|e| csv_error(path, line, e.to_string()))?;
        if rec.len() != ncols {
            return Err(csv_error(
                path,
                line,
                format!("expected {ncols} columns, found {}", rec.len()),
            ));
        }
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                csv_error(
                    path,
                    line,
                    format!("column {} ({}): non-numeric value {field:?}", c + 1, headers[c]),
                )
            })?;
            values.push(v);
        }
        nrows += 1;
    }
    let m = Array2::from_shape_vec((nrows, ncols), values)
        .map_err(|e| csv_error(path, 0, e.to_string()))?;
    Ok((headers, m))
}

pub fn write_matrix_csv(path: &Path, headers: &[String], m: &Array2<f64>) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| csv_error(path, 0, e.to_string()))?;
    wtr.write_record(headers)
        .map_err(|e| csv_error(path, 1, e.to_string()))?;
    for row in m.rows() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        wtr.write_record(&fields)
            .map_err(|e| csv_error(path, 0, e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn csv_error(path: &Path, line: usize, message: String) -> Error {
    Error::Csv {
        path: path.display().to_string(),
        line,
        message,
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_design(dir: &Path, suffix: &str, data: &DesignData) -> Result<()> {
    let name = |prefix: &str, count: usize| -> Vec<String> {
        (1..=count).map(|i| format!("{prefix}{i}")).collect()
    };
    write_matrix_csv(&dir.join(format!("X{suffix}.csv")), &name("x", data.p()), data.x())?;
    write_matrix_csv(&dir.join(format!("Z{suffix}.csv")), &name("z", data.k()), data.z())?;
    write_matrix_csv(&dir.join(format!("Y{suffix}.csv")), &name("y", data.d()), data.y())?;
    Ok(())
}

/// Reads the three matrices, validates row alignment, standardizes X columns
/// to zero mean / unit sample SD and centers each Y column.
pub fn ingest(x_path: &Path, z_path: &Path, y_path: &Path) -> Result<(DesignData, Standardization)> {
    let (_, mut x) = read_matrix_csv(x_path)?;
    let (_, z) = read_matrix_csv(z_path)?;
    let (_, mut y) = read_matrix_csv(y_path)?;
    if x.nrows() != z.nrows() || x.nrows() != y.nrows() {
        return Err(Error::invalid(format!(
            "row-count mismatch: {} has {} rows, {} has {}, {} has {}",
            x_path.display(),
            x.nrows(),
            z_path.display(),
            z.nrows(),
            y_path.display(),
            y.nrows()
        )));
    }
    let n = x.nrows();
    if n < 2 {
        return Err(Error::invalid("at least two rows required"));
    }
    let nf = n as f64;
    let mut x_mean = Vec::with_capacity(x.ncols());
    let mut x_sd = Vec::with_capacity(x.ncols());
    for j in 0..x.ncols() {
        let mean = x.column(j).sum() / nf;
        let var = x.column(j).iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        let sd = var.sqrt();
        if sd == 0.0 {
            return Err(Error::degenerate(format!(
                "X column {} is constant; cannot standardize",
                j + 1
            )));
        }
        let mut col = x.column_mut(j);
        col.mapv_inplace(|v| (v - mean) / sd);
        x_mean.push(mean);
        x_sd.push(sd);
    }
    let mut y_mean = Vec::with_capacity(y.ncols());
    for d in 0..y.ncols() {
        let mean = y.column(d).sum() / nf;
        y.column_mut(d).mapv_inplace(|v| v - mean);
        y_mean.push(mean);
    }
    let data = DesignData::new(x, z, y)?;
    Ok((
        data,
        Standardization {
            x_mean,
            x_sd,
            y_mean,
        },
    ))
}

/// Maps coefficients fitted on standardized X / centered Y back to the
/// original scale: beta_j / sd_j on X_j, intercept absorbing the means.
pub fn to_original_scale(coef: &CoefficientSet, std: &Standardization) -> CoefficientSet {
    let (p, kp1, d) = coef.b.dim();
    let k = kp1 - 1;
    let mut out = CoefficientSet::zeros(p, k, d);
    for dd in 0..d {
        let mut beta0 = coef.beta0[dd] + std.y_mean[dd];
        let mut theta0 = Array1::<f64>::zeros(k);
        for kk in 0..k {
            theta0[kk] = coef.theta0[[kk, dd]];
        }
        for j in 0..p {
            let scale = 1.0 / std.x_sd[j];
            out.b[[j, 0, dd]] = coef.b[[j, 0, dd]] * scale;
            beta0 -= std.x_mean[j] * coef.b[[j, 0, dd]] * scale;
            for kk in 1..kp1 {
                out.b[[j, kk, dd]] = coef.b[[j, kk, dd]] * scale;
                theta0[kk - 1] -= std.x_mean[j] * coef.b[[j, kk, dd]] * scale;
            }
        }
        out.beta0[dd] = beta0;
        for kk in 0..k {
            out.theta0[[kk, dd]] = theta0[kk];
        }
    }
    out
}

fn write_fit_outputs(
    dir: &Path,
    coef: &CoefficientSet,
    std: &Standardization,
    hp: &Hyperparameters,
    tree: Option<&ResponseTree>,
    report: &ConvergenceReport,
    data: &DesignData,
) -> Result<()> {
    let original = to_original_scale(coef, std);
    let file = CoefficientsFile {
        lambda1: hp.lambda1,
        lambda2: hp.lambda2,
        lambda3: hp.lambda3,
        alpha: hp.alpha,
        coefficients: original.clone(),
        tree: tree.cloned(),
        converged: report.converged,
        iterations: report.iterations,
    };
    let json = serde_json::to_string_pretty(&file).map_err(Error::Json)?;
    write_text(&dir.join("coefficients.json"), &json)?;
    write_interactions_csv(&dir.join("interactions.csv"), &original)?;

    // In-sample metrics on the standardized fit.
    let metrics = evaluate(None, coef, data)?;
    #[derive(Serialize)]
    struct MetricsFile<'a> {
        mse: f64,
        per_response_mse: &'a [f64],
        nonzero_count: usize,
        converged: bool,
        iterations: usize,
        objective: f64,
    }
    let mf = MetricsFile {
        mse: metrics.mse,
        per_response_mse: &metrics.per_response_mse,
        nonzero_count: metrics.nonzero_count,
        converged: report.converged,
        iterations: report.iterations,
        objective: report.objective,
    };
    let json = serde_json::to_string_pretty(&mf).map_err(Error::Json)?;
    write_text(&dir.join("metrics.json"), &json)?;
    Ok(())
}

/// Sparse interaction export: one row per non-zero theta_{jkd}, 1-based
/// indices.
fn write_interactions_csv(path: &Path, coef: &CoefficientSet) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| csv_error(path, 0, e.to_string()))?;
    wtr.write_record(["j", "k", "d", "theta"])
        .map_err(|e| csv_error(path, 0, e.to_string()))?;
    let (p, kp1, d_count) = coef.b.dim();
    for j in 0..p {
        for kk in 1..kp1 {
            for d in 0..d_count {
                let v = coef.b[[j, kk, d]];
                if v != 0.0 {
                    wtr.write_record([
                        (j + 1).to_string(),
                        kk.to_string(),
                        (d + 1).to_string(),
                        format!("{v}"),
                    ])
                    .map_err(|e| csv_error(path, 0, e.to_string()))?;
                }
            }
        }
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn write_path_csv(path: &Path, points: &[PathPoint]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| csv_error(path, 0, e.to_string()))?;
    wtr.write_record(["lambda", "objective", "nonzero_main", "iterations", "r_norm", "s_norm", "converged"])
        .map_err(|e| csv_error(path, 0, e.to_string()))?;
    for pt in points {
        wtr.write_record([
            format!("{}", pt.lambda),
            format!("{}", pt.report.objective),
            pt.nonzero_main.to_string(),
            pt.report.iterations.to_string(),
            format!("{}", pt.report.r_norm),
            format!("{}", pt.report.s_norm),
            pt.report.converged.to_string(),
        ])
        .map_err(|e| csv_error(path, 0, e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn write_cv_csv(path: &Path, cv: &crate::path::CvResult) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| csv_error(path, 0, e.to_string()))?;
    wtr.write_record(["lambda", "mean_mse", "sd_mse", "selected", "one_se"])
        .map_err(|e| csv_error(path, 0, e.to_string()))?;
    for (i, l) in cv.lambdas.iter().enumerate() {
        wtr.write_record([
            format!("{l}"),
            format!("{}", cv.mean_mse[i]),
            format!("{}", cv.sd_mse[i]),
            (i == cv.best_index).to_string(),
            (i == cv.one_se_index).to_string(),
        ])
        .map_err(|e| csv_error(path, 0, e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

impl From<Scenario> for SimScenario {
    fn from(s: Scenario) -> Self {
        match s {
            Scenario::Single => SimScenario::Single,
            Scenario::Multi1 => SimScenario::Multi1,
            Scenario::Multi2 => SimScenario::Multi2,
        }
    }
}
