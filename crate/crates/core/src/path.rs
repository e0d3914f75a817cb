//! Regularization-path fitting with warm starts, K-fold cross-validation
//! and the evaluation metrics (test MSE, support sensitivity/specificity,
//! non-zero counting).

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::{
    fit_multi_warm, fit_single_warm, AdmmStateMulti, AdmmStateSingle, ConvergenceReport,
    InterceptSolver,
};
use crate::error::{Error, Result};
use crate::model::{
    predict, CoefficientSet, DesignData, Hyperparameters, InteractionTensor,
};
use crate::prox::internal_groups;
use crate::tree::{cluster_responses, ResponseTree};

/// Grid configuration for a regularization path. `c1` and `c2` couple the
/// tree penalties to the grid value: lambda1 = c1 * lambda,
/// lambda2 = c2 * lambda, lambda3 = lambda.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathSpec {
    pub n_lambda: usize,
    pub lambda_min_ratio: f64,
    /// Explicit decreasing grid; overrides the geometric sequence.
    pub lambdas: Option<Vec<f64>>,
    pub alpha: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for PathSpec {
    fn default() -> Self {
        PathSpec {
            n_lambda: 50,
            lambda_min_ratio: 0.01,
            lambdas: None,
            alpha: 0.5,
            c1: 0.0,
            c2: 0.0,
        }
    }
}

impl PathSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_lambda == 0 {
            return Err(Error::invalid("n_lambda must be positive"));
        }
        if !(0.0 < self.lambda_min_ratio && self.lambda_min_ratio < 1.0) {
            return Err(Error::invalid("lambda_min_ratio must be in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid("alpha must be in [0, 1]"));
        }
        if self.c1 < 0.0 || self.c2 < 0.0 {
            return Err(Error::invalid("coupling constants must be nonnegative"));
        }
        if let Some(ls) = &self.lambdas {
            if ls.is_empty() || ls.windows(2).any(|w| w[1] >= w[0]) || ls.iter().any(|&l| l <= 0.0)
            {
                return Err(Error::invalid(
                    "explicit lambda list must be positive and strictly decreasing",
                ));
            }
        }
        Ok(())
    }

    fn hyper(&self, lambda: f64, base: &Hyperparameters) -> Hyperparameters {
        Hyperparameters {
            lambda1: self.c1 * lambda,
            lambda2: self.c2 * lambda,
            lambda3: lambda,
            alpha: self.alpha,
            ..base.clone()
        }
    }
}

/// Held-out performance and support-recovery metrics for one fitted model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub mse: f64,
    pub per_response_mse: Vec<f64>,
    /// TP / (TP + FN) over main-effect entries; present only with a truth.
    pub sensitivity: Option<f64>,
    /// TN / (TN + FP) over main-effect entries; present only with a truth.
    pub specificity: Option<f64>,
    /// Number of non-zero main-effect entries of the fit.
    pub nonzero_count: usize,
}

/// One grid point of a fitted path.
#[derive(Debug, Clone)]
pub struct PathPoint {
    pub lambda: f64,
    pub coef: CoefficientSet,
    pub report: ConvergenceReport,
    pub nonzero_main: usize,
}

/// Cross-validation summary: the per-lambda mean/SD validation error curve
/// and the two selected grid points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvResult {
    pub lambdas: Vec<f64>,
    pub mean_mse: Vec<f64>,
    pub sd_mse: Vec<f64>,
    pub best_index: usize,
    pub best_lambda: f64,
    pub one_se_index: usize,
    pub one_se_lambda: f64,
}

/// Smallest grid value at which the all-zero coefficient matrix is optimal,
/// from the group stationarity condition ||W_j^T R_d|| / N <= (1 - alpha)
/// lambda with R the residual of Y on [1, Z]; then a geometric sequence down
/// to lambda_max * lambda_min_ratio.
pub fn lambda_path(data: &DesignData, spec: &PathSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    if let Some(ls) = &spec.lambdas {
        return Ok(ls.clone());
    }
    let lmax = lambda_max(data, spec.alpha)?;
    if lmax <= 0.0 || !lmax.is_finite() {
        return Err(Error::degenerate(
            "lambda_max is zero; Y carries no signal beyond the intercept block",
        ));
    }
    let n = spec.n_lambda;
    if n == 1 {
        return Ok(vec![lmax]);
    }
    let log_max = lmax.ln();
    let log_min = (lmax * spec.lambda_min_ratio).ln();
    Ok((0..n)
        .map(|i| (log_max + (log_min - log_max) * i as f64 / (n - 1) as f64).exp())
        .collect())
}

fn lambda_max(data: &DesignData, alpha: f64) -> Result<f64> {
    let n = data.n() as f64;
    let kp1 = data.k() + 1;
    let tensor = InteractionTensor::build(data)?;
    let flat = tensor.flat();
    let intercepts = InterceptSolver::new(data.z());
    // Denominator clamp keeps the grid finite as alpha -> 1; at alpha = 1 the
    // group part of the penalty vanishes and no finite lambda zeroes the
    // main effects through it alone.
    let denom = (1.0 - alpha).max(1e-3);
    let mut lmax: f64 = 0.0;
    for d in 0..data.d() {
        let y_d = data.y().column(d).to_owned();
        let (b0, th0) = intercepts.solve(&y_d);
        let resid = &y_d - b0 - &data.z().dot(&th0);
        let corr = flat.t().dot(&resid) / n;
        for j in 0..data.p() {
            let sq: f64 = (0..kp1).map(|kk| corr[j * kp1 + kk].powi(2)).sum();
            lmax = lmax.max(sq.sqrt() / denom);
        }
    }
    Ok(lmax)
}

/// Fits the grid largest-to-smallest, warm-starting every block of the ADMM
/// state from the previous grid point. `tree` is required when D > 1.
pub fn fit_path(
    data: &DesignData,
    spec: &PathSpec,
    base: &Hyperparameters,
    tree: Option<&ResponseTree>,
) -> Result<Vec<PathPoint>> {
    let lambdas = lambda_path(data, spec)?;
    let mut out = Vec::with_capacity(lambdas.len());
    if data.d() == 1 {
        if spec.c1 > 0.0 || spec.c2 > 0.0 {
            return Err(Error::invalid(
                "tree penalty coupling requires a multi-response problem",
            ));
        }
        let mut state = AdmmStateSingle::new(data.p(), data.k(), base.rho_init);
        for &l in &lambdas {
            let hp = spec.hyper(l, base);
            let (coef, report) = fit_single_warm(data, &hp, &mut state)?;
            let nz = count_nonzero_main(&coef);
            out.push(PathPoint {
                lambda: l,
                coef,
                report,
                nonzero_main: nz,
            });
        }
    } else {
        let tree = tree.ok_or_else(|| Error::invalid("multi-response path requires a tree"))?;
        let groups = internal_groups(tree);
        let rows_e: usize = groups.iter().map(|(g, _)| g.len()).sum();
        let mut state =
            AdmmStateMulti::new(data.p(), data.k(), data.d(), rows_e, base.rho_init);
        for &l in &lambdas {
            let hp = spec.hyper(l, base);
            let (coef, report) = fit_multi_warm(data, &hp, tree, &mut state)?;
            let nz = count_nonzero_main(&coef);
            out.push(PathPoint {
                lambda: l,
                coef,
                report,
                nonzero_main: nz,
            });
        }
    }
    Ok(out)
}

/// K-fold cross-validation over the grid. Fold assignment is a seeded
/// shuffle; with D > 1 each fold re-derives its response tree from the
/// training rows only. Selection reports both the mean-MSE minimizer and the
/// one-standard-error rule.
pub fn kfold_cv(
    data: &DesignData,
    spec: &PathSpec,
    base: &Hyperparameters,
    folds: usize,
    seed: u64,
) -> Result<CvResult> {
    if folds < 2 {
        return Err(Error::invalid("folds must be >= 2"));
    }
    if data.n() < folds {
        return Err(Error::invalid(format!(
            "N = {} rows cannot form {} folds",
            data.n(),
            folds
        )));
    }
    let lambdas = lambda_path(data, spec)?;
    let mut order: Vec<usize> = (0..data.n()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let assignments: Vec<Vec<usize>> = (0..folds)
        .map(|f| {
            order
                .iter()
                .copied()
                .enumerate()
                .filter(|(i, _)| i % folds == f)
                .map(|(_, r)| r)
                .collect()
        })
        .collect();

    // (fold, lambda index) -> validation MSE; folds fan out, the reduction
    // below is ordered.
    let fold_curves: Vec<Result<Vec<f64>>> = assignments
        .par_iter()
        .map(|val_rows| cv_fold_curve(data, spec, base, &lambdas, val_rows))
        .collect();
    let mut curves = Vec::with_capacity(folds);
    for c in fold_curves {
        curves.push(c?);
    }

    let mut mean_mse = vec![0.0; lambdas.len()];
    let mut sd_mse = vec![0.0; lambdas.len()];
    for (li, m) in mean_mse.iter_mut().enumerate() {
        *m = curves.iter().map(|c| c[li]).sum::<f64>() / folds as f64;
    }
    for (li, s) in sd_mse.iter_mut().enumerate() {
        let var = curves
            .iter()
            .map(|c| (c[li] - mean_mse[li]).powi(2))
            .sum::<f64>()
            / (folds - 1) as f64;
        *s = var.sqrt();
    }

    let best_index = mean_mse
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let se_best = sd_mse[best_index] / (folds as f64).sqrt();
    // Largest lambda (smallest index; the grid decreases) within one SE.
    let one_se_index = (0..lambdas.len())
        .find(|&i| mean_mse[i] <= mean_mse[best_index] + se_best)
        .unwrap_or(best_index);

    Ok(CvResult {
        best_lambda: lambdas[best_index],
        one_se_lambda: lambdas[one_se_index],
        lambdas,
        mean_mse,
        sd_mse,
        best_index,
        one_se_index,
    })
}

fn cv_fold_curve(
    data: &DesignData,
    spec: &PathSpec,
    base: &Hyperparameters,
    lambdas: &[f64],
    val_rows: &[usize],
) -> Result<Vec<f64>> {
    let in_val = {
        let mut mask = vec![false; data.n()];
        for &r in val_rows {
            mask[r] = true;
        }
        mask
    };
    let train_rows: Vec<usize> = (0..data.n()).filter(|&r| !in_val[r]).collect();
    let train = subset_rows(data, &train_rows)?;
    let val = subset_rows(data, val_rows)?;
    for d in 0..train.d() {
        let col = train.y().column(d);
        let first = col[0];
        if col.iter().all(|&v| v == first) {
            eprintln!(
                "warning: response column {d} is constant in a training fold; fold retained"
            );
        }
    }

    let tree = if data.d() > 1 {
        Some(cluster_responses(train.y())?)
    } else {
        None
    };
    let fold_spec = PathSpec {
        lambdas: Some(lambdas.to_vec()),
        ..spec.clone()
    };
    let points = fit_path(&train, &fold_spec, base, tree.as_ref())?;
    points
        .iter()
        .map(|pt| {
            let yhat = predict(&val, &pt.coef)?;
            let resid = val.y() - &yhat;
            Ok(resid.iter().map(|v| v * v).sum::<f64>() / resid.len() as f64)
        })
        .collect()
}

fn subset_rows(data: &DesignData, rows: &[usize]) -> Result<DesignData> {
    let pick = |m: &Array2<f64>| {
        Array2::from_shape_fn((rows.len(), m.ncols()), |(i, c)| m[[rows[i], c]])
    };
    DesignData::new(pick(data.x()), pick(data.z()), pick(data.y()))
}

/// Test-set metrics of a fitted coefficient set, with support recovery
/// against a known truth when one is supplied.
pub fn evaluate(
    truth: Option<&CoefficientSet>,
    fitted: &CoefficientSet,
    test: &DesignData,
) -> Result<MetricReport> {
    let yhat = predict(test, fitted)?;
    let resid = test.y() - &yhat;
    let n = test.n() as f64;
    let per_response_mse: Vec<f64> = (0..test.d())
        .map(|d| resid.column(d).iter().map(|v| v * v).sum::<f64>() / n)
        .collect();
    let mse = per_response_mse.iter().sum::<f64>() / per_response_mse.len() as f64;

    let (sensitivity, specificity) = match truth {
        None => (None, None),
        Some(t) => {
            if t.b.dim() != fitted.b.dim() {
                return Err(Error::dim(
                    "truth",
                    format!("{:?}", fitted.b.dim()),
                    format!("{:?}", t.b.dim()),
                ));
            }
            let (mut tp, mut fn_, mut tn, mut fp) = (0usize, 0usize, 0usize, 0usize);
            for j in 0..t.p() {
                for d in 0..t.d() {
                    let truth_nz = t.b[[j, 0, d]] != 0.0;
                    let fit_nz = fitted.b[[j, 0, d]] != 0.0;
                    match (truth_nz, fit_nz) {
                        (true, true) => tp += 1,
                        (true, false) => fn_ += 1,
                        (false, false) => tn += 1,
                        (false, true) => fp += 1,
                    }
                }
            }
            let sens = if tp + fn_ > 0 {
                tp as f64 / (tp + fn_) as f64
            } else {
                1.0
            };
            let spec = if tn + fp > 0 {
                tn as f64 / (tn + fp) as f64
            } else {
                1.0
            };
            (Some(sens), Some(spec))
        }
    };

    Ok(MetricReport {
        mse,
        per_response_mse,
        sensitivity,
        specificity,
        nonzero_count: count_nonzero_main(fitted),
    })
}

/// Number of non-zero main-effect entries beta_{jd}.
pub fn count_nonzero_main(coef: &CoefficientSet) -> usize {
    let mut n = 0;
    for j in 0..coef.p() {
        for d in 0..coef.d() {
            if coef.b[[j, 0, d]] != 0.0 {
                n += 1;
            }
        }
    }
    n
}

/// Replication counting rule: a main-effect entry counts as selected when it
/// is non-zero in at least `min_hits` of the repeated fits.
pub fn aggregate_nonzero_count(fits: &[CoefficientSet], min_hits: usize) -> Result<usize> {
    let first = fits
        .first()
        .ok_or_else(|| Error::invalid("no fits to aggregate"))?;
    let (p, d) = (first.p(), first.d());
    if fits.iter().any(|f| f.p() != p || f.d() != d) {
        return Err(Error::invalid("fits have mismatched dimensions"));
    }
    let mut hits = Array1::<usize>::zeros(p * d);
    for f in fits {
        for j in 0..p {
            for dd in 0..d {
                if f.b[[j, 0, dd]] != 0.0 {
                    hits[j * d + dd] += 1;
                }
            }
        }
    }
    Ok(hits.iter().filter(|&&h| h >= min_hits).count())
}
