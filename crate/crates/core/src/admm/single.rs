//! ADMM solver for the single-response pliable lasso objective, with
//! auxiliary variables V (overlapping groups) and Q (l1 term) and scaled
//! multipliers O and P.

use ndarray::{Array1, Array2, Axis};

use super::{adapt_rho, ConvergenceReport, InterceptSolver};
use crate::error::{Error, Result};
use crate::la;
use crate::model::{objective, CoefficientSet, DesignData, Hyperparameters, InteractionTensor};
use crate::prox::{group_soft_threshold_inplace, soft_threshold};

/// Iterate state, warm-startable across a lambda path. V and O are stored
/// as p x 2(K+1) with the two group blocks side by side; the first entry of
/// the second block is the structurally-zero row of the expansion.
#[derive(Debug, Clone)]
pub struct AdmmStateSingle {
    pub b: Array2<f64>,
    pub v: Array2<f64>,
    pub q: Array2<f64>,
    pub o: Array2<f64>,
    pub p_mul: Array2<f64>,
    pub rho: f64,
    pub beta0: f64,
    pub theta0: Array1<f64>,
}

impl AdmmStateSingle {
    pub fn new(p: usize, k: usize, rho: f64) -> Self {
        let kp1 = k + 1;
        AdmmStateSingle {
            b: Array2::zeros((p, kp1)),
            v: Array2::zeros((p, 2 * kp1)),
            q: Array2::zeros((p, kp1)),
            o: Array2::zeros((p, 2 * kp1)),
            p_mul: Array2::zeros((p, kp1)),
            rho,
            beta0: 0.0,
            theta0: Array1::zeros(k),
        }
    }
}

/// (G b^T)^T for one row: [b, 0, b_(-1)] laid out over 2(K+1) slots.
fn expand_row(b_row: &ndarray::ArrayView1<f64>, out: &mut [f64]) {
    let kp1 = b_row.len();
    for k in 0..kp1 {
        out[k] = b_row[k];
    }
    out[kp1] = 0.0;
    for k in 1..kp1 {
        out[kp1 + k] = b_row[k];
    }
}

/// G^T applied to a 2(K+1) row: entry 0 is v[0], entry k is v[k] + v[K+1+k].
fn contract_row(v_row: &[f64], kp1: usize, out: &mut Array1<f64>) {
    out[0] = v_row[0];
    for k in 1..kp1 {
        out[k] = v_row[k] + v_row[kp1 + k];
    }
}

fn factorize_systems(
    wtw: &[Array2<f64>],
    n: f64,
    rho: f64,
    kp1: usize,
) -> Vec<Array2<f64>> {
    wtw.iter()
        .map(|m| {
            let mut sys = m / n;
            sys[[0, 0]] += 2.0 * rho;
            for k in 1..kp1 {
                sys[[k, k]] += 3.0 * rho;
            }
            la::cholesky(&sys)
        })
        .collect()
}

pub fn fit_single(
    data: &DesignData,
    hp: &Hyperparameters,
) -> Result<(CoefficientSet, ConvergenceReport)> {
    let mut state = AdmmStateSingle::new(data.p(), data.k(), hp.rho_init);
    fit_single_warm(data, hp, &mut state)
}

/// Runs the ADMM loop starting from (and updating) the supplied state, so a
/// regularization path can warm-start each lambda from the previous one.
pub fn fit_single_warm(
    data: &DesignData,
    hp: &Hyperparameters,
    state: &mut AdmmStateSingle,
) -> Result<(CoefficientSet, ConvergenceReport)> {
    hp.validate()?;
    if data.d() != 1 {
        return Err(Error::invalid(format!(
            "single-response solver requires D = 1, got D = {}",
            data.d()
        )));
    }
    if hp.lambda1 > 0.0 || hp.lambda2 > 0.0 {
        return Err(Error::invalid(
            "lambda1/lambda2 are tree penalties; the single-response model uses lambda3 only",
        ));
    }
    let (n, p, k) = (data.n(), data.p(), data.k());
    let kp1 = k + 1;
    let nf = n as f64;
    let lambda = hp.lambda3;
    let alpha = hp.alpha;

    let tensor = InteractionTensor::build(data)?;
    let y = data.y().index_axis(Axis(1), 0).to_owned();
    let intercepts = InterceptSolver::new(data.z());

    // Per-coordinate Gram blocks W_j^T W_j, factorized against the current rho.
    let wtw: Vec<Array2<f64>> = (0..p)
        .map(|j| {
            let wj = tensor.block(j);
            wj.t().dot(&wj)
        })
        .collect();
    let mut chol = factorize_systems(&wtw, nf, state.rho, kp1);

    // Constraint dimension: B = Q (p(K+1)) plus (G B^T)^T = V (2p(K+1)).
    let dim_sqrt = ((3 * p * kp1) as f64).sqrt();

    let mut fitted_wb = tensor.flat().dot(
        &Array1::from_iter(state.b.iter().copied()),
    );
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let (mut r_norm, mut s_norm, mut eps_pri, mut eps_dual) = (f64::NAN, f64::NAN, 0.0, 0.0);

    let mut rhs = Array1::<f64>::zeros(kp1);
    let mut expanded = vec![0.0; 2 * kp1];

    for t in 0..hp.max_iter {
        iterations = t + 1;

        // Unpenalized block: exact OLS of y - W*B on [1, Z].
        let target = &y - &fitted_wb;
        let (b0, th0) = intercepts.solve(&target);
        state.beta0 = b0;
        state.theta0 = th0;
        let ytilde = &y - state.beta0 - &data.z().dot(&state.theta0);
        let mut r_full = &ytilde - &fitted_wb;

        // Gauss-Seidel sweep over coordinates with immediate partial-residual
        // refresh.
        for j in 0..p {
            let wj = tensor.block(j);
            let b_old = state.b.row(j).to_owned();
            let r_minus_j = &r_full + &wj.dot(&b_old);

            // rhs = W_j^T r_(-j) / N + rho (G^T (V_j - O_j) + Q_j - P_j)
            let mut vo = vec![0.0; 2 * kp1];
            for idx in 0..2 * kp1 {
                vo[idx] = state.v[[j, idx]] - state.o[[j, idx]];
            }
            contract_row(&vo, kp1, &mut rhs);
            for kk in 0..kp1 {
                rhs[kk] = wj.column(kk).dot(&r_minus_j) / nf
                    + state.rho * (rhs[kk] + state.q[[j, kk]] - state.p_mul[[j, kk]]);
            }
            let b_new = la::cholesky_solve(&chol[j], &rhs.view());
            r_full = &r_minus_j - &wj.dot(&b_new);
            state.b.row_mut(j).assign(&b_new);
        }
        fitted_wb = &ytilde - &r_full;

        // V update: per-group soft threshold at (1 - alpha) lambda / rho.
        let v_prev = state.v.clone();
        let q_prev = state.q.clone();
        let gthresh = (1.0 - alpha) * lambda / state.rho;
        for j in 0..p {
            expand_row(&state.b.row(j), &mut expanded);
            let mut block1: Vec<f64> =
                (0..kp1).map(|i| expanded[i] + state.o[[j, i]]).collect();
            group_soft_threshold_inplace(&mut block1, gthresh);
            let mut block2: Vec<f64> = (0..kp1)
                .map(|i| expanded[kp1 + i] + state.o[[j, kp1 + i]])
                .collect();
            group_soft_threshold_inplace(&mut block2, gthresh);
            for i in 0..kp1 {
                state.v[[j, i]] = block1[i];
                state.v[[j, kp1 + i]] = block2[i];
            }
        }

        // Q update: l1 threshold at alpha lambda / rho, main effect (k = 1)
        // passes through unpenalized.
        let sthresh = alpha * lambda / state.rho;
        for j in 0..p {
            state.q[[j, 0]] = state.b[[j, 0]] + state.p_mul[[j, 0]];
            for kk in 1..kp1 {
                state.q[[j, kk]] =
                    soft_threshold(state.b[[j, kk]] + state.p_mul[[j, kk]], sthresh);
            }
        }

        // Multiplier updates and residuals.
        let mut r_sq = 0.0;
        let mut ax_sq = 0.0; // ||(B, (G B^T)^T)||^2
        let mut zx_sq = 0.0; // ||(Q, V)||^2
        for j in 0..p {
            expand_row(&state.b.row(j), &mut expanded);
            for kk in 0..kp1 {
                let gap = state.b[[j, kk]] - state.q[[j, kk]];
                state.p_mul[[j, kk]] += gap;
                r_sq += gap * gap;
                ax_sq += state.b[[j, kk]] * state.b[[j, kk]];
                zx_sq += state.q[[j, kk]] * state.q[[j, kk]];
            }
            for idx in 0..2 * kp1 {
                let gap = expanded[idx] - state.v[[j, idx]];
                state.o[[j, idx]] += gap;
                r_sq += gap * gap;
                ax_sq += expanded[idx] * expanded[idx];
                zx_sq += state.v[[j, idx]] * state.v[[j, idx]];
            }
        }
        r_norm = r_sq.sqrt();
        let dv = (&state.v - &v_prev).iter().map(|x| x * x).sum::<f64>();
        let dq = (&state.q - &q_prev).iter().map(|x| x * x).sum::<f64>();
        s_norm = state.rho * (dv + dq).sqrt();

        let mul_sq = state.o.iter().map(|x| x * x).sum::<f64>()
            + state.p_mul.iter().map(|x| x * x).sum::<f64>();
        eps_pri = dim_sqrt * hp.eps_abs + hp.eps_rel * ax_sq.sqrt().max(zx_sq.sqrt());
        eps_dual = dim_sqrt * hp.eps_abs + hp.eps_rel * mul_sq.sqrt();

        let loss = r_full.dot(&r_full) / (2.0 * nf);
        trace.push(loss + penalty_value(&state.b, lambda, alpha));

        if r_norm <= eps_pri && s_norm <= eps_dual {
            converged = true;
            break;
        }

        if t % 10 == 9 {
            let new_rho = adapt_rho(hp.rho_adapt, state.rho, r_norm, s_norm);
            if new_rho != state.rho {
                let scale = state.rho / new_rho;
                state.o *= scale;
                state.p_mul *= scale;
                state.rho = new_rho;
                chol = factorize_systems(&wtw, nf, state.rho, kp1);
            }
        }
    }

    // Final intercept refresh and sparse coefficient extraction.
    let target = &y - &fitted_wb;
    let (b0, th0) = intercepts.solve(&target);
    state.beta0 = b0;
    state.theta0 = th0;

    let coef = extract_coefficients(state, p, k);
    let obj = objective(data, &coef, hp, None)?;

    Ok((
        coef,
        ConvergenceReport {
            converged,
            iterations,
            r_norm,
            s_norm,
            eps_pri,
            eps_dual,
            rho_final: state.rho,
            objective: obj,
            objective_trace: trace,
        },
    ))
}

fn penalty_value(b: &Array2<f64>, lambda: f64, alpha: f64) -> f64 {
    let mut pen = 0.0;
    for row in b.rows() {
        let full: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        let tail: f64 = row.iter().skip(1).map(|v| v * v).sum::<f64>().sqrt();
        let l1: f64 = row.iter().skip(1).map(|v| v.abs()).sum();
        pen += (1.0 - alpha) * lambda * (full + tail) + alpha * lambda * l1;
    }
    pen
}

/// The consensus variables carry the exact zeros; B is masked by their
/// support before being reported.
fn extract_coefficients(state: &AdmmStateSingle, p: usize, k: usize) -> CoefficientSet {
    let kp1 = k + 1;
    let mut coef = CoefficientSet::zeros(p, k, 1);
    coef.beta0[0] = state.beta0;
    coef.theta0.column_mut(0).assign(&state.theta0);
    for j in 0..p {
        let v1_zero = (0..kp1).all(|i| state.v[[j, i]] == 0.0);
        if v1_zero {
            continue;
        }
        coef.b[[j, 0, 0]] = state.b[[j, 0]];
        let v2_zero = (0..kp1).all(|i| state.v[[j, kp1 + i]] == 0.0);
        if v2_zero {
            continue;
        }
        for kk in 1..kp1 {
            if state.q[[j, kk]] != 0.0 {
                coef.b[[j, kk, 0]] = state.b[[j, kk]];
            }
        }
    }
    coef
}
