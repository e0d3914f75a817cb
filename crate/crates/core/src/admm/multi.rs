//! ADMM solver for the multi-response tree-guided objective, with auxiliary
//! variables E (internal-node groups), E-tilde (leaf shrinkage), V and Q
//! (pliable penalty) and scaled multipliers H, H-tilde, O, P.
//!
//! Coefficient vectors use the j-major layout of the flattened interaction
//! design: index j*(K+1)+k, k = 0 holding the main effect.

use ndarray::{Array1, Array2, Array3, Axis};

use super::{adapt_rho, ConvergenceReport, InterceptSolver};
use crate::error::{Error, Result};
use crate::la;
use crate::model::{objective, CoefficientSet, DesignData, Hyperparameters, InteractionTensor};
use crate::prox::{
    group_soft_threshold_inplace, internal_groups, leaf_weights, response_i_diag, soft_threshold,
};
use crate::tree::ResponseTree;

/// Iterate state for the multi-response solver, warm-startable across a
/// lambda path. `bmat` holds vec(B_d) columns; `v`/`o` hold the two pliable
/// group blocks side by side per (d, j).
#[derive(Debug, Clone)]
pub struct AdmmStateMulti {
    pub bmat: Array2<f64>,
    pub v: Array3<f64>,
    pub o: Array3<f64>,
    pub q_aux: Array2<f64>,
    pub p_mul: Array2<f64>,
    pub e: Array2<f64>,
    pub h: Array2<f64>,
    pub e_tilde: Array2<f64>,
    pub h_tilde: Array2<f64>,
    pub rho: f64,
    pub beta0: Array1<f64>,
    pub theta0: Array2<f64>,
}

impl AdmmStateMulti {
    pub fn new(p: usize, k: usize, d: usize, rows_e: usize, rho: f64) -> Self {
        let q = p * (k + 1);
        AdmmStateMulti {
            bmat: Array2::zeros((q, d)),
            v: Array3::zeros((d, p, 2 * (k + 1))),
            o: Array3::zeros((d, p, 2 * (k + 1))),
            q_aux: Array2::zeros((q, d)),
            p_mul: Array2::zeros((q, d)),
            e: Array2::zeros((rows_e, q)),
            h: Array2::zeros((rows_e, q)),
            e_tilde: Array2::zeros((q, d)),
            h_tilde: Array2::zeros((q, d)),
            rho,
            beta0: Array1::zeros(d),
            theta0: Array2::zeros((k, d)),
        }
    }
}

/// One row of the response expansion: (internal node index, member response,
/// weight w_m).
struct ExpansionRow {
    group: usize,
    member: usize,
    weight: f64,
}

/// Per-response linear solve context for (W~^T W~ / N + C_d) b = phi.
/// When N < p(K+1) the inverse is applied through the Woodbury identity,
/// reducing each update to an N x N factorization; otherwise the dense
/// system is factorized directly.
enum SolveContext {
    Dense {
        chol: Vec<Array2<f64>>, // per d
    },
    Woodbury {
        // (N I + W~ C_d^{-1} W~^T) = N I + G_main / c_main + G_int / c_int
        chol: Vec<Array2<f64>>, // per d
        c_main: Vec<f64>,
        c_int: Vec<f64>,
    },
}

struct Workspace<'a> {
    flat: &'a Array2<f64>,
    gram: Option<Array2<f64>>,       // dense path: W~^T W~
    g_main: Option<Array2<f64>>,     // Woodbury path: W_main W_main^T
    g_int: Option<Array2<f64>>,      // Woodbury path: W_int W_int^T
    ctx: SolveContext,
}

impl<'a> Workspace<'a> {
    fn new(flat: &'a Array2<f64>, p: usize, k: usize) -> Self {
        let (n, q) = (flat.nrows(), flat.ncols());
        let kp1 = k + 1;
        if n < q {
            // Split columns into main-effect and interaction groups; the C_d
            // diagonal is constant within each group.
            let mut main_cols = Array2::<f64>::zeros((n, p));
            let mut int_cols = Array2::<f64>::zeros((n, p * k));
            let mut ic = 0;
            for j in 0..p {
                main_cols.column_mut(j).assign(&flat.column(j * kp1));
                for kk in 1..kp1 {
                    int_cols.column_mut(ic).assign(&flat.column(j * kp1 + kk));
                    ic += 1;
                }
            }
            let g_main = main_cols.dot(&main_cols.t());
            let g_int = int_cols.dot(&int_cols.t());
            Workspace {
                flat,
                gram: None,
                g_main: Some(g_main),
                g_int: Some(g_int),
                ctx: SolveContext::Woodbury {
                    chol: Vec::new(),
                    c_main: Vec::new(),
                    c_int: Vec::new(),
                },
            }
        } else {
            let gram = flat.t().dot(flat);
            Workspace {
                flat,
                gram: Some(gram),
                g_main: None,
                g_int: None,
                ctx: SolveContext::Dense { chol: Vec::new() },
            }
        }
    }

    /// (Re)factorizes the per-response systems for the given rho.
    fn refactorize(&mut self, rho: f64, i_diag: &Array1<f64>, p: usize, k: usize) {
        let n = self.flat.nrows() as f64;
        let kp1 = k + 1;
        let d_count = i_diag.len();
        match &mut self.ctx {
            SolveContext::Dense { chol } => {
                let gram = self.gram.as_ref().unwrap();
                chol.clear();
                for d in 0..d_count {
                    let shift = rho * (i_diag[d] + 1.0);
                    let c_main = 2.0 * rho + shift;
                    let c_int = 3.0 * rho + shift;
                    let mut sys = gram / n;
                    for j in 0..p {
                        sys[[j * kp1, j * kp1]] += c_main;
                        for kk in 1..kp1 {
                            let idx = j * kp1 + kk;
                            sys[[idx, idx]] += c_int;
                        }
                    }
                    chol.push(la::cholesky(&sys));
                }
            }
            SolveContext::Woodbury { chol, c_main, c_int } => {
                let g_main = self.g_main.as_ref().unwrap();
                let g_int = self.g_int.as_ref().unwrap();
                let rows = g_main.nrows();
                chol.clear();
                c_main.clear();
                c_int.clear();
                for d in 0..d_count {
                    let shift = rho * (i_diag[d] + 1.0);
                    let cm = 2.0 * rho + shift;
                    let ci = 3.0 * rho + shift;
                    let mut inner = g_main / cm + &(g_int / ci);
                    for i in 0..rows {
                        inner[[i, i]] += n;
                    }
                    chol.push(la::cholesky(&inner));
                    c_main.push(cm);
                    c_int.push(ci);
                }
            }
        }
    }

    /// Solves (W~^T W~ / N + C_d) b = phi for every d; phi has one column
    /// per response.
    fn solve_all(&self, phi: &Array2<f64>, p: usize, k: usize) -> Array2<f64> {
        let kp1 = k + 1;
        match &self.ctx {
            SolveContext::Dense { chol } => {
                let mut out = Array2::<f64>::zeros(phi.raw_dim());
                for (d, l) in chol.iter().enumerate() {
                    out.column_mut(d)
                        .assign(&la::cholesky_solve(l, &phi.column(d)));
                }
                out
            }
            SolveContext::Woodbury { chol, c_main, c_int } => {
                // A^{-1} phi = s - C^{-1} W^T (N I + W C^{-1} W^T)^{-1} W s,
                // with s = C^{-1} phi.
                let q = phi.nrows();
                let d_count = phi.ncols();
                let mut s = phi.clone();
                for d in 0..d_count {
                    let mut col = s.column_mut(d);
                    for j in 0..p {
                        col[j * kp1] /= c_main[d];
                        for kk in 1..kp1 {
                            col[j * kp1 + kk] /= c_int[d];
                        }
                    }
                }
                let ws = self.flat.dot(&s); // N x D
                let mut u = Array2::<f64>::zeros(ws.raw_dim());
                for d in 0..d_count {
                    u.column_mut(d)
                        .assign(&la::cholesky_solve(&chol[d], &ws.column(d)));
                }
                let wtu = self.flat.t().dot(&u); // q x D
                let mut out = s;
                for d in 0..d_count {
                    let mut col = out.column_mut(d);
                    for idx in 0..q {
                        let c = if idx % kp1 == 0 { c_main[d] } else { c_int[d] };
                        col[idx] -= wtu[[idx, d]] / c;
                    }
                }
                out
            }
        }
    }
}

pub fn fit_multi(
    data: &DesignData,
    hp: &Hyperparameters,
    tree: &ResponseTree,
) -> Result<(CoefficientSet, ConvergenceReport)> {
    let groups = internal_groups(tree);
    let rows_e: usize = groups.iter().map(|(g, _)| g.len()).sum();
    let mut state = AdmmStateMulti::new(data.p(), data.k(), data.d(), rows_e, hp.rho_init);
    fit_multi_warm(data, hp, tree, &mut state)
}

/// Full ADMM loop B -> V -> Q -> E -> E-tilde -> multipliers, warm-started
/// from the supplied state.
pub fn fit_multi_warm(
    data: &DesignData,
    hp: &Hyperparameters,
    tree: &ResponseTree,
    state: &mut AdmmStateMulti,
) -> Result<(CoefficientSet, ConvergenceReport)> {
    hp.validate()?;
    let (n, p, k, d_count) = (data.n(), data.p(), data.k(), data.d());
    tree.validate(d_count)?;
    let kp1 = k + 1;
    let q = p * kp1;
    let nf = n as f64;

    let groups = internal_groups(tree);
    let w_leaf = leaf_weights(tree, d_count);
    let i_diag = response_i_diag(&groups, d_count);
    let rows: Vec<ExpansionRow> = groups
        .iter()
        .enumerate()
        .flat_map(|(m, (members, w))| {
            members.iter().map(move |&u| ExpansionRow {
                group: m,
                member: u,
                weight: *w,
            })
        })
        .collect();
    let rows_e = rows.len();
    let group_rows = group_rows_of(&groups, &rows);
    if state.e.nrows() != rows_e || state.bmat.dim() != (q, d_count) {
        return Err(Error::dim(
            "AdmmStateMulti",
            format!("E rows {rows_e}, B {q}x{d_count}"),
            format!("E rows {}, B {:?}", state.e.nrows(), state.bmat.dim()),
        ));
    }

    let tensor = InteractionTensor::build(data)?;
    let flat = tensor.flat();
    let intercepts = InterceptSolver::new(data.z());
    let mut ws = Workspace::new(flat, p, k);
    ws.refactorize(state.rho, &i_diag, p, k);

    // Constraint blocks: B = Q (qD), GB = V (2qD), IB = E (rows_e * q... one
    // (K+1) block per (row, j) pair), B = E-tilde (qD).
    let dim_total = q * d_count + 2 * q * d_count + rows_e * q + q * d_count;
    let dim_sqrt = (dim_total as f64).sqrt();

    let l1 = hp.lambda1;
    let l2 = hp.lambda2;
    let l3 = hp.lambda3;
    let alpha = hp.alpha;

    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let (mut r_norm, mut s_norm, mut eps_pri, mut eps_dual) = (f64::NAN, f64::NAN, 0.0, 0.0);

    let mut fitted = flat.dot(&state.bmat); // N x D
    let mut phi = Array2::<f64>::zeros((q, d_count));

    for t in 0..hp.max_iter {
        iterations = t + 1;

        // Unpenalized intercept block, exact per response.
        for d in 0..d_count {
            let target = &data.y().column(d) - &fitted.column(d);
            let (b0, th0) = intercepts.solve(&target.to_owned());
            state.beta0[d] = b0;
            state.theta0.column_mut(d).assign(&th0);
        }
        let r_mat = data.y() - &Array2::from_shape_fn((n, d_count), |(i, d)| {
            state.beta0[d]
                + data
                    .z()
                    .row(i)
                    .dot(&state.theta0.column(d))
        });

        // B update: solve the per-response normal equations.
        let wtr = flat.t().dot(&r_mat) / nf; // q x D
        // rho * I^T (E - H), accumulated per response column.
        phi.assign(&wtr);
        for (r, row) in rows.iter().enumerate() {
            let d = row.member;
            let w = row.weight * state.rho;
            for idx in 0..q {
                phi[[idx, d]] += w * (state.e[[r, idx]] - state.h[[r, idx]]);
            }
        }
        for d in 0..d_count {
            for j in 0..p {
                // G^T (V_d - O_d) reshaped into the j block.
                let v = state.v.index_axis(Axis(0), d);
                let o = state.o.index_axis(Axis(0), d);
                let base = j * kp1;
                phi[[base, d]] += state.rho * (v[[j, 0]] - o[[j, 0]]);
                for kk in 1..kp1 {
                    phi[[base + kk, d]] += state.rho
                        * ((v[[j, kk]] - o[[j, kk]]) + (v[[j, kp1 + kk]] - o[[j, kp1 + kk]]));
                }
            }
            for idx in 0..q {
                phi[[idx, d]] += state.rho
                    * ((state.e_tilde[[idx, d]] - state.h_tilde[[idx, d]])
                        + (state.q_aux[[idx, d]] - state.p_mul[[idx, d]]));
            }
        }
        state.bmat = ws.solve_all(&phi, p, k);
        fitted = flat.dot(&state.bmat);

        let v_prev = state.v.clone();
        let q_prev = state.q_aux.clone();
        let e_prev = state.e.clone();
        let et_prev = state.e_tilde.clone();

        // V update: per (j, d) group soft threshold at (1 - alpha) lambda3 / rho.
        let gthresh = (1.0 - alpha) * l3 / state.rho;
        for d in 0..d_count {
            for j in 0..p {
                let base = j * kp1;
                let mut block1: Vec<f64> = (0..kp1)
                    .map(|kk| state.bmat[[base + kk, d]] + state.o[[d, j, kk]])
                    .collect();
                group_soft_threshold_inplace(&mut block1, gthresh);
                let mut block2 = vec![0.0; kp1];
                block2[0] = state.o[[d, j, kp1]];
                for kk in 1..kp1 {
                    block2[kk] = state.bmat[[base + kk, d]] + state.o[[d, j, kp1 + kk]];
                }
                group_soft_threshold_inplace(&mut block2, gthresh);
                for kk in 0..kp1 {
                    state.v[[d, j, kk]] = block1[kk];
                    state.v[[d, j, kp1 + kk]] = block2[kk];
                }
            }
        }

        // Q update: l1 threshold at alpha lambda3 / rho, main effect through.
        let sthresh = alpha * l3 / state.rho;
        for d in 0..d_count {
            for j in 0..p {
                let base = j * kp1;
                state.q_aux[[base, d]] = state.bmat[[base, d]] + state.p_mul[[base, d]];
                for kk in 1..kp1 {
                    state.q_aux[[base + kk, d]] = soft_threshold(
                        state.bmat[[base + kk, d]] + state.p_mul[[base + kk, d]],
                        sthresh,
                    );
                }
            }
        }

        // E update: one group per (j, internal node m), gathered across the
        // weighted response copies; the node weight enters through the
        // duplication scaling, so the threshold is lambda1 / rho.
        let ethresh = l1 / state.rho;
        let mut block: Vec<f64> = Vec::new();
        for j in 0..p {
            let base = j * kp1;
            for rs in &group_rows {
                block.clear();
                for &r in rs {
                    let d = rows[r].member;
                    let w = rows[r].weight;
                    for kk in 0..kp1 {
                        block.push(w * state.bmat[[base + kk, d]] + state.h[[r, base + kk]]);
                    }
                }
                group_soft_threshold_inplace(&mut block, ethresh);
                let mut it = block.iter();
                for &r in rs {
                    for kk in 0..kp1 {
                        state.e[[r, base + kk]] = *it.next().unwrap();
                    }
                }
            }
        }

        // E-tilde update: leaf shrinkage per (j, d) at lambda2 w_d / rho.
        for d in 0..d_count {
            let lthresh = l2 * w_leaf[d] / state.rho;
            for j in 0..p {
                let base = j * kp1;
                let mut blk: Vec<f64> = (0..kp1)
                    .map(|kk| state.bmat[[base + kk, d]] + state.h_tilde[[base + kk, d]])
                    .collect();
                group_soft_threshold_inplace(&mut blk, lthresh);
                for kk in 0..kp1 {
                    state.e_tilde[[base + kk, d]] = blk[kk];
                }
            }
        }

        // Multiplier updates and residual accumulation.
        let mut r_sq = 0.0;
        let mut ax_sq = 0.0;
        let mut zx_sq = 0.0;
        for d in 0..d_count {
            for idx in 0..q {
                let b = state.bmat[[idx, d]];
                let gap_q = b - state.q_aux[[idx, d]];
                state.p_mul[[idx, d]] += gap_q;
                let gap_et = b - state.e_tilde[[idx, d]];
                state.h_tilde[[idx, d]] += gap_et;
                r_sq += gap_q * gap_q + gap_et * gap_et;
                ax_sq += 2.0 * b * b;
                zx_sq += state.q_aux[[idx, d]].powi(2) + state.e_tilde[[idx, d]].powi(2);
            }
            for j in 0..p {
                let base = j * kp1;
                for kk in 0..kp1 {
                    let bt = state.bmat[[base + kk, d]];
                    let gap = bt - state.v[[d, j, kk]];
                    state.o[[d, j, kk]] += gap;
                    r_sq += gap * gap;
                    ax_sq += bt * bt;
                    zx_sq += state.v[[d, j, kk]].powi(2);
                }
                // second block: structural zero at the main slot
                let gap0 = 0.0 - state.v[[d, j, kp1]];
                state.o[[d, j, kp1]] += gap0;
                r_sq += gap0 * gap0;
                zx_sq += state.v[[d, j, kp1]].powi(2);
                for kk in 1..kp1 {
                    let bt = state.bmat[[base + kk, d]];
                    let gap = bt - state.v[[d, j, kp1 + kk]];
                    state.o[[d, j, kp1 + kk]] += gap;
                    r_sq += gap * gap;
                    ax_sq += bt * bt;
                    zx_sq += state.v[[d, j, kp1 + kk]].powi(2);
                }
            }
        }
        for (r, row) in rows.iter().enumerate() {
            let d = row.member;
            for idx in 0..q {
                let bb = row.weight * state.bmat[[idx, d]];
                let gap = bb - state.e[[r, idx]];
                state.h[[r, idx]] += gap;
                r_sq += gap * gap;
                ax_sq += bb * bb;
                zx_sq += state.e[[r, idx]].powi(2);
            }
        }
        r_norm = r_sq.sqrt();
        let mut s_sq = 0.0;
        s_sq += (&state.v - &v_prev).iter().map(|x| x * x).sum::<f64>();
        s_sq += (&state.q_aux - &q_prev).iter().map(|x| x * x).sum::<f64>();
        s_sq += (&state.e - &e_prev).iter().map(|x| x * x).sum::<f64>();
        s_sq += (&state.e_tilde - &et_prev).iter().map(|x| x * x).sum::<f64>();
        s_norm = state.rho * s_sq.sqrt();

        let mul_sq = state.o.iter().map(|x| x * x).sum::<f64>()
            + state.p_mul.iter().map(|x| x * x).sum::<f64>()
            + state.h.iter().map(|x| x * x).sum::<f64>()
            + state.h_tilde.iter().map(|x| x * x).sum::<f64>();
        eps_pri = dim_sqrt * hp.eps_abs + hp.eps_rel * ax_sq.sqrt().max(zx_sq.sqrt());
        eps_dual = dim_sqrt * hp.eps_abs + hp.eps_rel * mul_sq.sqrt();

        let resid = &r_mat - &fitted;
        let loss = resid.iter().map(|v| v * v).sum::<f64>() / (2.0 * nf);
        trace.push(loss + penalty_value(state, &groups, &w_leaf, hp, p, kp1, d_count));

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
                state.h *= scale;
                state.h_tilde *= scale;
                state.rho = new_rho;
                ws.refactorize(state.rho, &i_diag, p, k);
            }
        }
    }

    // Final intercept refresh and sparse extraction.
    for d in 0..d_count {
        let target = &data.y().column(d) - &fitted.column(d);
        let (b0, th0) = intercepts.solve(&target.to_owned());
        state.beta0[d] = b0;
        state.theta0.column_mut(d).assign(&th0);
    }

    let coef = extract_coefficients(state, &rows, &group_rows, hp, p, k, d_count);
    let tree_opt = if d_count > 1 { Some(tree) } else { None };
    let obj = objective(data, &coef, hp, tree_opt)?;

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

fn group_rows_of(groups: &[(Vec<usize>, f64)], rows: &[ExpansionRow]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); groups.len()];
    for (r, row) in rows.iter().enumerate() {
        out[row.group].push(r);
    }
    out
}

fn penalty_value(
    state: &AdmmStateMulti,
    groups: &[(Vec<usize>, f64)],
    w_leaf: &Array1<f64>,
    hp: &Hyperparameters,
    p: usize,
    kp1: usize,
    d_count: usize,
) -> f64 {
    let mut pen = 0.0;
    for j in 0..p {
        let base = j * kp1;
        for (members, w) in groups {
            let mut sq = 0.0;
            for &d in members {
                for kk in 0..kp1 {
                    sq += state.bmat[[base + kk, d]].powi(2);
                }
            }
            pen += hp.lambda1 * w * sq.sqrt();
        }
        for d in 0..d_count {
            let sq: f64 = (0..kp1).map(|kk| state.bmat[[base + kk, d]].powi(2)).sum();
            pen += hp.lambda2 * w_leaf[d] * sq.sqrt();
            let full = sq.sqrt();
            let tail_sq: f64 = (1..kp1).map(|kk| state.bmat[[base + kk, d]].powi(2)).sum();
            let l1: f64 = (1..kp1).map(|kk| state.bmat[[base + kk, d]].abs()).sum();
            pen += (1.0 - hp.alpha) * hp.lambda3 * (full + tail_sq.sqrt())
                + hp.alpha * hp.lambda3 * l1;
        }
    }
    pen
}

/// Masks B by the support of the consensus variables: a (j, d) row is zero
/// when its pliable group copy, a containing internal-node block, or its
/// leaf block was thresholded to zero; interaction entries additionally
/// require a non-zero l1 copy.
fn extract_coefficients(
    state: &AdmmStateMulti,
    rows: &[ExpansionRow],
    group_rows: &[Vec<usize>],
    hp: &Hyperparameters,
    p: usize,
    k: usize,
    d_count: usize,
) -> CoefficientSet {
    let kp1 = k + 1;
    let mut coef = CoefficientSet::zeros(p, k, d_count);
    coef.beta0 = state.beta0.clone();
    coef.theta0 = state.theta0.clone();

    // For each (j, d): is some internal-node E block containing d zero?
    let mut e_blocked = vec![vec![false; d_count]; p];
    if hp.lambda1 > 0.0 {
        for j in 0..p {
            let base = j * kp1;
            for rs in group_rows {
                let zero = rs.iter().all(|&r| {
                    (0..kp1).all(|kk| state.e[[r, base + kk]] == 0.0)
                });
                if zero {
                    for &r in rs {
                        e_blocked[j][rows[r].member] = true;
                    }
                }
            }
        }
    }

    for d in 0..d_count {
        for j in 0..p {
            let base = j * kp1;
            let v1_zero = (0..2 * kp1 - kp1).all(|kk| state.v[[d, j, kk]] == 0.0);
            let et_zero = hp.lambda2 > 0.0
                && (0..kp1).all(|kk| state.e_tilde[[base + kk, d]] == 0.0);
            if v1_zero || et_zero || e_blocked[j][d] {
                continue;
            }
            coef.b[[j, 0, d]] = state.bmat[[base, d]];
            let v2_zero = (0..kp1).all(|kk| state.v[[d, j, kp1 + kk]] == 0.0);
            if v2_zero {
                continue;
            }
            for kk in 1..kp1 {
                if state.q_aux[[base + kk, d]] != 0.0 {
                    coef.b[[j, kk, d]] = state.bmat[[base + kk, d]];
                }
            }
        }
    }
    coef
}
