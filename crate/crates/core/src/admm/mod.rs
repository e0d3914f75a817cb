//! ADMM iteration drivers for the single- and multi-response models.

pub mod multi;
pub mod single;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::la;

pub use multi::{fit_multi, fit_multi_warm, AdmmStateMulti};
pub use single::{fit_single, fit_single_warm, AdmmStateSingle};

/// Outcome of one solver run: stopping diagnostics and the objective trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    pub iterations: usize,
    pub r_norm: f64,
    pub s_norm: f64,
    pub eps_pri: f64,
    pub eps_dual: f64,
    pub rho_final: f64,
    pub objective: f64,
    pub objective_trace: Vec<f64>,
}

/// Exact least squares of a residual target on [1, Z]; used to refresh the
/// unpenalized intercepts after every ADMM sweep.
pub(crate) struct InterceptSolver {
    design: Array2<f64>,
    chol: Array2<f64>,
}

impl InterceptSolver {
    pub fn new(z: &Array2<f64>) -> Self {
        let (n, k) = (z.nrows(), z.ncols());
        let mut design = Array2::<f64>::ones((n, k + 1));
        design.slice_mut(ndarray::s![.., 1..]).assign(z);
        let mut gram = design.t().dot(&design);
        // Tiny ridge guards against a Z column collinear with the intercept.
        for i in 0..=k {
            gram[[i, i]] += 1e-10;
        }
        let chol = la::cholesky(&gram);
        InterceptSolver { design, chol }
    }

    /// Returns (beta0, theta0) for one response column.
    pub fn solve(&self, target: &Array1<f64>) -> (f64, Array1<f64>) {
        let rhs = self.design.t().dot(target);
        let c = la::cholesky_solve(&self.chol, &rhs.view());
        (c[0], c.slice(ndarray::s![1..]).to_owned())
    }
}

/// Applies the residual-balancing or literal published rho rule. Returns the
/// new rho (multipliers must be rescaled by rho_old / rho_new by the caller
/// when it changes).
pub(crate) fn adapt_rho(rule: crate::model::RhoAdapt, rho: f64, r_norm: f64, s_norm: f64) -> f64 {
    use crate::model::RhoAdapt::*;
    match rule {
        Fixed => rho,
        ResidualBalance => {
            if r_norm > 10.0 * s_norm {
                rho * 2.0
            } else if s_norm > 10.0 * r_norm {
                rho / 2.0
            } else {
                rho
            }
        }
        Published => {
            if rho > 10.0 * s_norm {
                rho * 2.0
            } else if 10.0 * rho < s_norm {
                rho / 2.0
            } else {
                rho
            }
        }
    }
}
