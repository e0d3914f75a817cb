//! Problem data, coefficient containers, prediction and objective evaluation
//! for the single- and multi-response pliable lasso models.

use ndarray::{Array1, Array2, Array3, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::ResponseTree;

/// Observed matrices of a regression problem: covariates `X` (N x p),
/// modifying variables `Z` (N x K) and responses `Y` (N x D). For the
/// single-response model D = 1.
#[derive(Debug, Clone)]
pub struct DesignData {
    x: Array2<f64>,
    z: Array2<f64>,
    y: Array2<f64>,
}

impl DesignData {
    pub fn new(x: Array2<f64>, z: Array2<f64>, y: Array2<f64>) -> Result<Self> {
        let n = x.nrows();
        if z.nrows() != n {
            return Err(Error::dim("Z", format!("{n} rows"), format!("{} rows", z.nrows())));
        }
        if y.nrows() != n {
            return Err(Error::dim("Y", format!("{n} rows"), format!("{} rows", y.nrows())));
        }
        if n == 0 || x.ncols() == 0 || z.ncols() == 0 || y.ncols() == 0 {
            return Err(Error::invalid("N, p, K and D must all be >= 1"));
        }
        for (name, m) in [("X", &x), ("Z", &z), ("Y", &y)] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(match name {
                    "X" => "X",
                    "Z" => "Z",
                    _ => "Y",
                }));
            }
        }
        Ok(DesignData { x, z, y })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }
    pub fn p(&self) -> usize {
        self.x.ncols()
    }
    pub fn k(&self) -> usize {
        self.z.ncols()
    }
    pub fn d(&self) -> usize {
        self.y.ncols()
    }
    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }
    pub fn z(&self) -> &Array2<f64> {
        &self.z
    }
    pub fn y(&self) -> &Array2<f64> {
        &self.y
    }
}

/// The interaction array `W` (p x (K+1) x N) together with its flattened
/// design view (N x p(K+1)), row i being the concatenation of the rows
/// W[j, ., i] over j.
#[derive(Debug, Clone)]
pub struct InteractionTensor {
    w: Array3<f64>,
    flat: Array2<f64>,
}

impl InteractionTensor {
    /// W[j, k, i]: x_ij for k = 0 and x_ij * z_i,k-1 for k >= 1.
    pub fn build(data: &DesignData) -> Result<Self> {
        let (n, p, k) = (data.n(), data.p(), data.k());
        let mut w = Array3::<f64>::zeros((p, k + 1, n));
        let mut flat = Array2::<f64>::zeros((n, p * (k + 1)));
        for j in 0..p {
            for i in 0..n {
                let xij = data.x[[i, j]];
                w[[j, 0, i]] = xij;
                flat[[i, j * (k + 1)]] = xij;
                for kk in 1..=k {
                    let v = xij * data.z[[i, kk - 1]];
                    w[[j, kk, i]] = v;
                    flat[[i, j * (k + 1) + kk]] = v;
                }
            }
        }
        Ok(InteractionTensor { w, flat })
    }

    pub fn w(&self) -> &Array3<f64> {
        &self.w
    }

    /// N x p(K+1) design view, column j*(K+1)+k holding W[j, k, .].
    pub fn flat(&self) -> &Array2<f64> {
        &self.flat
    }

    /// The N x (K+1) block of columns belonging to covariate j.
    pub fn block(&self, j: usize) -> ndarray::ArrayView2<'_, f64> {
        let kp1 = self.w.shape()[1];
        self.flat.slice(ndarray::s![.., j * kp1..(j + 1) * kp1])
    }

    /// Reconstructs W from the flat view (used to check the round-trip
    /// invariant).
    pub fn unflatten(&self) -> Array3<f64> {
        let (p, kp1, _) = self.w.dim();
        let n = self.flat.nrows();
        let mut w = Array3::<f64>::zeros((p, kp1, n));
        for i in 0..n {
            for j in 0..p {
                for k in 0..kp1 {
                    w[[j, k, i]] = self.flat[[i, j * kp1 + k]];
                }
            }
        }
        w
    }
}

pub fn build_interaction_tensor(data: &DesignData) -> Result<InteractionTensor> {
    InteractionTensor::build(data)
}

/// Intercepts and the coefficient array. `b[j, 0, d]` is the main effect
/// beta_jd and `b[j, 1.., d]` the interaction row theta_jd.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub beta0: Array1<f64>,
    pub theta0: Array2<f64>,
    pub b: Array3<f64>,
}

impl CoefficientSet {
    pub fn zeros(p: usize, k: usize, d: usize) -> Self {
        CoefficientSet {
            beta0: Array1::zeros(d),
            theta0: Array2::zeros((k, d)),
            b: Array3::zeros((p, k + 1, d)),
        }
    }

    pub fn p(&self) -> usize {
        self.b.shape()[0]
    }
    pub fn k(&self) -> usize {
        self.b.shape()[1] - 1
    }
    pub fn d(&self) -> usize {
        self.b.shape()[2]
    }

    pub fn beta(&self, j: usize, d: usize) -> f64 {
        self.b[[j, 0, d]]
    }

    /// p x D matrix of main effects.
    pub fn main_effects(&self) -> Array2<f64> {
        self.b.index_axis(Axis(1), 0).to_owned()
    }

    fn check_matches(&self, data: &DesignData) -> Result<()> {
        if self.p() != data.p() || self.k() != data.k() || self.d() != data.d() {
            return Err(Error::dim(
                "CoefficientSet",
                format!("p={} K={} D={}", data.p(), data.k(), data.d()),
                format!("p={} K={} D={}", self.p(), self.k(), self.d()),
            ));
        }
        Ok(())
    }
}

/// How the augmented-Lagrangian parameter evolves across iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoAdapt {
    Fixed,
    /// Literal published rule: compare rho itself against the dual residual.
    Published,
    /// Double rho when the primal residual dominates the dual one (and
    /// conversely); the default.
    ResidualBalance,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hyperparameters {
    /// Tree internal-node penalty (multi-response only).
    pub lambda1: f64,
    /// Tree leaf penalty (multi-response only).
    pub lambda2: f64,
    /// Pliable penalty; the lambda of the single-response model.
    pub lambda3: f64,
    pub alpha: f64,
    pub rho_init: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iter: usize,
    pub rho_adapt: RhoAdapt,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            lambda1: 0.0,
            lambda2: 0.0,
            lambda3: 0.0,
            alpha: 0.5,
            rho_init: 1.0,
            eps_abs: 1e-4,
            eps_rel: 1e-3,
            max_iter: 5000,
            rho_adapt: RhoAdapt::ResidualBalance,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!("alpha must be in [0,1], got {}", self.alpha)));
        }
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 || self.lambda3 < 0.0 {
            return Err(Error::invalid("all lambda values must be nonnegative"));
        }
        if self.rho_init <= 0.0 {
            return Err(Error::invalid("rho_init must be positive"));
        }
        if self.eps_abs <= 0.0 || self.eps_rel <= 0.0 {
            return Err(Error::invalid("eps_abs and eps_rel must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be positive"));
        }
        Ok(())
    }
}

/// Fitted values: 1 beta0^T + Z theta0 + W * B.
pub fn predict(data: &DesignData, coef: &CoefficientSet) -> Result<Array2<f64>> {
    coef.check_matches(data)?;
    let (n, p, k, d) = (data.n(), data.p(), data.k(), data.d());
    let mut yhat = Array2::<f64>::zeros((n, d));
    for dd in 0..d {
        let mut col = yhat.column_mut(dd);
        col += coef.beta0[dd];
    }
    yhat += &data.z().dot(&coef.theta0);
    // W * B evaluated column-block by column-block of the flat view without
    // materializing the tensor.
    for j in 0..p {
        for dd in 0..d {
            let bj0 = coef.b[[j, 0, dd]];
            for i in 0..n {
                let xij = data.x[[i, j]];
                let mut acc = xij * bj0;
                for kk in 1..=k {
                    acc += xij * data.z[[i, kk - 1]] * coef.b[[j, kk, dd]];
                }
                yhat[[i, dd]] += acc;
            }
        }
    }
    Ok(yhat)
}

/// Objective value: 1/(2N) ||Y - Yhat||_F^2 plus, with a tree, the two
/// tree-guided group terms and the pliable penalty; without a tree (D = 1)
/// only the pliable penalty with lambda3 as lambda.
pub fn objective(
    data: &DesignData,
    coef: &CoefficientSet,
    hp: &Hyperparameters,
    tree: Option<&ResponseTree>,
) -> Result<f64> {
    coef.check_matches(data)?;
    hp.validate()?;
    if tree.is_some() && data.d() == 1 {
        return Err(Error::invalid("tree-guided objective requires D >= 2"));
    }
    if tree.is_none() && (hp.lambda1 > 0.0 || hp.lambda2 > 0.0) {
        return Err(Error::invalid(
            "lambda1/lambda2 require a response tree; single-response uses lambda3 only",
        ));
    }
    let yhat = predict(data, coef)?;
    let resid = data.y() - &yhat;
    let n = data.n() as f64;
    let mut obj = resid.iter().map(|v| v * v).sum::<f64>() / (2.0 * n);

    let (p, kp1, d) = coef.b.dim();

    // Pliable penalty, summed over responses.
    let (a, l3) = (hp.alpha, hp.lambda3);
    for dd in 0..d {
        for j in 0..p {
            let row = coef.b.slice(ndarray::s![j, .., dd]);
            let full: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            let tail_sq: f64 = row.iter().skip(1).map(|v| v * v).sum();
            let tail_l1: f64 = row.iter().skip(1).map(|v| v.abs()).sum();
            obj += (1.0 - a) * l3 * (full + tail_sq.sqrt()) + a * l3 * tail_l1;
        }
    }

    if let Some(tree) = tree {
        tree.validate(d)?;
        for node in tree.internal_nodes() {
            for j in 0..p {
                let mut sq = 0.0;
                for &dd in &node.members {
                    for k in 0..kp1 {
                        let v = coef.b[[j, k, dd]];
                        sq += v * v;
                    }
                }
                obj += hp.lambda1 * node.weight * sq.sqrt();
            }
        }
        for node in tree.leaf_nodes() {
            let dd = node.members[0];
            for j in 0..p {
                let sq: f64 = (0..kp1).map(|k| coef.b[[j, k, dd]].powi(2)).sum();
                obj += hp.lambda2 * node.weight * sq.sqrt();
            }
        }
    }
    Ok(obj)
}
