//! Proximal operators and the duplication matrices that encode the
//! overlapping pliable groups and the overlapping response groups.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::tree::ResponseTree;

/// Scalar soft threshold: sign(x) * max(|x| - t, 0).
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    let m = x.abs() - t;
    if m > 0.0 {
        m * x.signum()
    } else {
        0.0
    }
}

/// Group soft threshold: max(||r|| - t, 0) * r / ||r||, with the zero vector
/// returned when ||r|| = 0.
pub fn group_soft_threshold(r: &[f64], t: f64) -> Vec<f64> {
    debug_assert!(t >= 0.0);
    let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= t || norm == 0.0 {
        return vec![0.0; r.len()];
    }
    let scale = (norm - t) / norm;
    r.iter().map(|v| v * scale).collect()
}

/// In-place variant used in the solver inner loops; returns the scale that
/// was applied.
pub fn group_soft_threshold_inplace(r: &mut [f64], t: f64) -> f64 {
    let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = if norm <= t || norm == 0.0 {
        0.0
    } else {
        (norm - t) / norm
    };
    for v in r.iter_mut() {
        *v *= scale;
    }
    scale
}

/// Duplication matrix G (2(K+1) x (K+1)) expanding B_j into its two pliable
/// group copies [B_j, B_j(-1)]. The first block is the identity; the second
/// selects columns 2..K+1 and keeps an all-zero row for the excluded main
/// effect position.
pub fn build_pliable_expansion(k: usize) -> Result<Array2<f64>> {
    if k < 1 {
        return Err(Error::invalid("K must be >= 1"));
    }
    let kp1 = k + 1;
    let mut g = Array2::<f64>::zeros((2 * kp1, kp1));
    for c in 0..kp1 {
        g[[c, c]] = 1.0;
    }
    for c in 1..kp1 {
        g[[kp1 + c, c]] = 1.0;
    }
    Ok(g)
}

/// Diagonal of G^T G for the pliable expansion: [1, 2, 2, ..., 2].
pub fn pliable_g_diag(k: usize) -> Array1<f64> {
    let mut d = Array1::from_elem(k + 1, 2.0);
    d[0] = 1.0;
    d
}

/// Weighted duplication matrix for response groups: one row per (group m,
/// member u) pair, carrying w_m in column u. Groups use 0-based response
/// indices.
pub fn build_response_expansion(groups: &[(Vec<usize>, f64)], d: usize) -> Result<Array2<f64>> {
    let rows: usize = groups.iter().map(|(g, _)| g.len()).sum();
    let mut i_exp = Array2::<f64>::zeros((rows, d));
    let mut r = 0;
    for (members, w) in groups {
        if members.is_empty() {
            return Err(Error::invalid("empty response group"));
        }
        if *w <= 0.0 {
            return Err(Error::invalid("group weight must be positive"));
        }
        for &u in members {
            if u >= d {
                return Err(Error::invalid(format!("group member {u} >= D={d}")));
            }
            i_exp[[r, u]] = *w;
            r += 1;
        }
    }
    Ok(i_exp)
}

/// Diagonal of I_exp^T I_exp: entry d is the sum of w_m^2 over the groups
/// containing d.
pub fn response_i_diag(groups: &[(Vec<usize>, f64)], d: usize) -> Array1<f64> {
    let mut diag = Array1::<f64>::zeros(d);
    for (members, w) in groups {
        for &u in members {
            diag[u] += w * w;
        }
    }
    diag
}

/// The internal-node groups of a tree as (members, weight) pairs, in node
/// order.
pub fn internal_groups(tree: &ResponseTree) -> Vec<(Vec<usize>, f64)> {
    tree.internal_nodes()
        .map(|n| (n.members.clone(), n.weight))
        .collect()
}

/// Leaf weights w_d indexed by response.
pub fn leaf_weights(tree: &ResponseTree, d: usize) -> Array1<f64> {
    let mut w = Array1::from_elem(d, 1.0);
    for leaf in tree.leaf_nodes() {
        w[leaf.members[0]] = leaf.weight;
    }
    w
}

/// Diagonal of the per-response system shift C_d: the first p entries are
/// rho(1 + G_diag[0]) + rho(I_diag[d] + 1) and the remaining p*K entries
/// 3 rho + rho(I_diag[d] + 1). Stored as a vector, never materialized dense.
pub fn assemble_c(
    rho: f64,
    g_diag: &Array1<f64>,
    i_diag: &Array1<f64>,
    p: usize,
    k: usize,
    d: usize,
) -> Result<Array1<f64>> {
    if rho <= 0.0 {
        return Err(Error::invalid("rho must be positive"));
    }
    let shift = rho * (i_diag[d] + 1.0);
    let main = rho * (1.0 + g_diag[0]) + shift;
    let inter = rho * (1.0 + g_diag[1]) + shift;
    let mut c = Array1::<f64>::zeros(p * (k + 1));
    for j in 0..p {
        c[j] = main;
    }
    for j in p..p * (k + 1) {
        c[j] = inter;
    }
    Ok(c)
}
