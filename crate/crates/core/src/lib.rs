//! Regularized multi-response regression with covariate-modifier interaction
//! effects: the single-response pliable lasso fit by ADMM and its
//! tree-guided multi-response extension with overlapping response groups,
//! plus regularization paths, cross-validation, simulation generators and
//! metric reporting.

pub mod admm;
pub mod cli;
pub mod error;
pub(crate) mod la;
pub mod model;
pub mod path;
pub mod prox;
pub mod sim;
pub mod tree;

pub use admm::{fit_multi, fit_single, ConvergenceReport};
pub use error::{Error, Result};
pub use model::{
    build_interaction_tensor, objective, predict, CoefficientSet, DesignData, Hyperparameters,
    InteractionTensor, RhoAdapt,
};
pub use tree::{cluster_responses, derive_groups, ResponseTree, WeightRule};
