//! Joint estimation of subject-level and group-level Gaussian graphical models.
//!
//! Subjects share a population graph but each has its own precision matrix.
//! The random covariance model ties the individual precisions to a group
//! precision through a KL-divergence penalty, with L1 penalties on both levels.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line and
//! a threaded executor live in the `bilevel-ggm` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod exec;
pub mod glasso;
pub mod linalg;
pub mod metrics;
pub mod rcm;
pub mod simgen;
pub mod sparsecov;
pub mod tuning;

pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use glasso::{glasso_fit, glasso_kkt, glasso_objective, GlassoOptions, SolveReport};
pub use linalg::{
    inverse_pd, kl_penalty, l1_offdiag, log_det_pd, sample_covariance, SubjectData, SymMatrix,
};
pub use metrics::{
    edge_confusion, edges_from_precision, estimation_error, majority_vote_group, mean_adjacency,
    EdgeConfusion,
};
pub use rcm::{
    bic1, bic2, degrees_of_freedom, rcm_fit, rcm_fit_with, rcm_kkt, rcm_objective, InitMode,
    LambdaTriple, RcmFit, RcmOptions, SolverLimits,
};
pub use simgen::{generate_scenario, EdgeSet, GraphModel, SimScenario, SimTruth};
pub use sparsecov::{sparsecov_fit, sparsecov_kkt, sparsecov_objective, SparseCovOptions};
pub use tuning::{default_grid, tune, tune_with, Criterion, LambdaGrid, TuneEntry, TuneResult};
