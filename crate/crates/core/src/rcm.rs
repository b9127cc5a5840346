//! The random covariance model.
//!
//! Jointly estimates individual precision matrices `Ω_1..Ω_K` and a group-level
//! precision `Ω_0` by minimizing
//!
//! ```text
//! Σ_k [-log det Ω_k + tr(S_k Ω_k)]
//!   + λ1 Σ_k |Ω_k|_1 + λ2 Σ_k [-log det(Ω_k Ω_0^{-1}) + tr(Ω_k Ω_0^{-1}) - p] + λ3 |Ω_0|_1
//! ```
//!
//! with L1 norms over off-diagonal entries. Block coordinate descent alternates
//! a graphical lasso per subject on `(S_k + λ2 Ω_0^{-1}) / (1 + λ2)` with penalty
//! `λ1 / (1 + λ2)`, and a sparse covariance-type problem for `Ω_0` on the subject
//! mean with penalty `λ3 / (K λ2)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exec::{Executor, Sequential};
use crate::glasso::{glasso_fit_from, subgradient_residual, GlassoOptions};
use crate::linalg::{
    check_same_dim, inverse_pd, kl_penalty, l1_offdiag, order_free_mean, sandwich, Cholesky,
    SubjectData, SymMatrix,
};
use crate::sparsecov::sparsecov_fit_from;

/// Entries with `|ω| <= ZERO_TOL` count as absent edges.
pub const ZERO_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LambdaTriple {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

impl LambdaTriple {
    pub fn new(lambda1: f64, lambda2: f64, lambda3: f64) -> Result<Self> {
        let l = Self {
            lambda1,
            lambda2,
            lambda3,
        };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.lambda1, self.lambda2, self.lambda3] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidLambda(
                    "tuning parameters must be finite and non-negative",
                ));
            }
        }
        if self.lambda3 > 0.0 && self.lambda2 == 0.0 {
            return Err(Error::InvalidLambda("lambda3 > 0 requires lambda2 > 0"));
        }
        Ok(())
    }
}

/// How the individual estimates are seeded before the first sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum InitMode {
    /// `Ω_k = (1 - ρ) S_k + ρ I`.
    #[default]
    Blend,
    /// `Ω_k = ((1 - ρ) S_k + ρ I)^{-1}`.
    InverseBlend,
}

/// Iteration limits for an inner solver.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverLimits {
    pub max_iter: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RcmOptions {
    pub max_bcd_iter: usize,
    /// Stop once every matrix moves less than this in relative Frobenius norm.
    pub bcd_tol: f64,
    /// Weight `ρ` of the identity in the initial blend, in `(0, 1)`.
    pub init_blend: f64,
    pub init_mode: InitMode,
    /// Subject-level solver settings; `warm_start` is ignored.
    pub inner_glasso: GlassoOptions,
    pub inner_sparsecov: SolverLimits,
}

impl Default for RcmOptions {
    fn default() -> Self {
        Self {
            max_bcd_iter: 100,
            bcd_tol: 1e-4,
            init_blend: 0.1,
            init_mode: InitMode::Blend,
            inner_glasso: GlassoOptions::default(),
            inner_sparsecov: SolverLimits {
                max_iter: 200,
                tol: 1e-4,
            },
        }
    }
}

impl RcmOptions {
    fn validate(&self) -> Result<()> {
        if self.max_bcd_iter == 0 {
            return Err(Error::InvalidOptions("max_bcd_iter must be at least 1"));
        }
        if !(self.bcd_tol > 0.0) {
            return Err(Error::InvalidOptions("bcd_tol must be positive"));
        }
        if !(self.init_blend > 0.0 && self.init_blend < 1.0) {
            return Err(Error::InvalidOptions("init_blend must lie in (0, 1)"));
        }
        if self.inner_sparsecov.max_iter == 0 || !(self.inner_sparsecov.tol > 0.0) {
            return Err(Error::InvalidOptions("invalid sparse covariance limits"));
        }
        self.inner_glasso.validate()
    }
}

/// A joint estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct RcmFit {
    pub omega0: SymMatrix,
    pub omegas: Vec<SymMatrix>,
    pub lambda: LambdaTriple,
    /// Objective after each full iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `false` when `λ2 = 0`: `Ω_0` is then the plain mean of the `Ω_k`.
    pub group_estimated: bool,
}

impl RcmFit {
    pub fn k(&self) -> usize {
        self.omegas.len()
    }

    pub fn dim(&self) -> usize {
        self.omega0.dim()
    }
}

fn check_lists(omega0: &SymMatrix, omegas: &[SymMatrix], covs: &[&SymMatrix]) -> Result<()> {
    if omegas.is_empty() {
        return Err(Error::DimensionTooSmall { min: 1, got: 0 });
    }
    if omegas.len() != covs.len() {
        return Err(Error::DimensionMismatch {
            expected: omegas.len(),
            got: covs.len(),
        });
    }
    for (o, s) in omegas.iter().zip(covs) {
        check_same_dim(omega0, o)?;
        check_same_dim(omega0, s)?;
    }
    Ok(())
}

/// Penalized negative log-likelihood of a joint estimate.
pub fn rcm_objective(
    omega0: &SymMatrix,
    omegas: &[SymMatrix],
    sample_covs: &[&SymMatrix],
    lambda: &LambdaTriple,
) -> Result<f64> {
    check_lists(omega0, omegas, sample_covs)?;
    let mut total = 0.0;
    for (o, s) in omegas.iter().zip(sample_covs) {
        total += -Cholesky::new(o)?.log_det() + s.trace_product(o)?;
        if lambda.lambda1 != 0.0 {
            total += lambda.lambda1 * l1_offdiag(o);
        }
        if lambda.lambda2 != 0.0 {
            total += lambda.lambda2 * kl_penalty(o, omega0)?;
        }
    }
    if lambda.lambda3 != 0.0 {
        total += lambda.lambda3 * l1_offdiag(omega0);
    }
    Ok(total)
}

fn common_dim(subjects: &[SubjectData]) -> Result<usize> {
    let first = subjects
        .first()
        .ok_or(Error::DimensionTooSmall { min: 1, got: 0 })?;
    for s in subjects {
        if s.p() != first.p() {
            return Err(Error::DimensionMismatch {
                expected: first.p(),
                got: s.p(),
            });
        }
    }
    Ok(first.p())
}

/// Fits the model sequentially from the default initialization.
pub fn rcm_fit(
    subjects: &[SubjectData],
    lambda: &LambdaTriple,
    opts: &RcmOptions,
) -> Result<RcmFit> {
    rcm_fit_with(subjects, lambda, opts, None, &Sequential)
}

/// Fits the model, optionally continuing from `warm` and running the
/// per-subject updates through `exec`.
pub fn rcm_fit_with<E: Executor>(
    subjects: &[SubjectData],
    lambda: &LambdaTriple,
    opts: &RcmOptions,
    warm: Option<&RcmFit>,
    exec: &E,
) -> Result<RcmFit> {
    lambda.validate()?;
    opts.validate()?;
    let p = common_dim(subjects)?;
    let k = subjects.len();
    if let Some(w) = warm {
        if w.k() != k || w.dim() != p {
            return Err(Error::DimensionMismatch {
                expected: k * p,
                got: w.k() * w.dim(),
            });
        }
    }
    let covs: Vec<&SymMatrix> = subjects.iter().map(|s| s.sample_cov()).collect();
    let glasso_opts = GlassoOptions {
        warm_start: None,
        ..opts.inner_glasso.clone()
    };

    if lambda.lambda2 == 0.0 {
        // The subjects decouple into independent graphical lasso problems and
        // the objective no longer depends on Ω_0.
        let omegas = exec
            .map_indexed(k, |i| {
                let init = warm.map(|w| &w.omegas[i]);
                glasso_fit_from(covs[i], lambda.lambda1, &glasso_opts, init)
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let converged = omegas.iter().all(|(_, r)| r.converged);
        let omegas: Vec<SymMatrix> = omegas.into_iter().map(|(o, _)| o).collect();
        let omega0 = order_free_mean(&omegas.iter().collect::<Vec<_>>())?;
        let objective = rcm_objective(&omega0, &omegas, &covs, lambda)?;
        return Ok(RcmFit {
            omega0,
            omegas,
            lambda: *lambda,
            objective_trace: alloc::vec![objective],
            iterations: 1,
            converged,
            group_estimated: false,
        });
    }

    let (mut omegas, mut omega0) = match warm {
        Some(w) => (w.omegas.clone(), w.omega0.clone()),
        None => initial_estimates(&covs, opts)?,
    };
    let l2 = lambda.lambda2;
    let glasso_penalty = lambda.lambda1 / (1.0 + l2);
    let gamma = lambda.lambda3 / (k as f64 * l2);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_bcd_iter {
        iterations += 1;
        let sigma0 = inverse_pd(&omega0)?;
        let updated = exec
            .map_indexed(k, |i| {
                let s_tilde = covs[i].combine(1.0 / (1.0 + l2), &sigma0, l2 / (1.0 + l2))?;
                glasso_fit_from(&s_tilde, glasso_penalty, &glasso_opts, Some(&omegas[i]))
            })
            .into_iter()
            .map(|r| r.map(|(o, _)| o))
            .collect::<Result<Vec<_>>>()?;
        let mean = order_free_mean(&updated.iter().collect::<Vec<_>>())?;
        let (new0, _) = sparsecov_fit_from(
            &mean,
            gamma,
            opts.inner_sparsecov.max_iter,
            opts.inner_sparsecov.tol,
            &omega0,
        )?;

        let mut change = relative_change(&omega0, &new0);
        for (old, new) in omegas.iter().zip(&updated) {
            change = change.max(relative_change(old, new));
        }
        omegas = updated;
        omega0 = new0;
        trace.push(rcm_objective(&omega0, &omegas, &covs, lambda)?);
        if change <= opts.bcd_tol {
            converged = true;
            break;
        }
    }

    Ok(RcmFit {
        omega0,
        omegas,
        lambda: *lambda,
        objective_trace: trace,
        iterations,
        converged,
        group_estimated: true,
    })
}

fn initial_estimates(
    covs: &[&SymMatrix],
    opts: &RcmOptions,
) -> Result<(Vec<SymMatrix>, SymMatrix)> {
    let rho = opts.init_blend;
    let p = covs[0].dim();
    let eye = SymMatrix::identity(p)?;
    let mut omegas = Vec::with_capacity(covs.len());
    for s in covs {
        let blend = s.combine(1.0 - rho, &eye, rho)?;
        omegas.push(match opts.init_mode {
            InitMode::Blend => blend,
            InitMode::InverseBlend => inverse_pd(&blend)?,
        });
    }
    let omega0 = order_free_mean(&omegas.iter().collect::<Vec<_>>())?;
    Ok((omegas, omega0))
}

fn relative_change(old: &SymMatrix, new: &SymMatrix) -> f64 {
    let diff: f64 = old
        .as_slice()
        .iter()
        .zip(new.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    libm::sqrt(diff) / old.frobenius_norm()
}

/// Stationarity residuals `(individual, group)` of a fit.
///
/// For each subject the smooth derivative is `s_k + λ2 σ_0 - (1 + λ2) σ_k`,
/// and for the group level `-Σ_k (Σ_0 Ω_k Σ_0) + K σ_0`. Off-diagonal entries
/// are checked against `λ1 ∂|ω_k|` and `(λ3/λ2) ∂|ω_0|`; diagonal entries are
/// unpenalized and contribute `|derivative|`. The group residual is zero when
/// `λ2 = 0`.
pub fn rcm_kkt(fit: &RcmFit, sample_covs: &[&SymMatrix]) -> Result<(f64, f64)> {
    check_lists(&fit.omega0, &fit.omegas, sample_covs)?;
    let p = fit.dim();
    let LambdaTriple {
        lambda1: l1,
        lambda2: l2,
        lambda3: l3,
    } = fit.lambda;
    let sigma0 = inverse_pd(&fit.omega0)?;
    let mut individual = 0.0_f64;
    for (omega, s) in fit.omegas.iter().zip(sample_covs) {
        let sigma = inverse_pd(omega)?;
        let grad =
            |i: usize, j: usize| s.get(i, j) + l2 * sigma0.get(i, j) - (1.0 + l2) * sigma.get(i, j);
        for i in 0..p {
            individual = individual.max(grad(i, i).abs());
            for j in (i + 1)..p {
                individual = individual.max(subgradient_residual(grad(i, j), l1, omega.get(i, j)));
            }
        }
    }
    if l2 == 0.0 {
        return Ok((individual, 0.0));
    }
    let k = fit.k() as f64;
    let sum = order_free_mean(&fit.omegas.iter().collect::<Vec<_>>())?.scaled(k);
    let curvature = sandwich(&sigma0, &sum);
    let mut group = 0.0_f64;
    let grad = |i: usize, j: usize| k * sigma0.get(i, j) - curvature.get(i, j);
    for i in 0..p {
        group = group.max(grad(i, i).abs());
        for j in (i + 1)..p {
            group = group.max(subgradient_residual(
                grad(i, j),
                l3 / l2,
                fit.omega0.get(i, j),
            ));
        }
    }
    Ok((individual, group))
}

/// Nonzero off-diagonal pairs of each `Ω_k`, then of `Ω_0`.
pub fn edge_counts(fit: &RcmFit) -> (Vec<usize>, usize) {
    (
        fit.omegas
            .iter()
            .map(|o| o.offdiag_nonzeros(ZERO_TOL))
            .collect(),
        fit.omega0.offdiag_nonzeros(ZERO_TOL),
    )
}

/// `Σ_k df_k / (1 + λ2) + λ2 df_0 / (1 + λ2)`.
pub fn degrees_of_freedom(fit: &RcmFit) -> f64 {
    let (dfk, df0) = edge_counts(fit);
    df_formula(&dfk, df0, fit.lambda.lambda2)
}

pub(crate) fn df_formula(dfk: &[usize], df0: usize, lambda2: f64) -> f64 {
    let individual: f64 = dfk.iter().map(|&d| d as f64).sum();
    individual / (1.0 + lambda2) + lambda2 * df0 as f64 / (1.0 + lambda2)
}

fn fit_terms(fit: &RcmFit, subjects: &[SubjectData]) -> Result<Vec<f64>> {
    if subjects.len() != fit.k() {
        return Err(Error::DimensionMismatch {
            expected: fit.k(),
            got: subjects.len(),
        });
    }
    fit.omegas
        .iter()
        .zip(subjects)
        .map(|(o, s)| Ok(s.sample_cov().trace_product(o)? - Cholesky::new(o)?.log_det()))
        .collect()
}

/// `Σ_k [tr(S_k Ω_k) - log det Ω_k + df_k log n_k]`.
pub fn bic1(fit: &RcmFit, subjects: &[SubjectData]) -> Result<f64> {
    let terms = fit_terms(fit, subjects)?;
    let (dfk, _) = edge_counts(fit);
    Ok(terms
        .iter()
        .zip(&dfk)
        .zip(subjects)
        .map(|((t, &d), s)| t + d as f64 * libm::log(s.n() as f64))
        .sum())
}

/// `Σ_k [tr(S_k Ω_k) - log det Ω_k] + df log(K n)`; needs equal `n_k`.
pub fn bic2(fit: &RcmFit, subjects: &[SubjectData]) -> Result<f64> {
    let terms = fit_terms(fit, subjects)?;
    let n = subjects[0].n();
    if subjects.iter().any(|s| s.n() != n) {
        return Err(Error::UnequalSampleSizes);
    }
    let k = subjects.len() as f64;
    Ok(terms.iter().sum::<f64>() + degrees_of_freedom(fit) * libm::log(k * n as f64))
}
