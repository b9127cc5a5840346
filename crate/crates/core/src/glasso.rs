//! Graphical lasso for a single precision matrix.
//!
//! Minimizes `-log det Ω + tr(S Ω) + λ Σ_{j≠j'} |ω_jj'|` over positive definite
//! `Ω`. The solver sweeps over columns; each column update is the exact block
//! minimizer over `(ω_12, ω_22)` with the other columns fixed. With
//! `A = Ω_11^{-1}` the off-diagonal column solves the lasso
//!
//! ```text
//! min_γ  ½ γᵀ A γ + (s_12 / s_22)ᵀ γ + (λ / s_22) ‖γ‖₁
//! ```
//!
//! by cyclic coordinate descent, and `ω_22 = 1/s_22 + γᵀ A γ`. The working
//! covariance `W = Ω^{-1}` is kept in sync with rank-one updates, so its diagonal
//! stays at `diag(S)`. Every iterate is positive definite and the objective never
//! increases, including from a warm start.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{check_same_dim, soft_threshold, Cholesky, SymMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct GlassoOptions {
    /// Maximum number of full column sweeps.
    pub max_iter: usize,
    /// Convergence threshold on `max |ΔW|` per sweep, relative to the mean of `diag(S)`.
    pub tol: f64,
    /// Initial precision matrix.
    pub warm_start: Option<SymMatrix>,
}

impl Default for GlassoOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-4,
            warm_start: None,
        }
    }
}

impl GlassoOptions {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidOptions("max_iter must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidOptions("tol must be positive"));
        }
        Ok(())
    }
}

/// Outcome of an iterative solve. Non-convergence is reported here, not as an error.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    pub final_delta: f64,
    pub objective: f64,
    /// Objective after each sweep.
    pub objective_trace: Vec<f64>,
}

/// `-log det Ω + tr(S Ω) + λ · l1_offdiag(Ω)`.
pub fn glasso_objective(s: &SymMatrix, lambda: f64, omega: &SymMatrix) -> Result<f64> {
    check_same_dim(s, omega)?;
    let chol = Cholesky::new(omega)?;
    Ok(objective_with(s, lambda, omega.as_slice(), chol.log_det()))
}

fn objective_with(s: &SymMatrix, lambda: f64, omega: &[f64], log_det: f64) -> f64 {
    let p = s.dim();
    let mut tr = 0.0;
    let mut l1 = 0.0;
    for i in 0..p {
        for j in 0..p {
            let w = omega[i * p + j];
            tr += s.get(i, j) * w;
            if i != j {
                l1 += w.abs();
            }
        }
    }
    -log_det + tr + lambda * l1
}

/// Fits the graphical lasso. See the module docs for the algorithm.
pub fn glasso_fit(
    s: &SymMatrix,
    lambda: f64,
    opts: &GlassoOptions,
) -> Result<(SymMatrix, SolveReport)> {
    glasso_fit_from(s, lambda, opts, opts.warm_start.as_ref())
}

/// Like [`glasso_fit`] but borrows the starting point instead of reading it
/// from `opts.warm_start`.
pub fn glasso_fit_from(
    s: &SymMatrix,
    lambda: f64,
    opts: &GlassoOptions,
    init: Option<&SymMatrix>,
) -> Result<(SymMatrix, SolveReport)> {
    opts.validate()?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidLambda(
            "glasso penalty must be finite and non-negative",
        ));
    }
    let p = s.dim();
    for i in 0..p {
        if !(s.get(i, i) > 0.0) {
            return Err(Error::ZeroVariance { index: i });
        }
    }

    if lambda == 0.0 {
        let chol = Cholesky::new(s).map_err(|_| Error::SingularSample)?;
        let omega = chol.inverse();
        let objective = glasso_objective(s, 0.0, &omega)?;
        let report = SolveReport {
            iterations: 0,
            converged: true,
            final_delta: 0.0,
            objective,
            objective_trace: vec![objective],
        };
        return Ok((omega, report));
    }

    let mut theta = match init {
        Some(w) => {
            check_same_dim(s, w)?;
            w.as_slice().to_vec()
        }
        None => {
            let mut t = vec![0.0; p * p];
            for i in 0..p {
                t[i * p + i] = 1.0 / s.get(i, i);
            }
            t
        }
    };
    let chol = Cholesky::from_slice(p, &theta)?;
    let mut w = chol.inverse().into_vec();
    let scale = s.trace() / p as f64;

    let mut a = vec![0.0; p * p];
    let mut gamma = vec![0.0; p];
    let mut r = vec![0.0; p];
    let mut trace = Vec::new();
    let mut objective = objective_with(s, lambda, &theta, chol.log_det());
    let mut delta = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        iterations += 1;
        let w_prev = w.clone();
        for j in 0..p {
            update_column(s, lambda, j, &mut theta, &mut w, &mut a, &mut gamma, &mut r);
        }
        let chol = Cholesky::from_slice(p, &theta)?;
        objective = objective_with(s, lambda, &theta, chol.log_det());
        trace.push(objective);
        w = chol.inverse().into_vec();
        delta = w
            .iter()
            .zip(&w_prev)
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
            / scale;
        if delta <= opts.tol {
            converged = true;
            break;
        }
    }

    let report = SolveReport {
        iterations,
        converged,
        final_delta: delta,
        objective,
        objective_trace: trace,
    };
    Ok((SymMatrix::from_raw(p, theta), report))
}

/// Exact block minimization over column `j` of `Θ`; keeps `W = Θ^{-1}`.
#[allow(clippy::too_many_arguments)]
fn update_column(
    s: &SymMatrix,
    lambda: f64,
    j: usize,
    theta: &mut [f64],
    w: &mut [f64],
    a: &mut [f64],
    gamma: &mut [f64],
    r: &mut [f64],
) {
    let p = s.dim();
    let wjj = w[j * p + j];
    for i in 0..p {
        if i == j {
            continue;
        }
        let wij = w[i * p + j] / wjj;
        for l in 0..p {
            a[i * p + l] = w[i * p + l] - wij * w[l * p + j];
        }
    }
    let sjj = s.get(j, j);
    let t = lambda / sjj;
    for i in 0..p {
        gamma[i] = if i == j { 0.0 } else { theta[i * p + j] };
    }
    r.iter_mut().for_each(|v| *v = 0.0);
    for l in 0..p {
        let g = gamma[l];
        if g != 0.0 {
            for i in 0..p {
                r[i] += a[i * p + l] * g;
            }
        }
    }
    lasso_cd(p, j, a, s.row(j), sjj, t, gamma, r);

    let quad: f64 = (0..p).filter(|&i| i != j).map(|i| gamma[i] * r[i]).sum();
    for i in 0..p {
        if i != j {
            theta[i * p + j] = gamma[i];
            theta[j * p + i] = gamma[i];
        }
    }
    theta[j * p + j] = 1.0 / sjj + quad;

    for i in 0..p {
        if i == j {
            continue;
        }
        let ui = sjj * r[i];
        for l in 0..p {
            if l != j {
                w[i * p + l] = a[i * p + l] + ui * r[l];
            }
        }
        w[i * p + j] = -ui;
        w[j * p + i] = -ui;
    }
    w[j * p + j] = sjj;
}

/// Cyclic coordinate descent for `½ γᵀAγ + bᵀγ + t‖γ‖₁` with `b = s_j / s_jj`,
/// skipping coordinate `skip`. `r` holds `Aγ` and is kept current.
#[allow(clippy::too_many_arguments)]
fn lasso_cd(
    p: usize,
    skip: usize,
    a: &[f64],
    s_row: &[f64],
    sjj: f64,
    t: f64,
    gamma: &mut [f64],
    r: &mut [f64],
) {
    const MAX_PASSES: usize = 10_000;
    let step = |i: usize, gamma: &mut [f64], r: &mut [f64]| -> f64 {
        let aii = a[i * p + i];
        let old = gamma[i];
        let rho = r[i] - aii * old + s_row[i] / sjj;
        let new = soft_threshold(-rho, t) / aii;
        let d = new - old;
        if d != 0.0 {
            gamma[i] = new;
            for (l, rl) in r.iter_mut().enumerate() {
                *rl += a[l * p + i] * d;
            }
        }
        d.abs()
    };
    let threshold = |gamma: &[f64]| 1e-12 * gamma.iter().fold(1.0_f64, |m, g| m.max(g.abs()));

    for _ in 0..MAX_PASSES {
        let mut maxd = 0.0_f64;
        for i in (0..p).filter(|&i| i != skip) {
            maxd = maxd.max(step(i, gamma, r));
        }
        if maxd <= threshold(gamma) {
            return;
        }
        // Iterate on the active set until it settles, then re-check everything.
        for _ in 0..MAX_PASSES {
            let mut maxd = 0.0_f64;
            for i in (0..p).filter(|&i| i != skip) {
                if gamma[i] != 0.0 {
                    maxd = maxd.max(step(i, gamma, r));
                }
            }
            if maxd <= threshold(gamma) {
                break;
            }
        }
    }
}

/// Maximum violation of the glasso stationarity conditions at `Ω`.
///
/// Off-diagonal nonzero entries contribute `|s - σ + λ sign(ω)|`, zero entries
/// `max(0, |s - σ| - λ)`, and diagonal entries `|s - σ|`, with `Σ = Ω^{-1}`.
pub fn glasso_kkt(s: &SymMatrix, lambda: f64, omega: &SymMatrix) -> Result<f64> {
    check_same_dim(s, omega)?;
    let sigma = Cholesky::new(omega)?.inverse();
    let p = s.dim();
    let mut worst = 0.0_f64;
    for i in 0..p {
        worst = worst.max((s.get(i, i) - sigma.get(i, i)).abs());
        for j in (i + 1)..p {
            let g = s.get(i, j) - sigma.get(i, j);
            worst = worst.max(subgradient_residual(g, lambda, omega.get(i, j)));
        }
    }
    Ok(worst)
}

/// Distance of `-g` from `λ ∂|ω|`.
#[inline]
pub(crate) fn subgradient_residual(g: f64, lambda: f64, omega: f64) -> f64 {
    if omega != 0.0 {
        (g + lambda * omega.signum()).abs()
    } else {
        (g.abs() - lambda).max(0.0)
    }
}
