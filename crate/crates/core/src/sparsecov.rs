//! Group-level subproblem: minimize
//!
//! ```text
//! g(X) = log det X + tr(A X^{-1}) + γ Σ_{j≠j'} |x_jj'|
//! ```
//!
//! over positive definite `X`. The objective is a difference of convex
//! functions, so the solver only promises a critical point.
//!
//! Coordinates are single entries (`x_jj'` together with `x_j'j`), visited in
//! fixed row-major order `j <= j'`. Moving one coordinate by `t` is a rank-two
//! (rank-one on the diagonal) perturbation `X + tE`, so with `Σ = X^{-1}` and
//! `B = Σ A Σ` the change in the smooth part is available in closed form from
//! 2x2 blocks:
//!
//! ```text
//! log det(X + tE) - log det X = log q(t),  q(t) = (1 + t σ_jj')² - t² σ_jj σ_j'j'
//! tr(A (X + tE)^{-1}) - tr(A Σ) = -tr(K(t) B_JJ),  K(t) = t (F + t Σ_JJ)^{-1}
//! ```
//!
//! Each coordinate takes a proximal Newton step on the smooth part, halved up
//! to 30 times until it stays inside the positive definite cone and strictly
//! lowers `g`; otherwise the coordinate is left alone for this sweep. Accepted
//! moves update `Σ` and `B` with low-rank corrections; both are recomputed from
//! scratch at the start of every sweep.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::glasso::{subgradient_residual, SolveReport};
use crate::linalg::{check_same_dim, l1_offdiag, sandwich, Cholesky, SymMatrix};

const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseCovOptions {
    pub max_iter: usize,
    /// Threshold on the largest entry change in a sweep, relative to the mean diagonal.
    pub tol: f64,
    /// Starting point; must be positive definite.
    pub init: SymMatrix,
}

impl SparseCovOptions {
    /// Default iteration limits starting from `init`.
    pub fn new(init: SymMatrix) -> Self {
        Self {
            max_iter: 200,
            tol: 1e-4,
            init,
        }
    }
}

/// `log det X + tr(A X^{-1}) + γ · l1_offdiag(X)`.
pub fn sparsecov_objective(a: &SymMatrix, gamma: f64, x: &SymMatrix) -> Result<f64> {
    check_same_dim(a, x)?;
    let chol = Cholesky::new(x)?;
    let sigma = chol.inverse();
    Ok(chol.log_det() + a.trace_product(&sigma)? + gamma * l1_offdiag(x))
}

/// Solves the group-level subproblem from `opts.init`.
pub fn sparsecov_fit(
    a: &SymMatrix,
    gamma: f64,
    opts: &SparseCovOptions,
) -> Result<(SymMatrix, SolveReport)> {
    sparsecov_fit_from(a, gamma, opts.max_iter, opts.tol, &opts.init)
}

pub(crate) fn sparsecov_fit_from(
    a: &SymMatrix,
    gamma: f64,
    max_iter: usize,
    tol: f64,
    init: &SymMatrix,
) -> Result<(SymMatrix, SolveReport)> {
    if max_iter == 0 {
        return Err(Error::InvalidOptions("max_iter must be at least 1"));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidOptions("tol must be positive"));
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidLambda(
            "sparse covariance penalty must be finite and non-negative",
        ));
    }
    check_same_dim(a, init)?;
    Cholesky::new(a)?;

    // X = A is the global minimizer of the smooth part; when A carries no
    // off-diagonal mass the penalty vanishes there too.
    if gamma == 0.0 || a.is_diagonal() {
        let objective = sparsecov_objective(a, gamma, a)?;
        let report = SolveReport {
            iterations: 0,
            converged: true,
            final_delta: 0.0,
            objective,
            objective_trace: vec![objective],
        };
        return Ok((a.clone(), report));
    }

    let p = a.dim();
    let mut x = init.clone();
    let mut state = State::new(a, &x)?;
    let mut objective = state.objective(a, gamma, &x);
    let mut trace = Vec::new();
    let mut delta = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        iterations += 1;
        let mut max_change = 0.0_f64;
        for j in 0..p {
            for jp in j..p {
                let t = state.coordinate_step(gamma, &x, j, jp);
                if t != 0.0 {
                    let v = x.get(j, jp) + t;
                    x.set_pair(j, jp, v);
                    max_change = max_change.max(t.abs());
                }
            }
        }
        state = State::new(a, &x)?;
        objective = state.objective(a, gamma, &x);
        trace.push(objective);
        delta = max_change / (x.trace() / p as f64);
        if delta <= tol {
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
    Ok((x, report))
}

/// `Σ = X^{-1}` and `B = Σ A Σ` for the current iterate.
struct State {
    p: usize,
    log_det: f64,
    sigma: Vec<f64>,
    b: Vec<f64>,
    col_s: [Vec<f64>; 2],
    col_b: [Vec<f64>; 2],
}

impl State {
    fn new(a: &SymMatrix, x: &SymMatrix) -> Result<Self> {
        let chol = Cholesky::new(x)?;
        let sigma = chol.inverse();
        let b = sandwich(&sigma, a);
        let p = x.dim();
        Ok(Self {
            p,
            log_det: chol.log_det(),
            sigma: sigma.into_vec(),
            b: b.into_vec(),
            col_s: [vec![0.0; p], vec![0.0; p]],
            col_b: [vec![0.0; p], vec![0.0; p]],
        })
    }

    fn objective(&self, a: &SymMatrix, gamma: f64, x: &SymMatrix) -> f64 {
        let tr: f64 = a
            .as_slice()
            .iter()
            .zip(&self.sigma)
            .map(|(u, v)| u * v)
            .sum();
        self.log_det + tr + gamma * l1_offdiag(x)
    }

    #[inline]
    fn s(&self, i: usize, j: usize) -> f64 {
        self.sigma[i * self.p + j]
    }

    #[inline]
    fn bb(&self, i: usize, j: usize) -> f64 {
        self.b[i * self.p + j]
    }

    /// Picks and applies a step for coordinate `(j, jp)`; returns the accepted step.
    fn coordinate_step(&mut self, gamma: f64, x: &SymMatrix, j: usize, jp: usize) -> f64 {
        let (sjj, sjpjp, sjjp) = (self.s(j, j), self.s(jp, jp), self.s(j, jp));
        let (bjj, bjpjp, bjjp) = (self.bb(j, j), self.bb(jp, jp), self.bb(j, jp));
        let xv = x.get(j, jp);
        let diag = j == jp;

        // Smooth-part derivative and curvature per unit of the coordinate.
        let (grad, curv) = if diag {
            (sjj - bjj, -sjj * sjj + 2.0 * sjj * bjj)
        } else {
            (
                sjjp - bjjp,
                -(sjjp * sjjp + sjj * sjpjp) + 2.0 * sjjp * bjjp + sjpjp * bjj + sjj * bjpjp,
            )
        };
        let floor = 1e-6 * if diag { sjj * sjj } else { sjj * sjpjp };
        let h = curv.max(floor);
        let target = if diag {
            xv - grad / h
        } else {
            crate::linalg::soft_threshold(xv - grad / h, gamma / h)
        };
        let mut t = target - xv;
        if t == 0.0 || !t.is_finite() {
            return 0.0;
        }

        let change = |t: f64| -> Option<f64> {
            if diag {
                let q = 1.0 + t * sjj;
                if !(q > 0.0) {
                    return None;
                }
                Some(libm::log(q) - t * bjj / q)
            } else {
                let u = 1.0 + t * sjjp;
                let q = u * u - t * t * sjj * sjpjp;
                if !(q > 0.0) {
                    return None;
                }
                // K = t (F + tΣ_JJ)^{-1}, det(F + tΣ_JJ) = -q.
                let k00 = -t * (t * sjpjp) / q;
                let k11 = -t * (t * sjj) / q;
                let k01 = t * u / q;
                let tr = k00 * bjj + 2.0 * k01 * bjjp + k11 * bjpjp;
                let pen = 2.0 * gamma * ((xv + t).abs() - xv.abs());
                Some(libm::log(q) - tr + pen)
            }
        };

        // The PD region along the coordinate is an interval around 0, so
        // shrinking t never leaves it once inside.
        for _ in 0..=MAX_HALVINGS {
            if let Some(d) = change(t) {
                if d < 0.0 {
                    self.apply(j, jp, t);
                    return t;
                }
            }
            t *= 0.5;
        }
        0.0
    }

    /// Updates `Σ`, `B` and `log det X` for `X += t E_{j,jp}`.
    ///
    /// With `S_J`, `B_J` the columns `J` of `Σ`, `B` and `P = S_J K`:
    /// `Σ' = Σ - P S_Jᵀ` and `B' = B - P B_Jᵀ - B_J Pᵀ + P B_JJ Pᵀ`.
    fn apply(&mut self, j: usize, jp: usize, t: f64) {
        let p = self.p;
        let m = if j == jp { 1 } else { 2 };
        let idx = [j, jp];
        for c in 0..m {
            for i in 0..p {
                self.col_s[c][i] = self.sigma[i * p + idx[c]];
                self.col_b[c][i] = self.b[i * p + idx[c]];
            }
        }
        let mut k = [[0.0; 2]; 2];
        let mut bjj = [[0.0; 2]; 2];
        let q = if m == 1 {
            let q = 1.0 + t * self.col_s[0][j];
            k[0][0] = t / q;
            bjj[0][0] = self.col_b[0][j];
            q
        } else {
            let (sjj, sjpjp, sjjp) = (self.col_s[0][j], self.col_s[1][jp], self.col_s[0][jp]);
            let u = 1.0 + t * sjjp;
            let q = u * u - t * t * sjj * sjpjp;
            k = [
                [-t * t * sjpjp / q, t * u / q],
                [t * u / q, -t * t * sjj / q],
            ];
            bjj = [
                [self.col_b[0][j], self.col_b[0][jp]],
                [self.col_b[1][j], self.col_b[1][jp]],
            ];
            q
        };
        self.log_det += libm::log(q);

        // Rows of P = S_J K and Q = P B_JJ, stored column-wise like col_s.
        let mut pm = [vec![0.0; p], vec![0.0; p]];
        let mut qm = [vec![0.0; p], vec![0.0; p]];
        for a in 0..p {
            for l in 0..m {
                pm[l][a] = (0..m).map(|r| self.col_s[r][a] * k[r][l]).sum();
            }
            for l in 0..m {
                qm[l][a] = (0..m).map(|r| pm[r][a] * bjj[r][l]).sum();
            }
        }
        for a in 0..p {
            let srow = &mut self.sigma[a * p..(a + 1) * p];
            let brow = &mut self.b[a * p..(a + 1) * p];
            for l in 0..m {
                let (pa, ba, qa) = (pm[l][a], self.col_b[l][a], qm[l][a]);
                let (sl, bl, pl) = (&self.col_s[l], &self.col_b[l], &pm[l]);
                for c in 0..p {
                    srow[c] -= pa * sl[c];
                    brow[c] -= pa * bl[c] + ba * pl[c] - qa * pl[c];
                }
            }
        }
    }
}

/// Maximum violation of the stationarity conditions of `g` at `X`.
///
/// The smooth gradient is `Σ - Σ A Σ` with `Σ = X^{-1}`; off-diagonal entries are
/// combined with `γ ∂|x|` exactly as in [`crate::glasso::glasso_kkt`].
pub fn sparsecov_kkt(a: &SymMatrix, gamma: f64, x: &SymMatrix) -> Result<f64> {
    check_same_dim(a, x)?;
    let sigma = Cholesky::new(x)?.inverse();
    let b = sandwich(&sigma, a);
    let p = a.dim();
    let mut worst = 0.0_f64;
    for i in 0..p {
        worst = worst.max((sigma.get(i, i) - b.get(i, i)).abs());
        for j in (i + 1)..p {
            let g = sigma.get(i, j) - b.get(i, j);
            worst = worst.max(subgradient_residual(g, gamma, x.get(i, j)));
        }
    }
    Ok(worst)
}
