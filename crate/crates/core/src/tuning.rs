//! Grid search over tuning parameters with BIC selection.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::exec::{Executor, Sequential};
use crate::linalg::SubjectData;
use crate::rcm::{bic1, bic2, degrees_of_freedom, rcm_fit_with, LambdaTriple, RcmFit, RcmOptions};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LambdaGrid {
    pub lambda1_values: Vec<f64>,
    pub lambda2_values: Vec<f64>,
    pub lambda3_values: Vec<f64>,
}

impl LambdaGrid {
    pub fn new(lambda1: Vec<f64>, lambda2: Vec<f64>, lambda3: Vec<f64>) -> Result<Self> {
        let g = Self {
            lambda1_values: lambda1,
            lambda2_values: lambda2,
            lambda3_values: lambda3,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for values in [
            &self.lambda1_values,
            &self.lambda2_values,
            &self.lambda3_values,
        ] {
            if values.is_empty() {
                return Err(Error::InvalidLambda("grid axes must be non-empty"));
            }
            if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::InvalidLambda(
                    "grid values must be finite and non-negative",
                ));
            }
            if values.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidLambda("grid axes must be strictly ascending"));
            }
        }
        Ok(())
    }

    /// Grid points with `λ2 = 0` and `λ3 > 0`, which the model does not allow.
    pub fn infeasible(&self) -> Vec<LambdaTriple> {
        let mut out = Vec::new();
        for &l2 in self.lambda2_values.iter().filter(|&&v| v == 0.0) {
            for &l3 in self.lambda3_values.iter().filter(|&&v| v > 0.0) {
                for &l1 in &self.lambda1_values {
                    out.push(LambdaTriple {
                        lambda1: l1,
                        lambda2: l2,
                        lambda3: l3,
                    });
                }
            }
        }
        out
    }

    fn slices(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for &l2 in &self.lambda2_values {
            for &l3 in &self.lambda3_values {
                if l2 > 0.0 || l3 == 0.0 {
                    out.push((l2, l3));
                }
            }
        }
        out
    }
}

/// Default grid for `p` variables and `n` observations per subject.
///
/// `λ1` takes 10 log-spaced values from `c/10` to `10c` with `c = sqrt(ln p / n)`.
pub fn default_grid(p: usize, n: usize) -> LambdaGrid {
    let c = libm::sqrt(libm::log(p.max(2) as f64) / n.max(2) as f64);
    let lambda1 = (0..10)
        .map(|i| c * libm::pow(10.0, -1.0 + 2.0 * i as f64 / 9.0))
        .collect();
    let levels = alloc::vec![0.1, 0.5, 1.0, 2.0, 5.0];
    LambdaGrid {
        lambda1_values: lambda1,
        lambda2_values: levels.clone(),
        lambda3_values: levels,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Criterion {
    #[cfg_attr(feature = "serde", serde(rename = "BIC1"))]
    Bic1,
    #[default]
    #[cfg_attr(feature = "serde", serde(rename = "BIC2"))]
    Bic2,
}

impl Criterion {
    pub fn evaluate(self, fit: &RcmFit, subjects: &[SubjectData]) -> Result<f64> {
        match self {
            Criterion::Bic1 => bic1(fit, subjects),
            Criterion::Bic2 => bic2(fit, subjects),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneEntry {
    pub lambda: LambdaTriple,
    pub bic: f64,
    pub df: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct TuneResult {
    pub best: RcmFit,
    pub criterion: Criterion,
    /// One row per fitted grid point, by ascending criterion value.
    pub table: Vec<TuneEntry>,
    /// Skipped grid points.
    pub infeasible: Vec<LambdaTriple>,
    /// `false` when no fit converged and `best` was picked among all fits.
    pub best_converged: bool,
}

/// Lower criterion first; ties go to the larger `(λ1, λ3, λ2)`.
fn rank(a: &TuneEntry, b: &TuneEntry) -> Ordering {
    a.bic.total_cmp(&b.bic).then_with(|| {
        let key = |e: &TuneEntry| (e.lambda.lambda1, e.lambda.lambda3, e.lambda.lambda2);
        let (ka, kb) = (key(a), key(b));
        kb.0.total_cmp(&ka.0)
            .then(kb.1.total_cmp(&ka.1))
            .then(kb.2.total_cmp(&ka.2))
    })
}

struct SliceOutcome {
    entries: Vec<TuneEntry>,
    best_converged: Option<(TuneEntry, RcmFit)>,
    best_any: Option<(TuneEntry, RcmFit)>,
}

fn keep_better(slot: &mut Option<(TuneEntry, RcmFit)>, entry: TuneEntry, fit: &RcmFit) {
    let better = match slot {
        Some((cur, _)) => rank(&entry, cur) == Ordering::Less,
        None => true,
    };
    if better {
        *slot = Some((entry, fit.clone()));
    }
}

/// Sequential grid search with warm starts.
pub fn tune(
    subjects: &[SubjectData],
    grid: &LambdaGrid,
    criterion: Criterion,
    opts: &RcmOptions,
) -> Result<TuneResult> {
    tune_with(subjects, grid, criterion, opts, &Sequential, true)
}

/// Grid search. Within each `(λ2, λ3)` slice `λ1` runs from largest to
/// smallest, each fit starting from the previous one when `warm_start` is set;
/// slices are distributed through `exec`.
pub fn tune_with<E: Executor>(
    subjects: &[SubjectData],
    grid: &LambdaGrid,
    criterion: Criterion,
    opts: &RcmOptions,
    exec: &E,
    warm_start: bool,
) -> Result<TuneResult> {
    grid.validate()?;
    if criterion == Criterion::Bic2 {
        if let Some(first) = subjects.first() {
            if subjects.iter().any(|s| s.n() != first.n()) {
                return Err(Error::UnequalSampleSizes);
            }
        }
    }
    let slices = grid.slices();
    if slices.is_empty() {
        return Err(Error::EmptyFeasibleGrid);
    }

    let run_slice =
        |idx: usize, inner: &dyn Fn(&LambdaTriple, Option<&RcmFit>) -> Result<RcmFit>| {
            let (l2, l3) = slices[idx];
            let mut out = SliceOutcome {
                entries: Vec::new(),
                best_converged: None,
                best_any: None,
            };
            let mut prev: Option<RcmFit> = None;
            for &l1 in grid.lambda1_values.iter().rev() {
                let lambda = LambdaTriple::new(l1, l2, l3)?;
                let fit = inner(&lambda, if warm_start { prev.as_ref() } else { None })?;
                let entry = TuneEntry {
                    lambda,
                    bic: criterion.evaluate(&fit, subjects)?,
                    df: degrees_of_freedom(&fit),
                    converged: fit.converged,
                };
                if entry.converged {
                    keep_better(&mut out.best_converged, entry, &fit);
                }
                keep_better(&mut out.best_any, entry, &fit);
                out.entries.push(entry);
                prev = Some(fit);
            }
            Ok::<_, Error>(out)
        };

    let outcomes: Vec<Result<SliceOutcome>> = if slices.len() == 1 {
        // A single chain has nothing to spread, so parallelize over subjects.
        let inner = |l: &LambdaTriple, w: Option<&RcmFit>| rcm_fit_with(subjects, l, opts, w, exec);
        alloc::vec![run_slice(0, &inner)]
    } else {
        exec.map_indexed(slices.len(), |idx| {
            let inner = |l: &LambdaTriple, w: Option<&RcmFit>| {
                rcm_fit_with(subjects, l, opts, w, &Sequential)
            };
            run_slice(idx, &inner)
        })
    };

    let mut table = Vec::new();
    let mut best_converged: Option<(TuneEntry, RcmFit)> = None;
    let mut best_any: Option<(TuneEntry, RcmFit)> = None;
    for outcome in outcomes {
        let o = outcome?;
        table.extend(o.entries);
        for (slot, cand) in [
            (&mut best_converged, o.best_converged),
            (&mut best_any, o.best_any),
        ] {
            if let Some((e, f)) = cand {
                keep_better(slot, e, &f);
            }
        }
    }
    table.sort_by(rank);
    let (best, best_converged) = match (best_converged, best_any) {
        (Some((_, f)), _) => (f, true),
        (None, Some((_, f))) => (f, false),
        (None, None) => return Err(Error::EmptyFeasibleGrid),
    };
    Ok(TuneResult {
        best,
        criterion,
        table,
        infeasible: grid.infeasible(),
        best_converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(bic: f64, l1: f64, l2: f64, l3: f64) -> TuneEntry {
        TuneEntry {
            lambda: LambdaTriple {
                lambda1: l1,
                lambda2: l2,
                lambda3: l3,
            },
            bic,
            df: 0.0,
            converged: true,
        }
    }

    #[test]
    fn ties_prefer_sparser() {
        let a = entry(1.0, 0.2, 1.0, 0.1);
        let b = entry(1.0, 0.1, 1.0, 0.5);
        assert_eq!(rank(&a, &b), Ordering::Less);
        let c = entry(1.0, 0.2, 1.0, 0.5);
        assert_eq!(rank(&c, &a), Ordering::Less);
        let d = entry(0.5, 0.0, 0.0, 0.0);
        assert_eq!(rank(&d, &c), Ordering::Less);
    }

    #[test]
    fn default_grid_shape() {
        let g = default_grid(100, 50);
        g.validate().unwrap();
        assert_eq!(g.lambda1_values.len(), 10);
        let c = libm::sqrt(libm::log(100.0) / 50.0);
        let center = libm::sqrt(g.lambda1_values[0] * g.lambda1_values[9]);
        assert!((center - c).abs() < 1e-12);
        assert!((c - 0.3035).abs() < 1e-3);
        assert!(g.infeasible().is_empty());
    }

    #[test]
    fn infeasible_points_are_listed() {
        let g = LambdaGrid::new(
            alloc::vec![0.1, 0.2],
            alloc::vec![0.0, 1.0],
            alloc::vec![0.0, 0.5],
        )
        .unwrap();
        assert_eq!(g.infeasible().len(), 2);
        assert_eq!(g.slices(), alloc::vec![(0.0, 0.0), (1.0, 0.0), (1.0, 0.5)]);
    }

    #[test]
    fn grid_validation() {
        assert!(LambdaGrid::new(alloc::vec![], alloc::vec![1.0], alloc::vec![0.0]).is_err());
        assert!(
            LambdaGrid::new(alloc::vec![0.2, 0.1], alloc::vec![1.0], alloc::vec![0.0]).is_err()
        );
        assert!(LambdaGrid::new(alloc::vec![-0.1], alloc::vec![1.0], alloc::vec![0.0]).is_err());
    }
}
