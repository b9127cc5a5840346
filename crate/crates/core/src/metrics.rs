//! Edge recovery, estimation error and cross-subject network summaries.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{check_same_dim, SymMatrix};
use crate::rcm::ZERO_TOL;
use crate::simgen::EdgeSet;

/// Off-diagonal pairs with `|ω| > ZERO_TOL`.
pub fn edges_from_precision(m: &SymMatrix) -> EdgeSet {
    let p = m.dim();
    let mut e = EdgeSet::empty(p);
    for a in 0..p {
        for b in (a + 1)..p {
            if m.get(a, b).abs() > ZERO_TOL {
                e.insert(a, b).expect("indices are in range");
            }
        }
    }
    e
}

/// Confusion counts over all unordered node pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EdgeConfusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub tpr: f64,
    pub fpr: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn check_p(a: &EdgeSet, b: &EdgeSet) -> Result<()> {
    if a.p() != b.p() {
        return Err(Error::DimensionMismatch {
            expected: b.p(),
            got: a.p(),
        });
    }
    Ok(())
}

pub fn edge_confusion(estimated: &EdgeSet, truth: &EdgeSet) -> Result<EdgeConfusion> {
    check_p(estimated, truth)?;
    let p = truth.p();
    let pairs = p * (p - 1) / 2;
    let tp = estimated
        .iter()
        .filter(|&(a, b)| truth.contains(a, b))
        .count();
    let fp = estimated.len() - tp;
    let fn_ = truth.len() - tp;
    let tn = pairs - truth.len() - fp;
    Ok(EdgeConfusion {
        tp,
        fp,
        tn,
        fn_,
        tpr: ratio(tp, tp + fn_),
        fpr: ratio(fp, fp + tn),
    })
}

/// `(‖Δ‖_F, Σ|Δ_jj'|)` over all entries of `Δ = estimate - truth`.
pub fn estimation_error(estimate: &SymMatrix, truth: &SymMatrix) -> Result<(f64, f64)> {
    estimation_error_with(estimate, truth, false)
}

/// Like [`estimation_error`]; with `offdiag_only` the diagonal is left out.
pub fn estimation_error_with(
    estimate: &SymMatrix,
    truth: &SymMatrix,
    offdiag_only: bool,
) -> Result<(f64, f64)> {
    check_same_dim(estimate, truth)?;
    let p = truth.dim();
    let (mut sq, mut abs) = (0.0, 0.0);
    for i in 0..p {
        for j in 0..p {
            if offdiag_only && i == j {
                continue;
            }
            let d = estimate.get(i, j) - truth.get(i, j);
            sq += d * d;
            abs += d.abs();
        }
    }
    Ok((libm::sqrt(sq), abs))
}

fn pair_counts(adjacencies: &[EdgeSet]) -> Result<(usize, Vec<usize>)> {
    let first = adjacencies
        .first()
        .ok_or(Error::DimensionTooSmall { min: 1, got: 0 })?;
    let p = first.p();
    let mut counts = vec![0usize; p * p];
    for e in adjacencies {
        check_p(e, first)?;
        for (a, b) in e.iter() {
            counts[a * p + b] += 1;
        }
    }
    Ok((p, counts))
}

/// Pairs present in more than half of the networks.
pub fn majority_vote_group(adjacencies: &[EdgeSet]) -> Result<EdgeSet> {
    let (p, counts) = pair_counts(adjacencies)?;
    let k = adjacencies.len();
    let mut out = EdgeSet::empty(p);
    for a in 0..p {
        for b in (a + 1)..p {
            if 2 * counts[a * p + b] > k {
                out.insert(a, b)?;
            }
        }
    }
    Ok(out)
}

/// Fraction of networks containing each pair; zero diagonal.
pub fn mean_adjacency(adjacencies: &[EdgeSet]) -> Result<SymMatrix> {
    let (p, counts) = pair_counts(adjacencies)?;
    let k = adjacencies.len() as f64;
    SymMatrix::from_upper_fn(p, |a, b| {
        if a == b {
            0.0
        } else {
            counts[a * p + b] as f64 / k
        }
    })
}
