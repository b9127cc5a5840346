//! Simulated multi-subject data with known group and individual graphs.
//!
//! A group graph is drawn first, then each subject's graph toggles a fixed
//! number of randomly chosen node pairs. Precision matrices put uniform weights
//! from `[-hi, -lo] ∪ [lo, hi]` on the edges, scaled down by row counts to keep
//! the result positive definite, and subjects are sampled from `N(0, Ω_k^{-1})`.
//!
//! Everything is a pure function of the scenario and its seed. Subject `k` uses
//! its own seed derived from `(seed, k)`, so changing `K` leaves the earlier
//! subjects untouched.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{inverse_pd, Cholesky, SubjectData, SymMatrix};

/// Undirected simple graph on nodes `0..p`, stored as pairs `(j, j')` with `j < j'`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(try_from = "EdgeSetRepr", into = "EdgeSetRepr")
)]
pub struct EdgeSet {
    p: usize,
    edges: BTreeSet<(usize, usize)>,
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
struct EdgeSetRepr {
    p: usize,
    edges: Vec<(usize, usize)>,
}

#[cfg(feature = "serde")]
impl TryFrom<EdgeSetRepr> for EdgeSet {
    type Error = Error;
    fn try_from(r: EdgeSetRepr) -> Result<Self> {
        EdgeSet::from_pairs(r.p, r.edges)
    }
}

#[cfg(feature = "serde")]
impl From<EdgeSet> for EdgeSetRepr {
    fn from(e: EdgeSet) -> Self {
        EdgeSetRepr {
            p: e.p,
            edges: e.edges.into_iter().collect(),
        }
    }
}

impl EdgeSet {
    pub fn empty(p: usize) -> Self {
        Self {
            p,
            edges: BTreeSet::new(),
        }
    }

    /// Builds a set from pairs in either orientation; duplicates collapse.
    pub fn from_pairs(p: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut e = Self::empty(p);
        for (a, b) in pairs {
            e.insert(a, b)?;
        }
        Ok(e)
    }

    pub fn insert(&mut self, a: usize, b: usize) -> Result<bool> {
        if a == b || a >= self.p || b >= self.p {
            return Err(Error::InvalidEdge(a, b));
        }
        Ok(self.edges.insert((a.min(b), a.max(b))))
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Pairs in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    /// Number of pairs present in exactly one of the two sets.
    pub fn symmetric_difference_len(&self, other: &EdgeSet) -> usize {
        self.edges.symmetric_difference(&other.edges).count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.p];
        for &(a, b) in &self.edges {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }

    fn toggle(&mut self, a: usize, b: usize) {
        let key = (a.min(b), a.max(b));
        if !self.edges.remove(&key) {
            self.edges.insert(key);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum GraphModel {
    /// Preferential attachment, one new edge per node: a random tree with hubs.
    ScaleFree,
    /// Each pair is an edge independently with probability `edge_prob`.
    ErdosRenyi {
        edge_prob: f64,
    },
    Explicit {
        edges: EdgeSet,
    },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SimScenario {
    pub p: usize,
    pub k: usize,
    pub n: usize,
    /// Node pairs toggled per subject, as a fraction of the group edge count.
    pub rho_diff: f64,
    pub graph_model: GraphModel,
    /// Magnitude range `(lo, hi)` of the edge weights.
    pub value_range: (f64, f64),
    pub seed: u64,
}

impl Default for SimScenario {
    fn default() -> Self {
        Self {
            p: 100,
            k: 8,
            n: 50,
            rho_diff: 0.0,
            graph_model: GraphModel::ScaleFree,
            value_range: (0.5, 1.0),
            seed: 0,
        }
    }
}

impl SimScenario {
    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::InvalidScenario("p must be at least 2"));
        }
        if self.k == 0 {
            return Err(Error::InvalidScenario("k must be at least 1"));
        }
        if self.n < 2 {
            return Err(Error::InvalidScenario("n must be at least 2"));
        }
        if !(0.0..1.0).contains(&self.rho_diff) {
            return Err(Error::InvalidScenario("rho_diff must lie in [0, 1)"));
        }
        check_range(self.value_range)?;
        match &self.graph_model {
            GraphModel::ScaleFree => {}
            GraphModel::ErdosRenyi { edge_prob } => {
                if !(0.0..=1.0).contains(edge_prob) {
                    return Err(Error::InvalidScenario("edge_prob must lie in [0, 1]"));
                }
            }
            GraphModel::Explicit { edges } => {
                if edges.p() != self.p {
                    return Err(Error::InvalidScenario(
                        "explicit graph has the wrong number of nodes",
                    ));
                }
            }
        }
        Ok(())
    }
}

fn check_range((lo, hi): (f64, f64)) -> Result<()> {
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::InvalidScenario("value_range needs 0 < lo < hi"));
    }
    Ok(())
}

/// Ground truth and data for a scenario.
#[derive(Debug, Clone)]
pub struct SimTruth {
    pub group_edges: EdgeSet,
    pub group_precision: SymMatrix,
    pub individual_edges: Vec<EdgeSet>,
    pub individual_precisions: Vec<SymMatrix>,
    pub datasets: Vec<SubjectData>,
}

const STREAM_GRAPH: u64 = 0;
const STREAM_WEIGHTS: u64 = 1;
const STREAM_SAMPLES: u64 = 2;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of subject `k` (0-based) in a scenario with seed `seed`.
pub fn subject_seed(seed: u64, k: usize) -> u64 {
    splitmix(seed ^ splitmix(k as u64 + 1))
}

pub fn generate_group_graph(scenario: &SimScenario) -> Result<EdgeSet> {
    scenario.validate()?;
    let p = scenario.p;
    let mut r = rng(scenario.seed, STREAM_GRAPH);
    match &scenario.graph_model {
        GraphModel::Explicit { edges } => Ok(edges.clone()),
        GraphModel::ErdosRenyi { edge_prob } => {
            let mut e = EdgeSet::empty(p);
            for a in 0..p {
                for b in (a + 1)..p {
                    if r.random_bool(*edge_prob) {
                        e.insert(a, b)?;
                    }
                }
            }
            Ok(e)
        }
        GraphModel::ScaleFree => {
            let mut e = EdgeSet::empty(p);
            // Every edge endpoint appears once, so a uniform pick is degree-proportional.
            let mut ends: Vec<usize> = Vec::with_capacity(2 * p);
            for node in 1..p {
                let target = if ends.is_empty() {
                    0
                } else {
                    ends[r.random_range(0..ends.len())]
                };
                e.insert(node, target)?;
                ends.push(node);
                ends.push(target);
            }
            Ok(e)
        }
    }
}

fn draw_weight(r: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    let magnitude = r.random_range(lo..=hi);
    if r.random_bool(0.5) {
        magnitude
    } else {
        -magnitude
    }
}

/// Unit diagonal plus edge weights divided by the number of nonzeros in their
/// row (degree plus the diagonal), then averaged with the transpose.
///
/// Averaging can lose positive definiteness around large hubs. In that case
/// the weights are divided by `sqrt(c_j c_j')` instead: that matrix is similar
/// to the row-scaled one, whose rows are strictly diagonally dominant.
fn assemble(edges: &EdgeSet, weights: &BTreeMap<(usize, usize), f64>) -> Result<SymMatrix> {
    let p = edges.p();
    let count: Vec<f64> = edges.degrees().iter().map(|&d| (d + 1) as f64).collect();
    let build = |scale: &dyn Fn(f64, f64) -> f64| {
        let mut data = vec![0.0; p * p];
        for i in 0..p {
            data[i * p + i] = 1.0;
        }
        for (a, b) in edges.iter() {
            let v = weights[&(a, b)] * scale(count[a], count[b]);
            data[a * p + b] = v;
            data[b * p + a] = v;
        }
        SymMatrix::new(p, data)
    };
    let m = build(&|ca, cb| 0.5 * (1.0 / ca + 1.0 / cb))?;
    if Cholesky::new(&m).is_ok() {
        return Ok(m);
    }
    let m = build(&|ca, cb| 1.0 / libm::sqrt(ca * cb))?;
    Cholesky::new(&m)?;
    Ok(m)
}

/// Precision matrix supported on `edges`, with weights drawn from `seed`.
pub fn generate_precision(
    edges: &EdgeSet,
    value_range: (f64, f64),
    seed: u64,
) -> Result<SymMatrix> {
    check_range(value_range)?;
    let mut r = rng(seed, STREAM_WEIGHTS);
    let weights = edges
        .iter()
        .map(|e| (e, draw_weight(&mut r, value_range)))
        .collect();
    assemble(edges, &weights)
}

/// Toggles `round(rho_diff · M)` distinct random node pairs of `group`.
pub fn perturb_edges(group: &EdgeSet, rho_diff: f64, seed: u64) -> Result<EdgeSet> {
    if !(0.0..1.0).contains(&rho_diff) {
        return Err(Error::InvalidScenario("rho_diff must lie in [0, 1)"));
    }
    let count = libm::floor(rho_diff * group.len() as f64 + 0.5) as usize;
    toggle_random_pairs(group, count, seed)
}

/// Toggles `count` distinct node pairs drawn uniformly from all `p(p-1)/2`.
/// Applying it twice with the same seed restores the input.
pub fn toggle_random_pairs(edges: &EdgeSet, count: usize, seed: u64) -> Result<EdgeSet> {
    let p = edges.p();
    let total = p * (p - 1) / 2;
    if count > total {
        return Err(Error::InvalidScenario(
            "more pairs to toggle than node pairs",
        ));
    }
    let mut out = edges.clone();
    if count == 0 {
        return Ok(out);
    }
    let mut r = rng(seed, STREAM_GRAPH);
    let mut picks = index::sample(&mut r, total, count).into_vec();
    picks.sort_unstable();
    for idx in picks {
        let (a, b) = pair_at(p, idx);
        out.toggle(a, b);
    }
    Ok(out)
}

/// The `idx`-th pair in row-major order over `j < j'`.
fn pair_at(p: usize, mut idx: usize) -> (usize, usize) {
    for a in 0..p {
        let row = p - 1 - a;
        if idx < row {
            return (a, a + 1 + idx);
        }
        idx -= row;
    }
    unreachable!("pair index out of range")
}

/// Draws `n` rows from `N(0, Ω^{-1})`, row-major `n × p`.
pub fn sample_gaussian(precision: &SymMatrix, n: usize, seed: u64) -> Result<Vec<f64>> {
    let p = precision.dim();
    let chol = Cholesky::new(&inverse_pd(precision)?)?;
    let mut r = rng(seed, STREAM_SAMPLES);
    let mut out = vec![0.0; n * p];
    let mut z = vec![0.0; p];
    for row in out.chunks_exact_mut(p) {
        for v in z.iter_mut() {
            *v = StandardNormal.sample(&mut r);
        }
        chol.mul_lower(&z, row);
    }
    Ok(out)
}

pub fn generate_scenario(scenario: &SimScenario) -> Result<SimTruth> {
    let group_edges = generate_group_graph(scenario)?;
    let mut r = rng(scenario.seed, STREAM_WEIGHTS);
    let group_weights: BTreeMap<(usize, usize), f64> = group_edges
        .iter()
        .map(|e| (e, draw_weight(&mut r, scenario.value_range)))
        .collect();
    let group_precision = assemble(&group_edges, &group_weights)?;

    let mut individual_edges = Vec::with_capacity(scenario.k);
    let mut individual_precisions = Vec::with_capacity(scenario.k);
    let mut datasets = Vec::with_capacity(scenario.k);
    for k in 0..scenario.k {
        let seed = subject_seed(scenario.seed, k);
        let edges = perturb_edges(&group_edges, scenario.rho_diff, seed)?;
        // Shared edges keep the group's raw weight; added edges get fresh draws.
        let mut r = rng(seed, STREAM_WEIGHTS);
        let weights: BTreeMap<(usize, usize), f64> = edges
            .iter()
            .map(|e| match group_weights.get(&e) {
                Some(&w) => (e, w),
                None => (e, draw_weight(&mut r, scenario.value_range)),
            })
            .collect();
        let precision = assemble(&edges, &weights)?;
        let obs = sample_gaussian(&precision, scenario.n, seed)?;
        datasets.push(SubjectData::new(scenario.n, scenario.p, obs)?);
        individual_edges.push(edges);
        individual_precisions.push(precision);
    }

    Ok(SimTruth {
        group_edges,
        group_precision,
        individual_edges,
        individual_precisions,
        datasets,
    })
}
