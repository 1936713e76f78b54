//! k-median clustering of quantum states under relative entropy:
//! μ-similar domains, error functionals, bicriteria seeding, ring coresets
//! and the recursive CLUSTER search.

mod cluster;

pub use cluster::{cluster, cluster_with, ClusterConfig, ClusterOutcome};

use std::f64::consts::LN_2;

use itertools::Itertools;
use rand::Rng;
use rand::seq::index;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, CMatrix};
use crate::qstate::{DensityMatrix, PreparedCenter, PreparedState};
use crate::random;

/// Divergences at or below this are treated as zero (float noise on D(ρ‖ρ)).
const ZERO_DIVERGENCE: f64 = 1e-12;

fn floor_noise(d: f64) -> f64 {
    if d <= ZERO_DIVERGENCE {
        0.0
    } else {
        d
    }
}

/// Eigenvalue box [λ, γ] that keeps relative entropy finite and μ-similar
/// to a quadratic form, with μ = λ/γ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuSimilarDomain {
    lambda: f64,
    gamma: f64,
}

impl Default for MuSimilarDomain {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            gamma: 1.0 - 1e-4,
        }
    }
}

impl MuSimilarDomain {
    pub fn new(lambda: f64, gamma: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < gamma && gamma <= 1.0) {
            return Err(Error::Parameter(format!(
                "domain needs 0 < lambda < gamma <= 1 (got {lambda}, {gamma})"
            )));
        }
        Ok(Self { lambda, gamma })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mu(&self) -> f64 {
        self.lambda / self.gamma
    }

    /// D_A(ρ, σ) = ⟨ρ − σ, A(ρ − σ)⟩ with A = I/(2λ), expressed in bits.
    ///
    /// On clamped states μ·D_A ≤ D ≤ D_A.
    pub fn quadratic_divergence(&self, rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
        let diff = rho.matrix() - sigma.matrix();
        linalg::hs_inner(&diff, &diff) / (2.0 * self.lambda * LN_2)
    }

    /// Projects the spectrum of ρ onto {x : λ ≤ xᵢ ≤ γ, Σxᵢ = 1}.
    ///
    /// States already inside the box are returned unchanged, so the map is
    /// idempotent.
    pub fn clamp(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let d = rho.dim() as f64;
        if self.lambda * d > 1.0 + 1e-12 || self.gamma * d < 1.0 - 1e-12 {
            return Err(Error::Parameter(format!(
                "no unit-trace state of dimension {d} fits in [{}, {}]",
                self.lambda, self.gamma
            )));
        }
        let (vals, vecs) = linalg::eigh(rho.matrix());
        let slack = 1e-15;
        if vals.iter().all(|&v| v >= self.lambda - slack && v <= self.gamma + slack) {
            return Ok(rho.clone());
        }
        let clipped = |tau: f64| -> Vec<f64> {
            vals.iter()
                .map(|v| (v - tau).clamp(self.lambda, self.gamma))
                .collect()
        };
        let (mut lo, mut hi) = (vals[0] - self.gamma, vals[vals.len() - 1] - self.lambda);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if clipped(mid).iter().sum::<f64>() > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut out = clipped(0.5 * (lo + hi));
        let total: f64 = out.iter().sum();
        out.iter_mut().for_each(|x| *x /= total);
        Ok(DensityMatrix::from_spectrum(&out, &vecs))
    }
}

/// Clamps ρ into the domain (see [`MuSimilarDomain::clamp`]).
pub fn clamp_to_domain(rho: &DensityMatrix, dom: &MuSimilarDomain) -> Result<DensityMatrix> {
    dom.clamp(rho)
}

/// States with positive weights.
#[derive(Clone, Debug)]
pub struct WeightedStateSet {
    states: Vec<DensityMatrix>,
    weights: Vec<f64>,
}

impl WeightedStateSet {
    pub fn new(states: Vec<DensityMatrix>, weights: Vec<f64>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Empty("weighted state set"));
        }
        check_dim(states.len(), weights.len())?;
        let d = states[0].dim();
        for s in &states {
            check_dim(d, s.dim())?;
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::Parameter("weights must be positive".into()));
        }
        Ok(Self { states, weights })
    }

    /// Every state with weight 1.
    pub fn unit(states: Vec<DensityMatrix>) -> Result<Self> {
        let n = states.len();
        Self::new(states, vec![1.0; n])
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// A set of median states.
#[derive(Clone, Debug, PartialEq)]
pub struct MedianSet {
    medians: Vec<DensityMatrix>,
}

impl MedianSet {
    pub fn new(medians: Vec<DensityMatrix>) -> Result<Self> {
        if medians.is_empty() {
            return Err(Error::Empty("median set"));
        }
        let d = medians[0].dim();
        for m in &medians {
            check_dim(d, m.dim())?;
        }
        Ok(Self { medians })
    }

    /// The empty set, only meaningful as the starting point of [`cluster`].
    pub fn empty() -> Self {
        Self { medians: vec![] }
    }

    pub fn medians(&self) -> &[DensityMatrix] {
        &self.medians
    }

    pub fn len(&self) -> usize {
        self.medians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.medians.is_empty()
    }

    pub(crate) fn prepared(&self) -> Vec<PreparedCenter> {
        self.medians.iter().cloned().map(PreparedCenter::new).collect()
    }
}

/// D(ρ‖M) = min over medians; `+∞` for an empty set.
pub(crate) fn distance_to_set(rho: &PreparedState, medians: &[PreparedCenter]) -> f64 {
    medians
        .iter()
        .map(|m| m.divergence(rho))
        .fold(f64::INFINITY, f64::min)
}

fn nearest(rho: &PreparedState, medians: &[PreparedCenter]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, m) in medians.iter().enumerate() {
        let d = m.divergence(rho);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn prepare(states: &[DensityMatrix]) -> Vec<PreparedState> {
    states.iter().cloned().map(PreparedState::new).collect()
}

/// Σ_{ρ∈S} min_{σ∈M} D(ρ‖σ).
pub fn kmedian_error(states: &[DensityMatrix], medians: &MedianSet) -> f64 {
    let centers = medians.prepared();
    states
        .iter()
        .map(|s| distance_to_set(&PreparedState::new(s.clone()), &centers))
        .sum()
}

/// Σ w(ρ)·D(ρ‖M).
pub fn weighted_error(set: &WeightedStateSet, medians: &MedianSet) -> f64 {
    let centers = medians.prepared();
    set.states
        .iter()
        .zip(&set.weights)
        .map(|(s, w)| w * distance_to_set(&PreparedState::new(s.clone()), &centers))
        .sum()
}

/// Weighted arithmetic mean Σ wᵢρᵢ / Σ wᵢ, the right-slot Bregman centroid.
pub fn centroid(set: &WeightedStateSet) -> DensityMatrix {
    let d = set.states[0].dim();
    let mut acc = CMatrix::zeros(d, d);
    for (s, w) in set.states.iter().zip(&set.weights) {
        acc += s.matrix().scale(*w);
    }
    DensityMatrix::from_trusted(acc.unscale(set.total_weight()))
}

/// Bicriteria seeding: the first median uniformly from the input, each
/// further one drawn with probability D(ρ‖M)/error(S, M), until ⌈β·k⌉
/// medians are chosen or the error vanishes.
///
/// Returns the medians and their input indices.
pub fn bicriteria(
    states: &[DensityMatrix],
    k: usize,
    beta: f64,
    seed: u64,
) -> Result<(MedianSet, Vec<usize>)> {
    if !(beta >= 1.0) {
        return Err(Error::Parameter(format!("beta must be >= 1 (got {beta})")));
    }
    if k == 0 || k > states.len() {
        return Err(Error::Parameter(format!(
            "need 1 <= k <= |S| (k = {k}, |S| = {})",
            states.len()
        )));
    }
    let target = ((beta * k as f64).ceil() as usize).min(states.len());
    let prepared = prepare(states);
    let mut rng = random::stream(seed, 0);
    let first = rng.random_range(0..states.len());
    let mut chosen = vec![first];
    let mut dist: Vec<f64> = {
        let c = PreparedCenter::new(states[first].clone());
        prepared.iter().map(|p| floor_noise(c.divergence(p))).collect()
    };
    while chosen.len() < target {
        let total: f64 = dist.iter().sum();
        if !(total > 0.0) {
            break;
        }
        let mut u = rng.random_range(0.0..total);
        let mut pick = dist.len() - 1;
        for (i, d) in dist.iter().enumerate() {
            if u < *d {
                pick = i;
                break;
            }
            u -= d;
        }
        if dist[pick] <= 0.0 {
            // Rounding landed on a zero-mass entry; take the last positive one.
            pick = dist.iter().rposition(|d| *d > 0.0).expect("positive total");
        }
        chosen.push(pick);
        let c = PreparedCenter::new(states[pick].clone());
        for (d, p) in dist.iter_mut().zip(&prepared) {
            *d = d.min(floor_noise(c.divergence(p)));
        }
    }
    let medians = MedianSet::new(chosen.iter().map(|&i| states[i].clone()).collect())?;
    Ok((medians, chosen))
}

/// A weighted coreset with the input index behind each member.
#[derive(Clone, Debug)]
pub struct Coreset {
    pub set: WeightedStateSet,
    pub origin: Vec<usize>,
    /// Number of nonempty cells (median × ring) that contributed samples.
    pub cells: usize,
}

/// Ring coreset around bicriteria medians.
///
/// Inputs are assigned to their nearest median, then split into rings
/// D ≤ R and 2^{j−1}R < D ≤ 2^jR (j = 1..⌈log₂(αn)⌉) with
/// R = error(S, M)/(αn). Each nonempty cell contributes
/// min(m, |cell|) members drawn uniformly without replacement, weighted
/// |cell|/min(m, |cell|), so the weights sum to n.
pub fn build_coreset(
    states: &[DensityMatrix],
    medians: &MedianSet,
    m: usize,
    alpha: f64,
    seed: u64,
) -> Result<Coreset> {
    if states.is_empty() {
        return Err(Error::Empty("state list"));
    }
    if medians.is_empty() {
        return Err(Error::Empty("median set"));
    }
    if m == 0 {
        return Err(Error::Parameter("coreset cell sample size must be >= 1".into()));
    }
    if !(alpha >= 1.0) {
        return Err(Error::Parameter(format!("alpha must be >= 1 (got {alpha})")));
    }
    let n = states.len();
    let prepared = prepare(states);
    let centers = medians.prepared();
    let assignment: Vec<(usize, f64)> = prepared
        .iter()
        .map(|p| {
            let (j, d) = nearest(p, &centers);
            (j, floor_noise(d))
        })
        .collect();
    let error: f64 = assignment.iter().map(|a| a.1).sum();

    if !(error > 0.0) {
        let mut counts = vec![0usize; medians.len()];
        let mut first = vec![usize::MAX; medians.len()];
        for (i, (j, _)) in assignment.iter().enumerate() {
            counts[*j] += 1;
            first[*j] = first[*j].min(i);
        }
        let keep: Vec<usize> = (0..medians.len()).filter(|&j| counts[j] > 0).collect();
        return Ok(Coreset {
            set: WeightedStateSet::new(
                keep.iter().map(|&j| medians.medians()[j].clone()).collect(),
                keep.iter().map(|&j| counts[j] as f64).collect(),
            )?,
            origin: keep.iter().map(|&j| first[j]).collect(),
            cells: keep.len(),
        });
    }

    let base = error / (alpha * n as f64);
    let rings = (alpha * n as f64).log2().ceil().max(0.0) as usize;
    let ring_of = |d: f64| -> usize {
        if d <= base {
            return 0;
        }
        let mut j = 1;
        while j < rings && d > base * (j as f64).exp2() {
            j += 1;
        }
        j
    };
    let mut cells: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); rings + 1]; medians.len()];
    for (i, (j, d)) in assignment.iter().enumerate() {
        cells[*j][ring_of(*d)].push(i);
    }

    let mut rng = random::stream(seed, 1);
    let mut members = Vec::new();
    let mut weights = Vec::new();
    let mut nonempty = 0;
    for cell in cells.iter().flatten().filter(|c| !c.is_empty()) {
        nonempty += 1;
        let take = m.min(cell.len());
        let weight = cell.len() as f64 / take as f64;
        let mut picked: Vec<usize> = index::sample(&mut rng, cell.len(), take)
            .into_iter()
            .map(|k| cell[k])
            .collect();
        picked.sort_unstable();
        for i in picked {
            members.push(i);
            weights.push(weight);
        }
    }
    Ok(Coreset {
        set: WeightedStateSet::new(members.iter().map(|&i| states[i].clone()).collect(), weights)?,
        origin: members,
        cells: nonempty,
    })
}

/// Exact discrete k-median: the best k-subset of the inputs as medians.
///
/// Returns the medians, their indices and the optimal error.
pub fn brute_force_kmedian(
    states: &[DensityMatrix],
    k: usize,
) -> Result<(MedianSet, Vec<usize>, f64)> {
    let n = states.len();
    if k == 0 || k > n {
        return Err(Error::Parameter(format!("need 1 <= k <= |S| (k = {k}, |S| = {n})")));
    }
    let count = binomial(n, k);
    if count > 1_000_000 {
        return Err(Error::Size(format!("C({n}, {k}) = {count} subsets exceeds 1e6")));
    }
    let prepared = prepare(states);
    let table: Vec<Vec<f64>> = states
        .iter()
        .map(|s| {
            let c = PreparedCenter::new(s.clone());
            prepared.iter().map(|p| c.divergence(p)).collect()
        })
        .collect();
    let mut best: (Vec<usize>, f64) = (Vec::new(), f64::INFINITY);
    for combo in (0..n).combinations(k) {
        let err: f64 = (0..n)
            .map(|i| combo.iter().map(|&j| table[j][i]).fold(f64::INFINITY, f64::min))
            .sum();
        if err < best.1 {
            best = (combo, err);
        }
    }
    let medians = MedianSet::new(best.0.iter().map(|&i| states[i].clone()).collect())?;
    Ok((medians, best.0, best.1))
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return acc;
        }
    }
    acc
}
