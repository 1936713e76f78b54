//! The recursive CLUSTER search for k medians.

use std::sync::Arc;

use itertools::Itertools;
use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use super::{weighted_error, MedianSet, MuSimilarDomain, WeightedStateSet};
use crate::error::{check_dim, Error, Result};
use crate::qstate::{DensityMatrix, PreparedCenter, PreparedState};
use crate::random;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterConfig {
    pub eps: f64,
    pub delta: f64,
    pub domain: MuSimilarDomain,
    /// Largest number of candidate centroids examined per node.
    pub max_candidates: usize,
    /// Upper bound on the subset size behind each candidate centroid.
    pub max_subset: usize,
}

impl ClusterConfig {
    pub fn new(eps: f64, delta: f64, domain: MuSimilarDomain) -> Self {
        Self {
            eps,
            delta,
            domain,
            max_candidates: 64,
            max_subset: 3,
        }
    }

    fn sample_size(&self, k: usize) -> f64 {
        96.0 * (k * k) as f64 / (self.eps * self.eps * self.domain.mu() * self.delta)
    }

    fn subset_size(&self) -> f64 {
        3.0 / (self.eps * self.domain.mu() * self.delta)
    }
}

#[derive(Clone, Debug)]
pub struct ClusterOutcome {
    pub medians: MedianSet,
    /// weighted_error of the returned medians on the input set.
    pub error: f64,
    /// Nodes whose candidate family was subsampled down to the cap.
    pub truncated_nodes: usize,
    /// Recursion nodes visited.
    pub nodes: usize,
}

/// CLUSTER with the default candidate caps.
pub fn cluster(
    set: &WeightedStateSet,
    m: usize,
    fixed: &MedianSet,
    eps: f64,
    delta: f64,
    dom: &MuSimilarDomain,
    seed: u64,
) -> Result<ClusterOutcome> {
    cluster_with(set, m, fixed, &ClusterConfig::new(eps, delta, *dom), seed)
}

/// Adds `m` medians to `fixed`.
///
/// At each node a weighted multiset is sampled from the current states,
/// centroids of small sub-multisets become candidates, and each candidate
/// is explored with one fewer median to place. When `fixed` is nonempty the
/// closer half (by weight) of the states is also split off and the search
/// continues on the far half. The branch with the lowest weighted error on
/// the node's states wins. Every branch draws from its own RNG stream, so
/// the result does not depend on scheduling.
pub fn cluster_with(
    set: &WeightedStateSet,
    m: usize,
    fixed: &MedianSet,
    cfg: &ClusterConfig,
    seed: u64,
) -> Result<ClusterOutcome> {
    if !(cfg.eps > 0.0 && cfg.eps < 1.0 && cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(Error::Parameter(format!(
            "eps and delta must lie in (0, 1) (got {}, {})",
            cfg.eps, cfg.delta
        )));
    }
    if cfg.max_candidates == 0 || cfg.max_subset == 0 {
        return Err(Error::Parameter("candidate caps must be positive".into()));
    }
    let d = set.states()[0].dim();
    for f in fixed.medians() {
        check_dim(d, f.dim())?;
    }

    let states = set
        .states()
        .iter()
        .map(|s| cfg.domain.clamp(s))
        .collect::<Result<Vec<_>>>()?;
    let ctx = Context {
        prepared: states.iter().cloned().map(PreparedState::new).collect(),
        as_centers: states.iter().cloned().map(|s| Arc::new(PreparedCenter::new(s))).collect(),
        states,
        weights: set.weights().to_vec(),
        k: fixed.len() + m,
        cfg: *cfg,
    };
    let start: Vec<Arc<PreparedCenter>> = fixed
        .medians()
        .iter()
        .cloned()
        .map(|s| Arc::new(PreparedCenter::new(s)))
        .collect();
    let items: Vec<usize> = (0..set.len()).collect();
    let found = ctx.solve(&items, m, &start, seed);

    let medians = MedianSet {
        medians: found.centers.iter().map(|c| c.state().clone()).collect(),
    };
    let error = if medians.is_empty() {
        f64::INFINITY
    } else {
        weighted_error(set, &medians)
    };
    Ok(ClusterOutcome {
        medians,
        error,
        truncated_nodes: found.truncated,
        nodes: found.nodes,
    })
}

struct Context {
    states: Vec<DensityMatrix>,
    prepared: Vec<PreparedState>,
    as_centers: Vec<Arc<PreparedCenter>>,
    weights: Vec<f64>,
    k: usize,
    cfg: ClusterConfig,
}

struct Found {
    centers: Vec<Arc<PreparedCenter>>,
    truncated: usize,
    nodes: usize,
}

const HALVING_STREAM: u64 = u64::MAX;

impl Context {
    fn distance(&self, i: usize, centers: &[Arc<PreparedCenter>]) -> f64 {
        centers
            .iter()
            .map(|c| c.divergence(&self.prepared[i]))
            .fold(f64::INFINITY, f64::min)
    }

    fn error(&self, items: &[usize], centers: &[Arc<PreparedCenter>]) -> f64 {
        items
            .iter()
            .map(|&i| self.weights[i] * self.distance(i, centers))
            .sum()
    }

    fn solve(&self, items: &[usize], m: usize, centers: &[Arc<PreparedCenter>], seed: u64) -> Found {
        if m == 0 {
            return Found {
                centers: centers.to_vec(),
                truncated: 0,
                nodes: 1,
            };
        }
        if m >= items.len() {
            let mut all = centers.to_vec();
            all.extend(items.iter().map(|&i| self.as_centers[i].clone()));
            return Found {
                centers: all,
                truncated: 0,
                nodes: 1,
            };
        }

        let mut rng = random::stream(seed, 0);
        let sample = self.sample(items, &mut rng);
        let (subsets, truncated_here) = self.candidate_subsets(sample.len(), &mut rng);
        let candidates: Vec<Arc<PreparedCenter>> = subsets
            .iter()
            .map(|subset| Arc::new(PreparedCenter::new(self.mean(subset.iter().map(|&p| sample[p])))))
            .collect();

        let mut branches: Vec<Found> = candidates
            .par_iter()
            .enumerate()
            .map(|(c, cand)| {
                let mut next = centers.to_vec();
                next.push(cand.clone());
                self.solve(items, m - 1, &next, random::stream_seed(seed, 1 + c as u64))
            })
            .collect();

        if !centers.is_empty() {
            let far = self.far_half(items, centers);
            branches.push(self.solve(&far, m, centers, random::stream_seed(seed, HALVING_STREAM)));
        }

        let truncated = truncated_here as usize + branches.iter().map(|b| b.truncated).sum::<usize>();
        let nodes = 1 + branches.iter().map(|b| b.nodes).sum::<usize>();
        let errors: Vec<f64> = branches.iter().map(|b| self.error(items, &b.centers)).collect();
        let best = (0..branches.len())
            .min_by(|&a, &b| errors[a].total_cmp(&errors[b]).then(a.cmp(&b)))
            .expect("at least one candidate");
        let winner = branches.swap_remove(best);
        Found {
            centers: winner.centers,
            truncated,
            nodes,
        }
    }

    /// Multiset drawn with replacement, proportional to weight.
    fn sample<R: Rng>(&self, items: &[usize], rng: &mut R) -> Vec<usize> {
        let size = self.cfg.sample_size(self.k).ceil().min(items.len() as f64) as usize;
        let mut cumulative = Vec::with_capacity(items.len());
        let mut total = 0.0;
        for &i in items {
            total += self.weights[i];
            cumulative.push(total);
        }
        (0..size)
            .map(|_| {
                let u = rng.random_range(0.0..total);
                let pos = cumulative.partition_point(|&c| c <= u).min(items.len() - 1);
                items[pos]
            })
            .collect()
    }

    /// Position subsets of the sample; all of them when within the cap,
    /// otherwise a uniform draw of `max_candidates` subsets.
    fn candidate_subsets<R: Rng>(&self, n: usize, rng: &mut R) -> (Vec<Vec<usize>>, bool) {
        let s = (self.cfg.subset_size().ceil() as usize)
            .min(self.cfg.max_subset)
            .min(n)
            .max(1);
        let cap = self.cfg.max_candidates;
        if binomial_at_most(n, s, cap) {
            return ((0..n).combinations(s).collect(), false);
        }
        let subsets = (0..cap)
            .map(|_| {
                let mut v = index::sample(rng, n, s).into_vec();
                v.sort_unstable();
                v
            })
            .collect();
        (subsets, true)
    }

    fn mean(&self, members: impl Iterator<Item = usize>) -> DensityMatrix {
        let d = self.states[0].dim();
        let mut acc = DMatrix::zeros(d, d);
        let mut count = 0.0;
        for i in members {
            acc += self.states[i].matrix();
            count += 1.0;
        }
        DensityMatrix::from_trusted(acc.unscale(count))
    }

    /// States left after removing the closest prefix N with w(N) ≤ w/2.
    /// N always holds at least one state and never all of them.
    fn far_half(&self, items: &[usize], centers: &[Arc<PreparedCenter>]) -> Vec<usize> {
        let mut order: Vec<(f64, usize)> = items.iter().map(|&i| (self.distance(i, centers), i)).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let half = items.iter().map(|&i| self.weights[i]).sum::<f64>() / 2.0;
        let mut taken = 0;
        let mut acc = 0.0;
        for (_, i) in &order {
            if acc + self.weights[*i] > half + 1e-12 {
                break;
            }
            acc += self.weights[*i];
            taken += 1;
        }
        let taken = taken.clamp(1, items.len() - 1);
        let mut rest: Vec<usize> = order[taken..].iter().map(|x| x.1).collect();
        rest.sort_unstable();
        rest
    }
}

fn binomial_at_most(n: usize, k: usize, cap: usize) -> bool {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > cap as u128 {
            return false;
        }
    }
    acc <= cap as u128
}

#[cfg(test)]
mod tests {
    use super::super::{brute_force_kmedian, kmedian_error};
    use super::*;
    use crate::qstate::{bloch_to_density, BlochVector};

    fn q(x: f64, y: f64, z: f64) -> DensityMatrix {
        bloch_to_density(BlochVector::new(x, y, z)).unwrap()
    }

    fn cfg() -> ClusterConfig {
        ClusterConfig::new(0.3, 0.3, MuSimilarDomain::default())
    }

    fn blobs(n: usize, seed: u64) -> Vec<DensityMatrix> {
        let mut rng = random::stream(seed, 0);
        (0..n)
            .map(|i| {
                let z = if i % 2 == 0 { 0.6 } else { -0.6 };
                let j = random::bloch_in_ball(&mut rng, 0.2);
                q(j.x, j.y, z + j.z)
            })
            .collect()
    }

    #[test]
    fn zero_medians_returns_fixed() {
        let s = WeightedStateSet::unit(blobs(6, 1)).unwrap();
        let c = MedianSet::new(vec![q(0.1, 0.0, 0.0)]).unwrap();
        let out = cluster_with(&s, 0, &c, &cfg(), 0).unwrap();
        assert_eq!(out.medians, c);
        assert_eq!(out.nodes, 1);
    }

    #[test]
    fn enough_medians_returns_everything() {
        let states = blobs(3, 2);
        let s = WeightedStateSet::unit(states.clone()).unwrap();
        let out = cluster_with(&s, 3, &MedianSet::empty(), &cfg(), 0).unwrap();
        assert_eq!(out.medians.len(), 3);
        assert!(out.error.abs() < 1e-12);
    }

    #[test]
    fn separated_clusters_get_one_median_each() {
        let s = WeightedStateSet::unit(blobs(20, 3)).unwrap();
        let out = cluster_with(&s, 2, &MedianSet::empty(), &cfg(), 4).unwrap();
        let z: Vec<f64> = out
            .medians
            .medians()
            .iter()
            .map(|m| crate::qstate::density_to_bloch(m).unwrap().z)
            .collect();
        assert!(z.iter().any(|&v| v > 0.3) && z.iter().any(|&v| v < -0.3), "{z:?}");
    }

    #[test]
    fn quality_against_brute_force() {
        let states = blobs(20, 5);
        let (_, _, opt) = brute_force_kmedian(&states, 2).unwrap();
        let s = WeightedStateSet::unit(states.clone()).unwrap();
        let good = (0..30)
            .filter(|&seed| {
                let out = cluster_with(&s, 2, &MedianSet::empty(), &cfg(), seed).unwrap();
                kmedian_error(&states, &out.medians) <= 1.3 * opt
            })
            .count();
        assert!(good >= 21, "{good}/30");
    }

    #[test]
    fn deterministic_and_records_truncation() {
        let s = WeightedStateSet::unit(blobs(12, 6)).unwrap();
        let a = cluster_with(&s, 2, &MedianSet::empty(), &cfg(), 7).unwrap();
        let b = cluster_with(&s, 2, &MedianSet::empty(), &cfg(), 7).unwrap();
        assert_eq!(a.medians, b.medians);
        assert_eq!(a.nodes, b.nodes);
        // C(12, 3) = 220 > 64 candidates at the root.
        assert!(a.truncated_nodes >= 1);
        let mut wide = cfg();
        wide.max_candidates = 10_000;
        let c = cluster_with(&s, 1, &MedianSet::empty(), &wide, 7).unwrap();
        assert_eq!(c.truncated_nodes, 0);
    }

    #[test]
    fn halving_keeps_far_states() {
        let states = vec![q(0.0, 0.0, 0.5), q(0.0, 0.0, 0.45), q(0.0, 0.0, -0.5), q(0.0, 0.0, -0.4)];
        let s = WeightedStateSet::unit(states).unwrap();
        let c = ClusterConfig::new(0.3, 0.3, MuSimilarDomain::default());
        let ctx = Context {
            prepared: s.states().iter().cloned().map(PreparedState::new).collect(),
            as_centers: s.states().iter().cloned().map(|x| Arc::new(PreparedCenter::new(x))).collect(),
            states: s.states().to_vec(),
            weights: vec![1.0, 1.0, 1.0, 1.0],
            k: 2,
            cfg: c,
        };
        let center = vec![Arc::new(PreparedCenter::new(q(0.0, 0.0, 0.5)))];
        assert_eq!(ctx.far_half(&[0, 1, 2, 3], &center), vec![2, 3]);
        assert_eq!(ctx.far_half(&[0, 2], &center), vec![2]);
    }

    #[test]
    fn rejects_bad_parameters() {
        let s = WeightedStateSet::unit(blobs(4, 1)).unwrap();
        let dom = MuSimilarDomain::default();
        assert!(cluster(&s, 1, &MedianSet::empty(), 0.0, 0.3, &dom, 0).is_err());
        assert!(cluster(&s, 1, &MedianSet::empty(), 0.3, 1.0, &dom, 0).is_err());
    }
}
