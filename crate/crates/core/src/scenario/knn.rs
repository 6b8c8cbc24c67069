//! Private kNN: inclusion probability of a poison point, an end-to-end
//! subsampling oracle, and influence scores for picking poison candidates.

use rand::Rng;

use super::{Categorical, VoteModel};
use crate::error::{Error, Result};
use crate::rng::{domain, StreamKey};
use crate::special::ln_binomial;

/// Probability `ν` that a point at 1-based rank `rank` is among the `k`
/// nearest points after Bernoulli(`gamma`) subsampling.
///
/// `ν = γ` for `rank ≤ k`; otherwise the point must be kept and at most
/// `k − 1` of the `rank − 1` closer points may be kept:
/// `ν = Σ_{i<k} C(rank−1, i) γ^{i+1} (1−γ)^{rank−1−i}`.
///
/// # Panics
///
/// If `rank` or `k` is zero or `gamma` is outside `(0, 1]`.
pub fn knn_inclusion_probability(rank: u64, k: u64, gamma: f64) -> f64 {
    assert!(rank >= 1 && k >= 1, "rank and k must be at least 1");
    assert!(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0, 1]");
    if rank <= k {
        return gamma;
    }
    if gamma == 1.0 {
        return 0.0;
    }
    let (lg, lq) = (gamma.ln(), (-gamma).ln_1p());
    let closer = rank - 1;
    (0..k)
        .map(|i| (ln_binomial(closer, i) + (i + 1) as f64 * lg + (closer - i) as f64 * lq).exp())
        .sum::<f64>()
        .min(1.0)
}

/// `E(x) = Σ_q ν(r_q)`: expected number of queries whose top `k` contain a
/// point with the given ranks.
pub fn knn_expected_influence(ranks: &[u64], k: u64, gamma: f64) -> f64 {
    ranks.iter().map(|&r| knn_inclusion_probability(r, k, gamma)).sum()
}

/// Per-query neighbour orderings over a labelled point set.
#[derive(Clone, Debug, PartialEq)]
pub struct RankedQuerySet {
    /// `neighbours[q]` lists point ids from nearest to farthest.
    neighbours: Vec<Vec<usize>>,
    labels: Vec<usize>,
}

impl RankedQuerySet {
    pub fn new(neighbours: Vec<Vec<usize>>, labels: Vec<usize>) -> Result<Self> {
        for (q, list) in neighbours.iter().enumerate() {
            let mut seen = vec![false; labels.len()];
            for &id in list {
                if id >= labels.len() || std::mem::replace(&mut seen[id], true) {
                    return Err(Error::InvalidParameter(format!(
                        "query {q}: neighbour list is not a prefix of a permutation (point {id})"
                    )));
                }
            }
        }
        Ok(RankedQuerySet { neighbours, labels })
    }

    pub fn num_queries(&self) -> usize {
        self.neighbours.len()
    }

    pub fn label(&self, point: usize) -> usize {
        self.labels[point]
    }

    /// 1-based rank of `point` for query `q`.
    pub fn rank_of(&self, q: usize, point: usize) -> Option<u64> {
        self.neighbours[q].iter().position(|&p| p == point).map(|i| i as u64 + 1)
    }

    /// `E(x)` for `point` over every query. Fails if some query does not
    /// rank the point.
    pub fn expected_influence(&self, point: usize, k: u64, gamma: f64) -> Result<f64> {
        let ranks = (0..self.num_queries())
            .map(|q| {
                self.rank_of(q, point)
                    .ok_or_else(|| Error::InvalidParameter(format!("query {q} does not rank point {point}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(knn_expected_influence(&ranks, k, gamma))
    }

    /// The candidate with the largest `E(x)`; ties go to the earlier one.
    pub fn best_candidate(&self, candidates: &[usize], k: u64, gamma: f64) -> Result<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for &c in candidates {
            let score = self.expected_influence(c, k, gamma)?;
            if best.map_or(true, |(_, s)| score > s) {
                best = Some((c, score));
            }
        }
        best.ok_or_else(|| Error::InvalidParameter("no candidates".into()))
    }
}

/// A small kNN instance: clean points sorted by distance to the query and
/// one poison point inserted at `poison_rank`.
#[derive(Clone, Debug, PartialEq)]
pub struct KnnInstance {
    /// Labels of the clean points, nearest first.
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub k: u64,
    pub gamma: f64,
    /// 1-based rank of the poison point: `poison_rank − 1` clean points are
    /// closer.
    pub poison_rank: u64,
    pub poison_label: usize,
}

/// One oracle trial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnnDraw {
    pub h_s: Vec<u32>,
    pub h_s_prime: Vec<u32>,
    /// Fewer than `k` clean points survived subsampling; `h_s` holds all of
    /// them.
    pub fewer_than_k: bool,
    pub poison_included: bool,
    /// Label of the `k`-th nearest kept clean point.
    pub last_label: Option<usize>,
}

impl KnnInstance {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.labels.len() > 10_000 {
            return Err(Error::InvalidParameter("need k >= 1 and at most 10^4 points".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidParameter(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        if self.poison_rank == 0 || self.poison_rank > self.labels.len() as u64 + 1 {
            return Err(Error::InvalidParameter(format!("poison rank {} out of range", self.poison_rank)));
        }
        if self.labels.iter().chain([&self.poison_label]).any(|&l| l >= self.num_classes) {
            return Err(Error::InvalidParameter("label outside the class range".into()));
        }
        Ok(())
    }

    /// End-to-end simulation of one trial, with and without the poison
    /// point, on the same subsample of clean points.
    pub fn simulate(&self, key: &StreamKey, trial: u64) -> KnnDraw {
        let mut rng = key.rng(trial);
        let poison_included = rng.random::<f64>() < self.gamma;
        let k = self.k as usize;
        let before = self.poison_rank as usize - 1;
        let mut h_s = vec![0u32; self.num_classes];
        let mut h_s_prime = vec![0u32; self.num_classes];
        let (mut n_s, mut n_sp) = (0usize, 0usize);
        let mut last_label = None;
        for (i, &label) in self.labels.iter().enumerate() {
            if n_s == k && n_sp == k {
                break;
            }
            if i == before && poison_included && n_sp < k {
                h_s_prime[self.poison_label] += 1;
                n_sp += 1;
            }
            if rng.random::<f64>() < self.gamma {
                if n_s < k {
                    h_s[label] += 1;
                    n_s += 1;
                    if n_s == k {
                        last_label = Some(label);
                    }
                }
                if n_sp < k {
                    h_s_prime[label] += 1;
                    n_sp += 1;
                }
            }
        }
        if before == self.labels.len() && poison_included && n_sp < k {
            h_s_prime[self.poison_label] += 1;
        }
        KnnDraw { h_s, h_s_prime, fewer_than_k: n_s < k, poison_included, last_label }
    }

    /// The vote model fitted to the oracle: `P` is the mean vote of the
    /// kept neighbours and `P_last` the distribution of the `k`-th kept
    /// label, both over trials that keep at least `k` clean points.
    pub fn vote_model(&self, trials: u64, seed: u64) -> Result<VoteModel> {
        self.validate()?;
        let key = StreamKey::new(seed, domain::KNN_ORACLE);
        let mut votes = vec![0u64; self.num_classes];
        let mut last = vec![0u64; self.num_classes];
        let mut kept = 0u64;
        for t in 0..trials {
            let d = self.simulate(&key, t);
            if d.fewer_than_k {
                continue;
            }
            kept += 1;
            for (v, &c) in votes.iter_mut().zip(&d.h_s) {
                *v += c as u64;
            }
            last[d.last_label.expect("k points kept")] += 1;
        }
        if kept == 0 {
            return Err(Error::InvalidParameter("no trial kept k clean points".into()));
        }
        let normalize = |c: &[u64]| {
            let n: u64 = c.iter().sum();
            Categorical::new(c.iter().map(|&x| x as f64 / n as f64).collect())
        };
        Ok(VoteModel::PrivateKnn {
            p: normalize(&votes)?,
            p_last: normalize(&last)?,
            teachers: self.k as u32,
            gamma: self.gamma,
            rank: self.poison_rank,
            poison_label: self.poison_label,
        })
    }
}

/// One trial of the oracle for `instance`.
pub fn simulate_knn_oracle(instance: &KnnInstance, seed: u64, trial: u64) -> Result<KnnDraw> {
    instance.validate()?;
    Ok(instance.simulate(&StreamKey::new(seed, domain::KNN_ORACLE), trial))
}
