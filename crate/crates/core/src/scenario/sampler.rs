use rand::Rng;
use serde::{Deserialize, Serialize};

use super::knn::knn_inclusion_probability;
use super::VoteModel;
use crate::error::{Error, Result};
use crate::mechanism::Histogram;
use crate::rng::{domain, StreamKey};
use crate::sampling::{add_multinomial, sample_categorical};

/// Whether the parts of a trial pair that `S` and `S′` have in common are
/// drawn once or separately.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// `H_S` and `H_S′` are drawn from unrelated streams.
    #[default]
    Independent,
    /// The unchanged teachers (PATE, CaPC) or the base histogram (kNN) are
    /// drawn once per trial and reused on both sides.
    Shared,
}

impl std::str::FromStr for Coupling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "independent" => Ok(Coupling::Independent),
            "shared" => Ok(Coupling::Shared),
            other => Err(Error::Config(format!("unknown coupling '{other}'"))),
        }
    }
}

#[derive(Clone, Debug)]
enum Prepared {
    Pate {
        p: Vec<f64>,
        p_prime: Vec<f64>,
        teachers: u64,
    },
    Capc {
        first: Vec<f64>,
        first_prime: Vec<f64>,
        /// Teachers 2..k grouped by identical distribution.
        groups: Vec<(Vec<f64>, u64)>,
    },
    Fixed {
        h_s: Vec<u32>,
        h_s_prime: Vec<u32>,
    },
    Knn {
        p: Vec<f64>,
        p_last: Vec<f64>,
        teachers: u64,
        nu: f64,
        poison_label: usize,
    },
}

/// Draws neighbouring histogram pairs for one query. Trial `t` always
/// yields the same pair.
#[derive(Clone, Debug)]
pub struct PairSampler {
    prepared: Prepared,
    coupling: Coupling,
    num_classes: usize,
    key_s: StreamKey,
    key_s_prime: StreamKey,
    key_shared: StreamKey,
}

fn group_teachers(teachers: &[super::Categorical]) -> Vec<(Vec<f64>, u64)> {
    let mut groups: Vec<(Vec<f64>, u64)> = Vec::new();
    for t in teachers {
        match groups.iter_mut().find(|(p, _)| p.as_slice() == t.probs()) {
            Some((_, n)) => *n += 1,
            None => groups.push((t.probs().to_vec(), 1)),
        }
    }
    groups
}

/// Replaces one vote with a vote for `poison_label`. The removed vote's
/// class is drawn from `p_last` restricted to nonzero bins; if that leaves
/// no mass, from the bin counts themselves.
fn swap_vote<R: Rng + ?Sized>(h: &mut [u32], p_last: &[f64], poison_label: usize, rng: &mut R) {
    let mass: f64 = p_last.iter().zip(h.iter()).filter(|(_, &c)| c > 0).map(|(p, _)| p).sum();
    let removed = if mass > 0.0 {
        let u = rng.random::<f64>() * mass;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, (&p, &c)) in p_last.iter().zip(h.iter()).enumerate() {
            if c > 0 && p > 0.0 {
                acc += p;
                pick = Some(i);
                if u < acc {
                    break;
                }
            }
        }
        pick.expect("positive conditional mass")
    } else {
        let total: u32 = h.iter().sum();
        let u = rng.random_range(0..total);
        let mut acc = 0;
        h.iter()
            .position(|&c| {
                acc += c;
                u < acc
            })
            .expect("u below total")
    };
    h[removed] -= 1;
    h[poison_label] += 1;
}

impl PairSampler {
    pub fn new(model: &VoteModel, seed: u64, coupling: Coupling) -> Result<Self> {
        model.validate()?;
        let prepared = match model {
            VoteModel::Pate { p, p_prime, teachers } => Prepared::Pate {
                p: p.probs().to_vec(),
                p_prime: p_prime.probs().to_vec(),
                teachers: *teachers as u64,
            },
            VoteModel::Capc { teachers, teacher1_prime } => Prepared::Capc {
                first: teachers[0].probs().to_vec(),
                first_prime: teacher1_prime.probs().to_vec(),
                groups: group_teachers(&teachers[1..]),
            },
            VoteModel::PromptPate { h_s, h_s_prime } => Prepared::Fixed {
                h_s: h_s.counts().to_vec(),
                h_s_prime: h_s_prime.counts().to_vec(),
            },
            VoteModel::PrivateKnn { p, p_last, teachers, gamma, rank, poison_label } => Prepared::Knn {
                p: p.probs().to_vec(),
                p_last: p_last.probs().to_vec(),
                teachers: *teachers as u64,
                nu: knn_inclusion_probability(*rank, *teachers as u64, *gamma),
                poison_label: *poison_label,
            },
        };
        Ok(PairSampler {
            prepared,
            coupling,
            num_classes: model.num_classes(),
            key_s: StreamKey::new(seed, domain::HISTOGRAM_S),
            key_s_prime: StreamKey::new(seed, domain::HISTOGRAM_S_PRIME),
            key_shared: StreamKey::new(seed, domain::HISTOGRAM_SHARED),
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    /// True when every trial yields the same pair.
    pub fn is_deterministic(&self) -> bool {
        matches!(self.prepared, Prepared::Fixed { .. })
    }

    /// Overwrites `h_s` and `h_s_prime` with the pair for `trial`.
    pub fn sample_into(&self, trial: u64, h_s: &mut [u32], h_s_prime: &mut [u32]) {
        h_s.fill(0);
        h_s_prime.fill(0);
        let shared = self.coupling == Coupling::Shared;
        match &self.prepared {
            Prepared::Fixed { h_s: a, h_s_prime: b } => {
                h_s.copy_from_slice(a);
                h_s_prime.copy_from_slice(b);
            }
            Prepared::Pate { p, p_prime, teachers } => {
                let mut rng_s = self.key_s.rng(trial);
                let mut rng_sp = self.key_s_prime.rng(trial);
                if shared {
                    add_multinomial(teachers - 1, p, &mut self.key_shared.rng(trial), h_s);
                    h_s_prime.copy_from_slice(h_s);
                    h_s[sample_categorical(p, &mut rng_s)] += 1;
                } else {
                    add_multinomial(*teachers, p, &mut rng_s, h_s);
                    add_multinomial(teachers - 1, p, &mut rng_sp, h_s_prime);
                }
                h_s_prime[sample_categorical(p_prime, &mut rng_sp)] += 1;
            }
            Prepared::Capc { first, first_prime, groups } => {
                let mut rng_s = self.key_s.rng(trial);
                let mut rng_sp = self.key_s_prime.rng(trial);
                if shared {
                    let mut rng = self.key_shared.rng(trial);
                    for (probs, n) in groups {
                        add_multinomial(*n, probs, &mut rng, h_s);
                    }
                    h_s_prime.copy_from_slice(h_s);
                } else {
                    for (probs, n) in groups {
                        add_multinomial(*n, probs, &mut rng_s, h_s);
                        add_multinomial(*n, probs, &mut rng_sp, h_s_prime);
                    }
                }
                h_s[sample_categorical(first, &mut rng_s)] += 1;
                h_s_prime[sample_categorical(first_prime, &mut rng_sp)] += 1;
            }
            Prepared::Knn { p, p_last, teachers, nu, poison_label } => {
                let mut rng_sp = self.key_s_prime.rng(trial);
                if shared {
                    add_multinomial(*teachers, p, &mut self.key_shared.rng(trial), h_s);
                    h_s_prime.copy_from_slice(h_s);
                } else {
                    add_multinomial(*teachers, p, &mut self.key_s.rng(trial), h_s);
                    add_multinomial(*teachers, p, &mut rng_sp, h_s_prime);
                }
                if rng_sp.random::<f64>() < *nu {
                    swap_vote(h_s_prime, p_last, *poison_label, &mut rng_sp);
                }
            }
        }
    }

    pub fn sample(&self, trial: u64) -> (Histogram, Histogram) {
        let mut a = vec![0; self.num_classes];
        let mut b = vec![0; self.num_classes];
        self.sample_into(trial, &mut a, &mut b);
        (
            Histogram::new(a).expect("sampled histograms hold at least one vote"),
            Histogram::new(b).expect("sampled histograms hold at least one vote"),
        )
    }
}

fn expect_variant(model: &VoteModel, expected: &'static str) -> Result<()> {
    if model.variant_name() != expected {
        return Err(Error::VariantMismatch { expected, found: model.variant_name() });
    }
    Ok(())
}

/// One PATE pair: `H_S ~ Mult(k, P)`, `H_S′ ~ Mult(k−1, P) + Mult(1, P′)`.
pub fn sample_pate_pair(model: &VoteModel, seed: u64, coupling: Coupling, trial: u64) -> Result<(Histogram, Histogram)> {
    expect_variant(model, "pate")?;
    Ok(PairSampler::new(model, seed, coupling)?.sample(trial))
}

/// One CaPC pair: one categorical draw per teacher, teacher 1 from `P¹`
/// under `S` and from `P¹′` under `S′`.
pub fn sample_capc_pair(model: &VoteModel, seed: u64, coupling: Coupling, trial: u64) -> Result<(Histogram, Histogram)> {
    expect_variant(model, "capc")?;
    Ok(PairSampler::new(model, seed, coupling)?.sample(trial))
}

/// The stored PromptPATE pair.
pub fn prompt_pate_pair(model: &VoteModel) -> Result<(Histogram, Histogram)> {
    match model {
        VoteModel::PromptPate { h_s, h_s_prime } => Ok((h_s.clone(), h_s_prime.clone())),
        other => Err(Error::VariantMismatch { expected: "prompt_pate", found: other.variant_name() }),
    }
}

/// One private-kNN pair: `H_S ~ Mult(k, P)`; with probability `ν` the
/// poison point displaces a neighbour whose label is drawn from `P_last`.
pub fn sample_knn_pair(model: &VoteModel, seed: u64, coupling: Coupling, trial: u64) -> Result<(Histogram, Histogram)> {
    expect_variant(model, "private_knn")?;
    Ok(PairSampler::new(model, seed, coupling)?.sample(trial))
}

#[cfg(test)]
mod tests {
    use super::super::Categorical;
    use super::*;

    fn cat(v: &[f64]) -> Categorical {
        Categorical::new(v.to_vec()).unwrap()
    }

    #[test]
    fn point_mass_pate_is_deterministic() {
        let m = VoteModel::Pate { p: Categorical::point(0, 3), p_prime: Categorical::point(1, 3), teachers: 7 };
        for coupling in [Coupling::Independent, Coupling::Shared] {
            for t in 0..20 {
                let (a, b) = sample_pate_pair(&m, 1, coupling, t).unwrap();
                assert_eq!(a.counts(), &[7, 0, 0]);
                assert_eq!(b.counts(), &[6, 1, 0]);
            }
        }
    }

    #[test]
    fn variant_checks() {
        let m = VoteModel::Pate { p: Categorical::uniform(2), p_prime: Categorical::uniform(2), teachers: 3 };
        assert!(matches!(sample_capc_pair(&m, 0, Coupling::Independent, 0), Err(Error::VariantMismatch { .. })));
        assert!(matches!(prompt_pate_pair(&m), Err(Error::VariantMismatch { expected: "prompt_pate", .. })));
        assert!(sample_knn_pair(&m, 0, Coupling::Independent, 0).is_err());
    }

    #[test]
    fn capc_shared_teachers_are_identical() {
        let mut teachers = vec![Categorical::point(0, 3)];
        teachers.extend((0..9).map(|i| if i % 2 == 0 { cat(&[0.2, 0.3, 0.5]) } else { cat(&[0.6, 0.2, 0.2]) }));
        let m = VoteModel::Capc { teachers, teacher1_prime: Categorical::point(2, 3) };
        let s = PairSampler::new(&m, 4, Coupling::Shared).unwrap();
        for t in 0..100 {
            let (a, b) = s.sample(t);
            let mut a = a.counts().to_vec();
            let mut b = b.counts().to_vec();
            a[0] -= 1;
            b[2] -= 1;
            assert_eq!(a, b);
        }
    }

    #[test]
    fn knn_swap_cases() {
        let never = VoteModel::PrivateKnn {
            p: cat(&[0.5, 0.3, 0.2]),
            p_last: cat(&[0.5, 0.3, 0.2]),
            teachers: 5,
            gamma: 0.5,
            rank: 10_000,
            poison_label: 2,
        };
        let s = PairSampler::new(&never, 0, Coupling::Shared).unwrap();
        for t in 0..200 {
            let (a, b) = s.sample(t);
            assert_eq!(a, b);
        }
        // ν = γ = 0.999 when the poison ranks inside the top k.
        let always = VoteModel::PrivateKnn {
            p: Categorical::point(0, 3),
            p_last: Categorical::point(0, 3),
            teachers: 5,
            gamma: 0.999,
            rank: 1,
            poison_label: 2,
        };
        let s = PairSampler::new(&always, 0, Coupling::Shared).unwrap();
        let swapped = (0..1000).filter(|&t| s.sample(t).1.counts() == [4, 0, 1]).count();
        assert!(swapped > 990);
    }

    #[test]
    fn knn_removal_never_goes_negative() {
        // p_last puts all mass on a class H_S never contains.
        let m = VoteModel::PrivateKnn {
            p: Categorical::point(0, 3),
            p_last: Categorical::point(1, 3),
            teachers: 2,
            gamma: 0.9,
            rank: 1,
            poison_label: 2,
        };
        let s = PairSampler::new(&m, 9, Coupling::Independent).unwrap();
        for t in 0..500 {
            let (_, b) = s.sample(t);
            assert!(b.counts() == [2, 0, 0] || b.counts() == [1, 0, 1]);
        }
    }

    #[test]
    fn prompt_pate_pair_is_verbatim() {
        let h = Histogram::new(vec![14, 12, 10, 8, 6]).unwrap();
        let hp = Histogram::new(vec![13, 13, 10, 8, 6]).unwrap();
        let m = VoteModel::PromptPate { h_s: h.clone(), h_s_prime: hp.clone() };
        assert_eq!(prompt_pate_pair(&m).unwrap(), (h.clone(), hp.clone()));
        let s = PairSampler::new(&m, 0, Coupling::Independent).unwrap();
        assert!(s.is_deterministic());
        assert_eq!(s.sample(123), (h, hp));
    }
}
