use std::collections::HashMap;

use predaudit::scenario::knn::{simulate_knn_oracle, KnnInstance, RankedQuerySet};
use predaudit::scenario::{
    estimate_vote_distribution, fixture_from_dumps, knn_expected_influence, knn_inclusion_probability,
    read_prediction_dump, sample_capc_pair, sample_knn_pair, sample_pate_pair, Categorical, Coupling, PairSampler,
    PredictionRecord, Variant, VoteModel,
};
use predaudit::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cat(p: &[f64]) -> Categorical {
    Categorical::new(p.to_vec()).unwrap()
}

/// Mean and variance of every bin over `n` draws.
fn moments(draws: impl Iterator<Item = Vec<u32>>, k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut s = vec![0.0; k];
    let mut ss = vec![0.0; k];
    let mut n = 0.0;
    for d in draws {
        n += 1.0;
        for (i, &c) in d.iter().enumerate() {
            s[i] += c as f64;
            ss[i] += (c as f64).powi(2);
        }
    }
    let mean: Vec<f64> = s.iter().map(|v| v / n).collect();
    let var = ss.iter().zip(&mean).map(|(v, m)| v / n - m * m).collect();
    (mean, var)
}

#[test]
fn pate_moments() {
    let p = [0.6, 0.25, 0.1, 0.05];
    let model = VoteModel::Pate { p: cat(&p), p_prime: cat(&[0.0, 0.0, 0.0, 1.0]), teachers: 250 };
    let n = 20_000u64;
    for coupling in [Coupling::Independent, Coupling::Shared] {
        let sampler = PairSampler::new(&model, 17, coupling).unwrap();
        let pairs: Vec<_> = (0..n).map(|t| sampler.sample(t)).collect();
        let (mean, var) = moments(pairs.iter().map(|(a, _)| a.counts().to_vec()), 4);
        for i in 0..4 {
            let m = 250.0 * p[i];
            let v = 250.0 * p[i] * (1.0 - p[i]);
            assert!((mean[i] - m).abs() < 4.0 * (v / n as f64).sqrt(), "mean bin {i}: {} vs {m}", mean[i]);
            assert!((var[i] / v - 1.0).abs() < 0.05, "var bin {i}: {} vs {v}", var[i]);
        }
        let (mean_p, _) = moments(pairs.iter().map(|(_, b)| b.counts().to_vec()), 4);
        let want_last = 249.0 * p[3] + 1.0;
        assert!((mean_p[3] - want_last).abs() < 0.05, "{} vs {want_last}", mean_p[3]);
        for (a, b) in &pairs {
            assert_eq!(a.total(), 250);
            assert_eq!(b.total(), 250);
        }
        if coupling == Coupling::Shared {
            // The two histograms differ in at most one moved vote.
            for (a, b) in &pairs {
                let diff: i64 = a.counts().iter().zip(b.counts()).map(|(x, y)| (*x as i64 - *y as i64).abs()).sum();
                assert!(diff <= 2);
            }
        }
    }
}

#[test]
fn capc_moments() {
    let teachers: Vec<Categorical> = (0..30)
        .map(|i| if i % 3 == 0 { cat(&[0.9, 0.1, 0.0]) } else { cat(&[0.2, 0.5, 0.3]) })
        .collect();
    let model = VoteModel::Capc { teachers: teachers.clone(), teacher1_prime: cat(&[0.0, 0.0, 1.0]) };
    let n = 20_000u64;
    let draws: Vec<_> = (0..n).map(|t| sample_capc_pair(&model, 5, Coupling::Independent, t).unwrap()).collect();
    let (mean, var) = moments(draws.iter().map(|(a, _)| a.counts().to_vec()), 3);
    for c in 0..3 {
        let m: f64 = teachers.iter().map(|t| t.probs()[c]).sum();
        let v: f64 = teachers.iter().map(|t| t.probs()[c] * (1.0 - t.probs()[c])).sum();
        assert!((mean[c] - m).abs() < 4.0 * (v / n as f64).sqrt(), "bin {c}: {} vs {m}", mean[c]);
        assert!((var[c] / v - 1.0).abs() < 0.06, "bin {c}: {} vs {v}", var[c]);
    }
    let (mean_p, _) = moments(draws.iter().map(|(_, b)| b.counts().to_vec()), 3);
    let want: f64 = teachers[1..].iter().map(|t| t.probs()[2]).sum::<f64>() + 1.0;
    assert!((mean_p[2] - want).abs() < 0.05, "{} vs {want}", mean_p[2]);
    assert!(matches!(
        sample_pate_pair(&model, 0, Coupling::Independent, 0),
        Err(Error::VariantMismatch { .. })
    ));
}

/// ν by summing over every subset of the `rank − 1` closer points.
fn inclusion_by_enumeration(rank: u64, k: u64, gamma: f64) -> f64 {
    let closer = (rank - 1) as u32;
    let mut total = 0.0;
    for mask in 0u32..(1 << closer) {
        let kept = mask.count_ones();
        if (kept as u64) < k {
            total += gamma.powi(kept as i32 + 1) * (1.0 - gamma).powi((closer - kept) as i32);
        }
    }
    total
}

#[test]
fn inclusion_probability_matches_enumeration() {
    for k in 1..=5u64 {
        for rank in 1..=16u64 {
            for gamma in [0.05, 0.2, 0.5, 0.9] {
                let got = knn_inclusion_probability(rank, k, gamma);
                let want = inclusion_by_enumeration(rank, k, gamma);
                assert!((got - want).abs() <= 1e-12, "rank {rank} k {k} γ {gamma}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn inclusion_probability_matches_oracle_frequency() {
    let instance = KnnInstance {
        labels: vec![0; 12],
        num_classes: 2,
        k: 3,
        gamma: 0.3,
        poison_rank: 7,
        poison_label: 1,
    };
    let n = 200_000u64;
    let hits = (0..n)
        .filter(|&t| simulate_knn_oracle(&instance, 8, t).unwrap().h_s_prime[1] == 1)
        .count() as f64;
    let nu = knn_inclusion_probability(7, 3, 0.3);
    let se = (nu * (1.0 - nu) / n as f64).sqrt();
    assert!((hits / n as f64 - nu).abs() < 4.0 * se, "{} vs {nu}", hits / n as f64);
}

#[test]
fn influence_of_a_toy_instance() {
    let (k, gamma) = (3, 0.2);
    let want = knn_inclusion_probability(2, k, gamma)
        + knn_inclusion_probability(5, k, gamma)
        + knn_inclusion_probability(10, k, gamma);
    assert!((knn_expected_influence(&[2, 5, 10], k, gamma) - want).abs() < 1e-15);
    assert!((knn_inclusion_probability(2, k, gamma) - gamma).abs() < 1e-15);

    // Point 0 sits at ranks 2, 5, 10 of three queries; point 1 at ranks 6, 9, 12.
    let mut neighbours = Vec::new();
    for (r0, r1) in [(2usize, 6usize), (5, 9), (10, 12)] {
        let mut order: Vec<usize> = (2..14).collect();
        order.insert(r0 - 1, 0);
        order.insert(r1 - 1, 1);
        neighbours.push(order);
    }
    let set = RankedQuerySet::new(neighbours, vec![0; 14]).unwrap();
    assert_eq!(set.rank_of(0, 0), Some(2));
    assert_eq!(set.rank_of(2, 1), Some(12));
    assert!((set.expected_influence(0, k, gamma).unwrap() - want).abs() < 1e-15);
    let (best, score) = set.best_candidate(&[1, 0], k, gamma).unwrap();
    assert_eq!(best, 0);
    assert!((score - want).abs() < 1e-15);
}

fn histogram_tv(a: &HashMap<Vec<u32>, u64>, b: &HashMap<Vec<u32>, u64>) -> f64 {
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    let keys: std::collections::HashSet<&Vec<u32>> = a.keys().chain(b.keys()).collect();
    0.5 * keys
        .into_iter()
        .map(|k| {
            let pa = *a.get(k).unwrap_or(&0) as f64 / na as f64;
            let pb = *b.get(k).unwrap_or(&0) as f64 / nb as f64;
            (pa - pb).abs()
        })
        .sum::<f64>()
}

/// TV between the model's `H_S′` and the oracle's, on oracle trials that
/// keep at least `k` clean points.
fn knn_fidelity_tv(instance: &KnnInstance, trials: u64) -> f64 {
    let model = instance.vote_model(trials, 1).unwrap();
    let mut oracle = HashMap::new();
    for t in 0..trials {
        let d = simulate_knn_oracle(instance, 2, t).unwrap();
        if !d.fewer_than_k {
            *oracle.entry(d.h_s_prime).or_insert(0u64) += 1;
        }
    }
    let sampler = PairSampler::new(&model, 3, Coupling::Independent).unwrap();
    let mut modelled = HashMap::new();
    for t in 0..trials {
        let (_, b) = sampler.sample(t);
        *modelled.entry(b.counts().to_vec()).or_insert(0u64) += 1;
    }
    histogram_tv(&oracle, &modelled)
}

#[test]
fn knn_pair_follows_the_model() {
    let model = VoteModel::PrivateKnn {
        p: cat(&[0.7, 0.3]),
        p_last: cat(&[0.6, 0.4]),
        teachers: 5,
        gamma: 0.2,
        rank: 8,
        poison_label: 1,
    };
    let n = 100_000u64;
    let nu = knn_inclusion_probability(8, 5, 0.2);
    let mut s1 = 0.0;
    let mut sp1 = 0.0;
    for t in 0..n {
        let (a, b) = sample_knn_pair(&model, 4, Coupling::Independent, t).unwrap();
        assert_eq!(a.total(), 5);
        assert_eq!(b.total(), 5);
        s1 += a.counts()[1] as f64;
        sp1 += b.counts()[1] as f64;
    }
    // A swap adds a class-1 vote and removes a P_last draw; the removal
    // falls on the other class when the drawn bin is empty.
    let (none_0, none_1) = (0.3f64.powi(5), 0.7f64.powi(5));
    let remove_1 = 0.4 * (1.0 - none_1) + 0.6 * none_0;
    assert!((s1 / n as f64 - 1.5).abs() < 0.01);
    let want = 1.5 + nu * (1.0 - remove_1);
    assert!((sp1 / n as f64 - want).abs() < 0.006, "{} vs {want}", sp1 / n as f64);
}

#[test]
fn knn_model_gap_on_mixed_labels() {
    // With identical clean labels the model is exact up to conditioning.
    let homogeneous = KnnInstance {
        labels: vec![0; 12],
        num_classes: 2,
        k: 3,
        gamma: 0.2,
        poison_rank: 5,
        poison_label: 1,
    };
    let tv_homogeneous = knn_fidelity_tv(&homogeneous, 200_000);
    assert!(tv_homogeneous < 0.02, "{tv_homogeneous}");
    // Mixed labels at fixed ranks are not iid draws from P, so the model
    // drifts from the oracle. The gap is a property of the parametric model.
    let mixed = KnnInstance {
        labels: vec![0, 0, 1, 0, 1, 1, 0, 1, 0, 0, 1, 1],
        num_classes: 2,
        k: 3,
        gamma: 0.2,
        poison_rank: 5,
        poison_label: 1,
    };
    let tv_mixed = knn_fidelity_tv(&mixed, 200_000);
    println!("kNN model TV: homogeneous {tv_homogeneous:.4}, mixed {tv_mixed:.4}");
    assert!(tv_mixed > tv_homogeneous);
}

#[test]
fn estimated_distribution_converges() {
    let truth = [0.5, 0.3, 0.15, 0.05];
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let samples: Vec<usize> = (0..100_000)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            truth.iter().position(|p| {
                acc += p;
                u < acc
            })
            .unwrap_or(3)
        })
        .collect();
    let est = estimate_vote_distribution(&samples, 4).unwrap();
    let tv: f64 = 0.5 * est.probs().iter().zip(truth).map(|(a, b)| (a - b).abs()).sum::<f64>();
    assert!(tv < 0.01, "{tv}");
    assert!(estimate_vote_distribution(&[], 4).is_err());
    assert!(estimate_vote_distribution(&[4], 4).is_err());
}

#[test]
fn fixture_from_csv_dumps() {
    let dump_s = "query_id,run_id,teacher_id,predicted_class\n\
                  a,0,0,0\na,0,1,0\na,1,0,1\na,1,1,0\nb,0,0,2\nb,0,1,2\nb,1,0,2\nb,1,1,1\n";
    let dump_sp = "query_id, run_id, teacher_id, predicted_class\na,0,0,1\na,1,0,1\nb,0,0,2\nb,1,0,0\n";
    let s: Vec<PredictionRecord> = read_prediction_dump(dump_s.as_bytes()).unwrap();
    let sp = read_prediction_dump(dump_sp.as_bytes()).unwrap();
    assert_eq!(s.len(), 8);

    let pate = fixture_from_dumps(Variant::Pate, &s, &sp, None, 3.0).unwrap();
    assert_eq!(pate.num_classes, 3);
    assert_eq!(pate.queries[0].p, Some(vec![0.75, 0.25, 0.0]));
    assert_eq!(pate.queries[1].p_prime, Some(vec![0.5, 0.0, 0.5]));
    let scenario = pate.validate().unwrap();
    assert_eq!(scenario.adversary.query_ids, vec!["a", "b"]);

    let capc = fixture_from_dumps(Variant::Capc, &s, &sp, Some(4), 3.0).unwrap();
    let q = &capc.queries[0];
    assert_eq!(q.teacher_probs.as_ref().unwrap()[0], vec![0.5, 0.5, 0.0, 0.0]);
    assert_eq!(q.teacher_probs.as_ref().unwrap()[1], vec![1.0, 0.0, 0.0, 0.0]);
    capc.validate().unwrap();

    assert!(fixture_from_dumps(Variant::PromptPate, &s, &sp, None, 3.0).is_err());
    assert!(read_prediction_dump("query_id,run_id\nx,notanumber\n".as_bytes()).is_err());
}
