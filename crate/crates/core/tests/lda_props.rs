mod common;

use common::random_corpus;
use geotopic::lda::{argmax_first, gibbs_conditional, train, LdaConfig, Sampler, TopicModel};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn counts(k: usize) -> impl Strategy<Value = (Vec<u32>, Vec<u32>, Vec<u64>)> {
    (
        prop::collection::vec(0u32..50, k),
        prop::collection::vec(0u32..50, k),
        prop::collection::vec(0u64..500, k),
    )
        .prop_map(|(dk, kw, extra)| {
            // n_k must be at least n_kw
            let nk = kw.iter().zip(extra).map(|(&w, e)| w as u64 + e).collect();
            (dk, kw, nk)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn conditional_is_a_distribution(
        (dk, kw, nk) in (1usize..12).prop_flat_map(counts),
        alpha in 0.001..10.0f64,
        beta in 0.001..1.0f64,
        v in 1usize..5000,
    ) {
        let p = gibbs_conditional(&dk, &kw, &nk, alpha, beta, v);
        prop_assert_eq!(p.len(), dk.len());
        prop_assert!(p.iter().all(|&x| x > 0.0 && x.is_finite()));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // ratios against the unnormalized product
        let w: Vec<f64> = (0..dk.len())
            .map(|t| (dk[t] as f64 + alpha) * (kw[t] as f64 + beta) / (nk[t] as f64 + v as f64 * beta))
            .collect();
        for t in 1..dk.len() {
            prop_assert!((p[t] / p[0] - w[t] / w[0]).abs() <= 1e-9 * (w[t] / w[0]).max(1.0));
        }
    }

    #[test]
    fn argmax_takes_the_first_maximum(row in prop::collection::vec(prop::sample::select(vec![0.0, 0.25, 0.5, 1.0]), 1..12)) {
        let best = argmax_first(&row);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(best, row.iter().position(|&x| x == max).unwrap());
    }
}

fn small_model(seed: u64, k: usize, v: usize) -> (TopicModel, Vec<geotopic::vocab::BowDocument>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let corpus = random_corpus(&mut rng, 25, v, 20);
    let cfg = LdaConfig { topics: k, iterations: 10, alpha: 0.3, beta: 0.05, seed };
    (train(&corpus, v, cfg).unwrap(), corpus)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn trained_models_are_consistent(seed in any::<u64>(), k in 1usize..8, v in 1usize..40) {
        let (m, corpus) = small_model(seed, k, v);
        prop_assert!(m.check_invariants(1e-9).is_ok());
        prop_assert_eq!(m.num_docs(), corpus.len());
        for (d, doc) in corpus.iter().enumerate() {
            prop_assert_eq!(m.doc_length(d), doc.length as u64);
        }
        prop_assert!(m.assignments().iter().all(|&z| (z as usize) < k));
    }

    #[test]
    fn top_words_and_dominant_topic_match_sorting(seed in any::<u64>(), k in 1usize..6, v in 1usize..30, n in 0usize..40) {
        let (m, _) = small_model(seed, k, v);
        for t in 0..k {
            let mut want: Vec<(u32, f64)> = m.phi(t).iter().enumerate().map(|(w, &p)| (w as u32, p)).collect();
            // stable sort keeps lower indices first among equal values
            want.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
            want.truncate(n);
            prop_assert_eq!(m.top_words(t, n).unwrap(), want);
        }
        for d in 0..m.num_docs() {
            let theta = m.theta(d);
            let max = theta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(m.dominant_topic(d).unwrap(), theta.iter().position(|&x| x == max).unwrap());
        }
        prop_assert!(m.top_words(k, 1).is_err());
        prop_assert!(m.dominant_topic(m.num_docs()).is_err());
    }

    #[test]
    fn same_seed_same_model(seed in any::<u64>(), k in 1usize..6) {
        let (a, _) = small_model(seed, k, 20);
        let (b, _) = small_model(seed, k, 20);
        prop_assert_eq!(a.assignments(), b.assignments());
        let (mut x, mut y) = (Vec::new(), Vec::new());
        a.write(&mut x).unwrap();
        b.write(&mut y).unwrap();
        prop_assert_eq!(&x, &y);
        // the file keeps count tables, not per-token assignments
        let back = TopicModel::read(x.as_slice()).unwrap();
        prop_assert_eq!(back.topic_totals(), a.topic_totals());
        for t in 0..k {
            prop_assert_eq!(back.topic_word_counts(t), a.topic_word_counts(t));
            prop_assert_eq!(back.phi(t), a.phi(t));
        }
        for d in 0..a.num_docs() {
            prop_assert_eq!(back.doc_topic_counts(d), a.doc_topic_counts(d));
            prop_assert_eq!(back.theta(d), a.theta(d));
        }
    }

    #[test]
    fn counts_stay_consistent_across_sweeps(seed in any::<u64>(), k in 1usize..6, sweeps in 1usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let corpus = random_corpus(&mut rng, 15, 12, 15);
        let cfg = LdaConfig { topics: k, iterations: sweeps, alpha: 0.5, beta: 0.1, seed };
        let mut s = Sampler::new(&corpus, 12, cfg).unwrap();
        for _ in 0..sweeps {
            s.sweep();
            prop_assert!(s.check_counts().is_ok());
        }
        prop_assert_eq!(s.sweeps_done(), sweeps);
        prop_assert_eq!(s.total_tokens(), corpus.iter().map(|d| d.length as usize).sum::<usize>());
    }
}

#[test]
fn likelihood_improves_with_training() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (_, corpus) = common::separated_topics_corpus(&mut rng, 300, 60, 4, 0.2);
    let ll = |iterations, seed| {
        let cfg = LdaConfig { topics: 4, iterations, alpha: 0.1, beta: 0.01, seed };
        train(&corpus, 60, cfg).unwrap().log_likelihood(&corpus).unwrap()
    };
    let median = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let early = median((0..5).map(|s| ll(1, s)).collect());
    let late = median((0..5).map(|s| ll(50, s)).collect());
    assert!(late > early, "median log-likelihood {late} after 50 sweeps vs {early} after 1");
}

#[test]
fn invalid_configs_are_rejected() {
    let corpus = random_corpus(&mut ChaCha8Rng::seed_from_u64(1), 3, 5, 4);
    for cfg in [
        LdaConfig { topics: 0, iterations: 1, alpha: 0.1, beta: 0.1, seed: 0 },
        LdaConfig { topics: 2, iterations: 1, alpha: 0.0, beta: 0.1, seed: 0 },
        LdaConfig { topics: 2, iterations: 1, alpha: 0.1, beta: -1.0, seed: 0 },
    ] {
        assert!(train(&corpus, 5, cfg).is_err(), "{cfg:?}");
    }
    let outside = [geotopic::vocab::BowDocument::new("x", vec![(3, 1)])];
    assert!(train(&outside, 2, LdaConfig::new(2)).is_err());
}
