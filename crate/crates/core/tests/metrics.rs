//! Evaluation metrics against brute-force tallies and their structural
//! invariants.

mod common;

use adresparse::data::{default_schema, TagId};
use adresparse::evalmetrics::{confusion, evaluate, macro_scores, sample_accuracy, token_accuracy};
use common::oracles::{metrics_equivalence, random_instance, tally};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn five_hundred_random_instances_match_the_oracle() {
    metrics_equivalence(500, 2024, &default_schema()).unwrap();
}

#[test]
fn confusion_matches_naive_tally_on_two_hundred_tokens() {
    let schema = default_schema();
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let gold: Vec<Vec<TagId>> = (0..20)
        .map(|_| (0..10).map(|_| TagId(rand::Rng::gen_range(&mut rng, 0..25))).collect())
        .collect();
    let pred: Vec<Vec<TagId>> = gold
        .iter()
        .map(|g| {
            g.iter()
                .map(|&t| if rand::Rng::gen_bool(&mut rng, 0.6) { t } else { TagId(rand::Rng::gen_range(&mut rng, 0..25)) })
                .collect()
        })
        .collect();
    let cm = confusion(&gold, &pred, &schema).unwrap();
    assert_eq!(cm.total(), 200);
    for g in 0..25u16 {
        for p in 0..25u16 {
            assert_eq!(cm.get(g as usize, p as usize), tally(&gold, &pred, g, p), "cell ({g}, {p})");
        }
    }
}

#[test]
fn identical_and_disjoint_predictions() {
    let gold = vec![vec![TagId(1), TagId(2), TagId(0)]];
    assert_eq!(token_accuracy(&gold, &gold).unwrap(), 100.0);
    assert_eq!(sample_accuracy(&gold, &gold).unwrap(), 100.0);
    let disjoint = vec![vec![TagId(3), TagId(3), TagId(3)]];
    assert_eq!(token_accuracy(&gold, &disjoint).unwrap(), 0.0);
}

#[test]
fn one_wrong_token_fails_the_sample() {
    let gold = vec![vec![TagId(1), TagId(2), TagId(2)], vec![TagId(0)]];
    let mut pred = gold.clone();
    pred[0][2] = TagId(0);
    assert_eq!(sample_accuracy(&gold, &pred).unwrap(), 50.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn confusion_invariants(seed in any::<u64>()) {
        let schema = default_schema();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (gold, pred) = random_instance(&mut rng, 25);
        let cm = confusion(&gold, &pred, &schema).unwrap();
        let tokens: usize = gold.iter().map(Vec::len).sum();
        prop_assert_eq!(cm.total(), tokens as u64);
        for i in 0..25 {
            prop_assert_eq!(cm.tp(i) + cm.fn_(i), cm.row_sum(i));
            prop_assert_eq!(cm.tp(i) + cm.fp(i), cm.column_sum(i));
        }
        let report = evaluate(&gold, &pred, &schema).unwrap();
        let from_trace = 100.0 * cm.trace() as f64 / cm.total() as f64;
        prop_assert!((report.token_accuracy - from_trace).abs() < 1e-12);

        let scores = macro_scores(&cm, &schema).unwrap();
        let mean_f1 = scores.per_tag.iter().map(|s| s.f1).sum::<f64>() / 25.0;
        prop_assert_eq!(scores.f1, mean_f1);
        for s in &scores.per_tag {
            prop_assert!((0.0..=1.0).contains(&s.f1));
            if s.precision == 0.0 && s.recall == 0.0 {
                prop_assert_eq!(s.f1, 0.0);
            }
        }
    }

    #[test]
    fn sample_order_does_not_matter(seed in any::<u64>()) {
        let schema = default_schema();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (gold, pred) = random_instance(&mut rng, 25);
        let mut order: Vec<usize> = (0..gold.len()).collect();
        order.shuffle(&mut rng);
        let g2: Vec<_> = order.iter().map(|&i| gold[i].clone()).collect();
        let p2: Vec<_> = order.iter().map(|&i| pred[i].clone()).collect();
        let a = evaluate(&gold, &pred, &schema).unwrap();
        let b = evaluate(&g2, &p2, &schema).unwrap();
        prop_assert_eq!(&a.confusion, &b.confusion);
        prop_assert_eq!(a.sample_accuracy, b.sample_accuracy);
        prop_assert_eq!(a.headline(), b.headline());
    }
}
