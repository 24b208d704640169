mod common;

use fairuse::audit::{bonferroni, misreport_matrix, HypothesisKind, HypothesisResult, TestKind, Verdict};
use fairuse::dataset::{read_csv, write_csv, CsvSchema};
use fairuse::metrics::{auc, gain, MetricKind};
use fairuse::models::{train_personalized, Predictor, Reported, Strategy as Personalization, TrainConfig};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Pairwise AUC: fraction of (positive, negative) pairs ranked correctly, ties one half.
fn auc_oracle(scores: &[f64], labels: &[i8]) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &yi) in labels.iter().enumerate() {
        for (j, &yj) in labels.iter().enumerate() {
            if yi > 0 && yj < 0 {
                den += 1.0;
                num += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Equal => 0.5,
                    std::cmp::Ordering::Less => 0.0,
                };
            }
        }
    }
    (den > 0.0).then(|| num / den)
}

fn scored_labels() -> impl Strategy<Value = (Vec<f64>, Vec<i8>)> {
    prop::collection::vec((0u8..20, any::<bool>()), 2..60)
        .prop_map(|v| v.into_iter().map(|(s, y)| (s as f64 / 19.0, if y { 1 } else { -1 })).unzip())
}

fn hypothesis(rationality: bool, p_violation: f64, p_gain: f64, estimate: f64) -> HypothesisResult {
    HypothesisResult {
        kind: if rationality {
            HypothesisKind::Rationality { group: "a".into() }
        } else {
            HypothesisKind::EnvyFreeness { group: "a".into(), reported: "b".into() }
        },
        metric: MetricKind::ErrorRate,
        test: TestKind::McNemar,
        estimate: Some(estimate),
        n_g: 50,
        p_violation,
        p_gain,
        p_violation_adjusted: p_violation,
        p_gain_adjusted: p_gain,
        family_size: 1,
        verdict: Verdict::Inconclusive,
        detail: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn auc_matches_pairwise_count((scores, labels) in scored_labels()) {
        let (a, b) = (auc(&scores, &labels), auc_oracle(&scores, &labels));
        match (a, b) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
            (a, b) => prop_assert_eq!(a, b),
        }
    }

    #[test]
    fn auc_invariant_under_monotone_transform((scores, labels) in scored_labels(), k in 0.1f64..5.0, c in -3.0f64..3.0) {
        let moved: Vec<f64> = scores.iter().map(|s| (k * s + c).exp()).collect();
        prop_assert_eq!(auc(&scores, &labels), auc(&moved, &labels));
    }

    #[test]
    fn bonferroni_adjusts_upward_and_monotonically(
        p_v in 0.0f64..1.0, p_g in 0.0f64..1.0, est in -0.5f64..0.5,
        rationality in any::<bool>(), m in 2usize..8,
    ) {
        let small = bonferroni(vec![hypothesis(rationality, p_v, p_g, est)], m, 0.1).remove(0);
        let large = bonferroni(vec![hypothesis(rationality, p_v, p_g, est)], m + 1, 0.1).remove(0);
        prop_assert!(small.p_violation_adjusted >= p_v && small.p_gain_adjusted >= p_g);
        prop_assert!(large.p_violation_adjusted >= small.p_violation_adjusted);
        prop_assert!(large.p_gain_adjusted >= small.p_gain_adjusted);
        prop_assert!(small.p_violation_adjusted <= 1.0);
        let expected = if rationality { m } else { m * (m - 1) };
        prop_assert_eq!(small.family_size, expected);
        // A larger family can only remove significance.
        if large.verdict != Verdict::Inconclusive {
            prop_assert_eq!(large.verdict, small.verdict);
        }
    }

    #[test]
    fn matrix_invariant_under_row_permutation(seed in 0u64..40, shuffle in any::<u64>()) {
        let data = common::random_instance(seed);
        let model = train_personalized(&data, Personalization::OneHot, &TrainConfig::default()).unwrap();
        let generic = model.generic();
        let mut rows: Vec<usize> = (0..data.n()).collect();
        rows.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle));
        let permuted = data.subset(&rows);
        for metric in [MetricKind::ErrorRate, MetricKind::Auc, MetricKind::Ece] {
            let a = misreport_matrix(&model, &generic, &data, metric, 10).unwrap();
            let b = misreport_matrix(&model, &generic, &permuted, metric, 10).unwrap();
            for g in 0..4 {
                for col in 0..=4 {
                    match (a.risk(g, col), b.risk(g, col)) {
                        (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
                        (x, y) => prop_assert_eq!(x, y),
                    }
                }
            }
        }
    }

    #[test]
    fn gains_are_antisymmetric(seed in 0u64..40, g in 0usize..4, r in 0usize..4) {
        let data = common::random_instance(seed);
        let model = train_personalized(&data, Personalization::Intersectional, &TrainConfig::default()).unwrap();
        let generic = model.generic();
        let space = data.space();
        let (gid, rep) = (space.group(g), Reported::Group(space.group(r)));
        let w = Reported::Withheld;
        for metric in [MetricKind::ErrorRate, MetricKind::Ece] {
            let fwd = gain(&gid, (&model as &dyn Predictor, &rep), (&generic as &dyn Predictor, &w), &data, metric).unwrap();
            let back = gain(&gid, (&generic as &dyn Predictor, &w), (&model as &dyn Predictor, &rep), &data, metric).unwrap();
            prop_assert!((fwd + back).abs() < 1e-12);
            let own = gain(&gid, (&model as &dyn Predictor, &rep), (&model as &dyn Predictor, &rep), &data, metric).unwrap();
            prop_assert_eq!(own, 0.0);
        }
    }

    #[test]
    fn csv_round_trip_of_random_instances(seed in 0u64..200) {
        let data = common::random_instance(seed);
        let mut buf = Vec::new();
        write_csv(&data, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), &CsvSchema::with_domains(data.space())).unwrap();
        prop_assert_eq!(back, data);
    }
}
