mod common;

use std::collections::BTreeSet;

use common::{brute_force_metrics, mann_whitney_auc, random_scored_set};
use kace::evaluation::{
    aggregate_reports, compute_metrics, confusion_counts, make_fold_plan, roc_auc, ConfusionCounts, GroupKey,
    MetricReport, Protocol, ReportContext,
};
use kace::rng::seeded;
use proptest::prelude::*;

fn ctx() -> ReportContext {
    ReportContext::new("E. coli", "RF", Protocol::Independent)
}

#[test]
fn metrics_match_per_sample_tally() {
    let mut rng = seeded(100);
    for _ in 0..1000 {
        let n = rng.random_range(1..60);
        let scores: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * 4.0).floor() / 4.0).collect();
        let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let m = compute_metrics(confusion_counts(&scores, &labels, 0.5).unwrap(), ctx()).unwrap();
        assert_eq!([m.ca, m.sn, m.sp, m.precision, m.f1, m.mcc], brute_force_metrics(&scores, &labels));
    }
}

#[test]
fn half_tn_half_fn_family_has_zero_mcc() {
    for a in 1..50u64 {
        let c = ConfusionCounts { tp: 2 * a, fp: 2 * a, tn: a, fn_: a };
        let m = compute_metrics(c, ctx()).unwrap();
        assert_eq!(m.mcc, 0.0);
        assert_eq!(m.ca, 0.5);
    }
}

#[test]
fn auc_matches_rank_sum() {
    let mut rng = seeded(101);
    for _ in 0..500 {
        let n = rng.random_range(2..200);
        let (s, y) = random_scored_set(&mut rng, n);
        assert!((roc_auc(&s, &y).unwrap() - mann_whitney_auc(&s, &y)).abs() < 1e-9);
    }
}

#[test]
fn fold_plans_partition() {
    for n in [10usize, 103, 1000] {
        for k in [5usize, 10] {
            let p = make_fold_plan(n, k, 7).unwrap();
            assert_eq!(p, make_fold_plan(n, k, 7).unwrap());
            let sizes = p.fold_sizes();
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            let mut all = BTreeSet::new();
            for f in 0..k {
                for i in p.test_indices(f) {
                    assert!(all.insert(i), "index {i} in two folds");
                }
            }
            assert_eq!(all.len(), n);
        }
    }
}

#[test]
fn aggregation_ignores_order() {
    let mut rng = seeded(102);
    let mut reports = Vec::new();
    for sp in ["A", "B", "C"] {
        for cl in ["RF", "GB"] {
            let (s, y) = random_scored_set(&mut rng, 50);
            reports.push(MetricReport::from_scores(&s, &y, ReportContext::new(sp, cl, Protocol::Independent)).unwrap());
        }
    }
    let keys = [GroupKey::Classifier, GroupKey::Protocol];
    let a = aggregate_reports(&reports, &keys).unwrap();
    reports.reverse();
    let b = aggregate_reports(&reports, &keys).unwrap();
    assert_eq!(a.len(), 2);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.context, y.context);
        assert!((x.ca - y.ca).abs() < 1e-15 && (x.auc - y.auc).abs() < 1e-15);
    }
}

proptest! {
    #[test]
    fn ratios_stay_in_range(tp in 0u64..50, tn in 0u64..50, fp in 0u64..50, fn_ in 0u64..50) {
        prop_assume!(tp + tn + fp + fn_ > 0);
        let m = compute_metrics(ConfusionCounts { tp, tn, fp, fn_ }, ctx()).unwrap();
        for v in [m.ca, m.sn, m.sp, m.precision, m.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!((-1.0..=1.0).contains(&m.mcc));
    }

    #[test]
    fn auc_survives_monotone_maps(seed in 0u64..10_000) {
        let mut rng = seeded(seed);
        let (s, y) = random_scored_set(&mut rng, 40);
        let a = roc_auc(&s, &y).unwrap();
        let t: Vec<f64> = s.iter().map(|v| (3.0 * v + 1.0).exp()).collect();
        prop_assert!((roc_auc(&t, &y).unwrap() - a).abs() < 1e-12);
    }

    #[test]
    fn flipping_classes_swaps_sn_and_sp(seed in 0u64..10_000) {
        let mut rng = seeded(seed);
        // keep scores off the threshold so 1-s flips every call
        let (s, y) = random_scored_set(&mut rng, 40);
        let s: Vec<f64> = s.iter().map(|v| if *v == 0.5 { 0.55 } else { *v }).collect();
        let fs: Vec<f64> = s.iter().map(|v| 1.0 - v).collect();
        let fy: Vec<u8> = y.iter().map(|v| 1 - v).collect();
        prop_assert!((roc_auc(&s, &y).unwrap() - roc_auc(&fs, &fy).unwrap()).abs() < 1e-12);
        let a = compute_metrics(confusion_counts(&s, &y, 0.5).unwrap(), ctx()).unwrap();
        let b = compute_metrics(confusion_counts(&fs, &fy, 0.5).unwrap(), ctx()).unwrap();
        prop_assert_eq!((a.sn, a.sp), (b.sp, b.sn));
    }
}
