use clipwise_core::deploy::{ab_lift, alert_check, category_alert_check};
use clipwise_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Rank by integer arithmetic: smallest k ≥ 1 with 5k ≥ n.
fn rank20(n: usize) -> usize {
    (1..=n).find(|k| 5 * k >= n).unwrap_or(1)
}

/// Alert iff fewer than `rank` history values are at or below the score;
/// no sorting involved.
fn alert_oracle(score: f64, history: &[f64]) -> bool {
    !history.is_empty() && history.iter().filter(|&&h| h <= score).count() < rank20(history.len())
}

fn threshold_oracle(history: &[f64]) -> f64 {
    let r = rank20(history.len());
    *history
        .iter()
        .find(|&&v| {
            let below = history.iter().filter(|&&h| h < v).count();
            let at_or_below = history.iter().filter(|&&h| h <= v).count();
            below < r && r <= at_or_below
        })
        .unwrap()
}

#[test]
fn alert_matches_counting_oracle_on_random_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..1000 {
        let n = rng.random_range(0..60);
        // Small integer grid makes ties and exact-threshold scores common.
        let history: Vec<f64> = (0..n).map(|_| rng.random_range(0..20) as f64).collect();
        let score = rng.random_range(-1..21) as f64;
        let d = alert_check(score, &history);
        assert_eq!(d.alert, alert_oracle(score, &history), "case {case}: {score} vs {history:?}");
        assert_eq!(d.history_size, n);
        if n > 0 {
            assert_eq!(d.threshold, threshold_oracle(&history));
        }
    }
}

#[test]
fn score_at_threshold_never_alerts() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let n = rng.random_range(1..40);
        let history: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
        let t = alert_check(0.0, &history).threshold;
        assert!(!alert_check(t, &history).alert);
        assert!(alert_check(t - 1e-9, &history).alert || history.iter().all(|&h| h >= t));
    }
}

#[test]
fn category_alert_compares_within_category_scale() {
    let history = [("news", 1.0), ("news", 2.0), ("news", 3.0), ("pets", 10.0), ("pets", 20.0), ("pets", 30.0)];
    let d = category_alert_check(5.0, "pets", &history);
    assert_eq!((d.score, d.threshold, d.alert, d.history_size), (0.25, 0.5, true, 6));
    assert!(!category_alert_check(10.0, "pets", &history).alert);
    assert!(!category_alert_check(0.0, "unknown", &history).alert);
}

#[test]
fn constructed_groups_reproduce_lift() {
    // B is A shifted by exactly 12.9% of A's mean, with spread in both groups.
    let a: Vec<f64> = (0..1000).map(|i| 50.0 + (i % 101) as f64).collect();
    let mean_a = a.iter().sum::<f64>() / a.len() as f64;
    let b: Vec<f64> = a.iter().map(|v| v + 0.129 * mean_a).collect();
    let r = ab_lift(&a, &b, 3, 2000).unwrap();
    assert!((r.lift_percent - 12.9).abs() <= 1e-9, "{}", r.lift_percent);
    assert!(r.ci_low <= r.ci_high);
    assert_eq!(r, ab_lift(&a, &b, 3, 2000).unwrap());
}

#[test]
fn ab_errors() {
    assert_eq!(ab_lift(&[], &[1.0], 0, 10), Err(Error::EmptyGroup));
    assert_eq!(ab_lift(&[0.0, 0.0], &[1.0], 0, 10), Err(Error::DegenerateBaseline));
    assert!(matches!(ab_lift(&[1.0], &[1.0], 0, 0), Err(Error::Config(_))));
}

proptest! {
    #[test]
    fn lift_is_scale_free(
        a in prop::collection::vec(1.0f64..100.0, 1..30),
        b in prop::collection::vec(1.0f64..100.0, 1..30),
        c in 0.1f64..50.0,
        seed in any::<u64>(),
    ) {
        let r = ab_lift(&a, &b, seed, 200).unwrap();
        let sa: Vec<f64> = a.iter().map(|v| v * c).collect();
        let sb: Vec<f64> = b.iter().map(|v| v * c).collect();
        let s = ab_lift(&sa, &sb, seed, 200).unwrap();
        let tol = |x: f64| 1e-9 * (1.0 + x.abs());
        prop_assert!((r.lift_percent - s.lift_percent).abs() <= tol(r.lift_percent));
        prop_assert!((r.ci_low - s.ci_low).abs() <= tol(r.ci_low));
        prop_assert!((r.ci_high - s.ci_high).abs() <= tol(r.ci_high));
        let ma = a.iter().sum::<f64>() / a.len() as f64;
        let mb = b.iter().sum::<f64>() / b.len() as f64;
        prop_assert!((r.lift_percent - 100.0 * (mb - ma) / ma).abs() <= tol(r.lift_percent));
    }
}
