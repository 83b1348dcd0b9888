//! Pre-publication alerting and A/B lift analysis.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::stats;
use crate::{Error, Result};

/// Videos scoring below this percentile of their history are flagged.
pub const ALERT_PERCENTILE: u32 = 20;
pub const DEFAULT_RESAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlertDecision {
    pub score: f64,
    /// Nearest-rank 20th percentile of the history; equals `score` when the
    /// history is empty.
    pub threshold: f64,
    pub alert: bool,
    pub history_size: usize,
}

/// Alerts iff `score` is strictly below the nearest-rank 20th percentile of `history`.
pub fn alert_check(score: f64, history: &[f64]) -> AlertDecision {
    match stats::percentile_nearest_rank(history, ALERT_PERCENTILE) {
        Ok(threshold) => AlertDecision {
            score,
            threshold,
            alert: score < threshold,
            history_size: history.len(),
        },
        Err(_) => AlertDecision {
            score,
            threshold: score,
            alert: false,
            history_size: 0,
        },
    }
}

/// Category medians of `history`, keeping only categories with a positive median.
pub fn category_medians<S: AsRef<str>>(history: &[(S, f64)]) -> BTreeMap<String, f64> {
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (cat, v) in history {
        groups.entry(cat.as_ref()).or_default().push(*v);
    }
    groups
        .into_iter()
        .filter_map(|(cat, vs)| match stats::median(&vs) {
            Ok(m) if m > 0.0 => Some((cat.to_string(), m)),
            _ => None,
        })
        .collect()
}

/// [`alert_check`] on category-normalized values: every history entry is
/// divided by its category's median, pooled, and compared with `score`
/// divided by the median of `category`. Without a usable median for
/// `category` nothing can be compared and no alert is raised.
pub fn category_alert_check<S: AsRef<str>>(score: f64, category: &str, history: &[(S, f64)]) -> AlertDecision {
    let medians = category_medians(history);
    let Some(&m) = medians.get(category) else {
        return alert_check(score, &[]);
    };
    let pooled: Vec<f64> = history
        .iter()
        .filter_map(|(c, v)| medians.get(c.as_ref()).map(|cm| v / cm))
        .collect();
    alert_check(score / m, &pooled)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbResult {
    pub mean_a: f64,
    pub mean_b: f64,
    /// `100 (mean_b − mean_a) / mean_a`.
    pub lift_percent: f64,
    /// Percentile-bootstrap 95% interval of the lift.
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_a: usize,
    pub n_b: usize,
}

fn lift(mean_a: f64, mean_b: f64) -> f64 {
    100.0 * (mean_b - mean_a) / mean_a
}

fn resample_mean(values: &[f64], rng: &mut ChaCha8Rng) -> f64 {
    let n = values.len();
    let sum: f64 = (0..n).map(|_| values[rng.random_range(0..n)]).sum();
    sum / n as f64
}

/// Point lift of group B over group A plus a seeded bootstrap 95% interval.
pub fn ab_lift(group_a: &[f64], group_b: &[f64], seed: u64, resamples: usize) -> Result<AbResult> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(Error::EmptyGroup);
    }
    if resamples == 0 {
        return Err(Error::config("bootstrap needs at least one resample"));
    }
    if group_a.iter().chain(group_b).any(|v| !v.is_finite()) {
        return Err(Error::config("group values must be finite"));
    }
    let mean_a = stats::mean(group_a)?;
    let mean_b = stats::mean(group_b)?;
    if mean_a == 0.0 {
        return Err(Error::DegenerateBaseline);
    }
    let lift_percent = lift(mean_a, mean_b);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lifts: Vec<f64> = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let a = resample_mean(group_a, &mut rng);
        let b = resample_mean(group_b, &mut rng);
        // A resample of an all-zero subset has no defined lift.
        if a != 0.0 {
            lifts.push(lift(a, b));
        }
    }
    let (ci_low, ci_high) = if lifts.is_empty() {
        (lift_percent, lift_percent)
    } else {
        lifts.sort_by(f64::total_cmp);
        let n = lifts.len();
        let rank = |per_mille: usize| (per_mille * n).div_ceil(1000).clamp(1, n) - 1;
        (lifts[rank(25)], lifts[rank(975)])
    };
    Ok(AbResult {
        mean_a,
        mean_b,
        lift_percent,
        ci_low,
        ci_high,
        n_a: group_a.len(),
        n_b: group_b.len(),
    })
}
