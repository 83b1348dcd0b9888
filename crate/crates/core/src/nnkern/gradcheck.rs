//! Central finite-difference verification of analytic gradients.

use alloc::format;
use alloc::string::String;

use super::params::Differentiable;
use crate::math;
use crate::{Error, Result};

/// Parameters closer than this to a ReLU/max-pool kink are not compared.
pub const KINK_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// `max |analytic − numeric| / max(|analytic|, |numeric|, 1e-12)`.
    pub max_rel_error: f64,
    /// Parameter name and flat index where the maximum occurred.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
    pub skipped: usize,
}

/// Compares `model.loss_and_grad` against central differences of `model.loss`
/// for every scalar parameter.
pub fn gradient_check<M: Differentiable>(model: &M, batch: &[M::Example], eps: f64) -> Result<GradCheckReport> {
    if !(1e-6..=1e-3).contains(&eps) {
        return Err(Error::config(format!("finite-difference step {eps} outside [1e-6, 1e-3]")));
    }
    let (loss, grads) = model.loss_and_grad(batch)?;
    if !loss.is_finite() {
        return Err(non_finite("analytic loss"));
    }
    let analytic: alloc::vec::Vec<(String, alloc::vec::Vec<f64>)> = grads
        .params()
        .into_iter()
        .map(|(n, t)| (n, t.data().to_vec()))
        .collect();

    let mut probe_model = model.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
        skipped: 0,
    };
    for (k, (name, grad)) in analytic.iter().enumerate() {
        for (i, &a) in grad.iter().enumerate() {
            let original = probe_model.params_mut()[k].data()[i];

            probe_model.params_mut()[k].data_mut()[i] = original + eps;
            let plus = probe_model.loss(batch)?;
            let kink_plus = probe_model.kink_probe(batch)?;

            probe_model.params_mut()[k].data_mut()[i] = original - eps;
            let minus = probe_model.loss(batch)?;
            let kink_minus = probe_model.kink_probe(batch)?;

            probe_model.params_mut()[k].data_mut()[i] = original;

            if !plus.is_finite() || !minus.is_finite() {
                return Err(non_finite(name));
            }
            if let (Some(p), Some(m)) = (kink_plus, kink_minus) {
                if p.pattern != m.pattern || p.margin < KINK_THRESHOLD || m.margin < KINK_THRESHOLD {
                    report.skipped += 1;
                    continue;
                }
            }
            let numeric = (plus - minus) / (2.0 * eps);
            let denom = math::abs(a).max(math::abs(numeric)).max(1e-12);
            let rel = math::abs(a - numeric) / denom;
            report.checked += 1;
            if rel > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(rel);
                if rel >= report.max_rel_error {
                    report.worst = Some((name.clone(), i));
                }
            }
        }
    }
    Ok(report)
}

fn non_finite(what: &str) -> Error {
    Error::Numerical {
        epoch: None,
        message: format!("non-finite loss while checking {what}"),
    }
}
