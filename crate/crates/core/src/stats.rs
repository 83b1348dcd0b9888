//! Order statistics shared by labeling, de-biasing, tag statistics and alerting.

use alloc::vec::Vec;

use crate::{Error, Result};

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Median; the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let v = sorted(values);
    let n = v.len();
    Ok(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

pub fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// 1-based nearest rank `ceil(percent · n / 100)`, at least 1.
pub fn nearest_rank(percent: u32, n: usize) -> usize {
    let r = (percent as usize * n).div_ceil(100);
    r.max(1)
}

/// Nearest-rank percentile: the ascending-sorted value at rank `ceil(p·n)`.
pub fn percentile_nearest_rank(values: &[f64], percent: u32) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if percent > 100 {
        return Err(Error::config(alloc::format!("percentile {percent} above 100")));
    }
    let v = sorted(values);
    Ok(v[nearest_rank(percent, v.len()) - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]).unwrap(), 2.5);
        assert_eq!(median(&[2.0, 2.0, 2.0]).unwrap(), 2.0);
        assert_eq!(median(&[5.0]).unwrap(), 5.0);
        assert!(median(&[]).is_err());
    }

    #[test]
    fn nearest_rank_values() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(percentile_nearest_rank(&v, 20).unwrap(), 2.0);
        assert_eq!(percentile_nearest_rank(&v, 21).unwrap(), 3.0);
        assert_eq!(percentile_nearest_rank(&[7.0], 20).unwrap(), 7.0);
        assert_eq!(percentile_nearest_rank(&v, 0).unwrap(), 1.0);
        assert_eq!(percentile_nearest_rank(&v, 100).unwrap(), 10.0);
    }
}
