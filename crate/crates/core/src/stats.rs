//! Small statistical helpers shared by the tabulation and Monte Carlo code.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Result};

/// Upper-tail empirical quantile: the order statistic at 1-based index
/// `⌊(1 − level) N⌋ + 1` (clamped to `N`). At most a fraction `level` of the
/// sample lies strictly above it.
pub fn upper_quantile(values: &[f64], level: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(invalid("quantile of an empty sample"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!("level must lie in (0,1), got {level}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Ok(sorted[upper_index(sorted.len(), level)])
}

/// 0-based index used by [`upper_quantile`].
pub fn upper_index(len: usize, level: f64) -> usize {
    let x = (1.0 - level) * len as f64;
    let r = x.round();
    let floor = if (x - r).abs() < 1e-9 { r } else { x.floor() };
    (floor as usize).min(len - 1)
}

/// Binomial standard error `sqrt(p(1 − p)/reps)`.
pub fn binomial_se(p: f64, reps: usize) -> f64 {
    (p * (1.0 - p) / reps as f64).sqrt()
}

/// One-sample Kolmogorov–Smirnov test against N(0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn ks_standard_normal(sample: &[f64]) -> Result<KsResult> {
    if sample.is_empty() {
        return Err(invalid("KS test on an empty sample"));
    }
    let normal = Normal::standard();
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_survival((n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d),
    })
}

/// `P(K > x)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = (-2.0 * j * j * x * x).exp();
        sum += if (j as u64) % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
