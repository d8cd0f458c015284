//! Realized variance per coarse interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::sim::PricePath;

/// Realized variances `ω̂²_1..ω̂²_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RvSeries {
    pub values: Vec<f64>,
    pub demeaned: bool,
    pub grid: Option<GridSpec>,
}

impl RvSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Square roots of the realized variances.
    pub fn vols(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.sqrt()).collect()
    }
}

/// Sum of squared increments of `segment` (fine log prices of one interval,
/// endpoints included). With `demean`, increments are centered first.
pub fn realized_variance_of(segment: &[f64], demean: bool) -> Result<f64> {
    let steps = segment.len().saturating_sub(1);
    if steps == 0 {
        return Err(Error::InvalidParameter(
            "interval needs at least one increment".into(),
        ));
    }
    if demean && steps < 2 {
        return Err(Error::DemeanTooFewSteps(steps));
    }
    let mean = if demean {
        (segment[steps] - segment[0]) / steps as f64
    } else {
        0.0
    };
    Ok(segment
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0] - mean;
            d * d
        })
        .sum())
}

/// Realized variance of coarse interval `i` (1-based).
pub fn realized_variance_interval(path: &PricePath, i: usize, demean: bool) -> Result<f64> {
    let n = path.grid.n();
    if i == 0 || i > n {
        return Err(Error::IntervalOutOfRange { index: i, n });
    }
    realized_variance_of(path.interval(i), demean)
}

pub fn rv_series(path: &PricePath, demean: bool) -> Result<RvSeries> {
    let values = (1..=path.grid.n())
        .map(|i| realized_variance_interval(path, i, demean))
        .collect::<Result<Vec<_>>>()?;
    Ok(RvSeries {
        values,
        demeaned: demean,
        grid: Some(path.grid),
    })
}

/// Realized variances over irregular intervals. `bounds` holds the `n + 1`
/// fine indices of the coarse points; interval `i` spans `bounds[i-1]..=bounds[i]`.
pub fn rv_series_from_bounds(log_prices: &[f64], bounds: &[usize], demean: bool) -> Result<RvSeries> {
    if bounds.len() < 2 || *bounds.last().unwrap() >= log_prices.len() {
        return Err(Error::InvalidParameter("interval bounds do not fit the series".into()));
    }
    let values = bounds
        .windows(2)
        .map(|w| {
            if w[1] <= w[0] {
                return Err(Error::InvalidParameter("interval bounds must increase".into()));
            }
            realized_variance_of(&log_prices[w[0]..=w[1]], demean)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RvSeries {
        values,
        demeaned: demean,
        grid: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize, m: usize, y: Vec<f64>) -> PricePath {
        PricePath::observed(GridSpec::new(n, m, 1.0).unwrap(), y).unwrap()
    }

    #[test]
    fn hand_sums() {
        assert_eq!(realized_variance_of(&[0.0, 1.0, -1.0, 2.0], false).unwrap(), 14.0);
        assert_eq!(realized_variance_of(&[1.5, 1.5, 1.5], false).unwrap(), 0.0);
        assert_eq!(realized_variance_of(&[0.25, 0.75], false).unwrap(), 0.25);
        let p = path(2, 2, vec![0.0, 1.0, 2.0, 4.0, 4.0]);
        assert_eq!(rv_series(&p, false).unwrap().values, vec![2.0, 4.0]);
    }

    #[test]
    fn constant_path_is_zero() {
        let p = path(3, 4, vec![2.0; 13]);
        let rv = rv_series(&p, false).unwrap();
        assert!(rv.values.iter().all(|&v| v == 0.0));
        assert_eq!(rv.len(), 3);
    }

    #[test]
    fn index_and_demean_errors() {
        let p = path(2, 1, vec![0.0, 1.0, 3.0]);
        assert!(matches!(
            realized_variance_interval(&p, 0, false),
            Err(Error::IntervalOutOfRange { .. })
        ));
        assert!(matches!(
            realized_variance_interval(&p, 3, false),
            Err(Error::IntervalOutOfRange { .. })
        ));
        assert!(matches!(
            realized_variance_interval(&p, 1, true),
            Err(Error::DemeanTooFewSteps(1))
        ));
    }

    #[test]
    fn demeaned_is_smaller() {
        let seg = [0.0, 0.3, 0.1, 0.6, 0.7];
        let plain = realized_variance_of(&seg, false).unwrap();
        let dm = realized_variance_of(&seg, true).unwrap();
        assert!(dm < plain);
        let centered = [0.0, 0.5, 0.2, 0.0];
        let a = realized_variance_of(&centered, false).unwrap();
        let b = realized_variance_of(&centered, true).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn bounds_variant() {
        let y = [0.0, 1.0, 0.0, 2.0, 1.0, 3.0];
        let rv = rv_series_from_bounds(&y, &[0, 2, 5], false).unwrap();
        assert_eq!(rv.values, vec![2.0, 4.0 + 1.0 + 4.0]);
        assert!(rv_series_from_bounds(&y, &[0, 2, 2], false).is_err());
        assert!(rv_series_from_bounds(&y, &[0, 6], false).is_err());
    }
}
