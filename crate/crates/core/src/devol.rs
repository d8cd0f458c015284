//! Devolatized pseudo-samples.

use serde::{Deserialize, Serialize};

use crate::df::{detector_trace, DetectorTrace, StatKind};
use crate::error::{invalid, Error, Result};
use crate::rv::RvSeries;
use crate::sim::PricePath;

/// Volatilities at or below this value are treated as broken intervals.
pub const VOL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    /// Scaled by realized volatility.
    Feasible,
    /// Scaled by the true integrated volatility.
    Infeasible,
}

/// Cumulated devolatized increments `x_0 = 0, x_1, .., x_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoSample {
    pub values: Vec<f64>,
    pub source: Source,
}

impl PseudoSample {
    /// Increments `x_i − x_{i−1}`.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Recursive RVDF trace over this sample.
    pub fn detector_trace(&self, tau0: f64) -> Result<DetectorTrace> {
        Ok(detector_trace(&self.values, tau0)?.with_kind(StatKind::Rvdf))
    }
}

/// `values[i] = Σ_{s ≤ i} increments[s] / vols[s]`, accumulated left to right.
pub fn build_pseudo_sample(increments: &[f64], vols: &[f64]) -> Result<PseudoSample> {
    if increments.len() != vols.len() {
        return Err(invalid(format!(
            "{} increments but {} volatilities",
            increments.len(),
            vols.len()
        )));
    }
    let mut values = Vec::with_capacity(increments.len() + 1);
    let mut acc = 0.0;
    values.push(acc);
    for (s, (&dy, &w)) in increments.iter().zip(vols).enumerate() {
        if !(w > VOL_FLOOR) {
            return Err(Error::DegenerateVolatility {
                interval: s + 1,
                vol: w,
            });
        }
        acc += dy / w;
        if !acc.is_finite() {
            return Err(invalid(format!("non-finite pseudo-sample value at interval {}", s + 1)));
        }
        values.push(acc);
    }
    Ok(PseudoSample {
        values,
        source: Source::Feasible,
    })
}

/// Feasible pseudo-sample of a path from its realized variances.
pub fn feasible_pseudo_sample(path: &PricePath, rv: &RvSeries) -> Result<PseudoSample> {
    build_pseudo_sample(&path.coarse_increments(), &rv.vols())
}

/// Infeasible pseudo-sample using the simulated integrated variances.
pub fn infeasible_pseudo_sample(path: &PricePath) -> Result<PseudoSample> {
    let ivs = path
        .true_integrated_vars
        .as_ref()
        .ok_or_else(|| invalid("path carries no integrated variances"))?;
    let vols: Vec<f64> = ivs.iter().map(|v| v.sqrt()).collect();
    let mut ps = build_pseudo_sample(&path.coarse_increments(), &vols)?;
    ps.source = Source::Infeasible;
    Ok(ps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_arithmetic() {
        let ps = build_pseudo_sample(&[2.0, -3.0], &[2.0, 3.0]).unwrap();
        assert_eq!(ps.values, vec![0.0, 1.0, 0.0]);
        assert_eq!(ps.source, Source::Feasible);
    }

    #[test]
    fn unit_vols_cumulate() {
        let inc = [0.5, -0.25, 1.0];
        let ps = build_pseudo_sample(&inc, &[1.0; 3]).unwrap();
        assert_eq!(ps.values, vec![0.0, 0.5, 0.25, 1.25]);
    }

    #[test]
    fn doubling_is_bit_identical() {
        let inc = [0.3, -1.7, 0.01, 2.5];
        let vols = [0.7, 1.3, 0.2, 0.9];
        let a = build_pseudo_sample(&inc, &vols).unwrap();
        let inc2: Vec<f64> = inc.iter().map(|v| 2.0 * v).collect();
        let vols2: Vec<f64> = vols.iter().map(|v| 2.0 * v).collect();
        assert_eq!(a, build_pseudo_sample(&inc2, &vols2).unwrap());
    }

    #[test]
    fn degenerate_vol_names_interval() {
        match build_pseudo_sample(&[1.0, 1.0, 1.0], &[1.0, 0.0, 1.0]) {
            Err(Error::DegenerateVolatility { interval, .. }) => assert_eq!(interval, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(build_pseudo_sample(&[1.0], &[1e-13]).is_err());
        assert!(build_pseudo_sample(&[1.0], &[f64::NAN]).is_err());
        assert!(build_pseudo_sample(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn not_a_rescaled_level_series() {
        let inc = [0.4, -0.9, 1.3, 0.2];
        let vols = [0.5, 1.5, 0.8, 1.1];
        let ps = build_pseudo_sample(&inc, &vols).unwrap();
        let mut level = 0.0;
        let mut differs = false;
        for i in 0..inc.len() {
            level += inc[i];
            if (ps.values[i + 1] - level / vols[i]).abs() > 1e-9 {
                differs = true;
            }
        }
        assert!(differs);
    }
}
