//! Wild-bootstrap PWY test on a raw coarse log-price series.
//!
//! Each replication multiplies the first differences of the original series
//! by i.i.d. multipliers, re-cumulates from zero and recomputes the sup-DF
//! statistic. The null of a driftless unit root is imposed by resampling the
//! raw increments directly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::df::sup_df_rolling;
use crate::error::{invalid, Result};
use crate::rng::{domain, rademacher, substream};

/// Default replication count for Monte Carlo studies.
pub const DEFAULT_B_MC: usize = 199;
/// Default replication count for single-series inference.
pub const DEFAULT_B_SINGLE: usize = 999;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub observed_stat: f64,
    pub boot_stats: Vec<f64>,
    pub p_value: f64,
    pub b: usize,
    pub seed: u64,
}

/// Source of bootstrap multipliers; `fill` writes the multipliers of replication `b`.
pub trait Multipliers: Sync {
    fn fill(&self, replication: usize, out: &mut [f64]);
}

/// Equiprobable ±1 multipliers on per-replication substreams.
#[derive(Debug, Clone, Copy)]
pub struct Rademacher {
    pub seed: u64,
}

impl Multipliers for Rademacher {
    fn fill(&self, replication: usize, out: &mut [f64]) {
        let mut rng = substream(self.seed, domain::BOOTSTRAP, replication as u64);
        for eta in out.iter_mut() {
            *eta = rademacher(&mut rng);
        }
    }
}

/// `(1 + #{boot ≥ observed}) / (B + 1)`.
pub fn p_value(observed: f64, boot_stats: &[f64]) -> f64 {
    let exceed = boot_stats.iter().filter(|&&s| s >= observed).count();
    (1 + exceed) as f64 / (boot_stats.len() + 1) as f64
}

fn cumulate(increments: &[f64], eta: Option<&[f64]>, out: &mut Vec<f64>) {
    out.clear();
    let mut acc = 0.0;
    out.push(acc);
    match eta {
        Some(eta) => {
            for (d, e) in increments.iter().zip(eta) {
                acc += e * d;
                out.push(acc);
            }
        }
        None => {
            for d in increments {
                acc += d;
                out.push(acc);
            }
        }
    }
}

/// Wild-bootstrap PWY with Rademacher multipliers.
pub fn wild_bootstrap_pwy(
    coarse_log_prices: &[f64],
    tau0: f64,
    b: usize,
    seed: u64,
) -> Result<BootstrapResult> {
    wild_bootstrap_with(coarse_log_prices, tau0, b, seed, &Rademacher { seed })
}

/// Wild-bootstrap PWY with a caller-supplied multiplier source.
///
/// The observed statistic is computed on the series re-cumulated from zero so
/// that identity multipliers reproduce it bit for bit.
pub fn wild_bootstrap_with<M: Multipliers>(
    coarse_log_prices: &[f64],
    tau0: f64,
    b: usize,
    seed: u64,
    multipliers: &M,
) -> Result<BootstrapResult> {
    if b < 1 {
        return Err(invalid("bootstrap needs B >= 1"));
    }
    if coarse_log_prices.len() < 2 {
        return Err(invalid("bootstrap needs at least two observations"));
    }
    let increments: Vec<f64> = coarse_log_prices.windows(2).map(|w| w[1] - w[0]).collect();
    if increments.iter().all(|&d| d == 0.0) {
        return Err(invalid("degenerate series: all increments are zero"));
    }
    let mut base = Vec::with_capacity(coarse_log_prices.len());
    cumulate(&increments, None, &mut base);
    let observed_stat = sup_df_rolling(&base, tau0)?;

    let boot_stats = (0..b)
        .into_par_iter()
        .map_init(
            || (vec![0.0; increments.len()], Vec::with_capacity(base.len())),
            |(eta, series), rep| {
                multipliers.fill(rep, eta);
                cumulate(&increments, Some(eta), series);
                sup_df_rolling(series, tau0).unwrap_or(f64::NEG_INFINITY)
            },
        )
        .collect::<Vec<f64>>();

    Ok(BootstrapResult {
        observed_stat,
        p_value: p_value(observed_stat, &boot_stats),
        boot_stats,
        b,
        seed,
    })
}
