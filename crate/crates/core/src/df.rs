//! With-constant Dickey–Fuller statistics on expanding prefixes.
//!
//! For a prefix `x_1..x_k` the statistic is the OLS t-ratio on the slope in
//! `Δx_s = μ + β x_{s−1} + e_s`, `s = 2..k`, with no lag augmentation. The
//! recursive trace evaluates it for every integer endpoint `k` from
//! `⌈τ0 n⌉` to `n`; its supremum is the PWY statistic on a raw series and the
//! RVPWY statistic on a devolatized pseudo-sample.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::ceil_frac;

/// Smallest prefix length with a defined t-ratio.
pub const MIN_PREFIX: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatKind {
    /// Computed on a devolatized pseudo-sample.
    Rvdf,
    /// Computed on a raw series.
    Df,
}

impl StatKind {
    pub fn name(&self) -> &'static str {
        match self {
            StatKind::Rvdf => "RVDF",
            StatKind::Df => "DF",
        }
    }
}

/// Recursive statistic per endpoint. `None` marks a degenerate prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorTrace {
    pub tau0: f64,
    /// Sample size of the full series (`x_0..x_n`).
    pub n: usize,
    pub kind: StatKind,
    pub endpoints: Vec<usize>,
    pub stats: Vec<Option<f64>>,
}

impl DetectorTrace {
    pub fn with_kind(mut self, kind: StatKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn len(&self) -> usize {
        self.endpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.endpoints.is_empty()
    }

    /// Fraction `k / n` of each endpoint.
    pub fn fractions(&self) -> impl Iterator<Item = f64> + '_ {
        self.endpoints.iter().map(move |&k| k as f64 / self.n as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.endpoints.is_empty() {
            return Err(invalid("empty detector trace"));
        }
        if self.endpoints.len() != self.stats.len() {
            return Err(invalid("trace endpoints and stats differ in length"));
        }
        if self.endpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("trace endpoints must be strictly increasing"));
        }
        Ok(())
    }
}

/// OLS t-ratio on the lagged level for the prefix `sample = x_1..x_k`.
pub fn df_stat_with_constant(sample: &[f64]) -> Result<f64> {
    let k = sample.len();
    if k < MIN_PREFIX {
        return Err(invalid(format!(
            "DF regression needs at least {MIN_PREFIX} observations, got {k}"
        )));
    }
    let m = (k - 1) as f64;
    let lagged = &sample[..k - 1];
    let mean_u = lagged.iter().sum::<f64>() / m;
    let mean_v = (sample[k - 1] - sample[0]) / m;

    let mut suu = 0.0;
    let mut suv = 0.0;
    for w in sample.windows(2) {
        let du = w[0] - mean_u;
        let dv = (w[1] - w[0]) - mean_v;
        suu += du * du;
        suv += du * dv;
    }
    if !(suu > 0.0) {
        return Err(Error::DegenerateRegression { k });
    }
    let beta = suv / suu;
    let rss: f64 = sample
        .windows(2)
        .map(|w| {
            let r = (w[1] - w[0]) - mean_v - beta * (w[0] - mean_u);
            r * r
        })
        .sum();
    if !(rss > 0.0) {
        return Err(Error::DegenerateRegression { k });
    }
    let sigma2 = rss / (m - 2.0);
    let t = beta / (sigma2 / suu).sqrt();
    if t.is_finite() {
        Ok(t)
    } else {
        Err(Error::DegenerateRegression { k })
    }
}

fn first_endpoint(n: usize, tau0: f64, min: usize) -> Result<usize> {
    if !(tau0 > 0.0 && tau0 < 1.0) {
        return Err(invalid(format!("tau0 must lie in (0,1), got {tau0}")));
    }
    let k0 = ceil_frac(tau0, n).max(1);
    if k0 < min {
        return Err(invalid(format!(
            "smallest window ceil(tau0 * n) = {k0} is below {min}"
        )));
    }
    Ok(k0)
}

/// Every-endpoint recursive trace over `series = x_0..x_n`; the prefix for
/// endpoint `k` is `x_1..x_k`. Each entry is computed independently.
pub fn detector_trace(series: &[f64], tau0: f64) -> Result<DetectorTrace> {
    let n = series.len().checked_sub(1).ok_or_else(|| invalid("empty series"))?;
    let k0 = first_endpoint(n, tau0, MIN_PREFIX)?;
    let endpoints: Vec<usize> = (k0..=n).collect();
    let stats = endpoints
        .iter()
        .map(|&k| df_stat_with_constant(&series[1..=k]).ok())
        .collect();
    Ok(DetectorTrace {
        tau0,
        n,
        kind: StatKind::Df,
        endpoints,
        stats,
    })
}

/// Running centered co-moments of `(x_{s−1}, Δx_s)`, updated one observation at a time.
#[derive(Debug, Clone, Default)]
struct RollingDf {
    count: usize,
    prev: f64,
    mean_u: f64,
    mean_v: f64,
    suu: f64,
    suv: f64,
    svv: f64,
}

impl RollingDf {
    fn push(&mut self, x: f64) {
        if self.count == 0 {
            self.prev = x;
            self.count = 1;
            return;
        }
        let u = self.prev;
        let v = x - self.prev;
        self.prev = x;
        let obs = self.count as f64;
        self.count += 1;
        let du = u - self.mean_u;
        let dv = v - self.mean_v;
        self.mean_u += du / obs;
        self.mean_v += dv / obs;
        let dv_post = v - self.mean_v;
        self.suu += du * (u - self.mean_u);
        self.suv += du * dv_post;
        self.svv += dv * dv_post;
    }

    fn t_stat(&self) -> Option<f64> {
        if self.count < MIN_PREFIX || !(self.suu > 0.0) {
            return None;
        }
        let beta = self.suv / self.suu;
        let rss = self.svv - beta * self.suv;
        if !(rss > 0.0) {
            return None;
        }
        let m = (self.count - 1) as f64;
        let t = beta / (rss / (m - 2.0) / self.suu).sqrt();
        t.is_finite().then_some(t)
    }
}

/// Same trace as [`detector_trace`] in O(n) using running co-moments.
/// Agrees with the per-prefix computation to about 1e-10 on well-conditioned data.
pub fn detector_trace_rolling(series: &[f64], tau0: f64) -> Result<DetectorTrace> {
    let n = series.len().checked_sub(1).ok_or_else(|| invalid("empty series"))?;
    let k0 = first_endpoint(n, tau0, MIN_PREFIX)?;
    let mut acc = RollingDf::default();
    let mut stats = Vec::with_capacity(n + 1 - k0);
    for (k, &x) in series.iter().enumerate().skip(1) {
        acc.push(x);
        if k >= k0 {
            stats.push(acc.t_stat());
        }
    }
    Ok(DetectorTrace {
        tau0,
        n,
        kind: StatKind::Df,
        endpoints: (k0..=n).collect(),
        stats,
    })
}

/// Supremum of the rolling trace without materializing it.
pub fn sup_df_rolling(series: &[f64], tau0: f64) -> Result<f64> {
    let n = series.len().checked_sub(1).ok_or_else(|| invalid("empty series"))?;
    let k0 = first_endpoint(n, tau0, MIN_PREFIX)?;
    let mut acc = RollingDf::default();
    let mut best: Option<f64> = None;
    for (k, &x) in series.iter().enumerate().skip(1) {
        acc.push(x);
        if k >= k0 {
            if let Some(t) = acc.t_stat() {
                best = Some(best.map_or(t, |b| b.max(t)));
            }
        }
    }
    best.ok_or(Error::AllDegenerate)
}

/// Maximum over the non-degenerate entries of the trace.
pub fn sup_stat(trace: &DetectorTrace) -> Result<f64> {
    trace
        .stats
        .iter()
        .flatten()
        .copied()
        .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.max(t))))
        .ok_or(Error::AllDegenerate)
}

/// `n^{-1/2} max_k x_k` over the endpoints `⌈τ0 n⌉..n` of `series = x_0..x_n`.
pub fn cusum_stat(series: &[f64], tau0: f64) -> Result<f64> {
    let n = series.len().checked_sub(1).ok_or_else(|| invalid("empty series"))?;
    if n == 0 {
        return Err(invalid("CUSUM needs at least one increment"));
    }
    let k0 = first_endpoint(n, tau0, 1)?;
    let max = series[k0..=n].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(max / (n as f64).sqrt())
}
