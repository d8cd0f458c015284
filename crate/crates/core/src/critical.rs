//! Critical values: quoted constants and simulated null tables.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::df::{cusum_stat, detector_trace, sup_stat};
use crate::error::{invalid, Error, Result};
use crate::rng::{domain, substream};
use crate::stats::upper_quantile;

/// Finite-sample sup-DF critical values for n = 200, τ0 = 0.137.
pub const PWY_SUP_CV: [(f64, f64); 3] = [(0.01, 2.094), (0.05, 1.468), (0.10, 1.184)];

/// Right-tail 5% critical value of the with-constant DF t-statistic.
pub const DF_MARGINAL_CV_5: f64 = -0.08;

/// Standard levels tabulated by default.
pub const DEFAULT_LEVELS: [f64; 3] = [0.01, 0.05, 0.10];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CvKind {
    /// Supremum of recursive DF statistics (PWY / RVPWY).
    PwySup,
    /// Pointwise DF statistic, used by the date-stamping detector.
    DfMarginal,
}

fn same_level(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

pub fn builtin_cv(kind: CvKind, level: f64) -> Result<f64> {
    let found = match kind {
        CvKind::PwySup => PWY_SUP_CV
            .iter()
            .find(|(l, _)| same_level(*l, level))
            .map(|&(_, v)| v),
        CvKind::DfMarginal => same_level(level, 0.05).then_some(DF_MARGINAL_CV_5),
    };
    found.ok_or(Error::UnsupportedCriticalValue {
        kind: match kind {
            CvKind::PwySup => "PWY-sup",
            CvKind::DfMarginal => "DF-marginal",
        },
        level,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableSize {
    Finite(usize),
    Asymptotic,
}

impl fmt::Display for TableSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableSize::Finite(n) => write!(f, "{n}"),
            TableSize::Asymptotic => write!(f, "asymptotic"),
        }
    }
}

/// Right-tail quantiles of a simulated null distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValueTable {
    pub n: TableSize,
    pub tau0: f64,
    pub reps: usize,
    pub seed: u64,
    /// `(level, value)` pairs, in the order requested.
    pub quantiles: Vec<(f64, f64)>,
}

impl CriticalValueTable {
    pub fn get(&self, level: f64) -> Option<f64> {
        self.quantiles
            .iter()
            .find(|(l, _)| same_level(*l, level))
            .map(|&(_, v)| v)
    }

    /// Plain-text form: `# key = value` header lines, then `level<TAB>value` rows.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# n = {}\n# tau0 = {}\n# reps = {}\n# seed = {}\nlevel\tvalue\n",
            self.n, self.tau0, self.reps, self.seed
        );
        for (l, v) in &self.quantiles {
            out.push_str(&format!("{l}\t{v:.16e}\n"));
        }
        out
    }
}

impl FromStr for CriticalValueTable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut n = None;
        let mut tau0 = None;
        let mut reps = None;
        let mut seed = None;
        let mut quantiles = Vec::new();
        let bad = |line: &str| Error::Parse(format!("bad critical value line: {line:?}"));
        for line in s.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest.split_once('=').ok_or_else(|| bad(line))?;
                let v = v.trim();
                match k.trim() {
                    "n" => {
                        n = Some(if v == "asymptotic" {
                            TableSize::Asymptotic
                        } else {
                            TableSize::Finite(v.parse().map_err(|_| bad(line))?)
                        })
                    }
                    "tau0" => tau0 = Some(v.parse().map_err(|_| bad(line))?),
                    "reps" => reps = Some(v.parse().map_err(|_| bad(line))?),
                    "seed" => seed = Some(v.parse().map_err(|_| bad(line))?),
                    _ => {}
                }
            } else if line.starts_with("level") {
                continue;
            } else {
                let mut cols = line.split('\t');
                let l: f64 = cols.next().and_then(|c| c.parse().ok()).ok_or_else(|| bad(line))?;
                let v: f64 = cols.next().and_then(|c| c.parse().ok()).ok_or_else(|| bad(line))?;
                quantiles.push((l, v));
            }
        }
        let missing = |what: &str| Error::Parse(format!("critical value table lacks {what}"));
        Ok(Self {
            n: n.ok_or_else(|| missing("n"))?,
            tau0: tau0.ok_or_else(|| missing("tau0"))?,
            reps: reps.ok_or_else(|| missing("reps"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
            quantiles,
        })
    }
}

fn gaussian_walk(n: usize, seed: u64, domain: u64, rep: usize) -> Vec<f64> {
    let mut rng = substream(seed, domain, rep as u64);
    let mut x = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    x.push(acc);
    for _ in 0..n {
        let e: f64 = rng.sample(StandardNormal);
        acc += e;
        x.push(acc);
    }
    x
}

fn validate_table_args(n: usize, tau0: f64, reps: usize, levels: &[f64]) -> Result<()> {
    if n < 20 {
        return Err(invalid(format!("null tables need n >= 20, got {n}")));
    }
    if !(tau0 > 0.0 && tau0 < 1.0) {
        return Err(invalid(format!("tau0 must lie in (0,1), got {tau0}")));
    }
    if reps < 1 {
        return Err(invalid("null tables need reps >= 1"));
    }
    if levels.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
        return Err(invalid("levels must lie in (0,1)"));
    }
    Ok(())
}

fn tabulate(draws: &[f64], n: usize, tau0: f64, reps: usize, seed: u64, levels: &[f64]) -> Result<CriticalValueTable> {
    let quantiles = levels
        .iter()
        .map(|&l| Ok((l, upper_quantile(draws, l)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CriticalValueTable {
        n: TableSize::Finite(n),
        tau0,
        reps,
        seed,
        quantiles,
    })
}

/// Draws of the sup-DF statistic on Gaussian random walks `x_0 = 0, .., x_n`.
pub fn simulate_null_sups(n: usize, tau0: f64, reps: usize, seed: u64) -> Result<Vec<f64>> {
    (0..reps)
        .into_par_iter()
        .map(|rep| {
            let walk = gaussian_walk(n, seed, domain::NULL_TABLE, rep);
            sup_stat(&detector_trace(&walk, tau0)?)
        })
        .collect()
}

/// Simulated right-tail quantiles of the sup-DF null distribution.
pub fn simulate_null_table(
    n: usize,
    tau0: f64,
    reps: usize,
    seed: u64,
    levels: &[f64],
) -> Result<CriticalValueTable> {
    validate_table_args(n, tau0, reps, levels)?;
    let draws = simulate_null_sups(n, tau0, reps, seed)?;
    tabulate(&draws, n, tau0, reps, seed, levels)
}

/// Simulated right-tail quantiles of the CUSUM statistic under the null.
pub fn simulate_cusum_table(
    n: usize,
    tau0: f64,
    reps: usize,
    seed: u64,
    levels: &[f64],
) -> Result<CriticalValueTable> {
    validate_table_args(n, tau0, reps, levels)?;
    let draws = (0..reps)
        .into_par_iter()
        .map(|rep| cusum_stat(&gaussian_walk(n, seed, domain::CUSUM_TABLE, rep), tau0))
        .collect::<Result<Vec<_>>>()?;
    tabulate(&draws, n, tau0, reps, seed, levels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoted_constants() {
        assert_eq!(builtin_cv(CvKind::PwySup, 0.05).unwrap(), 1.468);
        assert_eq!(builtin_cv(CvKind::PwySup, 0.01).unwrap(), 2.094);
        assert_eq!(builtin_cv(CvKind::PwySup, 0.10).unwrap(), 1.184);
        assert_eq!(builtin_cv(CvKind::DfMarginal, 0.05).unwrap(), -0.08);
        assert!(builtin_cv(CvKind::PwySup, 0.025).is_err());
        assert!(builtin_cv(CvKind::DfMarginal, 0.01).is_err());
    }

    #[test]
    fn single_draw_table() {
        let t = simulate_null_table(50, 0.2, 1, 3, &[0.01, 0.05, 0.1]).unwrap();
        let v = t.quantiles[0].1;
        assert!(t.quantiles.iter().all(|&(_, q)| q == v));
    }

    #[test]
    fn reproducible_and_monotone() {
        let a = simulate_null_table(60, 0.15, 1000, 5, &DEFAULT_LEVELS).unwrap();
        let b = simulate_null_table(60, 0.15, 1000, 5, &DEFAULT_LEVELS).unwrap();
        assert_eq!(a, b);
        assert!(a.get(0.01).unwrap() > a.get(0.05).unwrap());
        assert!(a.get(0.05).unwrap() > a.get(0.10).unwrap());
    }

    #[test]
    fn text_round_trip() {
        let t = simulate_null_table(40, 0.2, 200, 9, &DEFAULT_LEVELS).unwrap();
        let back: CriticalValueTable = t.to_text().parse().unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn argument_validation() {
        assert!(simulate_null_table(10, 0.2, 10, 0, &[0.05]).is_err());
        assert!(simulate_null_table(50, 1.2, 10, 0, &[0.05]).is_err());
        assert!(simulate_null_table(50, 0.2, 0, 0, &[0.05]).is_err());
        assert!(simulate_null_table(50, 0.2, 10, 0, &[1.5]).is_err());
    }
}
