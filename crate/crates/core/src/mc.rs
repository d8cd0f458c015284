//! Monte Carlo size and power experiments under Heston stochastic volatility.
//!
//! Each replication simulates one path and evaluates every requested test on
//! it. Replications use counter-based substreams, so tables are identical
//! regardless of thread count.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{wild_bootstrap_pwy, DEFAULT_B_MC};
use crate::critical::{builtin_cv, simulate_cusum_table, simulate_null_table, CvKind, DEFAULT_LEVELS};
use crate::devol::build_pseudo_sample;
use crate::df::{cusum_stat, sup_df_rolling};
use crate::error::{invalid, Error, Result};
use crate::grid::GridSpec;
use crate::rng::{derive_seed, domain};
use crate::rv::rv_series;
use crate::sim::{simulate_heston, HestonParams, KappaSchedule};
use crate::stats::{binomial_se, upper_quantile};

/// Simulation count behind fallback critical values for levels without a quoted constant.
pub const FALLBACK_TABLE_REPS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TestKind {
    Pwy,
    Scpwy,
    Btpwy,
    Rvpwy,
    Cusum,
}

impl TestKind {
    pub const ALL: [TestKind; 5] = [
        TestKind::Pwy,
        TestKind::Scpwy,
        TestKind::Btpwy,
        TestKind::Rvpwy,
        TestKind::Cusum,
    ];
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestKind::Pwy => "PWY",
            TestKind::Scpwy => "SCPWY",
            TestKind::Btpwy => "BTPWY",
            TestKind::Rvpwy => "RVPWY",
            TestKind::Cusum => "CUSUM",
        })
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "PWY" => Ok(TestKind::Pwy),
            "SCPWY" => Ok(TestKind::Scpwy),
            "BTPWY" => Ok(TestKind::Btpwy),
            "RVPWY" => Ok(TestKind::Rvpwy),
            "CUSUM" => Ok(TestKind::Cusum),
            other => Err(Error::Parse(format!("unknown test {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub reps: usize,
    pub grid: GridSpec,
    pub heston: HestonParams,
    pub schedule: KappaSchedule,
    pub tau0: f64,
    pub levels: Vec<f64>,
    pub tests: Vec<TestKind>,
    pub seed: u64,
    pub bootstrap_b: usize,
}

impl McConfig {
    /// Daily design: `n = 252`, 78 five-minute steps per day, `H = 1`,
    /// `(a, b, c) = (0.05, 0.25, 0.30)`, τ0 = 0.137, 1000 replications.
    pub fn daily_design(schedule: KappaSchedule, seed: u64) -> Self {
        Self {
            reps: 1000,
            grid: GridSpec::new(252, 78, 1.0).expect("static grid"),
            heston: HestonParams::new(0.05, 0.25, 0.30),
            schedule,
            tau0: 0.137,
            levels: DEFAULT_LEVELS.to_vec(),
            tests: vec![TestKind::Pwy, TestKind::Rvpwy],
            seed,
            bootstrap_b: DEFAULT_B_MC,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 1 {
            return Err(invalid("Monte Carlo needs reps >= 1"));
        }
        if self.levels.is_empty() || self.levels.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
            return Err(invalid("levels must be a nonempty subset of (0,1)"));
        }
        if !(self.tau0 > 0.0 && self.tau0 < 1.0) {
            return Err(invalid("tau0 must lie in (0,1)"));
        }
        if self.tests.contains(&TestKind::Btpwy) && self.bootstrap_b < 1 {
            return Err(invalid("BTPWY needs bootstrap B >= 1"));
        }
        self.heston.validate()?;
        self.schedule.validate()
    }

    /// Short label describing the parameter point.
    pub fn point_label(&self) -> String {
        let sched = match self.schedule {
            KappaSchedule::Null => "kappa*=0".to_string(),
            KappaSchedule::OneShift { tau, kappa } => format!("kappa*={kappa} tau*={tau}"),
            KappaSchedule::MildBubbleCrash {
                tau1, tau2, c, alpha, ..
            } => format!("tau1={tau1} tau2={tau2} c={c} alpha={alpha}"),
        };
        format!(
            "{sched} a={} b={} c={}",
            self.heston.a, self.heston.b, self.heston.c_vv
        )
    }

    fn needs(&self, t: TestKind) -> bool {
        self.tests.contains(&t)
    }
}

/// Statistics of one replication. `None` marks a statistic that could not be
/// computed (e.g. an interval with zero realized variance).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationStats {
    pub pwy: Option<f64>,
    pub rvpwy: Option<f64>,
    pub cusum: Option<f64>,
    pub bt_p_value: Option<f64>,
}

/// Simulate replication `rep` of `config` and evaluate the requested statistics.
pub fn replication(config: &McConfig, rep: usize) -> Result<ReplicationStats> {
    let seed = derive_seed(config.seed, domain::REPLICATION, rep as u64);
    let path = simulate_heston(&config.heston, &config.schedule, &config.grid, seed)?;
    let coarse = path.coarse_log_prices();
    let tau0 = config.tau0;

    let pwy = if config.needs(TestKind::Pwy) || config.needs(TestKind::Scpwy) {
        sup_df_rolling(&coarse, tau0).ok()
    } else {
        None
    };
    let (rvpwy, cusum) = if config.needs(TestKind::Rvpwy) || config.needs(TestKind::Cusum) {
        let rv = rv_series(&path, false)?;
        match build_pseudo_sample(&path.coarse_increments(), &rv.vols()) {
            Ok(ps) => (
                config
                    .needs(TestKind::Rvpwy)
                    .then(|| sup_df_rolling(&ps.values, tau0).ok())
                    .flatten(),
                config
                    .needs(TestKind::Cusum)
                    .then(|| cusum_stat(&ps.values, tau0).ok())
                    .flatten(),
            ),
            Err(Error::DegenerateVolatility { .. }) => (None, None),
            Err(e) => return Err(e),
        }
    } else {
        (None, None)
    };
    let bt_p_value = if config.needs(TestKind::Btpwy) {
        let boot_seed = derive_seed(seed, domain::BOOTSTRAP, 0);
        wild_bootstrap_pwy(&coarse, tau0, config.bootstrap_b, boot_seed)
            .ok()
            .map(|r| r.p_value)
    } else {
        None
    };
    Ok(ReplicationStats {
        pwy,
        rvpwy,
        cusum,
        bt_p_value,
    })
}

/// All replications of `config`, in replication order.
pub fn run_replications(config: &McConfig) -> Result<Vec<ReplicationStats>> {
    config.validate()?;
    (0..config.reps)
        .into_par_iter()
        .map(|rep| replication(config, rep))
        .collect()
}

/// Empirical `(1 − level)` order-statistic quantile of null statistics.
pub fn size_corrected_cv(null_stats: &[f64], level: f64) -> Result<f64> {
    upper_quantile(null_stats, level)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub test: TestKind,
    pub level: f64,
    pub point: String,
    pub frequency: f64,
    pub std_error: f64,
    /// Replications on which the statistic was defined.
    pub valid_reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub rows: Vec<FrequencyRow>,
    pub reps: usize,
    pub seed: u64,
    pub runtime_secs: f64,
}

impl FrequencyTable {
    pub fn get(&self, test: TestKind, level: f64, point: &str) -> Option<&FrequencyRow> {
        self.rows
            .iter()
            .find(|r| r.test == test && (r.level - level).abs() < 1e-12 && r.point == point)
    }

    /// Frequency for `(test, level)` when the table holds a single point.
    pub fn frequency(&self, test: TestKind, level: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.test == test && (r.level - level).abs() < 1e-12)
            .map(|r| r.frequency)
    }

    fn points(&self) -> Vec<String> {
        let mut pts: Vec<String> = Vec::new();
        for r in &self.rows {
            if !pts.contains(&r.point) {
                pts.push(r.point.clone());
            }
        }
        pts
    }

    /// Tab-delimited layout: one block per level, rows = parameter points,
    /// columns = tests.
    pub fn to_delimited(&self) -> String {
        let mut tests: Vec<TestKind> = Vec::new();
        let mut levels: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !tests.contains(&r.test) {
                tests.push(r.test);
            }
            if !levels.iter().any(|l| (l - r.level).abs() < 1e-12) {
                levels.push(r.level);
            }
        }
        tests.sort();
        levels.sort_by(|a, b| b.total_cmp(a));
        let mut out = format!("# reps = {}\n# seed = {}\n", self.reps, self.seed);
        out.push_str("level\tpoint");
        for t in &tests {
            out.push_str(&format!("\t{t}"));
        }
        out.push('\n');
        for &level in &levels {
            for p in self.points() {
                out.push_str(&format!("{level}\t{p}"));
                for &t in &tests {
                    match self.get(t, level, &p) {
                        Some(r) => out.push_str(&format!("\t{:.3}", r.frequency)),
                        None => out.push_str("\t-"),
                    }
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn merge(mut self, other: FrequencyTable) -> FrequencyTable {
        self.rows.extend(other.rows);
        self.runtime_secs += other.runtime_secs;
        self
    }
}

fn frequency_row(
    test: TestKind,
    level: f64,
    point: &str,
    decisions: impl Iterator<Item = Option<bool>>,
) -> FrequencyRow {
    let (mut hits, mut valid) = (0usize, 0usize);
    for d in decisions.flatten() {
        valid += 1;
        hits += d as usize;
    }
    let frequency = if valid == 0 { 0.0 } else { hits as f64 / valid as f64 };
    FrequencyRow {
        test,
        level,
        point: point.to_string(),
        frequency,
        std_error: binomial_se(frequency, valid.max(1)),
        valid_reps: valid,
    }
}

struct CriticalValues {
    sup: Vec<(f64, f64)>,
    cusum: Vec<(f64, f64)>,
    scpwy: Vec<(f64, f64)>,
}

impl CriticalValues {
    fn lookup(table: &[(f64, f64)], level: f64) -> f64 {
        table
            .iter()
            .find(|(l, _)| (l - level).abs() < 1e-12)
            .map(|&(_, v)| v)
            .expect("critical value prepared for every level")
    }
}

fn prepare_cvs(config: &McConfig, null_pwy: Option<&[f64]>) -> Result<CriticalValues> {
    let n = config.grid.n();
    let mut sup = Vec::new();
    let mut fallback = None;
    for &level in &config.levels {
        let v = match builtin_cv(CvKind::PwySup, level) {
            Ok(v) => v,
            Err(_) => {
                if fallback.is_none() {
                    fallback = Some(simulate_null_table(
                        n,
                        config.tau0,
                        FALLBACK_TABLE_REPS,
                        derive_seed(config.seed, domain::NULL_TABLE, 0),
                        &config.levels,
                    )?);
                }
                fallback.as_ref().unwrap().get(level).unwrap()
            }
        };
        sup.push((level, v));
    }
    let cusum = if config.needs(TestKind::Cusum) {
        simulate_cusum_table(
            n,
            config.tau0,
            FALLBACK_TABLE_REPS,
            derive_seed(config.seed, domain::CUSUM_TABLE, 0),
            &config.levels,
        )?
        .quantiles
    } else {
        Vec::new()
    };
    let scpwy = match (config.needs(TestKind::Scpwy), null_pwy) {
        (true, Some(stats)) => config
            .levels
            .iter()
            .map(|&l| Ok((l, size_corrected_cv(stats, l)?)))
            .collect::<Result<Vec<_>>>()?,
        (true, None) => return Err(invalid("SCPWY requires a paired null run")),
        (false, _) => Vec::new(),
    };
    Ok(CriticalValues { sup, cusum, scpwy })
}

fn tabulate(config: &McConfig, stats: &[ReplicationStats], cvs: &CriticalValues) -> Vec<FrequencyRow> {
    let point = config.point_label();
    let mut rows = Vec::new();
    for &test in &TestKind::ALL {
        if !config.needs(test) {
            continue;
        }
        for &level in &config.levels {
            let row = match test {
                TestKind::Pwy => {
                    let cv = CriticalValues::lookup(&cvs.sup, level);
                    frequency_row(test, level, &point, stats.iter().map(|s| s.pwy.map(|v| v > cv)))
                }
                TestKind::Rvpwy => {
                    let cv = CriticalValues::lookup(&cvs.sup, level);
                    frequency_row(test, level, &point, stats.iter().map(|s| s.rvpwy.map(|v| v > cv)))
                }
                TestKind::Scpwy => {
                    let cv = CriticalValues::lookup(&cvs.scpwy, level);
                    frequency_row(test, level, &point, stats.iter().map(|s| s.pwy.map(|v| v > cv)))
                }
                TestKind::Cusum => {
                    let cv = CriticalValues::lookup(&cvs.cusum, level);
                    frequency_row(test, level, &point, stats.iter().map(|s| s.cusum.map(|v| v > cv)))
                }
                TestKind::Btpwy => frequency_row(
                    test,
                    level,
                    &point,
                    stats.iter().map(|s| s.bt_p_value.map(|p| p <= level)),
                ),
            };
            rows.push(row);
        }
    }
    rows
}

/// Rejection frequencies under the null schedule.
pub fn run_size_experiment(config: &McConfig) -> Result<FrequencyTable> {
    if config.schedule != KappaSchedule::Null {
        return Err(invalid("size experiments require the null schedule"));
    }
    let start = Instant::now();
    let stats = run_replications(config)?;
    let null_pwy: Vec<f64> = stats.iter().filter_map(|s| s.pwy).collect();
    let cvs = prepare_cvs(config, Some(&null_pwy))?;
    Ok(FrequencyTable {
        rows: tabulate(config, &stats, &cvs),
        reps: config.reps,
        seed: config.seed,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

/// PWY statistics of a null run, for size correction.
pub fn null_pwy_stats(null: &McConfig) -> Result<Vec<f64>> {
    if null.schedule != KappaSchedule::Null {
        return Err(invalid("the paired run must use the null schedule"));
    }
    let cfg = McConfig {
        tests: vec![TestKind::Pwy],
        ..null.clone()
    };
    Ok(run_replications(&cfg)?.iter().filter_map(|s| s.pwy).collect())
}

fn check_pairing(config: &McConfig, null: &McConfig) -> Result<()> {
    if null.grid != config.grid || null.heston != config.heston || null.tau0 != config.tau0 {
        return Err(invalid(
            "paired null run must share grid, volatility parameters and tau0",
        ));
    }
    Ok(())
}

/// Rejection frequencies under an alternative, with SCPWY sized against the
/// PWY statistics of `null` (which must differ from `config` only in the
/// schedule). Sharing the seed pairs the volatility paths of both runs.
pub fn run_power_experiment(config: &McConfig, null: Option<&McConfig>) -> Result<FrequencyTable> {
    let null_stats = match null {
        Some(nc) => {
            check_pairing(config, nc)?;
            Some(null_pwy_stats(nc)?)
        }
        None => None,
    };
    run_power_with_null_stats(config, null_stats.as_deref())
}

/// Power experiment against precomputed null PWY statistics.
pub fn run_power_with_null_stats(config: &McConfig, null_pwy: Option<&[f64]>) -> Result<FrequencyTable> {
    let start = Instant::now();
    let cvs = prepare_cvs(config, null_pwy)?;
    let stats = run_replications(config)?;
    Ok(FrequencyTable {
        rows: tabulate(config, &stats, &cvs),
        reps: config.reps,
        seed: config.seed,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

/// Power over several parameter points. Each point is paired with a null run
/// sharing its volatility parameters when SCPWY is requested.
pub fn run_sweep(points: &[McConfig]) -> Result<FrequencyTable> {
    let mut table: Option<FrequencyTable> = None;
    for cfg in points {
        let null_cfg = McConfig {
            schedule: KappaSchedule::Null,
            ..cfg.clone()
        };
        let null_stats = if cfg.needs(TestKind::Scpwy) {
            Some(null_pwy_stats(&null_cfg)?)
        } else {
            None
        };
        let t = run_power_with_null_stats(cfg, null_stats.as_deref())?;
        table = Some(match table {
            Some(acc) => acc.merge(t),
            None => t,
        });
    }
    table.ok_or_else(|| invalid("sweep needs at least one point"))
}
