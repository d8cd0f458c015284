//! Data ingestion, report serialization and the end-to-end test pipeline.
//!
//! Input files are delimited text with a header row and (at least) a
//! timestamp column and a price column. Timestamps are ISO-8601 date-times,
//! dates, or integer indices, and must be strictly increasing.
//!
//! For raw- and log-price input the first row is the anchor observation
//! `y_{t_0}`; every later row closes one fine step and belongs to the coarse
//! interval of its own timestamp. Log-return input is cumulated from zero and
//! each return belongs to the interval of its timestamp.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::critical::{builtin_cv, CvKind, DEFAULT_LEVELS, DF_MARGINAL_CV_5};
use crate::datestamp::{date_stamp, default_min_duration, EpisodeList};
use crate::devol::build_pseudo_sample;
use crate::df::{detector_trace, sup_stat, DetectorTrace, StatKind};
use crate::error::{invalid, Error, Result};
use crate::grid::GridSpec;
use crate::rv::{rv_series_from_bounds, RvSeries};
use crate::sim::PricePath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PriceScale {
    RawPrice,
    LogPrice,
    LogReturn,
}

impl FromStr for PriceScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw-price" | "price" => Ok(PriceScale::RawPrice),
            "log-price" => Ok(PriceScale::LogPrice),
            "log-return" => Ok(PriceScale::LogReturn),
            other => Err(Error::Parse(format!("unknown price scale {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CalendarUnit {
    Day,
    Month,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntervalRule {
    /// Every `m` fine observations form one coarse interval.
    FixedCount(usize),
    /// Fine observations grouped by calendar day or month.
    Calendar(CalendarUnit),
}

impl FromStr for IntervalRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "day" => Ok(IntervalRule::Calendar(CalendarUnit::Day)),
            "month" => Ok(IntervalRule::Calendar(CalendarUnit::Month)),
            other => other
                .strip_prefix("count:")
                .unwrap_or(other)
                .parse::<usize>()
                .map(IntervalRule::FixedCount)
                .map_err(|_| Error::Parse(format!("unknown interval rule {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSpec {
    pub path: PathBuf,
    pub timestamp_column: String,
    pub price_column: String,
    pub scale: PriceScale,
    pub rule: IntervalRule,
    pub demean: bool,
    /// Accept calendar intervals with different bar counts.
    pub allow_unequal: bool,
    pub delimiter: u8,
}

impl IngestSpec {
    pub fn new(path: impl Into<PathBuf>, scale: PriceScale, rule: IntervalRule) -> Self {
        Self {
            path: path.into(),
            timestamp_column: "timestamp".into(),
            price_column: "price".into(),
            scale,
            rule,
            demean: false,
            allow_unequal: false,
            delimiter: b',',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Timestamp {
    Index(i64),
    DateTime(NaiveDateTime),
}

impl Timestamp {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(i) = s.parse::<i64>() {
            return Ok(Timestamp::Index(i));
        }
        const FORMATS: [&str; 4] = [
            "%Y-%m-%dT%H:%M:%S%.f",
            "%Y-%m-%d %H:%M:%S%.f",
            "%Y-%m-%dT%H:%M",
            "%Y-%m-%d %H:%M",
        ];
        for f in FORMATS {
            if let Ok(dt) = NaiveDateTime::parse_from_str(s, f) {
                return Ok(Timestamp::DateTime(dt));
            }
        }
        if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(s) {
            return Ok(Timestamp::DateTime(dt.naive_utc()));
        }
        if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
            return Ok(Timestamp::DateTime(d.and_hms_opt(0, 0, 0).expect("midnight")));
        }
        Err(Error::Ingest(format!("unparseable timestamp {s:?}")))
    }

    fn calendar_key(&self, unit: CalendarUnit) -> Result<String> {
        match self {
            Timestamp::Index(_) => Err(Error::Ingest(
                "calendar interval rule needs date-time timestamps".into(),
            )),
            Timestamp::DateTime(dt) => Ok(match unit {
                CalendarUnit::Day => dt.format("%Y-%m-%d").to_string(),
                CalendarUnit::Month => dt.format("%Y-%m").to_string(),
            }),
        }
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Timestamp::Index(i) => write!(f, "{i}"),
            Timestamp::DateTime(dt) => write!(f, "{}", dt.format("%Y-%m-%dT%H:%M:%S")),
        }
    }
}

/// Fine log-price series grouped into coarse intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestedSeries {
    pub log_prices: Vec<f64>,
    /// Fine indices of the coarse points `t_0..t_n`.
    pub bounds: Vec<usize>,
    /// Label of each coarse interval (calendar key or closing timestamp).
    pub labels: Vec<String>,
    pub demean: bool,
    /// SHA-256 of the raw input bytes.
    pub input_sha256: String,
}

impl IngestedSeries {
    pub fn n(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn coarse_log_prices(&self) -> Vec<f64> {
        self.bounds.iter().map(|&b| self.log_prices[b]).collect()
    }

    pub fn coarse_increments(&self) -> Vec<f64> {
        self.coarse_log_prices().windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn rv_series(&self) -> Result<RvSeries> {
        rv_series_from_bounds(&self.log_prices, &self.bounds, self.demean)
    }

    /// Steps per interval when every interval has the same count.
    pub fn steps_per_interval(&self) -> Option<usize> {
        let m = self.bounds[1] - self.bounds[0];
        self.bounds.windows(2).all(|w| w[1] - w[0] == m).then_some(m)
    }

    /// Regular grid view with unit interval length.
    pub fn price_path(&self) -> Result<PricePath> {
        let m = self
            .steps_per_interval()
            .ok_or_else(|| Error::UnequalBars("intervals differ in length".into()))?;
        if self.bounds[0] != 0 || *self.bounds.last().unwrap() + 1 != self.log_prices.len() {
            return Err(invalid("series has observations outside the interval grid"));
        }
        PricePath::observed(GridSpec::new(self.n(), m, 1.0)?, self.log_prices.clone())
    }

    /// SHA-256 over the little-endian bytes of the fine log prices and bounds.
    pub fn path_digest(&self) -> String {
        let mut h = Sha256::new();
        for v in &self.log_prices {
            h.update(v.to_le_bytes());
        }
        for b in &self.bounds {
            h.update((*b as u64).to_le_bytes());
        }
        hex(&h.finalize())
    }

    /// Label of coarse point `k` (`k ≥ 1` is the end of interval `k`).
    pub fn label_of(&self, k: usize) -> String {
        if k == 0 {
            "start".into()
        } else {
            self.labels[k - 1].clone()
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Read and group a delimited price file.
pub fn ingest(spec: &IngestSpec) -> Result<IngestedSeries> {
    let bytes = fs::read(&spec.path)
        .map_err(|e| Error::Ingest(format!("{}: {e}", spec.path.display())))?;
    ingest_bytes(&bytes, spec)
}

/// [`ingest`] on in-memory file contents.
pub fn ingest_bytes(bytes: &[u8], spec: &IngestSpec) -> Result<IngestedSeries> {
    let digest = hex(&Sha256::digest(bytes));
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Ingest(format!("missing column {name:?}")))
    };
    let ts_col = col(&spec.timestamp_column)?;
    let px_col = col(&spec.price_column)?;

    let mut stamps = Vec::new();
    let mut values = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let ts = Timestamp::parse(rec.get(ts_col).unwrap_or(""))
            .map_err(|e| Error::Ingest(format!("line {line}: {e}")))?;
        let raw = rec.get(px_col).unwrap_or("");
        let v: f64 = raw
            .parse()
            .map_err(|_| Error::Ingest(format!("line {line}: bad value {raw:?}")))?;
        if !v.is_finite() {
            return Err(Error::Ingest(format!("line {line}: non-finite value")));
        }
        if let Some(prev) = stamps.last() {
            let same_kind = matches!(
                (prev, &ts),
                (Timestamp::Index(_), Timestamp::Index(_)) | (Timestamp::DateTime(_), Timestamp::DateTime(_))
            );
            if !same_kind || ts <= *prev {
                return Err(Error::Ingest(format!(
                    "line {line}: timestamp {ts} does not strictly increase"
                )));
            }
        }
        stamps.push(ts);
        values.push(v);
    }

    let (log_prices, fine_stamps): (Vec<f64>, &[Timestamp]) = match spec.scale {
        PriceScale::RawPrice | PriceScale::LogPrice => {
            if values.len() < 2 {
                return Err(Error::Ingest("need an anchor row and at least one more".into()));
            }
            let logs = if spec.scale == PriceScale::RawPrice {
                values
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| {
                        if p > 0.0 {
                            Ok(p.ln())
                        } else {
                            Err(Error::Ingest(format!("line {}: non-positive price {p}", i + 2)))
                        }
                    })
                    .collect::<Result<Vec<_>>>()?
            } else {
                values
            };
            (logs, &stamps[1..])
        }
        PriceScale::LogReturn => {
            if values.is_empty() {
                return Err(Error::Ingest("no returns in input".into()));
            }
            let mut acc = 0.0;
            let mut logs = Vec::with_capacity(values.len() + 1);
            logs.push(acc);
            for r in &values {
                acc += r;
                logs.push(acc);
            }
            (logs, &stamps[..])
        }
    };

    let (bounds, labels) = group(fine_stamps, spec)?;
    Ok(IngestedSeries {
        log_prices,
        bounds,
        labels,
        demean: spec.demean,
        input_sha256: digest,
    })
}

/// Interval bounds and labels for fine points `1..=stamps.len()`.
fn group(stamps: &[Timestamp], spec: &IngestSpec) -> Result<(Vec<usize>, Vec<String>)> {
    let total = stamps.len();
    match spec.rule {
        IntervalRule::FixedCount(m) => {
            if m < 1 {
                return Err(invalid("fixed-count rule needs m >= 1"));
            }
            if total == 0 || !total.is_multiple_of(m) {
                return Err(Error::Ingest(format!(
                    "{total} fine steps do not split into intervals of {m}"
                )));
            }
            let n = total / m;
            let bounds = (0..=n).map(|i| i * m).collect();
            let labels = (1..=n).map(|i| stamps[i * m - 1].to_string()).collect();
            Ok((bounds, labels))
        }
        IntervalRule::Calendar(unit) => {
            let keys = stamps
                .iter()
                .map(|t| t.calendar_key(unit))
                .collect::<Result<Vec<_>>>()?;
            let mut bounds = vec![0];
            let mut labels: Vec<String> = Vec::new();
            for (j, key) in keys.iter().enumerate() {
                if labels.last() != Some(key) {
                    if j > 0 {
                        bounds.push(j);
                    }
                    labels.push(key.clone());
                }
            }
            bounds.push(total);
            let counts: Vec<usize> = bounds.windows(2).map(|w| w[1] - w[0]).collect();
            if !spec.allow_unequal {
                let modal = modal_count(&counts);
                let offending: Vec<String> = counts
                    .iter()
                    .zip(&labels)
                    .filter(|(c, _)| **c != modal)
                    .map(|(c, l)| format!("{l} ({c} bars, expected {modal})"))
                    .collect();
                if !offending.is_empty() {
                    return Err(Error::UnequalBars(offending.join(", ")));
                }
            }
            if spec.demean {
                if let Some((c, l)) = counts.iter().zip(&labels).find(|(c, _)| **c < 2) {
                    return Err(Error::Ingest(format!(
                        "interval {l} has {c} bar(s); demeaning needs at least 2"
                    )));
                }
            }
            Ok((bounds, labels))
        }
    }
}

fn modal_count(counts: &[usize]) -> usize {
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    let mut best = (sorted[0], 0);
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&c| c == sorted[i]).count();
        if j > best.1 {
            best = (sorted[i], j);
        }
        i += j;
    }
    best.0
}

/// Write a fine log-price path as `timestamp,price` with integer timestamps.
pub fn write_log_price_csv(path: &Path, log_prices: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["timestamp", "price"])?;
    for (i, v) in log_prices.iter().enumerate() {
        w.write_record([i.to_string(), format!("{v:.17e}")])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestChoice {
    Pwy,
    Rvpwy,
}

impl FromStr for TestChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pwy" => Ok(TestChoice::Pwy),
            "rvpwy" => Ok(TestChoice::Rvpwy),
            other => Err(Error::Parse(format!("unknown test {other:?}"))),
        }
    }
}

impl TestChoice {
    pub fn name(&self) -> &'static str {
        match self {
            TestChoice::Pwy => "PWY",
            TestChoice::Rvpwy => "RVPWY",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestOptions {
    pub test: TestChoice,
    pub tau0: f64,
    /// Detector threshold for date-stamping.
    pub detector_cv: f64,
    /// Separation between origination and conclusion; `None` means `log(n)/n`.
    pub min_duration: Option<f64>,
    pub seed: Option<u64>,
}

impl Default for TestOptions {
    fn default() -> Self {
        Self {
            test: TestChoice::Rvpwy,
            tau0: 0.1,
            detector_cv: DF_MARGINAL_CV_5,
            min_duration: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEpisode {
    pub start_index: usize,
    pub start_date: String,
    pub start_fraction: f64,
    pub end_index: Option<usize>,
    pub end_date: Option<String>,
    pub end_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub input_sha256: String,
    pub seed: Option<u64>,
    pub version: String,
    pub demeaned: bool,
    /// Digest of the series whose realized volatility stood in for the tested series'.
    pub vol_proxy: Option<String>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: String,
    pub value: f64,
    /// `(level, critical value)`.
    pub critical_values: Vec<(f64, f64)>,
    /// `(level, reject)`.
    pub decisions: Vec<(f64, bool)>,
    pub tau0: f64,
    pub detector_cv: f64,
    pub min_duration: f64,
    pub episodes: Vec<ReportEpisode>,
    pub provenance: Provenance,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_num(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse(format!("bad number {s:?}")))
}

impl TestReport {
    /// Tab-separated `key value` lines; floats carry 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# rvpwy test report\n");
        let mut kv = |k: &str, v: String| out.push_str(&format!("{k}\t{v}\n"));
        kv("statistic", self.statistic.clone());
        kv("value", num(self.value));
        kv("tau0", num(self.tau0));
        for (l, cv) in &self.critical_values {
            kv(&format!("cv.{l}"), num(*cv));
        }
        for (l, d) in &self.decisions {
            kv(&format!("decision.{l}"), if *d { "reject" } else { "accept" }.into());
        }
        kv("detector_cv", num(self.detector_cv));
        kv("min_duration", num(self.min_duration));
        kv("provenance.input_sha256", self.provenance.input_sha256.clone());
        kv(
            "provenance.seed",
            self.provenance.seed.map_or("-".into(), |s| s.to_string()),
        );
        kv("provenance.version", self.provenance.version.clone());
        kv("provenance.demeaned", self.provenance.demeaned.to_string());
        kv(
            "provenance.vol_proxy",
            self.provenance.vol_proxy.clone().unwrap_or_else(|| "-".into()),
        );
        kv("provenance.n", self.provenance.n.to_string());
        for e in &self.episodes {
            out.push_str(&format!(
                "episode\t{}\t{}\t{}\t{}\t{}\t{}\n",
                e.start_index,
                e.start_date,
                num(e.start_fraction),
                e.end_index.map_or("-".into(), |v| v.to_string()),
                e.end_date.clone().unwrap_or_else(|| "-".into()),
                e.end_fraction.map_or("-".into(), num),
            ));
        }
        out
    }

    /// Rejection marker in the `*`/`**`/`***` convention (10%/5%/1%).
    pub fn stars(&self) -> &'static str {
        let rejects = |lvl: f64| {
            self.decisions
                .iter()
                .any(|(l, d)| (l - lvl).abs() < 1e-12 && *d)
        };
        if rejects(0.01) {
            "***"
        } else if rejects(0.05) {
            "**"
        } else if rejects(0.10) {
            "*"
        } else {
            ""
        }
    }
}

impl FromStr for TestReport {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut statistic = None;
        let mut value = None;
        let mut tau0 = None;
        let mut detector_cv = None;
        let mut min_duration = None;
        let mut critical_values = Vec::new();
        let mut decisions = Vec::new();
        let mut episodes = Vec::new();
        let mut prov = Provenance {
            input_sha256: String::new(),
            seed: None,
            version: String::new(),
            demeaned: false,
            vol_proxy: None,
            n: 0,
        };
        let opt = |v: &str| (v != "-").then(|| v.to_string());
        for line in s.lines().filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let cols: Vec<&str> = line.split('\t').collect();
            let bad = || Error::Parse(format!("bad report line {line:?}"));
            let key = cols[0];
            if key == "episode" {
                if cols.len() != 7 {
                    return Err(bad());
                }
                episodes.push(ReportEpisode {
                    start_index: cols[1].parse().map_err(|_| bad())?,
                    start_date: cols[2].to_string(),
                    start_fraction: parse_num(cols[3])?,
                    end_index: opt(cols[4]).map(|v| v.parse()).transpose().map_err(|_| bad())?,
                    end_date: opt(cols[5]),
                    end_fraction: opt(cols[6]).map(|v| parse_num(&v)).transpose()?,
                });
                continue;
            }
            let val = *cols.get(1).ok_or_else(bad)?;
            match key {
                "statistic" => statistic = Some(val.to_string()),
                "value" => value = Some(parse_num(val)?),
                "tau0" => tau0 = Some(parse_num(val)?),
                "detector_cv" => detector_cv = Some(parse_num(val)?),
                "min_duration" => min_duration = Some(parse_num(val)?),
                "provenance.input_sha256" => prov.input_sha256 = val.to_string(),
                "provenance.seed" => {
                    prov.seed = opt(val).map(|v| v.parse()).transpose().map_err(|_| bad())?
                }
                "provenance.version" => prov.version = val.to_string(),
                "provenance.demeaned" => prov.demeaned = val == "true",
                "provenance.vol_proxy" => prov.vol_proxy = opt(val),
                "provenance.n" => prov.n = val.parse().map_err(|_| bad())?,
                k if k.starts_with("cv.") => {
                    critical_values.push((parse_num(&k[3..])?, parse_num(val)?))
                }
                k if k.starts_with("decision.") => {
                    decisions.push((parse_num(&k[9..])?, val == "reject"))
                }
                _ => return Err(bad()),
            }
        }
        let missing = |k: &str| Error::Parse(format!("report lacks {k}"));
        Ok(TestReport {
            statistic: statistic.ok_or_else(|| missing("statistic"))?,
            value: value.ok_or_else(|| missing("value"))?,
            critical_values,
            decisions,
            tau0: tau0.ok_or_else(|| missing("tau0"))?,
            detector_cv: detector_cv.ok_or_else(|| missing("detector_cv"))?,
            min_duration: min_duration.ok_or_else(|| missing("min_duration"))?,
            episodes,
            provenance: prov,
        })
    }
}

/// Output of the test pipeline: the report plus the detector trace behind it.
#[derive(Debug, Clone)]
pub struct TestOutcome {
    pub report: TestReport,
    pub trace: DetectorTrace,
    pub episodes: EpisodeList,
    pub labels: Vec<String>,
}

impl TestOutcome {
    /// Delimited detector trace `index, date, tau, stat, cv` for plotting.
    pub fn trace_to_delimited(&self) -> String {
        let mut out = String::from("index\tdate\ttau\tstat\tcv\n");
        for (m, &k) in self.trace.endpoints.iter().enumerate() {
            let date = if k == 0 { "start" } else { &self.labels[k - 1] };
            let stat = self.trace.stats[m].map_or("NaN".to_string(), num);
            out.push_str(&format!(
                "{k}\t{date}\t{}\t{stat}\t{}\n",
                num(k as f64 / self.trace.n as f64),
                num(self.report.detector_cv)
            ));
        }
        out
    }
}

/// Run PWY or RVPWY on an ingested series. With `vol_source`, realized
/// variances come from that series instead (e.g. a nominal index standing in
/// for a real index); both must have the same number of intervals.
pub fn run_test(
    series: &IngestedSeries,
    vol_source: Option<&IngestedSeries>,
    opts: &TestOptions,
) -> Result<TestOutcome> {
    let n = series.n();
    let trace = match opts.test {
        TestChoice::Pwy => detector_trace(&series.coarse_log_prices(), opts.tau0)?,
        TestChoice::Rvpwy => {
            let rv_src = vol_source.unwrap_or(series);
            if rv_src.n() != n {
                return Err(invalid(format!(
                    "volatility source has {} intervals, tested series has {n}",
                    rv_src.n()
                )));
            }
            let rv = rv_src.rv_series()?;
            let ps = build_pseudo_sample(&series.coarse_increments(), &rv.vols())?;
            detector_trace(&ps.values, opts.tau0)?.with_kind(StatKind::Rvdf)
        }
    };
    let value = sup_stat(&trace)?;
    let critical_values = DEFAULT_LEVELS
        .iter()
        .map(|&l| Ok((l, builtin_cv(CvKind::PwySup, l)?)))
        .collect::<Result<Vec<_>>>()?;
    let decisions = critical_values.iter().map(|&(l, cv)| (l, value > cv)).collect();

    let min_duration = opts.min_duration.unwrap_or_else(|| default_min_duration(n));
    let episodes = date_stamp(&trace, opts.detector_cv, min_duration)?.filter_min_length(min_duration);
    let report_episodes = episodes
        .episodes
        .iter()
        .map(|e| ReportEpisode {
            start_index: e.start_index,
            start_date: series.label_of(e.start_index),
            start_fraction: e.r_e,
            end_index: e.end_index,
            end_date: e.end_index.map(|k| series.label_of(k)),
            end_fraction: e.r_f,
        })
        .collect();

    let demeaned = match opts.test {
        TestChoice::Rvpwy => vol_source.unwrap_or(series).demean,
        TestChoice::Pwy => false,
    };
    let report = TestReport {
        statistic: opts.test.name().into(),
        value,
        critical_values,
        decisions,
        tau0: opts.tau0,
        detector_cv: opts.detector_cv,
        min_duration,
        episodes: report_episodes,
        provenance: Provenance {
            input_sha256: series.input_sha256.clone(),
            seed: opts.seed,
            version: env!("CARGO_PKG_VERSION").into(),
            demeaned,
            vol_proxy: match opts.test {
                TestChoice::Rvpwy => vol_source.map(|v| v.input_sha256.clone()),
                TestChoice::Pwy => None,
            },
            n,
        },
    };
    Ok(TestOutcome {
        report,
        trace,
        episodes,
        labels: series.labels.clone(),
    })
}

/// Ingest and test in one call.
pub fn run_test_command(
    spec: &IngestSpec,
    vol_spec: Option<&IngestSpec>,
    opts: &TestOptions,
) -> Result<TestOutcome> {
    let series = ingest(spec)?;
    let vol = vol_spec.map(ingest).transpose()?;
    run_test(&series, vol.as_ref(), opts)
}

/// Wrap a simulated path as an ingested series with integer labels.
pub fn series_from_path(path: &PricePath, demean: bool) -> IngestedSeries {
    let n = path.grid.n();
    let m = path.grid.m();
    let mut h = Sha256::new();
    for v in &path.log_prices {
        h.update(v.to_le_bytes());
    }
    IngestedSeries {
        log_prices: path.log_prices.clone(),
        bounds: (0..=n).map(|i| i * m).collect(),
        labels: (1..=n).map(|i| (i * m).to_string()).collect(),
        demean,
        input_sha256: hex(&h.finalize()),
    }
}
