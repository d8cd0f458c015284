use proptest::prelude::*;
use rvpwy_core::io::{
    ingest, ingest_bytes, run_test, series_from_path, write_log_price_csv, CalendarUnit, IngestSpec,
    IntervalRule, PriceScale, Provenance, ReportEpisode, TestChoice, TestOptions, TestReport,
};
use rvpwy_core::sim::{simulate_heston, HestonParams, KappaSchedule};
use rvpwy_core::GridSpec;

fn finite() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
}

prop_compose! {
    fn episode()(start in 0usize..1000, len in prop::option::of(1usize..500), f in finite(), g in finite()) -> ReportEpisode {
        ReportEpisode {
            start_index: start,
            start_date: format!("2020-01-{:02}", start % 28 + 1),
            start_fraction: f,
            end_index: len.map(|l| start + l),
            end_date: len.map(|l| format!("idx{}", start + l)),
            end_fraction: len.map(|_| g),
        }
    }
}

prop_compose! {
    fn report()(
        value in finite(),
        cvs in prop::collection::vec(finite(), 3),
        tau0 in finite(),
        detector in finite(),
        dur in finite(),
        episodes in prop::collection::vec(episode(), 0..4),
        seed in prop::option::of(any::<u64>()),
        demeaned in any::<bool>(),
        proxy in any::<bool>(),
    ) -> TestReport {
        let levels = [0.01, 0.05, 0.1];
        TestReport {
            statistic: "RVPWY".into(),
            value,
            critical_values: levels.iter().copied().zip(cvs.iter().copied()).collect(),
            decisions: levels.iter().zip(&cvs).map(|(&l, &cv)| (l, value > cv)).collect(),
            tau0,
            detector_cv: detector,
            min_duration: dur,
            episodes,
            provenance: Provenance {
                input_sha256: "ab".repeat(32),
                seed,
                version: "0.1.0".into(),
                demeaned,
                vol_proxy: proxy.then(|| "cd".repeat(32)),
                n: 252,
            },
        }
    }
}

proptest! {
    #[test]
    fn report_text_round_trips(r in report()) {
        let back: TestReport = r.to_text().parse().unwrap();
        prop_assert_eq!(back, r);
    }
}

#[test]
fn ingest_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridSpec::new(30, 12, 1.0).unwrap();
    let path = simulate_heston(&HestonParams::new(0.05, 0.25, 0.3), &KappaSchedule::Null, &grid, 4).unwrap();
    let file = dir.path().join("p.csv");
    write_log_price_csv(&file, &path.log_prices).unwrap();
    let spec = IngestSpec::new(&file, PriceScale::LogPrice, IntervalRule::FixedCount(12));
    let a = ingest(&spec).unwrap();
    let b = ingest(&spec).unwrap();
    assert_eq!(a.path_digest(), b.path_digest());
    assert_eq!(a.input_sha256, b.input_sha256);
    // The written file reproduces the simulated path exactly.
    assert_eq!(a.log_prices, path.log_prices);
    assert_eq!(a.price_path().unwrap().coarse_log_prices(), path.coarse_log_prices());
}

#[test]
fn null_fixtures_rarely_reject() {
    let grid = GridSpec::new(252, 78, 1.0).unwrap();
    let opts = TestOptions::default();
    let mut accepted = 0;
    for seed in 0..100 {
        let p = simulate_heston(&HestonParams::constant(0.25), &KappaSchedule::Null, &grid, seed).unwrap();
        let out = run_test(&series_from_path(&p, false), None, &opts).unwrap();
        let (_, reject) = out.report.decisions.iter().find(|(l, _)| *l == 0.10).unwrap();
        accepted += !reject as usize;
    }
    assert!(accepted >= 85, "{accepted}/100 fixtures accepted at 10%");
}

#[test]
fn one_shift_golden_run() {
    let grid = GridSpec::new(252, 78, 1.0).unwrap();
    let sched = KappaSchedule::OneShift { tau: 0.5, kappa: 0.02 };
    let p = simulate_heston(&HestonParams::new(0.05, 0.25, 0.3), &sched, &grid, 0).unwrap();
    let out = run_test(&series_from_path(&p, false), None, &TestOptions::default()).unwrap();
    let r = &out.report;
    assert!(r.decisions.iter().any(|&(l, d)| l == 0.05 && d));
    let r_e = r.episodes[0].start_fraction;
    assert!((0.45..=0.60).contains(&r_e), "r_e = {r_e}");
    for (&(l, cv), &(l2, d)) in r.critical_values.iter().zip(&r.decisions) {
        assert_eq!(l, l2);
        assert_eq!(d, r.value > cv);
    }
}

fn monthly_csv(daily_returns: &[(String, f64)]) -> String {
    let mut s = String::from("timestamp,price\n");
    for (d, r) in daily_returns {
        s.push_str(&format!("{d},{r}\n"));
    }
    s
}

fn month_days(months: usize, f: impl Fn(usize, usize) -> f64) -> Vec<(String, f64)> {
    let mut v = Vec::new();
    for mo in 0..months {
        let (y, m) = (2000 + mo / 12, mo % 12 + 1);
        for d in 1..=20 {
            v.push((format!("{y}-{m:02}-{d:02}"), f(mo, d)));
        }
    }
    v
}

#[test]
fn monthly_from_daily_with_demeaning() {
    let rows = month_days(60, |mo, d| 0.01 * (((mo * 7 + d * 13) % 11) as f64 - 5.0) / 5.0 + 0.001);
    let csv = monthly_csv(&rows);
    let mut spec = IngestSpec::new("mem", PriceScale::LogReturn, IntervalRule::Calendar(CalendarUnit::Month));
    spec.demean = true;
    let series = ingest_bytes(csv.as_bytes(), &spec).unwrap();
    assert_eq!(series.n(), 60);
    let out = run_test(&series, None, &TestOptions::default()).unwrap();
    assert!(out.report.provenance.demeaned);
    assert_eq!(out.report.provenance.n, 60);
    let pwy = run_test(&series, None, &TestOptions { test: TestChoice::Pwy, ..TestOptions::default() }).unwrap();
    assert!(!pwy.report.provenance.demeaned);
    assert_eq!(pwy.report.statistic, "PWY");
}

#[test]
fn nominal_volatility_proxy() {
    let nominal = month_days(48, |mo, d| 0.02 * (((mo * 5 + d * 3) % 7) as f64 - 3.0) / 3.0);
    let real: Vec<(String, f64)> = nominal.iter().map(|(t, r)| (t.clone(), r - 0.002)).collect();
    let spec = |demean| {
        let mut s = IngestSpec::new("mem", PriceScale::LogReturn, IntervalRule::Calendar(CalendarUnit::Month));
        s.demean = demean;
        s
    };
    let nom = ingest_bytes(monthly_csv(&nominal).as_bytes(), &spec(true)).unwrap();
    let re = ingest_bytes(monthly_csv(&real).as_bytes(), &spec(false)).unwrap();
    let with_proxy = run_test(&re, Some(&nom), &TestOptions::default()).unwrap();
    assert_eq!(with_proxy.report.provenance.vol_proxy.as_deref(), Some(nom.input_sha256.as_str()));
    assert!(with_proxy.report.provenance.demeaned);
    let without = run_test(&re, None, &TestOptions::default()).unwrap();
    assert_eq!(without.report.provenance.vol_proxy, None);

    let short = ingest_bytes(monthly_csv(&nominal[..20 * 40]).as_bytes(), &spec(true)).unwrap();
    assert!(run_test(&re, Some(&short), &TestOptions::default()).is_err());
}

#[test]
fn dates_map_to_indices() {
    let grid = GridSpec::new(100, 5, 1.0).unwrap();
    let sched = KappaSchedule::OneShift { tau: 0.4, kappa: 0.08 };
    let p = simulate_heston(&HestonParams::new(0.05, 0.25, 0.3), &sched, &grid, 3).unwrap();
    let series = series_from_path(&p, false);
    let out = run_test(&series, None, &TestOptions::default()).unwrap();
    assert!(!out.report.episodes.is_empty());
    for e in &out.report.episodes {
        assert_eq!(e.start_date, (e.start_index * 5).to_string());
        assert_eq!(e.start_fraction, e.start_index as f64 / 100.0);
    }
    let trace = out.trace_to_delimited();
    assert_eq!(trace.lines().count(), out.trace.len() + 1);
}
