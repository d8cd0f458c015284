use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rvpwy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rvpwy"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field<'a>(report: &'a str, key: &str) -> &'a str {
    report
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('\t')))
        .unwrap_or_else(|| panic!("no {key} in report:\n{report}"))
}

fn simulate(dir: &Path, name: &str, extra: &[&str]) -> String {
    let out = dir.join(name);
    let out_s = out.to_str().unwrap().to_string();
    let mut args = vec!["simulate", "--out", &out_s];
    args.extend_from_slice(extra);
    let o = rvpwy(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out_s
}

#[test]
fn one_shift_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate(dir.path(), "p.csv", &["--seed", "0", "--kappa", "0.02", "--tau-star", "0.5"]);
    let trace = dir.path().join("trace.tsv");
    let o = rvpwy(&["test", &path, "--interval", "78", "--trace-out", trace.to_str().unwrap()]);
    assert!(o.status.success());
    let report = stdout(&o);
    assert_eq!(field(&report, "statistic"), "RVPWY");
    assert_eq!(field(&report, "decision.0.05"), "reject");
    assert_eq!(field(&report, "provenance.n"), "252");
    let first = report.lines().find(|l| l.starts_with("episode\t")).expect("an episode");
    let r_e: f64 = first.split('\t').nth(3).unwrap().parse().unwrap();
    assert!((0.45..=0.60).contains(&r_e), "{r_e}");

    let t = fs::read_to_string(&trace).unwrap();
    assert!(t.starts_with("index\tdate\ttau\tstat\tcv"));
    assert_eq!(t.lines().count(), 252 - 26 + 2);

    let ds = stdout(&rvpwy(&["datestamp", &path, "--interval", "78"]));
    assert!(ds.lines().nth(1).unwrap().starts_with(first.split('\t').nth(1).unwrap()));
}

#[test]
fn same_input_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate(dir.path(), "p.csv", &["--seed", "9", "--n", "120", "--m", "20"]);
    let a = stdout(&rvpwy(&["test", &path, "--interval", "20", "--test", "pwy"]));
    let b = stdout(&rvpwy(&["test", &path, "--interval", "20", "--test", "pwy"]));
    assert_eq!(a, b);
    assert_eq!(field(&a, "statistic"), "PWY");
}

#[test]
fn json_report_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate(dir.path(), "p.csv", &["--seed", "2", "--n", "100", "--m", "10"]);
    let out = dir.path().join("r.json");
    let o = rvpwy(&["test", &path, "--interval", "10", "--json", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).is_empty());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["statistic"], "RVPWY");
    assert_eq!(v["critical_values"].as_array().unwrap().len(), 3);
}

#[test]
fn rv_and_calendar_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bars.csv");
    let mut s = String::from("time,close\n2024-03-03T23:55:00,100\n");
    for day in 4..=8 {
        for (j, hm) in ["09:30", "12:00", "16:00"].iter().enumerate() {
            s.push_str(&format!("2024-03-{day:02}T{hm}:00,{}\n", 100.0 + (day * 3 + j) as f64 * 0.5));
        }
    }
    fs::write(&file, s).unwrap();
    let f = file.to_str().unwrap();
    let o = rvpwy(&["rv", f, "--scale", "raw-price", "--time-col", "time", "--price-col", "close"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.contains("2024-03-")).count(), 5);

    // Drop one bar: the calendar rule must refuse and name the day.
    let content = fs::read_to_string(&file).unwrap();
    let trimmed: String = content.lines().filter(|l| !l.starts_with("2024-03-06T12")).map(|l| format!("{l}\n")).collect();
    fs::write(&file, trimmed).unwrap();
    let o = rvpwy(&["rv", f, "--scale", "raw-price", "--time-col", "time", "--price-col", "close"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("2024-03-06"));
    let o = rvpwy(&["rv", f, "--scale", "raw-price", "--time-col", "time", "--price-col", "close", "--allow-unequal"]);
    assert!(o.status.success());
}

#[test]
fn critvals_and_mc() {
    let o = rvpwy(&["critvals", "--n", "60", "--reps", "300", "--seed", "3", "--tau0", "0.2", "--level", "0.025"]);
    assert!(o.status.success());
    let t = stdout(&o);
    assert!(t.contains("# tau0 = 0.2"));
    assert_eq!(t.lines().filter(|l| l.starts_with("0.")).count(), 4);

    let o = rvpwy(&["mc", "--reps", "20", "--n", "60", "--m", "10", "--tests", "pwy,rvpwy,cusum", "--seed", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("CUSUM"));

    let o = rvpwy(&["mc", "--reps", "20", "--n", "60", "--m", "10", "--kappa", "0.05", "--tests", "rvpwy,scpwy", "--json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["rows"].as_array().is_some());
}

#[test]
fn errors_exit_nonzero() {
    assert!(!rvpwy(&["test", "/nonexistent/file.csv"]).status.success());
    assert!(!rvpwy(&["test", "x.csv", "--test", "adf"]).status.success());
    assert!(!rvpwy(&["critvals", "--n", "5"]).status.success());
    assert!(!rvpwy(&["bogus"]).status.success());
}
