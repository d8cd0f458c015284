use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rvpwy_core::critical::{simulate_cusum_table, simulate_null_table, DEFAULT_LEVELS, DF_MARGINAL_CV_5};
use rvpwy_core::io::{
    ingest, run_test, write_log_price_csv, IngestSpec, IntervalRule, PriceScale, TestChoice,
    TestOptions,
};
use rvpwy_core::mc::{run_power_experiment, run_size_experiment, McConfig, TestKind};
use rvpwy_core::sim::{simulate_heston, HestonParams, KappaSchedule, VarianceScheme};
use rvpwy_core::GridSpec;

#[derive(Parser)]
#[command(name = "rvpwy", version, about = "Explosive-root tests on devolatized prices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Minimum prefix fraction (default 0.1; `mc` defaults to 0.137).
    #[arg(long)]
    tau0: Option<f64>,
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    /// Write the primary output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn tau0_or(&self, default: f64) -> f64 {
        self.tau0.unwrap_or(default)
    }
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Delimited input file with a header row.
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Scale::LogPrice)]
    scale: Scale,
    /// `day`, `month`, or a fixed number of bars per interval.
    #[arg(long, default_value = "day")]
    interval: String,
    #[arg(long, default_value = "timestamp")]
    time_col: String,
    #[arg(long, default_value = "price")]
    price_col: String,
    /// Demean fine returns within each interval before computing realized variance.
    #[arg(long)]
    demean: bool,
    /// Accept calendar intervals with different bar counts.
    #[arg(long)]
    allow_unequal: bool,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
}

impl InputArgs {
    fn spec(&self, path: &Path) -> Result<IngestSpec> {
        if !self.delimiter.is_ascii() {
            bail!("delimiter must be a single ASCII character");
        }
        let rule: IntervalRule = self.interval.parse()?;
        let mut spec = IngestSpec::new(path, self.scale.into(), rule);
        spec.timestamp_column = self.time_col.clone();
        spec.price_column = self.price_col.clone();
        spec.demean = self.demean;
        spec.allow_unequal = self.allow_unequal;
        spec.delimiter = self.delimiter as u8;
        Ok(spec)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Scale {
    RawPrice,
    LogPrice,
    LogReturn,
}

impl From<Scale> for PriceScale {
    fn from(s: Scale) -> Self {
        match s {
            Scale::RawPrice => PriceScale::RawPrice,
            Scale::LogPrice => PriceScale::LogPrice,
            Scale::LogReturn => PriceScale::LogReturn,
        }
    }
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, default_value_t = 252)]
    n: usize,
    #[arg(long, default_value_t = 78)]
    m: usize,
    /// Total time span H.
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0.05)]
    a: f64,
    #[arg(long, default_value_t = 0.25)]
    b: f64,
    #[arg(long, default_value_t = 0.30)]
    c: f64,
    /// Constant variance instead of the Heston dynamics.
    #[arg(long, conflicts_with_all = ["a", "b", "c"])]
    constant_var: Option<f64>,
    #[arg(long)]
    full_truncation: bool,
    /// Explosive drift after `--tau-star` (one-shift schedule).
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    tau_star: f64,
    /// Mild bubble with crash: `tau1,tau2,c,alpha,y_star`.
    #[arg(long, value_delimiter = ',', conflicts_with = "kappa")]
    crash: Option<Vec<f64>>,
}

impl ModelArgs {
    fn grid(&self) -> Result<GridSpec> {
        Ok(GridSpec::new(self.n, self.m, self.horizon)?)
    }

    fn heston(&self) -> HestonParams {
        let mut p = match self.constant_var {
            Some(v) => HestonParams::constant(v),
            None => HestonParams::new(self.a, self.b, self.c),
        };
        if self.full_truncation {
            p.scheme = VarianceScheme::FullTruncation;
        }
        p
    }

    fn schedule(&self) -> Result<KappaSchedule> {
        Ok(match (&self.crash, self.kappa) {
            (Some(v), _) if v.len() != 5 => bail!("--crash takes tau1,tau2,c,alpha,y_star"),
            (Some(v), _) => KappaSchedule::MildBubbleCrash {
                tau1: v[0],
                tau2: v[1],
                c: v[2],
                alpha: v[3],
                y_star: v[4],
            },
            (None, Some(kappa)) => KappaSchedule::OneShift { tau: self.tau_star, kappa },
            (None, None) => KappaSchedule::Null,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a log-price path and write it as `timestamp,price`.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Realized variance per coarse interval.
    Rv {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Sup-DF test (PWY or RVPWY) with date-stamped episodes.
    Test {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        test: TestArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Date-stamp explosive episodes.
    Datestamp {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        test: TestArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate null critical values.
    Critvals {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        /// Levels to tabulate (default 0.01,0.05,0.10 plus --level).
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
        #[arg(long)]
        cusum: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo rejection frequencies.
    Mc {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        /// Tests to run, e.g. `pwy,rvpwy,scpwy`.
        #[arg(long, value_delimiter = ',', default_value = "pwy,rvpwy")]
        tests: Vec<String>,
        #[arg(long, default_value_t = 199)]
        bootstrap_b: usize,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone)]
struct TestArgs {
    #[arg(long, default_value = "rvpwy")]
    test: String,
    /// Take realized variances from this series instead (e.g. nominal for real prices).
    #[arg(long)]
    vol_proxy: Option<PathBuf>,
    /// Detector threshold for date-stamping.
    #[arg(long, default_value_t = DF_MARGINAL_CV_5, allow_negative_numbers = true)]
    detector_cv: f64,
    /// Minimum episode length as a sample fraction (default log(n)/n).
    #[arg(long)]
    min_duration: Option<f64>,
    /// Write the detector trace (index, date, tau, stat, cv) here.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn run_test_like(input: &InputArgs, test: &TestArgs, common: &Common, episodes_only: bool) -> Result<()> {
    let spec = input.spec(&input.input)?;
    let series = ingest(&spec)?;
    let vol = match &test.vol_proxy {
        Some(p) => Some(ingest(&input.spec(p)?)?),
        None => None,
    };
    let opts = TestOptions {
        test: test.test.parse::<TestChoice>()?,
        tau0: common.tau0_or(0.1),
        detector_cv: test.detector_cv,
        min_duration: test.min_duration,
        seed: None,
    };
    let outcome = run_test(&series, vol.as_ref(), &opts)?;
    if let Some(p) = &test.trace_out {
        fs::write(p, outcome.trace_to_delimited()).with_context(|| format!("writing {}", p.display()))?;
    }
    let report = &outcome.report;
    let text = if test.json {
        serde_json::to_string_pretty(report)? + "\n"
    } else if episodes_only {
        let mut s = String::from("start_index\tstart_date\tstart_fraction\tend_index\tend_date\tend_fraction\n");
        for e in &report.episodes {
            s.push_str(&format!(
                "{}\t{}\t{:.16e}\t{}\t{}\t{}\n",
                e.start_index,
                e.start_date,
                e.start_fraction,
                e.end_index.map_or("-".into(), |v| v.to_string()),
                e.end_date.as_deref().unwrap_or("-"),
                e.end_fraction.map_or("-".into(), |v| format!("{v:.16e}")),
            ));
        }
        s
    } else {
        let mut s = report.to_text();
        let reject = report
            .decisions
            .iter()
            .find(|(l, _)| (l - common.level).abs() < 1e-12)
            .map(|(_, d)| *d);
        match reject {
            Some(d) => s.push_str(&format!(
                "# {} = {:.4}{} ; {} at level {}\n",
                report.statistic,
                report.value,
                report.stars(),
                if d { "reject" } else { "no rejection" },
                common.level
            )),
            None => s.push_str(&format!("# no quoted critical value at level {}\n", common.level)),
        }
        s
    };
    emit(&common.out, &text)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { model, common } => {
            let path = simulate_heston(&model.heston(), &model.schedule()?, &model.grid()?, common.seed)?;
            match &common.out {
                Some(p) => write_log_price_csv(p, &path.log_prices)?,
                None => {
                    let mut s = String::from("timestamp,price\n");
                    for (i, v) in path.log_prices.iter().enumerate() {
                        s.push_str(&format!("{i},{v:.17e}\n"));
                    }
                    emit(&None, &s)?;
                }
            }
            Ok(())
        }
        Command::Rv { input, common } => {
            let series = ingest(&input.spec(&input.input)?)?;
            let rv = series.rv_series()?;
            let mut s = format!("# input_sha256 = {}\n# demeaned = {}\ninterval\tlabel\trv\tvol\n", series.input_sha256, rv.demeaned);
            for (i, v) in rv.values.iter().enumerate() {
                s.push_str(&format!("{}\t{}\t{v:.16e}\t{:.16e}\n", i + 1, series.labels[i], v.sqrt()));
            }
            emit(&common.out, &s)
        }
        Command::Test { input, test, common } => run_test_like(&input, &test, &common, false),
        Command::Datestamp { input, test, common } => run_test_like(&input, &test, &common, true),
        Command::Critvals { n, reps, levels, cusum, common } => {
            let mut levels = levels.unwrap_or_else(|| DEFAULT_LEVELS.to_vec());
            if !levels.iter().any(|l| (l - common.level).abs() < 1e-12) {
                levels.push(common.level);
            }
            let tau0 = common.tau0_or(0.1);
            let table = if cusum {
                simulate_cusum_table(n, tau0, reps, common.seed, &levels)?
            } else {
                simulate_null_table(n, tau0, reps, common.seed, &levels)?
            };
            emit(&common.out, &table.to_text())
        }
        Command::Mc { model, reps, tests, bootstrap_b, json, common } => {
            let mut cfg = McConfig::daily_design(model.schedule()?, common.seed);
            cfg.reps = reps;
            cfg.grid = model.grid()?;
            cfg.heston = model.heston();
            cfg.tau0 = common.tau0_or(cfg.tau0);
            cfg.bootstrap_b = bootstrap_b;
            cfg.tests = tests.iter().map(|t| t.parse::<TestKind>()).collect::<Result<_, _>>()?;
            if !cfg.levels.iter().any(|l| (l - common.level).abs() < 1e-12) {
                cfg.levels.push(common.level);
            }
            let table = match cfg.schedule {
                KappaSchedule::Null => run_size_experiment(&cfg)?,
                _ => {
                    let mut null = cfg.clone();
                    null.schedule = KappaSchedule::Null;
                    run_power_experiment(&cfg, Some(&null))?
                }
            };
            let text = if json { table.to_json()? + "\n" } else { table.to_delimited() };
            emit(&common.out, &text)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
