//! Distributional checks on the simulator, realized variance and pseudo-samples.

use rvpwy_core::devol::{feasible_pseudo_sample, infeasible_pseudo_sample};
use rvpwy_core::rv::rv_series;
use rvpwy_core::sim::{regime_solution_mean, simulate_heston, HestonParams, KappaSchedule};
use rvpwy_core::stats::{ks_standard_normal, median};
use rvpwy_core::GridSpec;

fn heston() -> HestonParams {
    HestonParams::new(0.05, 0.25, 0.30)
}

#[test]
fn constant_volatility_increments_are_gaussian() {
    let sigma2 = 0.04;
    let grid = GridSpec::new(100, 10, 1.0).unwrap();
    let mut z = Vec::new();
    for seed in 0..10 {
        let p = simulate_heston(&HestonParams::constant(sigma2), &KappaSchedule::Null, &grid, seed).unwrap();
        let sd = (sigma2 * grid.h()).sqrt();
        z.extend(p.log_prices.windows(2).map(|w| (w[1] - w[0]) / sd));
    }
    let ks = ks_standard_normal(&z).unwrap();
    assert!(ks.p_value > 0.01, "KS p = {}", ks.p_value);
}

#[test]
fn explosive_growth_matches_solution() {
    // E[y_T | y_entry] = y_entry * exp(kappa (T - t_entry)); estimate the factor
    // by regressing y_T on y_entry through the origin.
    let grid = GridSpec::new(50, 20, 1.0).unwrap();
    let sched = KappaSchedule::OneShift { tau: 0.2, kappa: 0.02 };
    let entry = grid.coarse_index(grid.snap(0.2));
    let pairs: Vec<(f64, f64)> = (0..4000)
        .map(|s| {
            let p = simulate_heston(&HestonParams::constant(0.01), &sched, &grid, s).unwrap();
            (p.log_prices[entry], *p.log_prices.last().unwrap())
        })
        .collect();
    let sxx: f64 = pairs.iter().map(|(a, _)| a * a).sum();
    let slope = pairs.iter().map(|(a, b)| a * b).sum::<f64>() / sxx;
    let resid_var = pairs.iter().map(|(a, b)| (b - slope * a).powi(2)).sum::<f64>() / pairs.len() as f64;
    let se = (resid_var / sxx).sqrt();
    let expect = regime_solution_mean(&sched, &grid, grid.span(), 1.0).unwrap();
    assert!(expect > 2.0);
    assert!((slope - expect).abs() < 4.0 * se, "{slope} vs {expect} (se {se})");
}

#[test]
fn realized_variance_converges_to_integrated() {
    let mut errs = Vec::new();
    for m in [10, 40, 160] {
        let grid = GridSpec::new(40, m, 1.0).unwrap();
        let mut e = Vec::new();
        for seed in 0..30 {
            let p = simulate_heston(&heston(), &KappaSchedule::Null, &grid, seed).unwrap();
            let rv = rv_series(&p, false).unwrap();
            let iv = p.true_integrated_vars.as_ref().unwrap();
            let rel: f64 = rv.values.iter().zip(iv).map(|(r, i)| ((r - i) / i).abs()).sum::<f64>()
                / iv.len() as f64;
            e.push(rel);
        }
        errs.push(median(&e));
    }
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
}

#[test]
fn infeasible_pseudo_sample_is_standard_normal() {
    let grid = GridSpec::new(250, 78, 1.0).unwrap();
    let mut z = Vec::new();
    for seed in 0..40 {
        let p = simulate_heston(&heston(), &KappaSchedule::Null, &grid, seed).unwrap();
        z.extend(infeasible_pseudo_sample(&p).unwrap().increments());
    }
    assert_eq!(z.len(), 10_000);
    let ks = ks_standard_normal(&z).unwrap();
    assert!(ks.p_value > 0.01, "KS p = {}", ks.p_value);
}

#[test]
fn feasible_tracks_infeasible_as_m_grows() {
    let mut meds = Vec::new();
    for m in [39, 78, 156, 312] {
        let grid = GridSpec::new(100, m, 1.0).unwrap();
        let gaps: Vec<f64> = (0..40)
            .map(|seed| {
                let p = simulate_heston(&heston(), &KappaSchedule::Null, &grid, seed).unwrap();
                let x = feasible_pseudo_sample(&p, &rv_series(&p, false).unwrap()).unwrap();
                let xs = infeasible_pseudo_sample(&p).unwrap();
                x.values
                    .iter()
                    .zip(&xs.values)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        meds.push(median(&gaps));
    }
    assert!(meds.windows(2).all(|w| w[1] < w[0]), "{meds:?}");
}
