//! Heston-type simulation of the log-price process `dy = κ_t y dt + σ_t dW¹`
//! with variance `dσ² = a(b − σ²)dt + c σ dW²` on a two-level grid.
//!
//! The variance is discretized with Euler–Maruyama, one step per fine grid
//! point, and kept nonnegative either by reflection (`|v|` after each step,
//! the default) or by full truncation (`max(v, 0)` inside drift and diffusion
//! only). Under full truncation a large vol-of-vol leaves the proposal
//! negative for long stretches, so whole intervals can carry zero variance.
//! The drift rate `κ_t` is constant
//! within each coarse interval, so regime switches happen only at coarse
//! points `t_{⌊τn⌋}`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::GridSpec;
use crate::rng::{domain, substream};

/// Time-varying drift schedule for `κ_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KappaSchedule {
    /// Unit root throughout.
    Null,
    /// `κ_t = kappa` for `t > t_{⌊tau n⌋}`.
    OneShift { tau: f64, kappa: f64 },
    /// `κ_t = c / n^alpha` on `(t_{⌊tau1 n⌋}, t_{⌊tau2 n⌋}]`, zero elsewhere; at
    /// `t_{⌊tau2 n⌋}` the level is reset to `y_{t_{⌊tau1 n⌋}} + y_star`.
    MildBubbleCrash {
        tau1: f64,
        tau2: f64,
        c: f64,
        alpha: f64,
        y_star: f64,
    },
}

impl KappaSchedule {
    pub fn validate(&self) -> Result<()> {
        let frac = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must lie in (0,1), got {v}")))
            }
        };
        match *self {
            KappaSchedule::Null => Ok(()),
            KappaSchedule::OneShift { tau, kappa } => {
                frac(tau, "tau*")?;
                if !(kappa.is_finite() && kappa >= 0.0) {
                    return Err(invalid(format!("kappa* must be finite and >= 0, got {kappa}")));
                }
                Ok(())
            }
            KappaSchedule::MildBubbleCrash {
                tau1,
                tau2,
                c,
                alpha,
                y_star,
            } => {
                frac(tau1, "tau1")?;
                frac(tau2, "tau2")?;
                frac(alpha, "alpha")?;
                if tau1 >= tau2 {
                    return Err(invalid("tau1 must be strictly below tau2"));
                }
                if !(c.is_finite() && c >= 0.0) {
                    return Err(invalid(format!("c must be finite and >= 0, got {c}")));
                }
                if !y_star.is_finite() {
                    return Err(invalid("y* must be finite"));
                }
                Ok(())
            }
        }
    }

    /// Drift rate applied inside coarse interval `i` (1-based), i.e. on `(t_{i-1}, t_i]`.
    pub fn kappa_for_interval(&self, i: usize, n: usize) -> f64 {
        match *self {
            KappaSchedule::Null => 0.0,
            KappaSchedule::OneShift { tau, kappa } => {
                if i > crate::grid::floor_frac(tau, n) {
                    kappa
                } else {
                    0.0
                }
            }
            KappaSchedule::MildBubbleCrash {
                tau1,
                tau2,
                c,
                alpha,
                ..
            } => {
                let i1 = crate::grid::floor_frac(tau1, n);
                let i2 = crate::grid::floor_frac(tau2, n);
                if i > i1 && i <= i2 {
                    mild_rate(c, alpha, n)
                } else {
                    0.0
                }
            }
        }
    }

    /// Coarse index at which the level is reset, with the offset, if any.
    fn reinit(&self, n: usize) -> Option<(usize, usize, f64)> {
        match *self {
            KappaSchedule::MildBubbleCrash {
                tau1, tau2, y_star, ..
            } => Some((
                crate::grid::floor_frac(tau1, n),
                crate::grid::floor_frac(tau2, n),
                y_star,
            )),
            _ => None,
        }
    }
}

/// `c / n^alpha`.
pub fn mild_rate(c: f64, alpha: f64, n: usize) -> f64 {
    c / (n as f64).powf(alpha)
}

/// Positivity treatment of the Euler variance step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum VarianceScheme {
    /// `v ← |v + Δv|`.
    #[default]
    Reflection,
    /// Negative proposals are kept; coefficients use `max(v, 0)`.
    FullTruncation,
}

/// Variance SDE parameters `dσ² = a(b − σ²)dt + c_vv σ dW²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonParams {
    pub a: f64,
    pub b: f64,
    pub c_vv: f64,
    pub sigma0_sq: f64,
    #[serde(default)]
    pub scheme: VarianceScheme,
}

impl HestonParams {
    /// Parameters with the initial variance at the long-run level `b`.
    pub fn new(a: f64, b: f64, c_vv: f64) -> Self {
        Self {
            a,
            b,
            c_vv,
            sigma0_sq: b,
            scheme: VarianceScheme::default(),
        }
    }

    /// Constant variance `sigma_sq` (zero vol-of-vol, started at its fixed point).
    pub fn constant(sigma_sq: f64) -> Self {
        Self::new(0.0, sigma_sq, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.a, self.b, self.c_vv, self.sigma0_sq]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(invalid("Heston parameters must be finite"));
        }
        if self.a < 0.0 || self.b <= 0.0 || self.c_vv < 0.0 || self.sigma0_sq <= 0.0 {
            return Err(invalid(format!(
                "need a >= 0, b > 0, c >= 0, sigma0^2 > 0; got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Log prices on the fine grid, with the latent variance when simulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricePath {
    pub grid: GridSpec,
    pub log_prices: Vec<f64>,
    /// Effective (truncated) instantaneous variance at each fine point.
    pub vol_path: Option<Vec<f64>>,
    /// Left-Riemann integrated variance per coarse interval.
    pub true_integrated_vars: Option<Vec<f64>>,
}

impl PricePath {
    /// Observed path without latent information.
    pub fn observed(grid: GridSpec, log_prices: Vec<f64>) -> Result<Self> {
        if log_prices.len() != grid.fine_len() {
            return Err(invalid(format!(
                "expected {} log prices, got {}",
                grid.fine_len(),
                log_prices.len()
            )));
        }
        Ok(Self {
            grid,
            log_prices,
            vol_path: None,
            true_integrated_vars: None,
        })
    }

    /// Log prices at the coarse points `t_0..t_n`.
    pub fn coarse_log_prices(&self) -> Vec<f64> {
        (0..=self.grid.n())
            .map(|i| self.log_prices[self.grid.coarse_index(i)])
            .collect()
    }

    /// Coarse increments `y_{t_i} − y_{t_{i−1}}`, `i = 1..n`.
    pub fn coarse_increments(&self) -> Vec<f64> {
        self.coarse_log_prices().windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Fine log prices of coarse interval `i` (1-based), `m + 1` points.
    pub fn interval(&self, i: usize) -> &[f64] {
        let m = self.grid.m();
        &self.log_prices[(i - 1) * m..=i * m]
    }
}

/// Simulate the log-price path. Deterministic given `seed`.
pub fn simulate_heston(
    params: &HestonParams,
    schedule: &KappaSchedule,
    grid: &GridSpec,
    seed: u64,
) -> Result<PricePath> {
    params.validate()?;
    schedule.validate()?;
    let n = grid.n();
    let m = grid.m();
    let h = grid.h();
    let sqrt_h = h.sqrt();
    let len = grid.fine_len();

    let mut rng = substream(seed, domain::SIMULATION, 0);
    let mut y = Vec::with_capacity(len);
    let mut vols = Vec::with_capacity(len);
    let mut ivs = Vec::with_capacity(n);
    let reinit = schedule.reinit(n);

    let mut y_cur = 0.0_f64;
    let mut v_cur = params.sigma0_sq;
    y.push(y_cur);
    vols.push(v_cur.max(0.0));

    for i in 1..=n {
        let kappa = schedule.kappa_for_interval(i, n);
        let mut iv = 0.0;
        for _ in 0..m {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            let v_pos = v_cur.max(0.0);
            iv += v_pos * h;
            let sd = v_pos.sqrt();
            y_cur += kappa * y_cur * h + sd * sqrt_h * z1;
            v_cur += params.a * (params.b - v_pos) * h + params.c_vv * sd * sqrt_h * z2;
            if params.scheme == VarianceScheme::Reflection {
                v_cur = v_cur.abs();
            }
            y.push(y_cur);
            vols.push(v_cur.max(0.0));
        }
        ivs.push(iv);
        if let Some((i1, i2, y_star)) = reinit {
            if i == i2 {
                y_cur = y[grid.coarse_index(i1)] + y_star;
                let last = y.len() - 1;
                y[last] = y_cur;
            }
        }
    }

    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "simulation produced non-finite log prices".into(),
        ));
    }

    Ok(PricePath {
        grid: *grid,
        log_prices: y,
        vol_path: Some(vols),
        true_integrated_vars: Some(ivs),
    })
}

/// Conditional mean of the explosive-regime solution, `y_anchor · e^{κ (t − t_entry)}`.
///
/// `t` must lie in the explosive regime `[t_entry, t_exit]` of `schedule`; for
/// the null schedule every `t` in `[0, nH]` is accepted. Intended as a test oracle.
pub fn regime_solution_mean(
    schedule: &KappaSchedule,
    grid: &GridSpec,
    t: f64,
    y_anchor: f64,
) -> Result<f64> {
    schedule.validate()?;
    let n = grid.n();
    let (entry, exit, kappa) = match *schedule {
        KappaSchedule::Null => (0.0, grid.span(), 0.0),
        KappaSchedule::OneShift { tau, kappa } => {
            (grid.coarse_time(grid.snap(tau)), grid.span(), kappa)
        }
        KappaSchedule::MildBubbleCrash {
            tau1,
            tau2,
            c,
            alpha,
            ..
        } => (
            grid.coarse_time(grid.snap(tau1)),
            grid.coarse_time(grid.snap(tau2)),
            mild_rate(c, alpha, n),
        ),
    };
    if !(t >= entry && t <= exit) {
        return Err(invalid(format!(
            "t = {t} lies outside the explosive regime [{entry}, {exit}]"
        )));
    }
    Ok(y_anchor * (kappa * (t - entry)).exp())
}
