use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Two-level sampling grid: `n` coarse intervals of length `big_h`, each split
/// into `m` fine steps of length `big_h / m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    m: usize,
    big_h: f64,
}

impl GridSpec {
    pub fn new(n: usize, m: usize, big_h: f64) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("grid needs n >= 2, got {n}")));
        }
        if m < 1 {
            return Err(invalid("grid needs m >= 1"));
        }
        if !(big_h.is_finite() && big_h > 0.0) {
            return Err(invalid(format!("interval length must be positive, got {big_h}")));
        }
        n.checked_mul(m)
            .and_then(|v| v.checked_add(1))
            .ok_or_else(|| invalid("n * m overflows the index type"))?;
        Ok(Self { n, m, big_h })
    }

    /// Coarse interval count.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Fine steps per coarse interval.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Coarse interval length.
    pub fn big_h(&self) -> f64 {
        self.big_h
    }

    /// Fine step length, always derived as `big_h / m`.
    pub fn h(&self) -> f64 {
        self.big_h / self.m as f64
    }

    /// Number of fine grid points, `n * m + 1`.
    pub fn fine_len(&self) -> usize {
        self.n * self.m + 1
    }

    /// Fine index of coarse point `t_i`.
    pub fn coarse_index(&self, i: usize) -> usize {
        i * self.m
    }

    /// Time of coarse point `t_i`.
    pub fn coarse_time(&self, i: usize) -> f64 {
        i as f64 * self.big_h
    }

    /// Time of fine point with global index `g`.
    pub fn fine_time(&self, g: usize) -> f64 {
        (g / self.m) as f64 * self.big_h + (g % self.m) as f64 * self.h()
    }

    /// Total time span `n * big_h`.
    pub fn span(&self) -> f64 {
        self.n as f64 * self.big_h
    }

    /// Coarse index `floor(frac * n)`.
    pub fn snap(&self, frac: f64) -> usize {
        floor_frac(frac, self.n)
    }
}

/// `floor(frac * n)` with a small tolerance against representation error,
/// so that e.g. `0.3 * 10` maps to 3.
pub(crate) fn floor_frac(frac: f64, n: usize) -> usize {
    let x = frac * n as f64;
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as usize
    } else {
        x.floor() as usize
    }
}

/// `ceil(frac * n)` with the same tolerance as [`floor_frac`].
pub(crate) fn ceil_frac(frac: f64, n: usize) -> usize {
    let x = frac * n as f64;
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as usize
    } else {
        x.ceil() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_is_derived() {
        let g = GridSpec::new(252, 78, 1.0).unwrap();
        assert_eq!(g.h() * 78.0, 1.0);
        assert_eq!(g.fine_len(), 252 * 78 + 1);
        assert_eq!(g.coarse_index(3), 234);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(1, 10, 1.0).is_err());
        assert!(GridSpec::new(10, 0, 1.0).is_err());
        assert!(GridSpec::new(10, 1, 0.0).is_err());
        assert!(GridSpec::new(10, 1, f64::NAN).is_err());
        assert!(GridSpec::new(usize::MAX / 2, 4, 1.0).is_err());
    }

    #[test]
    fn fraction_rounding() {
        assert_eq!(floor_frac(0.3, 10), 3);
        assert_eq!(ceil_frac(0.1, 252), 26);
        assert_eq!(ceil_frac(0.137, 200), 28);
        assert_eq!(ceil_frac(0.1, 30), 3);
        assert_eq!(floor_frac(0.5, 252), 126);
    }
}
