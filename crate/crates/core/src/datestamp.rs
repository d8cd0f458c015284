//! Origination/conclusion dating of explosive episodes from a detector trace.

use serde::{Deserialize, Serialize};

use crate::df::DetectorTrace;
use crate::error::{invalid, Result};
use crate::grid::ceil_frac;

/// One explosive episode. `end` is `None` when the trace never falls back
/// below the critical value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub start_index: usize,
    pub end_index: Option<usize>,
    pub r_e: f64,
    pub r_f: Option<f64>,
}

impl Episode {
    /// Length as a fraction of the sample, if closed.
    pub fn duration(&self) -> Option<f64> {
        self.r_f.map(|f| f - self.r_e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeList {
    pub episodes: Vec<Episode>,
    pub cv_used: f64,
    pub min_duration: f64,
    pub tau0: f64,
}

impl EpisodeList {
    /// Keep closed episodes lasting at least `min_length` and any open episode.
    pub fn filter_min_length(&self, min_length: f64) -> EpisodeList {
        EpisodeList {
            episodes: self
                .episodes
                .iter()
                .filter(|e| e.duration().is_none_or(|d| d >= min_length - 1e-12))
                .copied()
                .collect(),
            ..self.clone()
        }
    }

    pub fn first_origination(&self) -> Option<f64> {
        self.episodes.first().map(|e| e.r_e)
    }
}

/// `log(n) / n`, the default separation between origination and conclusion.
pub fn default_min_duration(n: usize) -> f64 {
    (n as f64).ln() / n as f64
}

/// Scan the trace for up-crossings above `cv` and the next down-crossing at
/// least `min_duration` later. Degenerate entries trigger nothing; ties do not
/// count as crossings.
pub fn date_stamp(trace: &DetectorTrace, cv: f64, min_duration: f64) -> Result<EpisodeList> {
    trace.validate()?;
    if !(min_duration >= 0.0) || !min_duration.is_finite() {
        return Err(invalid(format!("min_duration must be >= 0, got {min_duration}")));
    }
    if cv.is_nan() {
        return Err(invalid("critical value is NaN"));
    }
    let n = trace.n;
    let gap = ceil_frac(min_duration, n);
    let frac = |k: usize| k as f64 / n as f64;
    let mut episodes = Vec::new();
    let mut pos = 0;
    let len = trace.len();
    while pos < len {
        let Some(start) = (pos..len).find(|&m| trace.stats[m].is_some_and(|s| s > cv)) else {
            break;
        };
        let k_e = trace.endpoints[start];
        let end = (start + 1..len).find(|&m| {
            trace.endpoints[m] >= k_e + gap && trace.stats[m].is_some_and(|s| s < cv)
        });
        match end {
            Some(stop) => {
                let k_f = trace.endpoints[stop];
                episodes.push(Episode {
                    start_index: k_e,
                    end_index: Some(k_f),
                    r_e: frac(k_e),
                    r_f: Some(frac(k_f)),
                });
                pos = stop + 1;
            }
            None => {
                episodes.push(Episode {
                    start_index: k_e,
                    end_index: None,
                    r_e: frac(k_e),
                    r_f: None,
                });
                break;
            }
        }
    }
    Ok(EpisodeList {
        episodes,
        cv_used: cv,
        min_duration,
        tau0: trace.tau0,
    })
}
