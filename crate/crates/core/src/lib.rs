//! Explosive-behavior tests on devolatized prices.
//!
//! Coarse log-price increments are divided by their interval's realized
//! volatility and cumulated into a pseudo-sample that is close to a Gaussian
//! random walk under the unit-root null, whatever the volatility dynamics.
//! Recursive with-constant Dickey–Fuller statistics on that pseudo-sample give
//! the RVDF detector and its supremum, the RVPWY test.
//!
//! Modules, bottom-up:
//! - [`sim`]: Heston-type simulation with switching drift schedules.
//! - [`rv`]: realized variance per coarse interval.
//! - [`devol`]: feasible and infeasible pseudo-samples.
//! - [`df`]: DF t-ratios, recursive traces, sup and CUSUM statistics.
//! - [`bootstrap`]: wild-bootstrap PWY benchmark.
//! - [`critical`]: quoted and simulated critical values.
//! - [`datestamp`]: origination/conclusion dating.
//! - [`mc`]: size and power experiments.
//! - [`io`]: ingestion, reports and the end-to-end test pipeline.

pub mod bootstrap;
pub mod critical;
pub mod datestamp;
pub mod devol;
pub mod df;
pub mod error;
pub mod grid;
pub mod io;
pub mod mc;
pub mod rng;
pub mod rv;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use grid::GridSpec;
