//! Standard-library companion to `isac-core`: the Clarabel conic backend,
//! scenario files, run artifacts, CSV exports and the `isac` command line.

extern crate openblas_src;

pub mod artifact;
pub mod cbf;
pub mod cli;
pub mod export;
pub mod scenario_file;
pub mod solver;

use std::time::Instant;

use isac_core::orchestrator::Clock;

pub use solver::ClarabelSolver;

/// Wall-clock seconds since construction.
#[derive(Debug, Clone, Copy)]
pub struct StdClock {
    start: Instant,
}

impl StdClock {
    pub fn new() -> Self {
        StdClock { start: Instant::now() }
    }
}

impl Default for StdClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for StdClock {
    fn seconds(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}
