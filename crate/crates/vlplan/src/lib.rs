//! Scenario files, closed-loop runs, trace files and runtime benchmarks on
//! top of `vlplan-core`.

// `!(x > 0.0)` is the NaN-rejecting check, keep it
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod output;
pub mod scenario;

use std::time::Instant;

use vlplan_core::simloop::Clock;

/// Monotonic wall clock for planner timing.
#[derive(Debug, Clone, Copy)]
pub struct WallClock {
    origin: Instant,
}

impl WallClock {
    pub fn new() -> Self {
        Self {
            origin: Instant::now(),
        }
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn now_ms(&self) -> f64 {
        self.origin.elapsed().as_secs_f64() * 1e3
    }
}
