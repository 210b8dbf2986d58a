//! Trajectory planning for unsignalized intersections.
//!
//! Other vehicles are predicted with the Intelligent Driver Model along their
//! candidate routes. The ego vehicle generates several longitudinal behavior
//! options (drive, stop, merge behind a vehicle of another route through a
//! virtual leading vehicle), scores them by progress and courtesy, and refines
//! the winner into a smooth Cartesian trajectory with a small constrained
//! nonlinear program.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, wall clocks and
//! the command line live in the companion `vlplan` crate.

#![no_std]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod arbiter;
pub mod behavior;
pub mod context;
pub mod geom;
pub mod idm;
pub mod optimizer;
pub mod params;
pub mod planner;
pub mod predictor;
pub mod simloop;
pub mod world;

pub use geom::Vec2;
pub use params::PlannerParams;
