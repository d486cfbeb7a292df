//! Joint cooperative beamforming, UAV–GBS association and UAV trajectory design
//! for networked integrated sensing and communication.
//!
//! The crate is `no_std` (with `alloc`). Convex subproblems are expressed as
//! [`conic::ConicProblem`]s and handed to any [`conic::ConicSolver`]; the
//! `isac` companion crate supplies an interior-point backend, file formats and
//! the command-line front end.
#![cfg_attr(not(test), no_std)]
// Index loops mirror the (GBS, UAV, slot) subscripts of the model.
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod association;
pub mod beamforming;
pub mod conic;
pub mod linalg;
pub mod model;
pub mod orchestrator;
pub mod trajectory;

pub use linalg::{CMat, CVec, Point, C64};
pub use model::{Association, Design, Scenario};
