//! Trackability analysis for discrete-time linear time-invariant systems.
//!
//! `no_std` with `alloc`. File formats and the command line live in the
//! `trackkit` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod control;
pub mod error;
pub mod linalg;
pub mod markov;
pub mod properties;
pub mod system;
pub mod trackability;

pub use error::{Error, Result};
pub use linalg::{Matrix, RankTolerance, Vector};
pub use markov::{build_stacks, compute_delay, Delay, MarkovStack};
pub use properties::{classify, PropertyProfile, PropertyTuple};
pub use system::{InputTrajectory, OutputTrajectory, ReferenceTrajectory, StateSpaceSystem, Trajectory};
pub use trackability::{analyze, is_trackable, ThetaVariant, TrackabilityReport};
