//! Transmit antenna selection for distributed massive MIMO.
//!
//! The crate synthesizes geometric multipath channels ([`channel`]), scores
//! antenna subsets by equal-power sum capacity and zero-forcing water-filling
//! sum rate ([`capacity`]), selects antennas with a self-organising local
//! algorithm or greedy and random baselines ([`selection`]), and runs seeded
//! experiment sweeps over all of them ([`experiments`]).

pub mod capacity;
pub mod channel;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod linalg;
pub mod selection;

pub use error::{Error, Result};
