//! Reconnaissance Blind Chess toolkit.
//!
//! The crate tracks information sets for RBC, learns a distance-based
//! weighting over the boards of a set with a Siamese triplet-loss network
//! (plus a CNN baseline), and uses those weights for sense and move
//! selection in a complete agent. A self-play arena and ranking metrics
//! round it off.
//!
//! Start with the runnable programs under `examples/`; the `rbc` binary
//! exposes the same functionality as subcommands.

pub mod agent;
pub mod arena;
pub mod cli;
pub mod data;
pub mod encoding;
pub mod infoset;
pub mod nn;
pub mod rules;
pub mod weighting;
