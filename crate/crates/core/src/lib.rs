//! Power-network operation environment.
//!
//! A DC-power-flow Markov decision process driven by synthetic injection
//! time series, the normalized three-cost operation score, and a baseline
//! agent stack (expert rules, PPO policy, simulate-based mixture).
//!
//! The crate is `no_std` and only needs `alloc`; file formats, the CLI and
//! the HTTP service live in the `gridmdp` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod agents;
pub mod calendar;
pub mod chronics;
pub mod env;
pub mod episode;
pub mod grid;
pub mod nn;
pub mod powerflow;
pub mod scoring;
