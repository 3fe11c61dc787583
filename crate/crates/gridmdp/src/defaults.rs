//! Built-in scenarios on the bundled grid.

use std::sync::Arc;

use gridmdp_core::chronics::{generate_chronics, ChronicsError, GenConfig};
use gridmdp_core::env::{EnvError, Scenario};

use crate::grid_file::default_grid;

pub const DEFAULT_SEED: u64 = 1;
/// Seeds used to generate the training scenarios.
pub const TRAINING_SEEDS: std::ops::Range<u64> = 0..20;
/// Seeds kept out of training for evaluation.
pub const HELD_OUT_SEEDS: std::ops::Range<u64> = 1000..1010;

#[derive(Debug, thiserror::Error)]
pub enum DefaultsError {
    #[error(transparent)]
    Chronics(#[from] ChronicsError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// A scenario on the bundled grid, named `seed-<seed>`.
pub fn generated_scenario(config: &GenConfig, seed: u64) -> Result<Scenario, DefaultsError> {
    let grid = default_grid();
    let chronics = generate_chronics(&grid, config, seed)?;
    Ok(Scenario::new(format!("seed-{seed}"), Arc::new(grid), Arc::new(chronics))?)
}

pub fn default_scenario_days(days: u32) -> Result<Scenario, DefaultsError> {
    generated_scenario(&GenConfig { days, ..GenConfig::default() }, DEFAULT_SEED)
}

/// One week on the bundled grid.
pub fn default_scenario() -> Result<Scenario, DefaultsError> {
    generated_scenario(&GenConfig::default(), DEFAULT_SEED)
}
