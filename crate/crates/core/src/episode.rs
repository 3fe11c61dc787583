//! Running an agent through a whole scenario.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::agents::Agent;
use crate::env::{Action, EnvConfig, EnvError, Environment, Scenario, StepInfo};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    /// Time index at termination.
    pub survived: usize,
    pub horizon: usize,
    pub actions: Vec<Action>,
    pub steps: Vec<StepInfo>,
}

impl EpisodeRecord {
    pub fn completed(&self) -> bool {
        self.survived == self.horizon && self.steps.last().is_some_and(|s| s.game_over.is_none())
    }
}

pub fn run_episode<A: Agent + ?Sized>(
    agent: &mut A,
    scenario: &Scenario,
    config: &EnvConfig,
) -> Result<EpisodeRecord, EnvError> {
    let mut env = Environment::new(scenario.clone(), config.clone())?;
    let mut obs = env.observation();
    let mut actions = Vec::with_capacity(env.horizon());
    let mut steps = Vec::with_capacity(env.horizon());
    loop {
        let action = agent.act(&obs, &env);
        let r = env.step(&action)?;
        actions.push(action);
        let done = r.done;
        steps.push(r.info);
        obs = r.observation;
        if done {
            break;
        }
    }
    Ok(EpisodeRecord { survived: env.time(), horizon: env.horizon(), actions, steps })
}
