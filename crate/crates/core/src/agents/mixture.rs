use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::Agent;
use crate::env::{Action, Environment, Observation};

/// Outcome of simulating one candidate's action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub agent: String,
    pub action: Action,
    pub done: bool,
    pub reward: f64,
    pub max_rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureDecision {
    pub chosen: usize,
    pub action: Action,
    pub records: Vec<SimRecord>,
}

/// `Less` when `a` is preferred: survival first, then higher reward, then
/// lower max rho.
pub fn compare_records(a: &SimRecord, b: &SimRecord) -> Ordering {
    a.done.cmp(&b.done).then_with(|| b.reward.total_cmp(&a.reward)).then_with(|| a.max_rho.total_cmp(&b.max_rho))
}

/// Asks every candidate for an action, simulates each, and returns the best
/// by [`compare_records`], the lowest index winning ties.
///
/// # Panics
/// If `candidates` is empty or the episode is over.
pub fn mixture_act(candidates: &mut [Box<dyn Agent>], obs: &Observation, env: &Environment) -> MixtureDecision {
    assert!(!candidates.is_empty(), "mixture needs at least one candidate");
    let records: Vec<SimRecord> = candidates
        .iter_mut()
        .map(|c| {
            let action = c.act(obs, env);
            let r = env.simulate(&action).expect("mixture acts on a running episode");
            SimRecord { agent: String::from(c.name()), action, done: r.done, reward: r.reward, max_rho: r.info.max_rho }
        })
        .collect();
    let mut chosen = 0;
    for k in 1..records.len() {
        if compare_records(&records[k], &records[chosen]) == Ordering::Less {
            chosen = k;
        }
    }
    MixtureDecision { chosen, action: records[chosen].action.clone(), records }
}

pub struct MixtureAgent {
    pub candidates: Vec<Box<dyn Agent>>,
    /// Every decision taken, in step order.
    pub decisions: Vec<MixtureDecision>,
}

impl MixtureAgent {
    pub fn new(candidates: Vec<Box<dyn Agent>>) -> Self {
        Self { candidates, decisions: Vec::new() }
    }
}

impl Agent for MixtureAgent {
    fn name(&self) -> &str {
        "mixture"
    }

    fn act(&mut self, obs: &Observation, env: &Environment) -> Action {
        let d = mixture_act(&mut self.candidates, obs, env);
        let a = d.action.clone();
        self.decisions.push(d);
        a
    }
}
