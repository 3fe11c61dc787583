//! Baseline agents: do-nothing, expert rules with an optional policy,
//! PPO training and the simulate-based mixture.

mod mixture;
mod ppo;

pub use mixture::{compare_records, mixture_act, MixtureAgent, MixtureDecision, SimRecord};
pub use ppo::{
    clipped_surrogate, compute_advantages, ppo_loss, train_ppo, LossReport, PpoConfig, PpoSample, TrainLog, Transition,
    UpdateLog,
};

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::env::{Action, Environment, Observation};
use crate::grid::Grid;
use crate::nn::{deterministic_policy, MlpParams, NnError};

pub trait Agent {
    fn name(&self) -> &str;
    fn act(&mut self, obs: &Observation, env: &Environment) -> Action;
}

impl<A: Agent + ?Sized> Agent for Box<A> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn act(&mut self, obs: &Observation, env: &Environment) -> Action {
        (**self).act(obs, env)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DoNothing;

impl Agent for DoNothing {
    fn name(&self) -> &str {
        "do-nothing"
    }
    fn act(&mut self, _: &Observation, _: &Environment) -> Action {
        Action::DoNothing
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum OracleTag {
    Oracle,
}

/// MW kept free on the dispatchable fleet when scaling curtailment and
/// storage actions, or `Oracle` to let the environment clip instead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "MarginRepr", into = "MarginRepr")]
pub enum CsMargin {
    Mw(f64),
    Oracle,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MarginRepr {
    Mw(f64),
    Tag(OracleTag),
}

impl From<MarginRepr> for CsMargin {
    fn from(r: MarginRepr) -> Self {
        match r {
            MarginRepr::Mw(v) => CsMargin::Mw(v),
            MarginRepr::Tag(_) => CsMargin::Oracle,
        }
    }
}

impl From<CsMargin> for MarginRepr {
    fn from(m: CsMargin) -> Self {
        match m {
            CsMargin::Mw(v) => MarginRepr::Mw(v),
            CsMargin::Oracle => MarginRepr::Tag(OracleTag::Oracle),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertRulesConfig {
    pub safe_max_rho: f64,
    pub limit_cs_margin: CsMargin,
}

impl Default for ExpertRulesConfig {
    fn default() -> Self {
        Self { safe_max_rho: 0.99, limit_cs_margin: CsMargin::Mw(60.0) }
    }
}

impl ExpertRulesConfig {
    /// Settings used while training the policy.
    pub fn training() -> Self {
        Self { safe_max_rho: 0.2, limit_cs_margin: CsMargin::Oracle }
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.safe_max_rho > 0.0 && self.safe_max_rho <= 2.0) {
            return Err("safe_max_rho must be in (0, 2]");
        }
        if let CsMargin::Mw(m) = self.limit_cs_margin {
            if !(m >= 0.0) {
                return Err("limit_cs_margin must be >= 0");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleDecision {
    Reconnect(usize),
    Safe,
    Delegate,
}

/// Reconnect the lowest-index reconnectable line; otherwise stay idle
/// while every line is below `safe_max_rho`; otherwise delegate.
pub fn expert_rules(obs: &Observation, safe_max_rho: f64) -> RuleDecision {
    let status = obs.line_status();
    let cooldown = obs.line_cooldown();
    if let Some(l) = (0..status.len()).find(|&l| status[l] < 0.5 && cooldown[l] == 0.0) {
        return RuleDecision::Reconnect(l);
    }
    if obs.max_rho() < safe_max_rho {
        RuleDecision::Safe
    } else {
        RuleDecision::Delegate
    }
}

/// Maps a policy output in `(-1, 1)^n` onto curtailment caps for every
/// renewable and storage setpoints for every storage unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDecoder {
    pub renewables: Vec<usize>,
    pub storage_p_max: Vec<f64>,
}

impl ActionDecoder {
    pub fn for_grid(grid: &Grid) -> Self {
        Self { renewables: grid.renewables().to_vec(), storage_p_max: grid.storages.iter().map(|s| s.p_max).collect() }
    }

    pub fn n_action(&self) -> usize {
        self.renewables.len() + self.storage_p_max.len()
    }

    pub fn decode(&self, a: &[f64]) -> Action {
        let (ren, sto) = a.split_at(self.renewables.len());
        Action::Composite {
            curtail: self.renewables.iter().zip(ren).map(|(&g, &x)| (g, ((x + 1.0) / 2.0).clamp(0.0, 1.0))).collect(),
            storage: self
                .storage_p_max
                .iter()
                .zip(sto)
                .enumerate()
                .map(|(s, (&p, &x))| (s, (x * p).clamp(-p, p)))
                .collect(),
        }
    }
}

/// Fraction of an action that fits in the dispatchable headroom left after
/// reserving `margin`.
pub fn limit_factor(delta_mw: f64, headroom_mw: f64, margin_mw: f64) -> f64 {
    let allowed = (headroom_mw - margin_mw).max(0.0);
    if allowed == 0.0 {
        0.0
    } else if delta_mw.abs() <= allowed {
        1.0
    } else {
        allowed / delta_mw.abs()
    }
}

/// Net MW the dispatchable fleet must pick up if `action` is applied in the
/// state described by `obs` (negative when it must back down), ignoring
/// schedule changes.
pub fn compensation_mw(action: &Action, obs: &Observation, grid: &Grid, step_hours: f64) -> f64 {
    let gen_p = obs.gen_p();
    let curtailed = obs.renewable_curtailed();
    let mut delta = 0.0;
    for &(g, cap) in action.curtail_part() {
        if let Some(slot) = grid.renewable_slot(g) {
            let available = gen_p[g] + curtailed[slot];
            delta += gen_p[g] - available.min(cap * grid.generators[g].p_max);
        }
    }
    // Storage without a setpoint goes idle.
    let energy = obs.storage_energy();
    let current = obs.storage_power();
    let mut setpoint = alloc::vec![0.0; grid.n_storage()];
    for &(s, p) in action.storage_part() {
        setpoint[s] = p;
    }
    for (s, st) in grid.storages.iter().enumerate() {
        let p = setpoint[s];
        let realized = if p > 0.0 {
            p.min((st.e_max - energy[s]) / (st.efficiency_charge * step_hours))
        } else {
            p.max(-energy[s] * st.efficiency_discharge / step_hours)
        };
        delta += realized - current[s];
    }
    delta
}

/// Scales curtailment and storage parts of `action` so the automatic
/// redispatch they trigger keeps `margin` MW of ramp headroom in reserve.
pub fn limit_action(action: &Action, obs: &Observation, grid: &Grid, margin: CsMargin, step_hours: f64) -> Action {
    let m = match margin {
        CsMargin::Oracle => return action.clone(),
        CsMargin::Mw(m) => m,
    };
    if action.curtail_part().is_empty() && action.storage_part().is_empty() {
        return action.clone();
    }
    let delta = compensation_mw(action, obs, grid, step_hours);
    let headroom = if delta >= 0.0 { obs.margin_up() } else { obs.margin_down() };
    let f = limit_factor(delta, headroom, m);
    if f >= 1.0 {
        return action.clone();
    }
    if f == 0.0 {
        return Action::DoNothing;
    }
    let caps = obs.curtail_caps();
    let curtail = action
        .curtail_part()
        .iter()
        .map(|&(g, cap)| {
            let c0 = grid.renewable_slot(g).map_or(cap, |k| caps[k]);
            (g, c0 + f * (cap - c0))
        })
        .collect();
    let storage = action.storage_part().iter().map(|&(s, p)| (s, f * p)).collect();
    Action::Composite { curtail, storage }
}

/// A trained network plus what is needed to feed and decode it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyNet {
    pub params: MlpParams,
    pub input_scales: Vec<f64>,
    pub decoder: ActionDecoder,
}

impl PolicyNet {
    pub fn new(params: MlpParams, grid: &Grid) -> Self {
        let layout = crate::env::ObsLayout::for_grid(grid);
        Self { params, input_scales: layout.scales(grid), decoder: ActionDecoder::for_grid(grid) }
    }

    pub fn input(&self, obs: &Observation) -> Vec<f64> {
        obs.values.iter().zip(&self.input_scales).map(|(v, s)| v / s).collect()
    }

    /// Deterministic (median) action before limiting.
    pub fn propose(&self, obs: &Observation) -> Result<Action, NnError> {
        let out = self.params.forward(&self.input(obs))?;
        Ok(self.decoder.decode(&deterministic_policy(&out).action))
    }
}

/// Expert rules, delegating to an optional policy when the grid is loaded.
#[derive(Debug, Clone)]
pub struct ExpertAgent {
    pub name: String,
    pub config: ExpertRulesConfig,
    pub policy: Option<PolicyNet>,
}

impl ExpertAgent {
    pub fn rules_only(config: ExpertRulesConfig) -> Self {
        Self { name: "expert".into(), config, policy: None }
    }

    pub fn with_policy(config: ExpertRulesConfig, policy: PolicyNet) -> Self {
        Self { name: "ppo".into(), config, policy: Some(policy) }
    }
}

impl Agent for ExpertAgent {
    fn name(&self) -> &str {
        &self.name
    }

    fn act(&mut self, obs: &Observation, env: &Environment) -> Action {
        match expert_rules(obs, self.config.safe_max_rho) {
            RuleDecision::Reconnect(line) => Action::SetLineStatus { line, connected: true },
            RuleDecision::Safe => Action::DoNothing,
            RuleDecision::Delegate => match &self.policy {
                // A shape mismatch means the policy belongs to another grid.
                Some(p) => match p.propose(obs) {
                    Ok(a) => limit_action(&a, obs, env.grid(), self.config.limit_cs_margin, env.config().step_hours),
                    Err(_) => Action::DoNothing,
                },
                None => Action::DoNothing,
            },
        }
    }
}
