//! The operation MDP: `reset`, `step` and side-effect-free `simulate` over
//! one scenario.
//!
//! One step runs, in order: action validation (illegal actions become
//! do-nothing and are flagged), topology changes and cooldowns, forced
//! maintenance outages, next-step injections with curtailment caps and
//! storage setpoints, automatic redispatch of the controllable fleet, the
//! DC power flow with the overflow cascade, game-over detection and the
//! sparse survival reward.

mod action;
mod observation;

pub use action::{Action, Illegal};
pub use observation::{ObsLayout, Observation};

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::calendar::STEP_HOURS;
use crate::chronics::{Chronics, ChronicsError};
use crate::grid::{Grid, TopologyState};
use crate::powerflow::{solve_dc, FlowResult, Injections};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnvError {
    #[error("invalid environment config: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Chronics(#[from] ChronicsError),
    #[error("scenario needs at least two steps")]
    TooShort,
    #[error("episode is over")]
    EpisodeDone,
    #[error("initial state has no valid power flow")]
    InitialFlow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    /// Consecutive steps a line may spend above its limit before tripping.
    pub overflow_budget: u32,
    /// Loading at which a line trips immediately.
    pub hard_overflow_rho: f64,
    /// Steps a line or substation stays locked after being switched.
    pub cooldown_steps: u32,
    pub step_hours: f64,
    /// Allowed excursion of a slack generator outside `[0, p_max]`, MW.
    pub slack_tolerance_mw: f64,
    /// Storage state of charge at reset, as a fraction of `e_max`.
    pub initial_storage_fraction: f64,
    /// Energy price used for the per-step operation cost, currency/MWh.
    pub price_mwh: f64,
    /// Scale curtailment/storage actions down until automatic redispatch
    /// is feasible instead of ending the episode. Training-time only.
    pub clip_to_headroom: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            overflow_budget: 3,
            hard_overflow_rho: 2.0,
            cooldown_steps: 3,
            step_hours: STEP_HOURS,
            slack_tolerance_mw: 0.5,
            initial_storage_fraction: 0.5,
            price_mwh: 70.0,
            clip_to_headroom: false,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.overflow_budget < 1 {
            return Err(EnvError::Config("overflow_budget must be >= 1"));
        }
        if !(self.hard_overflow_rho > 1.0) {
            return Err(EnvError::Config("hard_overflow_rho must be > 1"));
        }
        if !(self.step_hours > 0.0) {
            return Err(EnvError::Config("step_hours must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.initial_storage_fraction) {
            return Err(EnvError::Config("initial_storage_fraction must be in [0, 1]"));
        }
        if !(self.slack_tolerance_mw >= 0.0) {
            return Err(EnvError::Config("slack_tolerance_mw must be >= 0"));
        }
        Ok(())
    }
}

/// A grid together with the chronics that drive it.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub grid: Arc<Grid>,
    pub chronics: Arc<Chronics>,
}

impl Scenario {
    pub fn new(id: impl Into<String>, grid: Arc<Grid>, chronics: Arc<Chronics>) -> Result<Self, EnvError> {
        chronics.check_shape(&grid)?;
        if chronics.n_steps < 2 {
            return Err(EnvError::TooShort);
        }
        Ok(Self { id: id.into(), grid, chronics })
    }

    /// Number of transitions in an episode.
    pub fn horizon(&self) -> usize {
        self.chronics.n_steps - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameOver {
    /// An island with demand has no generator.
    BlackoutIsland,
    /// The controllable fleet cannot compensate the requested injections.
    RedispatchInfeasible,
    /// An island's slack would have to leave its operating range.
    SlackOutOfBounds,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    /// Time index reached by this step.
    pub t: usize,
    pub load_mw: f64,
    pub losses_mw: f64,
    /// Controllable-unit output minus its scheduled value, MW, per generator.
    pub redispatch_mw: Vec<f64>,
    /// Realized storage power, MW, positive when charging.
    pub storage_mw: Vec<f64>,
    /// Renewable output withheld by agent curtailment, MW.
    pub curtailed_mw: f64,
    pub operation_cost: f64,
    /// Demand left unserved after a game over, MWh.
    pub blackout_energy_mwh: f64,
    /// Lines tripped by overflow during this step.
    pub cascade_events: Vec<usize>,
    pub illegal_action: Option<Illegal>,
    pub game_over: Option<GameOver>,
    pub max_rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Mutable part of the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub t: usize,
    pub topology: TopologyState,
    pub storage_energy: Vec<f64>,
    pub storage_p: Vec<f64>,
    /// Curtailment cap ratio per renewable slot.
    pub caps: Vec<f64>,
    pub gen_p: Vec<f64>,
    pub overflow: Vec<u32>,
    pub flow: FlowResult,
    pub done: bool,
}

struct Dispatch {
    gen_p: Vec<f64>,
    storage_p: Vec<f64>,
    storage_energy: Vec<f64>,
    redispatch: Vec<f64>,
    curtailed_mw: f64,
}

#[derive(Debug, Clone)]
pub struct Environment {
    scenario: Scenario,
    config: EnvConfig,
    layout: ObsLayout,
    state: EnvState,
}

impl Environment {
    pub fn new(scenario: Scenario, config: EnvConfig) -> Result<Self, EnvError> {
        config.validate()?;
        let state = initial_state(&scenario, &config)?;
        Ok(Self { layout: ObsLayout::for_grid(&scenario.grid), scenario, config, state })
    }

    pub fn reset(&mut self) -> Observation {
        // The initial state was already solved once in `new`.
        self.state = initial_state(&self.scenario, &self.config).expect("initial flow solved at construction");
        self.observation()
    }

    pub fn step(&mut self, action: &Action) -> Result<StepResult, EnvError> {
        if self.state.done {
            return Err(EnvError::EpisodeDone);
        }
        let (next, result) = self.transition(action);
        self.state = next;
        Ok(result)
    }

    /// Runs the same transition as [`Environment::step`] on a copy of the
    /// state; the environment is left untouched.
    pub fn simulate(&self, action: &Action) -> Result<StepResult, EnvError> {
        if self.state.done {
            return Err(EnvError::EpisodeDone);
        }
        Ok(self.transition(action).1)
    }

    pub fn observation(&self) -> Observation {
        encode_observation(&self.scenario, &self.config, &self.layout, &self.state)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }
    pub fn grid(&self) -> &Grid {
        &self.scenario.grid
    }
    pub fn config(&self) -> &EnvConfig {
        &self.config
    }
    pub fn layout(&self) -> ObsLayout {
        self.layout
    }
    pub fn state(&self) -> &EnvState {
        &self.state
    }
    pub fn time(&self) -> usize {
        self.state.t
    }
    pub fn horizon(&self) -> usize {
        self.scenario.horizon()
    }
    pub fn is_done(&self) -> bool {
        self.state.done
    }

    fn check_legal(&self, action: &Action, t1: usize) -> Result<(), Illegal> {
        let grid = self.grid();
        action.check_static(grid)?;
        let topo = &self.state.topology;
        match action {
            Action::SetLineStatus { line, connected } => {
                if topo.line_cooldown[*line] > 0 {
                    return Err(Illegal::LineCooldown);
                }
                if *connected && self.scenario.chronics.in_maintenance(*line, t1) {
                    return Err(Illegal::InMaintenance);
                }
                Ok(())
            }
            Action::SetBusbar { substation, .. } => {
                if topo.sub_cooldown[*substation] > 0 {
                    return Err(Illegal::SubstationCooldown);
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn transition(&self, requested: &Action) -> (EnvState, StepResult) {
        let grid = &*self.scenario.grid;
        let chronics = &*self.scenario.chronics;
        let cfg = &self.config;
        let horizon = self.scenario.horizon();
        let prev = &self.state;
        let t1 = prev.t + 1;

        let illegal = self.check_legal(requested, t1).err();
        let action = if illegal.is_some() { &Action::DoNothing } else { requested };

        let mut topo = prev.topology.clone();
        for c in topo.line_cooldown.iter_mut().chain(topo.sub_cooldown.iter_mut()) {
            *c = c.saturating_sub(1);
        }
        let mut overflow = prev.overflow.clone();
        match action {
            Action::SetLineStatus { line, connected } => {
                topo.line_status[*line] = *connected;
                topo.line_cooldown[*line] = cfg.cooldown_steps;
                overflow[*line] = 0;
            }
            Action::SetBusbar { substation, assignments } => {
                for &(e, bus) in assignments {
                    topo.set_busbar(e, bus);
                }
                topo.sub_cooldown[*substation] = cfg.cooldown_steps;
            }
            _ => {}
        }
        for m in &chronics.maintenance {
            if m.covers(t1) {
                topo.line_status[m.line] = false;
            }
        }

        let mut caps = prev.caps.clone();
        for &(g, cap) in action.curtail_part() {
            if let Some(slot) = grid.renewable_slot(g) {
                caps[slot] = cap;
            }
        }
        let mut storage_set = vec![0.0; grid.n_storage()];
        for &(s, p) in action.storage_part() {
            storage_set[s] = p;
        }

        let mut dispatch = self.dispatch(t1, &caps, &storage_set);
        if dispatch.is_none() && cfg.clip_to_headroom {
            // Largest fraction of the move from the previous setpoints that
            // keeps redispatch feasible; holding them (f = 0) may itself fail.
            let scaled = |f: f64| {
                let c: Vec<f64> = prev.caps.iter().zip(&caps).map(|(a, b)| a + f * (b - a)).collect();
                let s: Vec<f64> = prev.storage_p.iter().zip(&storage_set).map(|(a, b)| a + f * (b - a)).collect();
                (c, s)
            };
            let (c0, s0) = scaled(0.0);
            if self.dispatch(t1, &c0, &s0).is_some() {
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..40 {
                    let mid = 0.5 * (lo + hi);
                    let (c, s) = scaled(mid);
                    if self.dispatch(t1, &c, &s).is_some() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let (c, s) = scaled(lo);
                dispatch = self.dispatch(t1, &c, &s);
                caps = c;
            }
        }

        let mut game_over = None;
        let mut cascade_events = Vec::new();
        let (gen_p, storage_p, storage_energy, redispatch, curtailed_mw) = match dispatch {
            Some(d) => (d.gen_p, d.storage_p, d.storage_energy, d.redispatch, d.curtailed_mw),
            None => {
                game_over = Some(GameOver::RedispatchInfeasible);
                let gen_p = chronics.dispatch_p[t1].clone();
                (gen_p, vec![0.0; grid.n_storage()], prev.storage_energy.clone(), vec![0.0; grid.n_gen()], 0.0)
            }
        };
        let mut gen_p = gen_p;

        let inj =
            Injections { gen_p: gen_p.clone(), load_p: chronics.load_p[t1].clone(), storage_p: storage_p.clone() };
        let mut flow = None;
        let mut first = true;
        // Each pass either trips at least one in-service line or stops.
        for _ in 0..=grid.n_line() {
            let f = match solve_dc(grid, &topo, &inj) {
                Ok(f) => f,
                Err(_) => {
                    game_over.get_or_insert(GameOver::NumericalFailure);
                    break;
                }
            };
            let mut trip = Vec::new();
            for l in 0..grid.n_line() {
                if !topo.line_status[l] {
                    overflow[l] = 0;
                    continue;
                }
                let rho = f.rho[l];
                if first {
                    overflow[l] = if rho > 1.0 { overflow[l] + 1 } else { 0 };
                }
                if rho >= cfg.hard_overflow_rho || overflow[l] > cfg.overflow_budget {
                    trip.push(l);
                }
            }
            first = false;
            if trip.is_empty() {
                flow = Some(f);
                break;
            }
            for &l in &trip {
                topo.line_status[l] = false;
                topo.line_cooldown[l] = cfg.cooldown_steps;
                overflow[l] = 0;
            }
            cascade_events.extend(trip);
        }
        let flow = match flow {
            Some(f) => f,
            None => {
                // Numerical failure: report zero flows on the final topology.
                let mut empty = prev.flow.clone();
                empty.p_flow.iter_mut().for_each(|v| *v = 0.0);
                empty.rho.iter_mut().for_each(|v| *v = 0.0);
                empty.losses_mw = 0.0;
                empty
            }
        };

        if !flow.blackout_islands.is_empty() {
            game_over.get_or_insert(GameOver::BlackoutIsland);
        }
        for island in &flow.islands {
            if let Some(g) = island.slack {
                let out = gen_p[g] + island.slack_adjustment_mw;
                // A renewable slack can shed output but not exceed what is available.
                let upper = if grid.generators[g].renewable() { gen_p[g] } else { grid.generators[g].p_max };
                if out < -cfg.slack_tolerance_mw || out > upper + cfg.slack_tolerance_mw {
                    game_over.get_or_insert(GameOver::SlackOutOfBounds);
                }
                gen_p[g] = out;
            }
        }
        let mut redispatch = redispatch;
        for &g in grid.dispatchables() {
            redispatch[g] = gen_p[g] - chronics.dispatch_p[t1][g];
        }

        let done = game_over.is_some() || t1 >= horizon;
        let reward = if done { t1 as f64 / horizon as f64 } else { 0.0 };
        let dt = cfg.step_hours;
        let blackout_energy_mwh = if game_over.is_some() {
            (t1 + 1..chronics.n_steps).map(|t| chronics.total_load(t) * dt).sum()
        } else {
            0.0
        };
        let operation_cost =
            grid.generators.iter().zip(&redispatch).map(|(g, r)| r.abs() * dt * g.marginal_cost).sum::<f64>()
                + grid.storages.iter().zip(&storage_p).map(|(s, p)| p.abs() * dt * s.cost_per_mwh).sum::<f64>()
                + curtailed_mw * dt * cfg.price_mwh;

        let info = StepInfo {
            t: t1,
            load_mw: chronics.total_load(t1),
            losses_mw: flow.losses_mw,
            redispatch_mw: redispatch,
            storage_mw: storage_p.clone(),
            curtailed_mw,
            operation_cost,
            blackout_energy_mwh,
            cascade_events,
            illegal_action: illegal,
            game_over,
            max_rho: flow.max_rho(),
        };
        let next = EnvState { t: t1, topology: topo, storage_energy, storage_p, caps, gen_p, overflow, flow, done };
        let observation = encode_observation(&self.scenario, cfg, &self.layout, &next);
        (next, StepResult { observation, reward, done, info })
    }

    /// Injections at `t1` for the given caps and storage setpoints, with
    /// automatic redispatch. `None` when the controllable fleet lacks the
    /// ramp headroom to restore balance.
    fn dispatch(&self, t1: usize, caps: &[f64], storage_set: &[f64]) -> Option<Dispatch> {
        let grid = &*self.scenario.grid;
        let chronics = &*self.scenario.chronics;
        let dt = self.config.step_hours;
        let prev = &self.state;
        let target = &chronics.dispatch_p[t1];
        let mut gen_p = vec![0.0; grid.n_gen()];

        let mut curtailed_mw = 0.0;
        for (k, &g) in grid.renewables().iter().enumerate() {
            let r = target[g].min(caps[k] * grid.generators[g].p_max).max(0.0);
            curtailed_mw += target[g] - r;
            gen_p[g] = r;
        }

        let mut storage_p = vec![0.0; grid.n_storage()];
        let mut storage_energy = prev.storage_energy.clone();
        for (s, st) in grid.storages.iter().enumerate() {
            let e = prev.storage_energy[s];
            let p = storage_set[s];
            let (p, e_next) = if p > 0.0 {
                let e_next = e + st.efficiency_charge * p * dt;
                if e_next > st.e_max {
                    ((st.e_max - e) / (st.efficiency_charge * dt), st.e_max)
                } else {
                    (p, e_next)
                }
            } else if p < 0.0 {
                let e_next = e + p * dt / st.efficiency_discharge;
                if e_next < 0.0 {
                    (-e * st.efficiency_discharge / dt, 0.0)
                } else {
                    (p, e_next)
                }
            } else {
                (0.0, e)
            };
            storage_p[s] = p;
            storage_energy[s] = e_next;
        }

        let mut bands = Vec::with_capacity(grid.dispatchables().len());
        for &g in grid.dispatchables() {
            let gen = &grid.generators[g];
            let lo = gen.p_min.max(prev.gen_p[g] - gen.ramp_rate);
            let hi = gen.p_max.min(prev.gen_p[g] + gen.ramp_rate).max(lo);
            gen_p[g] = target[g].clamp(lo, hi);
            bands.push((g, lo, hi));
        }

        let load: f64 = chronics.load_p[t1].iter().sum();
        let mismatch = load + storage_p.iter().sum::<f64>() - gen_p.iter().sum::<f64>();
        const EPS: f64 = 1e-9;
        if mismatch > 0.0 {
            let headroom: f64 = bands.iter().map(|&(g, _, hi)| hi - gen_p[g]).sum();
            if mismatch > headroom + EPS {
                return None;
            }
            if headroom > 0.0 {
                for &(g, _, hi) in &bands {
                    gen_p[g] += mismatch * (hi - gen_p[g]) / headroom;
                }
            }
        } else if mismatch < 0.0 {
            let footroom: f64 = bands.iter().map(|&(g, lo, _)| gen_p[g] - lo).sum();
            if -mismatch > footroom + EPS {
                return None;
            }
            if footroom > 0.0 {
                for &(g, lo, _) in &bands {
                    gen_p[g] += mismatch * (gen_p[g] - lo) / footroom;
                }
            }
        }

        let redispatch = (0..grid.n_gen())
            .map(|g| if grid.generators[g].renewable() { 0.0 } else { gen_p[g] - target[g] })
            .collect();
        Some(Dispatch { gen_p, storage_p, storage_energy, redispatch, curtailed_mw })
    }
}

fn initial_state(scenario: &Scenario, config: &EnvConfig) -> Result<EnvState, EnvError> {
    let grid = &*scenario.grid;
    let chronics = &*scenario.chronics;
    let mut topology = TopologyState::initial(grid);
    for m in &chronics.maintenance {
        if m.covers(0) {
            topology.line_status[m.line] = false;
        }
    }
    let storage_p = vec![0.0; grid.n_storage()];
    let inj = Injections {
        gen_p: chronics.dispatch_p[0].clone(),
        load_p: chronics.load_p[0].clone(),
        storage_p: storage_p.clone(),
    };
    let flow = solve_dc(grid, &topology, &inj).map_err(|_| EnvError::InitialFlow)?;
    let mut gen_p = inj.gen_p;
    for island in &flow.islands {
        if let Some(g) = island.slack {
            gen_p[g] += island.slack_adjustment_mw;
        }
    }
    Ok(EnvState {
        t: 0,
        topology,
        storage_energy: grid.storages.iter().map(|s| s.e_max * config.initial_storage_fraction).collect(),
        storage_p,
        caps: vec![1.0; grid.renewables().len()],
        gen_p,
        overflow: vec![0; grid.n_line()],
        flow,
        done: false,
    })
}

/// Encodes a solved state into the flat layout documented in
/// [`observation`](ObsLayout).
pub fn encode_observation(
    scenario: &Scenario,
    config: &EnvConfig,
    layout: &ObsLayout,
    state: &EnvState,
) -> Observation {
    let grid = &*scenario.grid;
    let chronics = &*scenario.chronics;
    let t = state.t;
    let mut v = Vec::with_capacity(layout.len());

    let st = chronics.meta.start.at_step(t);
    let day = 2.0 * PI * st.minute_of_day as f64 / 1440.0;
    let year = 2.0 * PI * st.day_of_year as f64 / 365.0;
    v.extend([libm::sin(day), libm::cos(day), libm::sin(year), libm::cos(year), t as f64 / scenario.horizon() as f64]);
    v.extend_from_slice(&state.gen_p);
    v.extend_from_slice(&chronics.renewable_potential[t]);
    for &g in grid.renewables() {
        v.push((chronics.dispatch_p[t][g] - state.gen_p[g]).max(0.0));
    }
    v.extend_from_slice(&chronics.load_p[t]);
    v.extend_from_slice(&state.flow.p_flow);
    v.extend_from_slice(&state.flow.rho);
    v.extend(state.topology.line_status.iter().map(|&on| if on { 1.0 } else { 0.0 }));
    for l in 0..grid.n_line() {
        let maint = chronics.maintenance_remaining(l, t + 1);
        v.push(state.topology.line_cooldown[l].max(maint as u32) as f64);
    }
    v.extend_from_slice(&state.storage_energy);
    v.extend_from_slice(&state.storage_p);
    v.extend_from_slice(&state.caps);
    let (mut up, mut down) = (0.0, 0.0);
    for &g in grid.dispatchables() {
        let gen = &grid.generators[g];
        let p = state.gen_p[g];
        up += (gen.p_max.min(p + gen.ramp_rate) - p).max(0.0);
        down += (p - gen.p_min.max(p - gen.ramp_rate)).max(0.0);
    }
    v.push(up);
    v.push(down);
    let _ = config;
    debug_assert_eq!(v.len(), layout.len());
    Observation { values: v, layout: *layout }
}

#[cfg(test)]
mod tests;
