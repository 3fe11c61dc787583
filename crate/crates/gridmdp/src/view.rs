//! Named JSON views of observations, environment state and step results.

use std::collections::BTreeMap;

use gridmdp_core::env::{EnvState, GameOver, Illegal, Observation, StepInfo, StepResult};
use gridmdp_core::grid::Grid;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineView {
    pub id: String,
    pub connected: bool,
    pub flow_mw: f64,
    pub rho: f64,
    pub thermal_limit_mw: f64,
    /// Steps before the line can be switched, including maintenance.
    pub cooldown: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorView {
    pub id: String,
    pub gen_type: String,
    pub p_mw: f64,
    pub p_max_mw: f64,
    /// Renewables only.
    pub potential_mw: Option<f64>,
    pub curtailed_mw: Option<f64>,
    pub cap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadView {
    pub id: String,
    pub p_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageView {
    pub id: String,
    pub energy_mwh: f64,
    pub e_max_mwh: f64,
    pub p_mw: f64,
    pub p_max_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationView {
    pub step: usize,
    pub max_rho: f64,
    pub margin_up_mw: f64,
    pub margin_down_mw: f64,
    pub lines: Vec<LineView>,
    pub generators: Vec<GeneratorView>,
    pub loads: Vec<LoadView>,
    pub storages: Vec<StorageView>,
}

impl ObservationView {
    pub fn new(grid: &Grid, obs: &Observation, step: usize) -> Self {
        let ren = grid.renewables();
        Self {
            step,
            max_rho: obs.max_rho(),
            margin_up_mw: obs.margin_up(),
            margin_down_mw: obs.margin_down(),
            lines: grid
                .lines
                .iter()
                .enumerate()
                .map(|(l, line)| LineView {
                    id: line.id.clone(),
                    connected: obs.is_line_connected(l),
                    flow_mw: obs.line_flow()[l],
                    rho: obs.rho()[l],
                    thermal_limit_mw: line.thermal_limit,
                    cooldown: obs.line_cooldown()[l],
                })
                .collect(),
            generators: grid
                .generators
                .iter()
                .enumerate()
                .map(|(g, gen)| {
                    let slot = ren.iter().position(|&r| r == g);
                    GeneratorView {
                        id: gen.id.clone(),
                        gen_type: gen.gen_type.as_str().to_string(),
                        p_mw: obs.gen_p()[g],
                        p_max_mw: gen.p_max,
                        potential_mw: slot.map(|k| obs.renewable_potential()[k]),
                        curtailed_mw: slot.map(|k| obs.renewable_curtailed()[k]),
                        cap: slot.map(|k| obs.curtail_caps()[k]),
                    }
                })
                .collect(),
            loads: grid
                .loads
                .iter()
                .enumerate()
                .map(|(k, load)| LoadView { id: load.id.clone(), p_mw: obs.load_p()[k] })
                .collect(),
            storages: grid
                .storages
                .iter()
                .enumerate()
                .map(|(k, s)| StorageView {
                    id: s.id.clone(),
                    energy_mwh: obs.storage_energy()[k],
                    e_max_mwh: s.e_max,
                    p_mw: obs.storage_power()[k],
                    p_max_mw: s.p_max,
                })
                .collect(),
        }
    }
}

/// Busbar assignments, lockouts and overflow counters: the part of the
/// state the observation does not carry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyView {
    /// `element id -> busbar` for every line end (`<line>:origin`,
    /// `<line>:extremity`), generator, load and storage unit.
    pub busbars: BTreeMap<String, u8>,
    pub substation_cooldown: BTreeMap<String, u32>,
    /// Consecutive overloaded steps per line.
    pub overflow_steps: BTreeMap<String, u32>,
}

impl TopologyView {
    pub fn new(grid: &Grid, state: &EnvState) -> Self {
        let topo = &state.topology;
        let mut busbars = BTreeMap::new();
        for (l, line) in grid.lines.iter().enumerate() {
            busbars.insert(format!("{}:origin", line.id), topo.line_origin_bus[l].number());
            busbars.insert(format!("{}:extremity", line.id), topo.line_extremity_bus[l].number());
        }
        for (g, gen) in grid.generators.iter().enumerate() {
            busbars.insert(gen.id.clone(), topo.gen_bus[g].number());
        }
        for (k, load) in grid.loads.iter().enumerate() {
            busbars.insert(load.id.clone(), topo.load_bus[k].number());
        }
        for (k, s) in grid.storages.iter().enumerate() {
            busbars.insert(s.id.clone(), topo.storage_bus[k].number());
        }
        Self {
            busbars,
            substation_cooldown: grid
                .substations
                .iter()
                .zip(&topo.sub_cooldown)
                .map(|(s, &c)| (s.id.clone(), c))
                .collect(),
            overflow_steps: grid.lines.iter().zip(&state.overflow).map(|(l, &c)| (l.id.clone(), c)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfoView {
    pub step: usize,
    pub load_mw: f64,
    pub losses_mw: f64,
    pub max_rho: f64,
    /// Dispatchable generators only.
    pub redispatch_mw: BTreeMap<String, f64>,
    pub storage_mw: BTreeMap<String, f64>,
    pub curtailed_mw: f64,
    pub operation_cost: f64,
    pub blackout_energy_mwh: f64,
    pub tripped_lines: Vec<String>,
    pub illegal_action: Option<Illegal>,
    pub game_over: Option<GameOver>,
}

impl StepInfoView {
    pub fn new(grid: &Grid, info: &StepInfo) -> Self {
        Self {
            step: info.t,
            load_mw: info.load_mw,
            losses_mw: info.losses_mw,
            max_rho: info.max_rho,
            redispatch_mw: grid
                .dispatchables()
                .iter()
                .map(|&g| (grid.generators[g].id.clone(), info.redispatch_mw[g]))
                .collect(),
            storage_mw: grid.storages.iter().zip(&info.storage_mw).map(|(s, &p)| (s.id.clone(), p)).collect(),
            curtailed_mw: info.curtailed_mw,
            operation_cost: info.operation_cost,
            blackout_energy_mwh: info.blackout_energy_mwh,
            tripped_lines: info.cascade_events.iter().map(|&l| grid.lines[l].id.clone()).collect(),
            illegal_action: info.illegal_action,
            game_over: info.game_over,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResultView {
    pub observation: ObservationView,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfoView,
}

impl StepResultView {
    pub fn new(grid: &Grid, r: &StepResult) -> Self {
        Self {
            observation: ObservationView::new(grid, &r.observation, r.info.t),
            reward: r.reward,
            done: r.done,
            info: StepInfoView::new(grid, &r.info),
        }
    }
}
