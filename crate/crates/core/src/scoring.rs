//! Episode costs and the normalized operation score.
//!
//! An episode costs its Joule losses, the agent's operation costs
//! (automatic redispatch, storage use, curtailment) and, after a game
//! over, the demand left unserved. Costs map to a score in `[-100, 100]`
//! per scenario: do-nothing scores 0, `c_best` scores 100 and a blackout
//! at the first step scores -100.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::env::{Action, EnvConfig, EnvError, Environment, Scenario, StepInfo};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoringError {
    #[error("episode has no step records")]
    Empty,
    #[error("step records are not contiguous: expected t = {expected}, found {found}")]
    Gap { expected: usize, found: usize },
    #[error("episode stops at t = {t} before the horizon {horizon} without a game over")]
    Unfinished { t: usize, horizon: usize },
    #[error("record at t = {t} has {found} redispatch entries, grid has {expected} generators")]
    Shape { t: usize, expected: usize, found: usize },
    #[error(transparent)]
    Env(#[from] EnvError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoreConfig {
    pub price_mwh: f64,
    /// Multiplier on the price of unserved energy.
    pub blackout_multiplier: f64,
    /// `c_best` as a fraction of the do-nothing losses cost.
    pub best_fraction: f64,
    pub step_hours: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self { price_mwh: 70.0, blackout_multiplier: 2.0, best_fraction: 0.8, step_hours: crate::calendar::STEP_HOURS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeCosts {
    pub losses_cost: f64,
    pub operation_cost: f64,
    pub blackout_cost: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRefs {
    pub c_dn: f64,
    pub c_best: f64,
    pub c_worst: f64,
}

/// Costs of one episode from its per-step records, in step order starting
/// at `t = 1`.
pub fn episode_costs(
    records: &[StepInfo],
    horizon: usize,
    grid: &Grid,
    cfg: &ScoreConfig,
) -> Result<EpisodeCosts, ScoringError> {
    let last = records.last().ok_or(ScoringError::Empty)?;
    for (k, r) in records.iter().enumerate() {
        if r.t != k + 1 {
            return Err(ScoringError::Gap { expected: k + 1, found: r.t });
        }
        if r.redispatch_mw.len() != grid.n_gen() {
            return Err(ScoringError::Shape { t: r.t, expected: grid.n_gen(), found: r.redispatch_mw.len() });
        }
    }
    if last.game_over.is_none() && last.t < horizon {
        return Err(ScoringError::Unfinished { t: last.t, horizon });
    }
    Ok(partial_costs(records, grid, cfg))
}

/// Costs accumulated by `records` without checking that they form a whole
/// episode. A game over in the last record adds its blackout cost.
pub fn partial_costs(records: &[StepInfo], grid: &Grid, cfg: &ScoreConfig) -> EpisodeCosts {
    let dt = cfg.step_hours;
    let mut losses_cost = 0.0;
    let mut operation_cost = 0.0;
    for r in records {
        losses_cost += r.losses_mw * dt * cfg.price_mwh;
        operation_cost += step_operation_cost(r, grid, cfg);
    }
    let blackout_cost = match records.last() {
        Some(last) if last.game_over.is_some() => cfg.blackout_multiplier * cfg.price_mwh * last.blackout_energy_mwh,
        _ => 0.0,
    };
    EpisodeCosts { losses_cost, operation_cost, blackout_cost, total: losses_cost + operation_cost + blackout_cost }
}

fn step_operation_cost(r: &StepInfo, grid: &Grid, cfg: &ScoreConfig) -> f64 {
    let dt = cfg.step_hours;
    let redispatch: f64 =
        grid.generators.iter().zip(&r.redispatch_mw).map(|(g, p)| p.abs() * dt * g.marginal_cost).sum();
    let storage: f64 = grid.storages.iter().zip(&r.storage_mw).map(|(s, p)| p.abs() * dt * s.cost_per_mwh).sum();
    redispatch + storage + r.curtailed_mw * dt * cfg.price_mwh
}

/// Runs do-nothing to completion and records every step.
pub fn do_nothing_records(scenario: &Scenario, env_cfg: &EnvConfig) -> Result<Vec<StepInfo>, ScoringError> {
    let mut env = Environment::new(scenario.clone(), env_cfg.clone())?;
    let mut records = Vec::with_capacity(scenario.horizon());
    loop {
        let r = env.step(&Action::DoNothing)?;
        records.push(r.info);
        if r.done {
            return Ok(records);
        }
    }
}

/// Cost of a game over at the first step: every later step's demand is
/// unserved.
pub fn worst_cost(scenario: &Scenario, cfg: &ScoreConfig) -> f64 {
    let c = &*scenario.chronics;
    let energy: f64 = (1..c.n_steps).map(|t| c.total_load(t) * cfg.step_hours).sum();
    cfg.blackout_multiplier * cfg.price_mwh * energy
}

pub fn scenario_refs(
    scenario: &Scenario,
    env_cfg: &EnvConfig,
    cfg: &ScoreConfig,
) -> Result<ScenarioRefs, ScoringError> {
    let records = do_nothing_records(scenario, env_cfg)?;
    let dn = episode_costs(&records, scenario.horizon(), &scenario.grid, cfg)?;
    Ok(ScenarioRefs { c_dn: dn.total, c_best: cfg.best_fraction * dn.losses_cost, c_worst: worst_cost(scenario, cfg) })
}

pub fn normalize_score(cost: f64, refs: &ScenarioRefs) -> f64 {
    let ScenarioRefs { c_dn, c_best, c_worst } = *refs;
    let s = if cost <= c_dn {
        if c_dn > c_best {
            100.0 * (c_dn - cost) / (c_dn - c_best)
        } else if cost < c_dn {
            100.0
        } else {
            0.0
        }
    } else if c_worst > c_dn {
        -100.0 * (cost - c_dn) / (c_worst - c_dn)
    } else {
        -100.0
    };
    s.clamp(-100.0, 100.0)
}

/// Upper bound on the losses and operation cost any agent can incur on
/// the scenario without a game over.
///
/// Per step, every dispatchable unit is redispatched by at most its
/// `p_max`, every storage runs at most at `p_max`, curtailment withholds at
/// most the scheduled renewable output, and an in-service line carries
/// less than `hard_overflow_rho` times its limit.
pub fn operation_cost_bound(scenario: &Scenario, env_cfg: &EnvConfig, cfg: &ScoreConfig) -> f64 {
    let grid = &*scenario.grid;
    let c = &*scenario.chronics;
    let dt = cfg.step_hours;
    let fixed: f64 =
        grid.dispatchables().iter().map(|&g| grid.generators[g].p_max * grid.generators[g].marginal_cost).sum::<f64>()
            + grid.storages.iter().map(|s| s.p_max * s.cost_per_mwh).sum::<f64>()
            + grid
                .lines
                .iter()
                .map(|l| {
                    let p = env_cfg.hard_overflow_rho * l.thermal_limit / grid.base_mva;
                    l.resistance * p * p * grid.base_mva * cfg.price_mwh
                })
                .sum::<f64>();
    (1..c.n_steps)
        .map(|t| {
            let ren: f64 = grid.renewables().iter().map(|&g| c.dispatch_p[t][g]).sum();
            (fixed + ren * cfg.price_mwh) * dt
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub agent: String,
    pub scenario: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub agent: String,
    pub mean_score: f64,
    pub n_scenarios: usize,
}

/// Mean score per agent, best first; equal means are ordered by name.
pub fn leaderboard(entries: &[ScoreEntry]) -> Vec<LeaderboardRow> {
    let mut rows: Vec<LeaderboardRow> = Vec::new();
    for e in entries {
        match rows.iter_mut().find(|r| r.agent == e.agent) {
            Some(r) => {
                r.mean_score += e.score;
                r.n_scenarios += 1;
            }
            None => rows.push(LeaderboardRow { agent: e.agent.clone(), mean_score: e.score, n_scenarios: 1 }),
        }
    }
    for r in &mut rows {
        r.mean_score /= r.n_scenarios as f64;
    }
    rows.sort_by(|a, b| b.mean_score.total_cmp(&a.mean_score).then_with(|| a.agent.cmp(&b.agent)));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn info(t: usize, losses: f64) -> StepInfo {
        StepInfo {
            t,
            load_mw: 100.0,
            losses_mw: losses,
            redispatch_mw: vec![0.0],
            storage_mw: vec![],
            curtailed_mw: 0.0,
            operation_cost: 0.0,
            blackout_energy_mwh: 0.0,
            cascade_events: vec![],
            illegal_action: None,
            game_over: None,
            max_rho: 0.5,
        }
    }

    fn tiny_grid() -> Grid {
        use crate::grid::{GenType, GeneratorSpec, GridSpec, LineSpec, LoadSpec};
        Grid::new(GridSpec {
            base_mva: 100.0,
            substations: vec!["A".into(), "B".into()],
            lines: vec![LineSpec {
                id: "L".into(),
                from: "A".into(),
                to: "B".into(),
                x_pu: 0.1,
                r_pu: 0.01,
                thermal_limit_mw: 100.0,
            }],
            generators: vec![GeneratorSpec {
                id: "G".into(),
                sub: "A".into(),
                gen_type: GenType::Thermal,
                p_max: 100.0,
                p_min: 0.0,
                ramp_mw_per_step: 10.0,
                marginal_cost: 40.0,
            }],
            loads: vec![LoadSpec { id: "D".into(), sub: "B".into() }],
            storages: vec![],
        })
        .unwrap()
    }

    #[test]
    fn survived_without_losses_costs_nothing() {
        let recs: Vec<_> = (1..=288).map(|t| info(t, 0.0)).collect();
        let c = episode_costs(&recs, 288, &tiny_grid(), &ScoreConfig::default()).unwrap();
        assert_eq!(c.total, 0.0);
    }

    #[test]
    fn constant_losses_cost() {
        let recs: Vec<_> = (1..=288).map(|t| info(t, 1.0)).collect();
        let c = episode_costs(&recs, 288, &tiny_grid(), &ScoreConfig::default()).unwrap();
        assert!((c.losses_cost - 1680.0).abs() < 1e-9, "{}", c.losses_cost);
        assert_eq!(c.total, c.losses_cost);
    }

    #[test]
    fn operation_cost_components() {
        let mut r = info(1, 0.0);
        r.redispatch_mw = vec![-12.0];
        r.curtailed_mw = 6.0;
        let c = episode_costs(&[r], 1, &tiny_grid(), &ScoreConfig::default()).unwrap();
        assert!((c.operation_cost - (12.0 * 40.0 + 6.0 * 70.0) / 12.0).abs() < 1e-9);
    }

    #[test]
    fn blackout_cost_uses_multiplier() {
        let mut r = info(1, 0.0);
        r.game_over = Some(crate::env::GameOver::BlackoutIsland);
        r.blackout_energy_mwh = 10.0;
        let c = episode_costs(&[r], 288, &tiny_grid(), &ScoreConfig::default()).unwrap();
        assert_eq!(c.blackout_cost, 2.0 * 70.0 * 10.0);
    }

    #[test]
    fn incomplete_records_are_rejected() {
        let g = tiny_grid();
        let cfg = ScoreConfig::default();
        assert_eq!(episode_costs(&[], 5, &g, &cfg), Err(ScoringError::Empty));
        let recs = [info(1, 0.0), info(3, 0.0)];
        assert!(matches!(episode_costs(&recs, 5, &g, &cfg), Err(ScoringError::Gap { .. })));
        let recs = [info(1, 0.0)];
        assert!(matches!(episode_costs(&recs, 5, &g, &cfg), Err(ScoringError::Unfinished { .. })));
    }

    #[test]
    fn score_endpoints() {
        let refs = ScenarioRefs { c_dn: 1000.0, c_best: 800.0, c_worst: 50_000.0 };
        assert_eq!(normalize_score(1000.0, &refs), 0.0);
        assert_eq!(normalize_score(800.0, &refs), 100.0);
        assert_eq!(normalize_score(50_000.0, &refs), -100.0);
        assert_eq!(normalize_score(0.0, &refs), 100.0);
        assert_eq!(normalize_score(1e9, &refs), -100.0);
        assert_eq!(normalize_score(900.0, &refs), 50.0);
    }

    #[test]
    fn degenerate_refs() {
        let refs = ScenarioRefs { c_dn: 0.0, c_best: 0.0, c_worst: 100.0 };
        assert_eq!(normalize_score(0.0, &refs), 0.0);
        let refs = ScenarioRefs { c_dn: 5.0, c_best: 5.0, c_worst: 100.0 };
        assert_eq!(normalize_score(4.0, &refs), 100.0);
    }

    #[test]
    fn leaderboard_orders_and_averages() {
        let e = |a: &str, s: &str, score| ScoreEntry { agent: a.to_string(), scenario: s.to_string(), score };
        let rows = leaderboard(&[e("b", "s1", 10.0), e("a", "s1", 4.0), e("a", "s2", 16.0), e("c", "s1", -5.0)]);
        let names: Vec<_> = rows.iter().map(|r| r.agent.as_str()).collect();
        assert_eq!(names, ["a", "b", "c"]);
        assert_eq!(rows[0].mean_score, 10.0);
        assert_eq!(rows[0].n_scenarios, 2);
        let single = leaderboard(&[e("x", "s", 3.5)]);
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].mean_score, 3.5);
    }
}
