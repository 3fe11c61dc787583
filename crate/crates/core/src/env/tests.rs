use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::calendar::StartTime;
use crate::chronics::{ChronicsMeta, Maintenance};
use crate::grid::{GenType, GeneratorSpec, GridSpec, LineSpec, LoadSpec, StorageSpec};

const N_STEPS: usize = 12;

fn line(id: &str, from: &str, to: &str, limit: f64) -> LineSpec {
    LineSpec { id: id.into(), from: from.into(), to: to.into(), x_pu: 0.1, r_pu: 0.01, thermal_limit_mw: limit }
}

fn gen(id: &str, t: GenType, p_max: f64, ramp: f64, cost: f64) -> GeneratorSpec {
    GeneratorSpec {
        id: id.into(),
        sub: "A".into(),
        gen_type: t,
        p_max,
        p_min: 0.0,
        ramp_mw_per_step: ramp,
        marginal_cost: cost,
    }
}

/// A feeds B over two parallel lines; C hangs off B. Thermal and wind at A,
/// 40 MW at B, 20 MW at C.
fn scenario(limits: [f64; 3], wind_mw: f64, maintenance: Vec<Maintenance>) -> Scenario {
    let grid = Grid::new(GridSpec {
        base_mva: 100.0,
        substations: vec!["A".into(), "B".into(), "C".into()],
        lines: vec![line("L0", "A", "B", limits[0]), line("L1", "A", "B", limits[1]), line("L2", "B", "C", limits[2])],
        generators: vec![gen("G0", GenType::Thermal, 200.0, 10.0, 50.0), gen("G1", GenType::Wind, 100.0, 100.0, 0.0)],
        loads: vec![LoadSpec { id: "D0".into(), sub: "B".into() }, LoadSpec { id: "D1".into(), sub: "C".into() }],
        storages: vec![StorageSpec {
            id: "S0".into(),
            sub: "A".into(),
            e_max_mwh: 10.0,
            p_max_mw: 5.0,
            eff_c: 0.95,
            eff_d: 0.95,
            cost_per_mwh: 10.0,
        }],
    })
    .unwrap();
    let chronics = Chronics {
        n_steps: N_STEPS,
        load_p: vec![vec![40.0, 20.0]; N_STEPS],
        renewable_potential: vec![vec![wind_mw]; N_STEPS],
        dispatch_p: vec![vec![60.0 - wind_mw, wind_mw]; N_STEPS],
        maintenance,
        meta: ChronicsMeta { seed: 0, start: StartTime::default() },
    };
    Scenario::new("test".to_string(), Arc::new(grid), Arc::new(chronics)).unwrap()
}

fn env(s: Scenario) -> Environment {
    Environment::new(s, EnvConfig::default()).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn observation_matches_layout() {
    let e = env(scenario([100.0; 3], 10.0, vec![]));
    let obs = e.observation();
    assert_eq!(obs.values.len(), e.layout().len());
    assert_eq!(obs.storage_energy(), &[5.0]);
    assert_eq!(obs.curtail_caps(), &[1.0]);
    assert!(obs.values.iter().all(|v| v.is_finite()));
}

#[test]
fn storage_charge_energy_update() {
    let mut e = env(scenario([100.0; 3], 10.0, vec![]));
    let r = e.step(&Action::SetStorage(vec![(0, 2.0)])).unwrap();
    let de = e.state().storage_energy[0] - 5.0;
    assert!(close(de, 0.95 * 2.0 / 12.0, 1e-12), "{de}");
    assert!(close(de, 0.158333, 1e-6));
    assert!(close(r.info.redispatch_mw[0], 2.0, 1e-9));
    assert_eq!(r.info.storage_mw, vec![2.0]);
}

#[test]
fn storage_discharge_is_clipped_at_empty() {
    let s = scenario([100.0; 3], 10.0, vec![]);
    let cfg = EnvConfig { initial_storage_fraction: 0.01, ..EnvConfig::default() };
    let mut e = Environment::new(s, cfg).unwrap();
    let r = e.step(&Action::SetStorage(vec![(0, -5.0)])).unwrap();
    assert_eq!(e.state().storage_energy[0], 0.0);
    // 0.1 MWh at 95 % delivers 0.095 MWh in one 5-minute step.
    assert!(close(r.info.storage_mw[0], -0.1 * 0.95 * 12.0, 1e-12));
}

#[test]
fn simulate_equals_step_and_leaves_state() {
    let mut e = env(scenario([100.0; 3], 10.0, vec![]));
    e.step(&Action::DoNothing).unwrap();
    let before = e.state().clone();
    let a = Action::Composite { curtail: vec![(1, 0.05)], storage: vec![(0, -3.0)] };
    let sim = e.simulate(&a).unwrap();
    assert_eq!(e.state(), &before);
    let real = e.step(&a).unwrap();
    assert_eq!(sim, real);
}

#[test]
fn islanding_a_load_ends_the_episode() {
    let mut e = env(scenario([100.0; 3], 10.0, vec![]));
    e.step(&Action::DoNothing).unwrap();
    let r = e.step(&Action::SetLineStatus { line: 2, connected: false }).unwrap();
    assert!(r.done);
    assert_eq!(r.info.game_over, Some(GameOver::BlackoutIsland));
    assert!(close(r.reward, 2.0 / (N_STEPS - 1) as f64, 1e-15));
    let lost = (N_STEPS - 3) as f64 * 60.0 / 12.0;
    assert!(close(r.info.blackout_energy_mwh, lost, 1e-9));
    assert_eq!(e.step(&Action::DoNothing), Err(EnvError::EpisodeDone));
    assert_eq!(e.simulate(&Action::DoNothing), Err(EnvError::EpisodeDone));
}

#[test]
fn do_nothing_survives_with_unit_reward() {
    let mut e = env(scenario([100.0; 3], 10.0, vec![]));
    let mut rewards = Vec::new();
    loop {
        let r = e.step(&Action::DoNothing).unwrap();
        rewards.push(r.reward);
        if r.done {
            assert!(r.info.game_over.is_none());
            break;
        }
    }
    assert_eq!(rewards.len(), N_STEPS - 1);
    assert_eq!(*rewards.last().unwrap(), 1.0);
    assert!(rewards[..rewards.len() - 1].iter().all(|&r| r == 0.0));
}

#[test]
fn cooldown_blocks_reswitching() {
    let mut e = env(scenario([100.0; 3], 10.0, vec![]));
    let off = Action::SetLineStatus { line: 0, connected: false };
    let on = Action::SetLineStatus { line: 0, connected: true };
    assert_eq!(e.step(&off).unwrap().info.illegal_action, None);
    // The observed cooldown counts the steps during which switching is refused.
    assert_eq!(e.observation().line_cooldown()[0], 3.0);
    for _ in 0..3 {
        let r = e.step(&on).unwrap();
        assert_eq!(r.info.illegal_action, Some(Illegal::LineCooldown));
        assert!(!e.state().topology.line_status[0]);
    }
    let r = e.step(&on).unwrap();
    assert_eq!(r.info.illegal_action, None);
    assert!(e.state().topology.line_status[0]);
}

#[test]
fn maintenance_forces_line_out() {
    let m = Maintenance { line: 1, start: 2, duration: 3 };
    let mut e = env(scenario([100.0; 3], 10.0, vec![m]));
    e.step(&Action::DoNothing).unwrap();
    let obs = e.observation();
    // Maintenance starts on the next step, so reconnection is already blocked.
    assert_eq!(obs.line_cooldown()[1], 3.0);
    let r = e.step(&Action::DoNothing).unwrap();
    assert!(!e.state().topology.line_status[1]);
    assert!(r.observation.line_status()[1] == 0.0);
    let r = e.step(&Action::SetLineStatus { line: 1, connected: true }).unwrap();
    assert_eq!(r.info.illegal_action, Some(Illegal::InMaintenance));
    e.step(&Action::DoNothing).unwrap();
    let r = e.step(&Action::SetLineStatus { line: 1, connected: true }).unwrap();
    assert_eq!(r.info.illegal_action, None);
    assert!(e.state().topology.line_status[1]);
}

#[test]
fn sustained_overflow_trips_after_budget() {
    // 60 MW splits 30/30 over the parallel lines; L0 runs at rho 1.2.
    let mut e = env(scenario([25.0, 100.0, 100.0], 10.0, vec![]));
    for t in 1..=3 {
        let r = e.step(&Action::DoNothing).unwrap();
        assert!(r.info.cascade_events.is_empty(), "step {t}");
        assert_eq!(e.state().overflow[0], t as u32);
    }
    let r = e.step(&Action::DoNothing).unwrap();
    assert_eq!(r.info.cascade_events, vec![0]);
    assert!(!e.state().topology.line_status[0]);
    assert!(close(e.state().flow.rho[1], 0.6, 1e-9));
    assert!(!r.done);
}

#[test]
fn hard_overflow_trips_immediately() {
    let mut e = env(scenario([14.0, 100.0, 100.0], 10.0, vec![]));
    let r = e.step(&Action::DoNothing).unwrap();
    assert_eq!(r.info.cascade_events, vec![0]);
    assert!(!r.done);
}

#[test]
fn curtailment_is_compensated_and_priced() {
    let mut e = env(scenario([100.0; 3], 10.0, vec![]));
    let r = e.step(&Action::Curtail(vec![(1, 0.05)])).unwrap();
    assert!(close(e.state().gen_p[1], 5.0, 1e-12));
    assert!(close(r.info.curtailed_mw, 5.0, 1e-12));
    assert!(close(r.info.redispatch_mw[0], 5.0, 1e-9));
    let expected = 5.0 / 12.0 * 70.0 + 5.0 / 12.0 * 50.0;
    assert!(close(r.info.operation_cost, expected, 1e-9));
    // Caps persist.
    let r = e.step(&Action::DoNothing).unwrap();
    assert!(close(r.info.curtailed_mw, 5.0, 1e-12));
}

#[test]
fn redispatch_beyond_ramp_is_game_over() {
    let mut e = env(scenario([100.0; 3], 30.0, vec![]));
    let r = e.step(&Action::Curtail(vec![(1, 0.0)])).unwrap();
    assert!(r.done);
    assert_eq!(r.info.game_over, Some(GameOver::RedispatchInfeasible));
}

#[test]
fn clipping_scales_action_to_headroom() {
    let s = scenario([100.0; 3], 30.0, vec![]);
    let cfg = EnvConfig { clip_to_headroom: true, ..EnvConfig::default() };
    let mut e = Environment::new(s, cfg).unwrap();
    let r = e.step(&Action::Curtail(vec![(1, 0.0)])).unwrap();
    assert!(!r.done);
    // Only the 10 MW thermal ramp is available: wind drops from 30 to 20.
    assert!(close(e.state().gen_p[1], 20.0, 1e-6));
    assert!(close(e.state().caps[0], 0.2, 1e-6));
}

#[test]
fn illegal_actions_become_do_nothing() {
    let mut e = env(scenario([100.0; 3], 10.0, vec![]));
    let r = e.step(&Action::Curtail(vec![(0, 0.5)])).unwrap();
    assert_eq!(r.info.illegal_action, Some(Illegal::NotRenewable));
    let r = e.step(&Action::SetStorage(vec![(0, 6.0)])).unwrap();
    assert_eq!(r.info.illegal_action, Some(Illegal::StoragePowerOutOfRange));
    assert_eq!(r.info.storage_mw, vec![0.0]);
}

#[test]
fn bad_config_is_rejected() {
    let s = scenario([100.0; 3], 10.0, vec![]);
    let cfg = EnvConfig { overflow_budget: 0, ..EnvConfig::default() };
    assert!(matches!(Environment::new(s, cfg), Err(EnvError::Config(_))));
}
