use std::sync::Arc;

use gridmdp_core::agents::{limit_action, CsMargin};
use gridmdp_core::chronics::{generate_chronics, GenConfig, LoadProfile};
use gridmdp_core::env::{Action, EnvConfig, Environment, Scenario};
use gridmdp_core::grid::{Busbar, Element, GenType, GeneratorSpec, Grid, GridSpec, LineSpec, LoadSpec, StorageSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture_grid() -> Grid {
    let line = |id: &str, a: &str, b: &str, limit: f64| LineSpec {
        id: id.into(),
        from: a.into(),
        to: b.into(),
        x_pu: 0.1,
        r_pu: 0.01,
        thermal_limit_mw: limit,
    };
    let gen = |id: &str, sub: &str, t: GenType, p_max: f64, p_min: f64, ramp: f64, mc: f64| GeneratorSpec {
        id: id.into(),
        sub: sub.into(),
        gen_type: t,
        p_max,
        p_min,
        ramp_mw_per_step: ramp,
        marginal_cost: mc,
    };
    let load = |id: &str, sub: &str| LoadSpec { id: id.into(), sub: sub.into() };
    let storage = |id: &str, sub: &str| StorageSpec {
        id: id.into(),
        sub: sub.into(),
        e_max_mwh: 8.0,
        p_max_mw: 6.0,
        eff_c: 0.95,
        eff_d: 0.9,
        cost_per_mwh: 5.0,
    };
    Grid::new(GridSpec {
        base_mva: 100.0,
        substations: ["a", "b", "c", "d"].map(String::from).to_vec(),
        lines: vec![
            line("l1", "a", "b", 150.0),
            line("l2", "b", "c", 150.0),
            line("l3", "c", "d", 150.0),
            line("l4", "d", "a", 150.0),
            line("l5", "a", "c", 150.0),
        ],
        generators: vec![
            gen("g1", "a", GenType::Nuclear, 100.0, 30.0, 8.0, 10.0),
            gen("g2", "b", GenType::Hydro, 80.0, 0.0, 30.0, 20.0),
            gen("g3", "c", GenType::Thermal, 80.0, 0.0, 30.0, 60.0),
            gen("g4", "d", GenType::Solar, 40.0, 0.0, 40.0, 0.0),
            gen("g5", "d", GenType::Wind, 40.0, 0.0, 40.0, 0.0),
        ],
        loads: vec![load("d1", "b"), load("d2", "c"), load("d3", "d")],
        storages: vec![storage("s1", "b"), storage("s2", "d")],
    })
    .unwrap()
}

fn fixture_scenario(seed: u64) -> Scenario {
    let grid = fixture_grid();
    let cfg =
        GenConfig { days: 2, load: LoadProfile { peak_mw: 140.0, ..LoadProfile::default() }, ..GenConfig::default() };
    let chronics = generate_chronics(&grid, &cfg, seed).unwrap();
    Scenario::new(format!("fixture-{seed}"), Arc::new(grid), Arc::new(chronics)).unwrap()
}

/// Any action the grid can express, legal or not.
fn random_action(rng: &mut ChaCha8Rng, grid: &Grid) -> Action {
    match rng.random_range(0..6) {
        0 => Action::DoNothing,
        1 => Action::SetLineStatus { line: rng.random_range(0..grid.n_line()), connected: rng.random_bool(0.6) },
        2 => {
            let sub = rng.random_range(0..grid.n_sub());
            let mut assignments = Vec::new();
            for &e in grid.elements_at(sub) {
                if rng.random_bool(0.5) {
                    let bus = if rng.random_bool(0.5) { Busbar::One } else { Busbar::Two };
                    assignments.push((e, bus));
                }
            }
            Action::SetBusbar { substation: sub, assignments }
        }
        3 => Action::Curtail(grid.renewables().iter().map(|&g| (g, rng.random_range(0.0..=1.0))).collect()),
        4 => Action::SetStorage(
            grid.storages.iter().enumerate().map(|(s, st)| (s, rng.random_range(-st.p_max..=st.p_max))).collect(),
        ),
        _ => Action::Composite {
            curtail: grid.renewables().iter().map(|&g| (g, rng.random_range(0.0..=1.0))).collect(),
            storage: grid
                .storages
                .iter()
                .enumerate()
                .map(|(s, st)| (s, rng.random_range(-st.p_max..=st.p_max)))
                .collect(),
        },
    }
}

#[test]
fn storage_energy_stays_in_bounds_under_fuzzed_setpoints() {
    let scenario = fixture_scenario(11);
    let grid = scenario.grid.clone();
    let cfg = EnvConfig { clip_to_headroom: true, ..EnvConfig::default() };
    let dt = cfg.step_hours;
    let mut env = Environment::new(scenario, cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut steps = 0;
    while steps < 10_000 {
        let before = env.state().storage_energy.clone();
        let setpoints = grid
            .storages
            .iter()
            .enumerate()
            .map(|(s, st)| {
                // Extremes often, to hit the bounds.
                let p = match rng.random_range(0..4) {
                    0 => st.p_max,
                    1 => -st.p_max,
                    _ => rng.random_range(-st.p_max..=st.p_max),
                };
                (s, p)
            })
            .collect();
        let r = env.step(&Action::SetStorage(setpoints)).unwrap();
        steps += 1;
        if r.info.game_over.is_none() {
            for (s, st) in grid.storages.iter().enumerate() {
                let e = env.state().storage_energy[s];
                assert!((0.0..=st.e_max).contains(&e), "step {steps}: storage {s} at {e}");
                let bound = st.p_max * dt / st.efficiency_charge.min(st.efficiency_discharge);
                assert!((e - before[s]).abs() <= bound * (1.0 + 1e-12));
            }
        }
        if r.done {
            env.reset();
        }
    }
}

#[test]
fn cooldowns_count_down_and_renewables_respect_caps() {
    let scenario = fixture_scenario(3);
    let grid = scenario.grid.clone();
    let chronics = scenario.chronics.clone();
    let cfg = EnvConfig::default();
    let cd = cfg.cooldown_steps;
    // An island slack may sit this far above its dispatch.
    let tol = cfg.slack_tolerance_mw + 1e-9;
    let mut env = Environment::new(scenario, cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checked = 0;
    while checked < 3000 {
        let before = env.state().topology.clone();
        let action = random_action(&mut rng, &grid);
        let r = env.step(&action).unwrap();
        checked += 1;
        let after = &env.state().topology;
        let switched = r.info.illegal_action.is_none();
        for l in 0..grid.n_line() {
            let (b, a) = (before.line_cooldown[l], after.line_cooldown[l]);
            let touched = switched
                && match &action {
                    Action::SetLineStatus { line, .. } => *line == l,
                    _ => false,
                };
            if touched {
                assert_eq!(a, cd);
            } else {
                assert_eq!(a, b.saturating_sub(1), "line {l}");
            }
        }
        for s in 0..grid.n_sub() {
            let (b, a) = (before.sub_cooldown[s], after.sub_cooldown[s]);
            let touched = switched && matches!(&action, Action::SetBusbar { substation, .. } if *substation == s);
            if touched {
                assert_eq!(a, cd);
            } else {
                assert_eq!(a, b.saturating_sub(1), "substation {s}");
            }
        }
        if r.info.game_over.is_none() {
            let st = env.state();
            for (k, &g) in grid.renewables().iter().enumerate() {
                let limit = chronics.renewable_potential[st.t][k].min(st.caps[k] * grid.generators[g].p_max);
                assert!(st.gen_p[g] <= limit + tol, "renewable {g} at t {}: {} > {limit}", st.t, st.gen_p[g]);
            }
        }
        if r.done {
            let t = r.info.t as f64 / env.horizon() as f64;
            assert_eq!(r.reward, t);
            assert!(r.reward > 0.0 && r.reward <= 1.0);
            env.reset();
        } else {
            assert_eq!(r.reward, 0.0);
        }
    }
}

#[test]
fn simulate_leaves_the_trajectory_unchanged() {
    let scenario = fixture_scenario(21);
    let grid = scenario.grid.clone();
    let mut plain = Environment::new(scenario.clone(), EnvConfig::default()).unwrap();
    let mut probed = Environment::new(scenario, EnvConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..300 {
        for _ in 0..3 {
            let a = random_action(&mut rng, &grid);
            probed.simulate(&a).unwrap();
        }
        let a = random_action(&mut rng, &grid);
        let sim = probed.simulate(&a).unwrap();
        let r1 = plain.step(&a).unwrap();
        let r2 = probed.step(&a).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(sim, r2);
        assert_eq!(plain.state(), probed.state());
        if r1.done {
            plain.reset();
            probed.reset();
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn limit_action_shrinks_toward_current_setpoints(
        seed in 0u64..1000,
        warmup in 0usize..40,
        margin in 0.0f64..80.0,
    ) {
        let scenario = fixture_scenario(2);
        let grid = scenario.grid.clone();
        let mut env = Environment::new(scenario, EnvConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..warmup {
            if env.step(&Action::DoNothing).unwrap().done {
                break;
            }
        }
        prop_assume!(!env.is_done());
        let obs = env.observation();
        let action = Action::Composite {
            curtail: grid.renewables().iter().map(|&g| (g, rng.random_range(0.0..=1.0))).collect(),
            storage: grid.storages.iter().enumerate().map(|(s, st)| (s, rng.random_range(-st.p_max..=st.p_max))).collect(),
        };
        let limited = limit_action(&action, &obs, &grid, CsMargin::Mw(margin), env.config().step_hours);
        let caps = obs.curtail_caps();
        for (k, &(g, cap)) in limited.curtail_part().iter().enumerate() {
            let (g0, requested) = action.curtail_part()[k];
            prop_assert_eq!(g, g0);
            let c0 = caps[grid.renewable_slot(g).unwrap()];
            // Between the current cap and the requested one.
            prop_assert!((cap - c0).abs() <= (requested - c0).abs() + 1e-12);
            prop_assert!((cap - c0) * (requested - c0) >= 0.0);
        }
        for (k, &(s, p)) in limited.storage_part().iter().enumerate() {
            let (s0, requested) = action.storage_part()[k];
            prop_assert_eq!(s, s0);
            prop_assert!(p.abs() <= requested.abs());
            prop_assert!(p * requested >= 0.0);
        }
        // Do-nothing is the fully limited action.
        if !limited.is_do_nothing() {
            prop_assert_eq!(limited.curtail_part().len(), action.curtail_part().len());
        }
    }
}

#[test]
fn busbar_split_is_expressible_on_fixture() {
    // Guards the fixture: substation a carries enough elements to split.
    let grid = fixture_grid();
    let a = grid.substation_index("a").unwrap();
    assert!(grid.elements_at(a).len() >= 3);
    assert!(grid.elements_at(a).contains(&Element::Generator(0)));
}
