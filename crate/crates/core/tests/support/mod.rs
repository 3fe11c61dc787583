use gridmdp_core::grid::{GenType, GeneratorSpec, Grid, GridSpec, LineSpec, LoadSpec};
use gridmdp_core::powerflow::Injections;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Case {
    pub grid: Grid,
    pub inj: Injections,
}

/// Connected grid with `n` substations: a random spanning tree plus extra
/// chords, generators on a few substations and loads on most.
pub fn random_case(n: usize, seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sub = |i: usize| format!("s{i:03}");
    let mut lines = Vec::new();
    let mut add = |from: usize, to: usize, rng: &mut ChaCha8Rng| {
        let x = rng.random_range(0.05..0.5);
        lines.push(LineSpec {
            id: format!("l{:04}", lines.len()),
            from: sub(from),
            to: sub(to),
            x_pu: x,
            r_pu: x / 10.0,
            thermal_limit_mw: 100.0,
        });
    };
    for i in 1..n {
        let j = rng.random_range(0..i);
        add(j, i, &mut rng);
    }
    for _ in 0..n / 2 {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            add(a, b, &mut rng);
        }
    }
    let n_gen = rng.random_range(2..=8);
    let generators: Vec<GeneratorSpec> = (0..n_gen)
        .map(|g| GeneratorSpec {
            id: format!("g{g:02}"),
            sub: sub(rng.random_range(0..n)),
            gen_type: GenType::Thermal,
            p_max: rng.random_range(50.0..400.0),
            p_min: 0.0,
            ramp_mw_per_step: 10.0,
            marginal_cost: 50.0,
        })
        .collect();
    let loads: Vec<LoadSpec> =
        (0..n).filter(|_| rng.random_bool(0.7)).map(|i| LoadSpec { id: format!("d{i:03}"), sub: sub(i) }).collect();
    let spec = GridSpec {
        base_mva: 100.0,
        substations: (0..n).map(sub).collect(),
        lines,
        generators,
        loads,
        storages: Vec::new(),
    };
    let grid = Grid::new(spec).expect("random grid is valid");
    let mut inj = Injections::zeros(&grid);
    for p in &mut inj.gen_p {
        *p = rng.random_range(0.0..100.0);
    }
    for p in &mut inj.load_p {
        *p = rng.random_range(0.0..30.0);
    }
    Case { grid, inj }
}

/// Dense reference: builds the full susceptance matrix over substations,
/// puts the island mismatch on the slack substation, removes that row and
/// column and solves with LU.
pub fn dense_flows(grid: &Grid, inj: &Injections) -> Vec<f64> {
    let n = grid.n_sub();
    let base = grid.base_mva;
    let mut b = DMatrix::<f64>::zeros(n, n);
    for l in &grid.lines {
        let y = 1.0 / l.reactance;
        b[(l.from, l.from)] += y;
        b[(l.to, l.to)] += y;
        b[(l.from, l.to)] -= y;
        b[(l.to, l.from)] -= y;
    }
    let mut p = DVector::<f64>::zeros(n);
    for (g, gen) in grid.generators.iter().enumerate() {
        p[gen.substation] += inj.gen_p[g];
    }
    for (k, load) in grid.loads.iter().enumerate() {
        p[load.substation] -= inj.load_p[k];
    }
    let slack = (0..grid.n_gen())
        .max_by(|&a, &c| grid.generators[a].p_max.total_cmp(&grid.generators[c].p_max).then(c.cmp(&a)))
        .unwrap();
    let s = grid.generators[slack].substation;
    let mismatch: f64 = p.iter().sum();
    p[s] -= mismatch;

    let keep: Vec<usize> = (0..n).filter(|&i| i != s).collect();
    let br = DMatrix::from_fn(n - 1, n - 1, |i, j| b[(keep[i], keep[j])]);
    let pr = DVector::from_fn(n - 1, |i, _| p[keep[i]] / base);
    let theta_r = br.lu().solve(&pr).expect("reduced matrix is regular");
    let mut theta = vec![0.0; n];
    for (i, &k) in keep.iter().enumerate() {
        theta[k] = theta_r[i];
    }
    grid.lines.iter().map(|l| base * (theta[l.from] - theta[l.to]) / l.reactance).collect()
}
