//! DC power flow per electrical island.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{effective_buses, BusGraph, Grid, TopologyState};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PowerFlowError {
    #[error("reduced susceptance matrix of island {island} is singular")]
    Singular { island: usize },
    #[error("injection vector does not match the grid: {0}")]
    Shape(&'static str),
    #[error("non-finite injection")]
    NonFinite,
}

/// Active power per element, MW. Generators and loads are non-negative;
/// storage is positive when charging (a withdrawal).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Injections {
    pub gen_p: Vec<f64>,
    pub load_p: Vec<f64>,
    pub storage_p: Vec<f64>,
}

impl Injections {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            gen_p: vec![0.0; grid.n_gen()],
            load_p: vec![0.0; grid.n_load()],
            storage_p: vec![0.0; grid.n_storage()],
        }
    }

    fn check(&self, grid: &Grid) -> Result<(), PowerFlowError> {
        if self.gen_p.len() != grid.n_gen() {
            return Err(PowerFlowError::Shape("generator count"));
        }
        if self.load_p.len() != grid.n_load() {
            return Err(PowerFlowError::Shape("load count"));
        }
        if self.storage_p.len() != grid.n_storage() {
            return Err(PowerFlowError::Shape("storage count"));
        }
        let all = self.gen_p.iter().chain(&self.load_p).chain(&self.storage_p);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(PowerFlowError::NonFinite);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Island {
    pub buses: Vec<usize>,
    /// Generator index absorbing the island mismatch.
    pub slack: Option<usize>,
    /// MW added to the slack generator's output (negative: reduced).
    pub slack_adjustment_mw: f64,
    /// MW of positive load demand in the island.
    pub demand_mw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    /// MW, positive from origin to extremity. Zero for out-of-service lines.
    pub p_flow: Vec<f64>,
    pub rho: Vec<f64>,
    /// Bus voltage angles, radians; slack buses at 0.
    pub theta: Vec<f64>,
    /// Net bus injection after slack balancing, MW.
    pub p_bus: Vec<f64>,
    pub losses_mw: f64,
    pub buses: BusGraph,
    pub islands: Vec<Island>,
    /// Indices into `islands` of components with demand but no generator.
    pub blackout_islands: Vec<usize>,
}

impl FlowResult {
    /// Largest KCL mismatch over all buses, MW.
    pub fn kcl_residual(&self, grid: &Grid) -> f64 {
        let mut net = self.p_bus.clone();
        for l in 0..grid.n_line() {
            if let (Some(f), Some(t)) = (self.buses.line_from_bus[l], self.buses.line_to_bus[l]) {
                net[f] -= self.p_flow[l];
                net[t] += self.p_flow[l];
            }
        }
        net.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_rho(&self) -> f64 {
        self.rho.iter().copied().fold(0.0, f64::max)
    }
}

/// Solves the DC approximation on every island of the current topology.
///
/// Each island holding a generator is balanced onto its slack (largest
/// `p_max`, lowest id on ties) before solving `B θ = P` on the remaining
/// buses. Islands without any generator carry no flow; if they hold demand
/// they are reported in `blackout_islands`.
pub fn solve_dc(grid: &Grid, topology: &TopologyState, inj: &Injections) -> Result<FlowResult, PowerFlowError> {
    inj.check(grid)?;
    let buses = effective_buses(grid, topology);
    let n_bus = buses.n_bus();
    let base = grid.base_mva;

    let mut p_bus = vec![0.0; n_bus];
    for (g, &p) in inj.gen_p.iter().enumerate() {
        p_bus[buses.gen_bus[g]] += p;
    }
    for (l, &p) in inj.load_p.iter().enumerate() {
        p_bus[buses.load_bus[l]] -= p;
    }
    for (s, &p) in inj.storage_p.iter().enumerate() {
        p_bus[buses.storage_bus[s]] -= p;
    }

    let mut islands = Vec::with_capacity(buses.components.len());
    let mut blackout_islands = Vec::new();
    for (ci, comp) in buses.components.iter().enumerate() {
        let slack = (0..grid.n_gen()).filter(|&g| buses.component_of_bus[buses.gen_bus[g]] == ci).fold(
            None,
            |best: Option<usize>, g| match best {
                Some(b) if grid.generators[b].p_max >= grid.generators[g].p_max => Some(b),
                _ => Some(g),
            },
        );
        let demand_mw: f64 = (0..grid.n_load())
            .filter(|&l| buses.component_of_bus[buses.load_bus[l]] == ci)
            .map(|l| inj.load_p[l].max(0.0))
            .sum();
        let mut slack_adjustment_mw = 0.0;
        if let Some(g) = slack {
            let mismatch: f64 = comp.iter().map(|&b| p_bus[b]).sum();
            slack_adjustment_mw = -mismatch;
            p_bus[buses.gen_bus[g]] -= mismatch;
        } else if demand_mw > 0.0 {
            blackout_islands.push(ci);
        }
        islands.push(Island { buses: comp.clone(), slack, slack_adjustment_mw, demand_mw });
    }

    let mut theta = vec![0.0; n_bus];
    let mut local = vec![usize::MAX; n_bus];
    for (ci, island) in islands.iter().enumerate() {
        let Some(g) = island.slack else { continue };
        let slack_bus = buses.gen_bus[g];
        let unknowns: Vec<usize> = island.buses.iter().copied().filter(|&b| b != slack_bus).collect();
        let n = unknowns.len();
        if n == 0 {
            continue;
        }
        for (k, &b) in unknowns.iter().enumerate() {
            local[b] = k;
        }
        let mut mat = vec![0.0; n * n];
        for l in 0..grid.n_line() {
            let (Some(f), Some(t)) = (buses.line_from_bus[l], buses.line_to_bus[l]) else {
                continue;
            };
            if buses.component_of_bus[f] != ci || f == t {
                continue;
            }
            let y = 1.0 / grid.lines[l].reactance;
            let (lf, lt) = ((f != slack_bus).then(|| local[f]), (t != slack_bus).then(|| local[t]));
            if let Some(i) = lf {
                mat[i * n + i] += y;
            }
            if let Some(j) = lt {
                mat[j * n + j] += y;
            }
            if let (Some(i), Some(j)) = (lf, lt) {
                mat[i * n + j] -= y;
                mat[j * n + i] -= y;
            }
        }
        let mut rhs: Vec<f64> = unknowns.iter().map(|&b| p_bus[b] / base).collect();
        cholesky_solve(&mut mat, n, &mut rhs).map_err(|()| PowerFlowError::Singular { island: ci })?;
        for (k, &b) in unknowns.iter().enumerate() {
            theta[b] = rhs[k];
        }
    }

    let mut p_flow = vec![0.0; grid.n_line()];
    let mut rho = vec![0.0; grid.n_line()];
    for (l, line) in grid.lines.iter().enumerate() {
        if let (Some(f), Some(t)) = (buses.line_from_bus[l], buses.line_to_bus[l]) {
            p_flow[l] = base * (theta[f] - theta[t]) / line.reactance;
            rho[l] = p_flow[l].abs() / line.thermal_limit;
        }
    }
    let losses_mw = compute_losses(&p_flow, grid);

    Ok(FlowResult { p_flow, rho, theta, p_bus, losses_mw, buses, islands, blackout_islands })
}

/// Joule losses reconstructed from DC flows: `Σ r · (p / base)² · base`.
pub fn compute_losses(p_flow: &[f64], grid: &Grid) -> f64 {
    let base = grid.base_mva;
    grid.lines
        .iter()
        .zip(p_flow)
        .map(|(line, &p)| {
            let pu = p / base;
            line.resistance * pu * pu * base
        })
        .sum()
}

/// In-place dense Cholesky factorisation and solve of an SPD system stored
/// row-major in `mat`. The solution overwrites `rhs`.
fn cholesky_solve(mat: &mut [f64], n: usize, rhs: &mut [f64]) -> Result<(), ()> {
    let scale = (0..n).fold(0.0f64, |m, i| m.max(mat[i * n + i].abs()));
    let tiny = scale * 1e-14;
    for j in 0..n {
        let mut d = mat[j * n + j];
        for k in 0..j {
            d -= mat[j * n + k] * mat[j * n + k];
        }
        if !(d > tiny) {
            return Err(());
        }
        let d = libm::sqrt(d);
        mat[j * n + j] = d;
        for i in j + 1..n {
            let mut s = mat[i * n + j];
            for k in 0..j {
                s -= mat[i * n + k] * mat[j * n + k];
            }
            mat[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = rhs[i];
        for k in 0..i {
            s -= mat[i * n + k] * rhs[k];
        }
        rhs[i] = s / mat[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for k in i + 1..n {
            s -= mat[k * n + i] * rhs[k];
        }
        rhs[i] = s / mat[i * n + i];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GenType, GeneratorSpec, GridSpec, LineSpec, LoadSpec};
    use alloc::string::String;

    fn spec(subs: &[&str], lines: &[(&str, &str, f64)]) -> GridSpec {
        GridSpec {
            base_mva: 100.0,
            substations: subs.iter().map(|s| String::from(*s)).collect(),
            lines: lines
                .iter()
                .enumerate()
                .map(|(i, &(f, t, x))| LineSpec {
                    id: alloc::format!("L{i}"),
                    from: f.into(),
                    to: t.into(),
                    x_pu: x,
                    r_pu: 0.01,
                    thermal_limit_mw: 50.0,
                })
                .collect(),
            generators: vec![],
            loads: vec![],
            storages: vec![],
        }
    }

    fn with_gen(mut s: GridSpec, id: &str, sub: &str, p_max: f64) -> GridSpec {
        s.generators.push(GeneratorSpec {
            id: id.into(),
            sub: sub.into(),
            gen_type: GenType::Thermal,
            p_max,
            p_min: 0.0,
            ramp_mw_per_step: 10.0,
            marginal_cost: 10.0,
        });
        s
    }

    fn with_load(mut s: GridSpec, id: &str, sub: &str) -> GridSpec {
        s.loads.push(LoadSpec { id: id.into(), sub: sub.into() });
        s
    }

    #[test]
    fn zero_injections_give_zero_flows() {
        let s = with_load(with_gen(spec(&["A", "B"], &[("A", "B", 0.1)]), "G", "A", 10.0), "D", "B");
        let g = Grid::new(s).unwrap();
        let r = solve_dc(&g, &TopologyState::initial(&g), &Injections::zeros(&g)).unwrap();
        assert_eq!(r.p_flow, vec![0.0]);
        assert_eq!(r.losses_mw, 0.0);
    }

    #[test]
    fn single_path_carries_everything() {
        let s = with_load(with_gen(spec(&["A", "B"], &[("A", "B", 0.1)]), "G", "A", 10.0), "D", "B");
        let g = Grid::new(s).unwrap();
        let inj = Injections { gen_p: vec![5.0], load_p: vec![5.0], storage_p: vec![] };
        let r = solve_dc(&g, &TopologyState::initial(&g), &inj).unwrap();
        assert!((r.p_flow[0] - 5.0).abs() < 1e-12);
        assert!((r.rho[0] - 5.0 / 50.0).abs() < 1e-12);
    }

    #[test]
    fn slack_is_largest_generator_lowest_id_on_tie() {
        let s = spec(&["A", "B"], &[("A", "B", 0.1)]);
        let s = with_gen(with_gen(with_gen(s, "G0", "A", 10.0), "G1", "B", 30.0), "G2", "A", 30.0);
        let s = with_load(s, "D", "B");
        let g = Grid::new(s).unwrap();
        let inj = Injections { gen_p: vec![0.0, 0.0, 0.0], load_p: vec![4.0], storage_p: vec![] };
        let r = solve_dc(&g, &TopologyState::initial(&g), &inj).unwrap();
        assert_eq!(r.islands[0].slack, Some(1));
        assert!((r.islands[0].slack_adjustment_mw - 4.0).abs() < 1e-12);
        assert!(r.kcl_residual(&g) < 1e-12);
    }

    #[test]
    fn island_without_generator_is_blackout() {
        let s = with_load(with_gen(spec(&["A", "B"], &[("A", "B", 0.1)]), "G", "A", 10.0), "D", "B");
        let g = Grid::new(s).unwrap();
        let mut topo = TopologyState::initial(&g);
        topo.line_status[0] = false;
        let inj = Injections { gen_p: vec![3.0], load_p: vec![3.0], storage_p: vec![] };
        let r = solve_dc(&g, &topo, &inj).unwrap();
        assert_eq!(r.blackout_islands, vec![1]);
        assert_eq!(r.rho[0], 0.0);
    }

    #[test]
    fn losses_follow_resistive_formula() {
        let s = spec(&["A", "B"], &[("A", "B", 0.1)]);
        let mut g = Grid::new(s).unwrap();
        g.lines[0].resistance = 0.01;
        assert_eq!(compute_losses(&[0.0], &g), 0.0);
        assert!((compute_losses(&[100.0], &g) - 1.0).abs() < 1e-12);
        let l1 = compute_losses(&[37.0], &g);
        let l2 = compute_losses(&[74.0], &g);
        assert!((l2 - 4.0 * l1).abs() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_singular() {
        let mut m = vec![1.0, 1.0, 1.0, 1.0];
        let mut rhs = vec![1.0, 1.0];
        assert!(cholesky_solve(&mut m, 2, &mut rhs).is_err());
    }
}
