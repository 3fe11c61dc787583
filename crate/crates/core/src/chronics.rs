//! Injection time series ("chronics") and their synthetic generation.
//!
//! Generation runs a fixed pipeline: load curves, solar and wind potential,
//! merit-order dispatch of the controllable fleet under ramp limits, and
//! proportional renewable curtailment whenever the committed fleet cannot
//! back down far enough.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::calendar::{StartTime, STEPS_PER_DAY};
use crate::grid::{GenType, Grid};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChronicsError {
    #[error("dispatch infeasible at step {step}: {reason}")]
    InfeasibleDispatch { step: usize, reason: &'static str },
    #[error("maintenance references unknown line `{0}`")]
    UnknownLine(String),
    #[error("invalid generation config: {0}")]
    Config(&'static str),
    #[error("chronics do not match grid: {0}")]
    Mismatch(String),
    #[error("energy mix undefined: total generation is zero")]
    UndefinedMix,
}

/// A line outage window, in steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Maintenance {
    pub line: usize,
    pub start: usize,
    pub duration: usize,
}

impl Maintenance {
    pub fn covers(&self, t: usize) -> bool {
        t >= self.start && t < self.start + self.duration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChronicsMeta {
    pub seed: u64,
    pub start: StartTime,
}

/// Per-step injection schedule at 5-minute resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Chronics {
    pub n_steps: usize,
    /// `[step][load]`, MW.
    pub load_p: Vec<Vec<f64>>,
    /// `[step][slot]` over [`Grid::renewables`], MW.
    pub renewable_potential: Vec<Vec<f64>>,
    /// `[step][generator]`, MW, after dispatch and curtailment.
    pub dispatch_p: Vec<Vec<f64>>,
    pub maintenance: Vec<Maintenance>,
    pub meta: ChronicsMeta,
}

impl Chronics {
    /// Checks that every table matches the grid's dimensions.
    pub fn check_shape(&self, grid: &Grid) -> Result<(), ChronicsError> {
        let bad = |what: &str| Err(ChronicsError::Mismatch(what.into()));
        if self.load_p.len() != self.n_steps
            || self.renewable_potential.len() != self.n_steps
            || self.dispatch_p.len() != self.n_steps
        {
            return bad("row count differs from n_steps");
        }
        if self.load_p.iter().any(|r| r.len() != grid.n_load()) {
            return bad("load column count");
        }
        if self.renewable_potential.iter().any(|r| r.len() != grid.renewables().len()) {
            return bad("renewable column count");
        }
        if self.dispatch_p.iter().any(|r| r.len() != grid.n_gen()) {
            return bad("generator column count");
        }
        if let Some(m) = self.maintenance.iter().find(|m| m.line >= grid.n_line()) {
            return Err(ChronicsError::Mismatch(alloc::format!("maintenance line index {}", m.line)));
        }
        Ok(())
    }

    pub fn in_maintenance(&self, line: usize, t: usize) -> bool {
        self.maintenance.iter().any(|m| m.line == line && m.covers(t))
    }

    /// Steps left (including `t`) before `line` leaves maintenance; 0 if
    /// it is not under maintenance at `t`.
    pub fn maintenance_remaining(&self, line: usize, t: usize) -> usize {
        self.maintenance
            .iter()
            .filter(|m| m.line == line && m.covers(t))
            .map(|m| m.start + m.duration - t)
            .max()
            .unwrap_or(0)
    }

    pub fn total_load(&self, t: usize) -> f64 {
        self.load_p[t].iter().sum()
    }
}

/// Share of generated energy per generator type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixReport {
    /// Indexed like [`GenType::ALL`].
    pub shares: [f64; 5],
}

impl MixReport {
    pub fn share(&self, t: GenType) -> f64 {
        let i = GenType::ALL.iter().position(|&x| x == t).unwrap_or(0);
        self.shares[i]
    }

    pub fn total(&self) -> f64 {
        self.shares.iter().sum()
    }
}

/// Per-type share of total generated energy over the whole horizon.
pub fn energy_mix(grid: &Grid, chronics: &Chronics) -> Result<MixReport, ChronicsError> {
    let mut per_type = [0.0f64; 5];
    for row in &chronics.dispatch_p {
        for (g, &p) in row.iter().enumerate() {
            let k = GenType::ALL.iter().position(|&t| t == grid.generators[g].gen_type).unwrap_or(0);
            per_type[k] += p;
        }
    }
    let total: f64 = per_type.iter().sum();
    if !(total > 0.0) {
        return Err(ChronicsError::UndefinedMix);
    }
    Ok(MixReport { shares: per_type.map(|e| e / total) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoadProfile {
    /// System-wide peak demand, MW.
    pub peak_mw: f64,
    /// Relative size of each load (grid order); empty means equal.
    pub weights: Vec<f64>,
    /// Relative depth of the daily cycle.
    pub daily_amplitude: f64,
    /// Demand multiplier on Saturday and Sunday.
    pub weekend_factor: f64,
    /// Relative winter/summer swing, peaking mid-January.
    pub seasonal_amplitude: f64,
    /// Standard deviation of the multiplicative noise.
    pub noise_std: f64,
    /// Correlation time of the noise, steps.
    pub noise_corr_steps: f64,
}

impl Default for LoadProfile {
    fn default() -> Self {
        Self {
            peak_mw: 260.0,
            weights: Vec::new(),
            daily_amplitude: 0.18,
            weekend_factor: 0.9,
            seasonal_amplitude: 0.12,
            noise_std: 0.03,
            noise_corr_steps: 24.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolarProfile {
    /// Hour at which output drops to zero.
    pub night_start_hour: f64,
    /// Hour at which output resumes.
    pub night_end_hour: f64,
    /// Lowest cloud transmission factor.
    pub min_clearness: f64,
    pub cloud_corr_steps: f64,
    pub seasonal_amplitude: f64,
}

impl Default for SolarProfile {
    fn default() -> Self {
        Self {
            night_start_hour: 20.0,
            night_end_hour: 6.0,
            min_clearness: 0.15,
            cloud_corr_steps: 36.0,
            seasonal_amplitude: 0.3,
        }
    }
}

impl SolarProfile {
    pub fn is_night(&self, hour: f64) -> bool {
        if self.night_start_hour >= self.night_end_hour {
            hour >= self.night_start_hour || hour < self.night_end_hour
        } else {
            hour >= self.night_start_hour && hour < self.night_end_hour
        }
    }

    fn daylight_fraction(&self, hour: f64) -> f64 {
        let rise = self.night_end_hour;
        let mut set = self.night_start_hour;
        if set <= rise {
            set += 24.0;
        }
        let mut h = hour;
        if h < rise {
            h += 24.0;
        }
        ((h - rise) / (set - rise)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindProfile {
    /// Long-run mean capacity factor.
    pub mean_capacity_factor: f64,
    /// Stationary standard deviation of the capacity factor before clipping.
    pub std: f64,
    /// Correlation time, steps (72 steps = 6 h).
    pub corr_steps: f64,
}

impl Default for WindProfile {
    fn default() -> Self {
        Self { mean_capacity_factor: 0.42, std: 0.2, corr_steps: 72.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaintenanceSpec {
    pub line_id: String,
    pub start_step: usize,
    pub n_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub days: u32,
    pub start: StartTime,
    pub load: LoadProfile,
    pub solar: SolarProfile,
    pub wind: WindProfile,
    pub maintenance: Vec<MaintenanceSpec>,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            days: 7,
            start: StartTime::default(),
            load: LoadProfile::default(),
            solar: SolarProfile::default(),
            wind: WindProfile::default(),
            maintenance: Vec::new(),
        }
    }
}

/// Stationary AR(1) process with unit variance.
struct Ar1 {
    phi: f64,
    state: f64,
    rng: ChaCha8Rng,
}

impl Ar1 {
    fn new(seed: u64, stream: u64, corr_steps: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let phi = if corr_steps > 0.0 { libm::exp(-1.0 / corr_steps) } else { 0.0 };
        let state = StandardNormal.sample(&mut rng);
        Self { phi, state, rng }
    }

    fn next(&mut self) -> f64 {
        let v = self.state;
        let e: f64 = StandardNormal.sample(&mut self.rng);
        self.state = self.phi * self.state + libm::sqrt(1.0 - self.phi * self.phi) * e;
        v
    }
}

// RNG stream offsets, one process per element.
const LOAD_STREAM: u64 = 0;
const SOLAR_STREAM: u64 = 1 << 20;
const WIND_STREAM: u64 = 2 << 20;

/// Generates a scenario deterministically from `(grid, config, seed)`.
pub fn generate_chronics(grid: &Grid, config: &GenConfig, seed: u64) -> Result<Chronics, ChronicsError> {
    if config.days == 0 {
        return Err(ChronicsError::Config("horizon must be at least one day"));
    }
    if !config.start.is_valid() {
        return Err(ChronicsError::Config("invalid start date"));
    }
    let lp = &config.load;
    if !lp.weights.is_empty() && lp.weights.len() != grid.n_load() {
        return Err(ChronicsError::Config("load weights must match the number of loads"));
    }
    if lp.weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(ChronicsError::Config("load weights must be non-negative"));
    }
    let n_steps = config.days as usize * STEPS_PER_DAY;

    let mut maintenance = Vec::with_capacity(config.maintenance.len());
    for m in &config.maintenance {
        let line = grid.line_index(&m.line_id).ok_or_else(|| ChronicsError::UnknownLine(m.line_id.clone()))?;
        maintenance.push(Maintenance { line, start: m.start_step, duration: m.n_steps });
    }

    let load_p = load_curves(grid, config, seed, n_steps);
    let renewable_potential = renewable_curves(grid, config, seed, n_steps);
    let dispatch_p = dispatch(grid, &load_p, &renewable_potential)?;

    Ok(Chronics {
        n_steps,
        load_p,
        renewable_potential,
        dispatch_p,
        maintenance,
        meta: ChronicsMeta { seed, start: config.start },
    })
}

fn load_curves(grid: &Grid, config: &GenConfig, seed: u64, n_steps: usize) -> Vec<Vec<f64>> {
    let lp = &config.load;
    let n_load = grid.n_load();
    let weights: Vec<f64> = if lp.weights.is_empty() { vec![1.0; n_load] } else { lp.weights.clone() };
    let wsum: f64 = weights.iter().sum();
    let a1 = 0.6 * lp.daily_amplitude;
    let a2 = 0.4 * lp.daily_amplitude;
    let norm = (1.0 + lp.seasonal_amplitude) * (1.0 + a1 + a2);
    let mut noise: Vec<Ar1> =
        (0..n_load).map(|l| Ar1::new(seed, LOAD_STREAM + l as u64, lp.noise_corr_steps)).collect();

    (0..n_steps)
        .map(|t| {
            let st = config.start.at_step(t);
            let h = st.hour();
            // Evening peak plus a morning shoulder; night trough.
            let daily =
                1.0 + a1 * libm::cos(2.0 * PI * (h - 19.0) / 24.0) + a2 * libm::cos(4.0 * PI * (h - 9.5) / 24.0);
            let weekly = weekly_factor(lp.weekend_factor, st.weekday, h);
            let seasonal = 1.0 + lp.seasonal_amplitude * libm::cos(2.0 * PI * (st.day_of_year as f64 - 15.0) / 365.0);
            let base = lp.peak_mw * daily * weekly * seasonal / norm;
            (0..n_load)
                .map(|l| {
                    let share = if wsum > 0.0 { weights[l] / wsum } else { 0.0 };
                    let eps = lp.noise_std * noise[l].next();
                    (base * share * (1.0 + eps)).max(0.0)
                })
                .collect()
        })
        .collect()
}

/// Weekday/weekend demand factor, blended linearly over 21:00-03:00 so the
/// midnight transition stays within the fleet's ramp capability.
fn weekly_factor(weekend_factor: f64, weekday: u32, hour: f64) -> f64 {
    let day = |wd: u32| if wd >= 5 { weekend_factor } else { 1.0 };
    if hour >= 21.0 {
        let frac = (hour - 21.0) / 6.0;
        day(weekday) + frac * (day((weekday + 1) % 7) - day(weekday))
    } else if hour < 3.0 {
        let frac = (hour + 3.0) / 6.0;
        let prev = (weekday + 6) % 7;
        day(prev) + frac * (day(weekday) - day(prev))
    } else {
        day(weekday)
    }
}

fn renewable_curves(grid: &Grid, config: &GenConfig, seed: u64, n_steps: usize) -> Vec<Vec<f64>> {
    let sp = &config.solar;
    let wp = &config.wind;
    let mut procs: Vec<Ar1> = grid
        .renewables()
        .iter()
        .enumerate()
        .map(|(k, &g)| match grid.generators[g].gen_type {
            GenType::Solar => Ar1::new(seed, SOLAR_STREAM + k as u64, sp.cloud_corr_steps),
            _ => Ar1::new(seed, WIND_STREAM + k as u64, wp.corr_steps),
        })
        .collect();

    (0..n_steps)
        .map(|t| {
            let st = config.start.at_step(t);
            let h = st.hour();
            grid.renewables()
                .iter()
                .enumerate()
                .map(|(k, &g)| {
                    let gen = &grid.generators[g];
                    let z = procs[k].next();
                    match gen.gen_type {
                        GenType::Solar => {
                            if sp.is_night(h) {
                                return 0.0;
                            }
                            // Summer peak, winter trough.
                            let season = 1.0
                                + sp.seasonal_amplitude * libm::cos(2.0 * PI * (st.day_of_year as f64 - 172.0) / 365.0);
                            let bell = libm::pow(libm::sin(PI * sp.daylight_fraction(h)), 1.5);
                            let clear =
                                sp.min_clearness + (1.0 - sp.min_clearness) / (1.0 + libm::exp(-(1.2 * z + 0.8)));
                            (gen.p_max * bell * clear * season / (1.0 + sp.seasonal_amplitude)).clamp(0.0, gen.p_max)
                        }
                        _ => (gen.p_max * (wp.mean_capacity_factor + wp.std * z)).clamp(0.0, gen.p_max),
                    }
                })
                .collect()
        })
        .collect()
}

/// Merit-order dispatch of the controllable fleet with ramp limits; any
/// excess renewable energy is curtailed proportionally.
fn dispatch(grid: &Grid, load_p: &[Vec<f64>], potential: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, ChronicsError> {
    let mut order: Vec<usize> = grid.dispatchables().to_vec();
    order.sort_by(|&a, &b| {
        grid.generators[a].marginal_cost.total_cmp(&grid.generators[b].marginal_cost).then(a.cmp(&b))
    });
    let mut out = Vec::with_capacity(load_p.len());
    let mut prev: Option<Vec<f64>> = None;
    for (t, loads) in load_p.iter().enumerate() {
        let demand: f64 = loads.iter().sum();
        let pot: f64 = potential[t].iter().sum();
        let band = |g: usize| {
            let gen = &grid.generators[g];
            match &prev {
                Some(p) => (gen.p_min.max(p[g] - gen.ramp_rate), gen.p_max.min(p[g] + gen.ramp_rate)),
                None => (gen.p_min, gen.p_max),
            }
        };
        let lo_sum: f64 = order.iter().map(|&g| band(g).0).sum();
        let hi_sum: f64 = order.iter().map(|&g| band(g).1).sum();

        let mut row = vec![0.0; grid.n_gen()];
        let residual = demand - pot;
        if residual > hi_sum {
            return Err(ChronicsError::InfeasibleDispatch {
                step: t,
                reason: "demand exceeds available controllable capacity",
            });
        }
        if residual < lo_sum {
            let room = demand - lo_sum;
            if room < 0.0 {
                return Err(ChronicsError::InfeasibleDispatch {
                    step: t,
                    reason: "demand below committed minimum generation",
                });
            }
            let f = if pot > 0.0 { room / pot } else { 0.0 };
            for (k, &g) in grid.renewables().iter().enumerate() {
                row[g] = potential[t][k] * f;
            }
            for &g in &order {
                row[g] = band(g).0;
            }
        } else {
            for (k, &g) in grid.renewables().iter().enumerate() {
                row[g] = potential[t][k];
            }
            let mut remaining = residual - lo_sum;
            for &g in &order {
                let (lo, hi) = band(g);
                let take = remaining.min(hi - lo).max(0.0);
                row[g] = lo + take;
                remaining -= take;
            }
        }
        prev = Some(row.clone());
        out.push(row);
    }
    Ok(out)
}
