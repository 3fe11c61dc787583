//! Flat observation encoding.
//!
//! Layout, in order (element blocks follow id order):
//!
//! | block                         | length        |
//! |-------------------------------|---------------|
//! | sin/cos minute of day         | 2             |
//! | sin/cos day of year           | 2             |
//! | step fraction `t / T`         | 1             |
//! | generator output, MW          | `n_gen`       |
//! | renewable potential, MW       | `n_ren`       |
//! | renewable curtailed, MW       | `n_ren`       |
//! | load demand, MW               | `n_load`      |
//! | line flow, MW                 | `n_line`      |
//! | line rho                      | `n_line`      |
//! | line status (0/1)             | `n_line`      |
//! | line cooldown, steps          | `n_line`      |
//! | storage energy, MWh           | `n_storage`   |
//! | storage power, MW             | `n_storage`   |
//! | curtailment cap ratio         | `n_ren`       |
//! | redispatch margin up, down MW | 2             |
//!
//! Total: `5 + 2·n_ren + n_gen + n_load + 4·n_line + 2·n_storage + n_ren + 2`.
//! The line cooldown entry also reflects remaining maintenance.

use alloc::vec::Vec;
use core::ops::Range;

use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObsLayout {
    pub n_gen: usize,
    pub n_ren: usize,
    pub n_load: usize,
    pub n_line: usize,
    pub n_storage: usize,
}

impl ObsLayout {
    pub fn for_grid(grid: &Grid) -> Self {
        Self {
            n_gen: grid.n_gen(),
            n_ren: grid.renewables().len(),
            n_load: grid.n_load(),
            n_line: grid.n_line(),
            n_storage: grid.n_storage(),
        }
    }

    pub fn len(&self) -> usize {
        5 + 2 * self.n_ren + self.n_gen + self.n_load + 4 * self.n_line + 2 * self.n_storage + self.n_ren + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn block(&self, index: usize) -> Range<usize> {
        let sizes = [
            5,
            self.n_gen,
            self.n_ren,
            self.n_ren,
            self.n_load,
            self.n_line,
            self.n_line,
            self.n_line,
            self.n_line,
            self.n_storage,
            self.n_storage,
            self.n_ren,
            2,
        ];
        let start: usize = sizes[..index].iter().sum();
        start..start + sizes[index]
    }

    pub fn time(&self) -> Range<usize> {
        self.block(0)
    }
    pub fn gen_p(&self) -> Range<usize> {
        self.block(1)
    }
    pub fn renewable_potential(&self) -> Range<usize> {
        self.block(2)
    }
    pub fn renewable_curtailed(&self) -> Range<usize> {
        self.block(3)
    }
    pub fn load_p(&self) -> Range<usize> {
        self.block(4)
    }
    pub fn line_flow(&self) -> Range<usize> {
        self.block(5)
    }
    pub fn rho(&self) -> Range<usize> {
        self.block(6)
    }
    pub fn line_status(&self) -> Range<usize> {
        self.block(7)
    }
    pub fn line_cooldown(&self) -> Range<usize> {
        self.block(8)
    }
    pub fn storage_energy(&self) -> Range<usize> {
        self.block(9)
    }
    pub fn storage_power(&self) -> Range<usize> {
        self.block(10)
    }
    pub fn curtail_caps(&self) -> Range<usize> {
        self.block(11)
    }
    pub fn margins(&self) -> Range<usize> {
        self.block(12)
    }

    /// Per-entry magnitudes used to bring the observation to order one
    /// before it is fed to a network.
    pub fn scales(&self, grid: &Grid) -> Vec<f64> {
        let mut s = alloc::vec![1.0; self.len()];
        let gen_cap: f64 = grid.generators.iter().map(|g| g.p_max).sum::<f64>().max(1.0);
        let load_scale = gen_cap / grid.n_load().max(1) as f64;
        let ramp: f64 = grid.dispatchables().iter().map(|&g| grid.generators[g].ramp_rate).sum::<f64>().max(1.0);
        for (k, i) in self.gen_p().enumerate() {
            s[i] = grid.generators[k].p_max.max(1.0);
        }
        for block in [self.renewable_potential(), self.renewable_curtailed()] {
            for (k, i) in block.enumerate() {
                s[i] = grid.generators[grid.renewables()[k]].p_max.max(1.0);
            }
        }
        for i in self.load_p() {
            s[i] = load_scale;
        }
        for (l, i) in self.line_flow().enumerate() {
            s[i] = grid.lines[l].thermal_limit;
        }
        for i in self.line_cooldown() {
            s[i] = 10.0;
        }
        for (k, i) in self.storage_energy().enumerate() {
            s[i] = grid.storages[k].e_max;
        }
        for (k, i) in self.storage_power().enumerate() {
            s[i] = grid.storages[k].p_max;
        }
        for i in self.margins() {
            s[i] = ramp;
        }
        s
    }
}

/// Flat, agent-facing encoding of the environment state.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub values: Vec<f64>,
    pub layout: ObsLayout,
}

impl Observation {
    fn slice(&self, r: Range<usize>) -> &[f64] {
        &self.values[r]
    }

    pub fn step_fraction(&self) -> f64 {
        self.values[4]
    }
    pub fn gen_p(&self) -> &[f64] {
        self.slice(self.layout.gen_p())
    }
    pub fn renewable_potential(&self) -> &[f64] {
        self.slice(self.layout.renewable_potential())
    }
    pub fn renewable_curtailed(&self) -> &[f64] {
        self.slice(self.layout.renewable_curtailed())
    }
    pub fn load_p(&self) -> &[f64] {
        self.slice(self.layout.load_p())
    }
    pub fn line_flow(&self) -> &[f64] {
        self.slice(self.layout.line_flow())
    }
    pub fn rho(&self) -> &[f64] {
        self.slice(self.layout.rho())
    }
    pub fn line_status(&self) -> &[f64] {
        self.slice(self.layout.line_status())
    }
    pub fn line_cooldown(&self) -> &[f64] {
        self.slice(self.layout.line_cooldown())
    }
    pub fn storage_energy(&self) -> &[f64] {
        self.slice(self.layout.storage_energy())
    }
    pub fn storage_power(&self) -> &[f64] {
        self.slice(self.layout.storage_power())
    }
    pub fn curtail_caps(&self) -> &[f64] {
        self.slice(self.layout.curtail_caps())
    }
    pub fn margin_up(&self) -> f64 {
        self.values[self.layout.margins().start]
    }
    pub fn margin_down(&self) -> f64 {
        self.values[self.layout.margins().start + 1]
    }

    pub fn max_rho(&self) -> f64 {
        self.rho().iter().copied().fold(0.0, f64::max)
    }

    pub fn is_line_connected(&self, line: usize) -> bool {
        self.line_status()[line] > 0.5
    }
}
