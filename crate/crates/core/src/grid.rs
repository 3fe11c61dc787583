//! Static network description and topology bookkeeping.
//!
//! A [`Grid`] is validated once at construction and immutable afterwards.
//! Every element class is kept sorted by identifier, so element indices
//! follow id order everywhere (observation layout, tie-breaking, CSV
//! columns).

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("{class} `{id}` references unknown substation `{substation}`")]
    DanglingReference { class: &'static str, id: String, substation: String },
    #[error("duplicate {class} id `{id}`")]
    DuplicateId { class: &'static str, id: String },
    #[error("line `{id}`: reactance must be > 0, got {value}")]
    NonPositiveReactance { id: String, value: f64 },
    #[error("{class} `{id}`: {reason}")]
    InvalidValue { class: &'static str, id: String, reason: String },
    #[error("line `{id}` connects substation `{substation}` to itself")]
    SelfLoop { id: String, substation: String },
    #[error("grid is not connected: substation `{substation}` is unreachable")]
    Disconnected { substation: String },
    #[error("base_mva must be > 0, got {0}")]
    BaseMva(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenType {
    Nuclear,
    Solar,
    Wind,
    Thermal,
    Hydro,
}

impl GenType {
    pub const ALL: [GenType; 5] = [GenType::Nuclear, GenType::Solar, GenType::Wind, GenType::Thermal, GenType::Hydro];

    pub fn is_renewable(self) -> bool {
        matches!(self, GenType::Solar | GenType::Wind)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GenType::Nuclear => "nuclear",
            GenType::Solar => "solar",
            GenType::Wind => "wind",
            GenType::Thermal => "thermal",
            GenType::Hydro => "hydro",
        }
    }
}

impl fmt::Display for GenType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Substation {
    pub id: String,
}

/// A transmission line. `from`/`to` are substation indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: String,
    pub from: usize,
    pub to: usize,
    /// Series reactance, per unit.
    pub reactance: f64,
    /// Series resistance, per unit.
    pub resistance: f64,
    /// MW.
    pub thermal_limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: String,
    pub substation: usize,
    pub gen_type: GenType,
    pub p_max: f64,
    pub p_min: f64,
    /// MW per 5-minute step.
    pub ramp_rate: f64,
    /// Currency per MWh.
    pub marginal_cost: f64,
}

impl Generator {
    pub fn renewable(&self) -> bool {
        self.gen_type.is_renewable()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Load {
    pub id: String,
    pub substation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Storage {
    pub id: String,
    pub substation: usize,
    pub e_max: f64,
    pub p_max: f64,
    pub efficiency_charge: f64,
    pub efficiency_discharge: f64,
    pub cost_per_mwh: f64,
}

/// Raw element descriptions with substation references given by id.
///
/// This is what file formats produce; [`Grid::new`] resolves and validates it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GridSpec {
    pub base_mva: f64,
    pub substations: Vec<String>,
    pub lines: Vec<LineSpec>,
    pub generators: Vec<GeneratorSpec>,
    pub loads: Vec<LoadSpec>,
    pub storages: Vec<StorageSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSpec {
    pub id: String,
    pub from: String,
    pub to: String,
    pub x_pu: f64,
    pub r_pu: f64,
    pub thermal_limit_mw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub id: String,
    pub sub: String,
    pub gen_type: GenType,
    pub p_max: f64,
    pub p_min: f64,
    pub ramp_mw_per_step: f64,
    pub marginal_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadSpec {
    pub id: String,
    pub sub: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StorageSpec {
    pub id: String,
    pub sub: String,
    pub e_max_mwh: f64,
    pub p_max_mw: f64,
    pub eff_c: f64,
    pub eff_d: f64,
    pub cost_per_mwh: f64,
}

/// One end of a grid element that sits on a busbar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum Element {
    LineOrigin(usize),
    LineExtremity(usize),
    Generator(usize),
    Load(usize),
    Storage(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub base_mva: f64,
    pub substations: Vec<Substation>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
    pub loads: Vec<Load>,
    pub storages: Vec<Storage>,
    sub_elements: Vec<Vec<Element>>,
    renewables: Vec<usize>,
    dispatchables: Vec<usize>,
}

fn check_unique<'a>(class: &'static str, ids: impl Iterator<Item = &'a str>) -> Result<(), GridError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(GridError::DuplicateId { class, id: id.into() });
        }
    }
    Ok(())
}

fn invalid(class: &'static str, id: &str, reason: impl Into<String>) -> GridError {
    GridError::InvalidValue { class, id: id.into(), reason: reason.into() }
}

fn finite_nonneg(class: &'static str, id: &str, name: &str, v: f64) -> Result<(), GridError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(class, id, alloc::format!("{name} must be finite and >= 0, got {v}")))
    }
}

impl Grid {
    /// Resolves references, sorts every element class by id and checks all
    /// structural invariants.
    pub fn new(spec: GridSpec) -> Result<Self, GridError> {
        if !(spec.base_mva.is_finite() && spec.base_mva > 0.0) {
            return Err(GridError::BaseMva(spec.base_mva));
        }
        check_unique("substation", spec.substations.iter().map(String::as_str))?;
        check_unique("line", spec.lines.iter().map(|l| l.id.as_str()))?;
        check_unique("generator", spec.generators.iter().map(|g| g.id.as_str()))?;
        check_unique("load", spec.loads.iter().map(|l| l.id.as_str()))?;
        check_unique("storage", spec.storages.iter().map(|s| s.id.as_str()))?;

        let mut sub_ids = spec.substations.clone();
        sub_ids.sort();
        let resolve = |class: &'static str, id: &str, sub: &str| {
            sub_ids.binary_search_by(|s| s.as_str().cmp(sub)).map_err(|_| GridError::DanglingReference {
                class,
                id: id.into(),
                substation: sub.into(),
            })
        };

        let mut lines = Vec::with_capacity(spec.lines.len());
        for l in &spec.lines {
            let from = resolve("line", &l.id, &l.from)?;
            let to = resolve("line", &l.id, &l.to)?;
            if from == to {
                return Err(GridError::SelfLoop { id: l.id.clone(), substation: l.from.clone() });
            }
            if !(l.x_pu.is_finite() && l.x_pu > 0.0) {
                return Err(GridError::NonPositiveReactance { id: l.id.clone(), value: l.x_pu });
            }
            finite_nonneg("line", &l.id, "resistance", l.r_pu)?;
            if !(l.thermal_limit_mw.is_finite() && l.thermal_limit_mw > 0.0) {
                return Err(invalid("line", &l.id, "thermal limit must be > 0"));
            }
            lines.push(Line {
                id: l.id.clone(),
                from,
                to,
                reactance: l.x_pu,
                resistance: l.r_pu,
                thermal_limit: l.thermal_limit_mw,
            });
        }

        let mut generators = Vec::with_capacity(spec.generators.len());
        for g in &spec.generators {
            let substation = resolve("generator", &g.id, &g.sub)?;
            finite_nonneg("generator", &g.id, "p_min", g.p_min)?;
            finite_nonneg("generator", &g.id, "ramp rate", g.ramp_mw_per_step)?;
            finite_nonneg("generator", &g.id, "marginal cost", g.marginal_cost)?;
            if !(g.p_max.is_finite() && g.p_max >= g.p_min) {
                return Err(invalid("generator", &g.id, "requires p_min <= p_max"));
            }
            generators.push(Generator {
                id: g.id.clone(),
                substation,
                gen_type: g.gen_type,
                p_max: g.p_max,
                p_min: g.p_min,
                ramp_rate: g.ramp_mw_per_step,
                marginal_cost: g.marginal_cost,
            });
        }

        let mut loads = Vec::with_capacity(spec.loads.len());
        for l in &spec.loads {
            let substation = resolve("load", &l.id, &l.sub)?;
            loads.push(Load { id: l.id.clone(), substation });
        }

        let mut storages = Vec::with_capacity(spec.storages.len());
        for s in &spec.storages {
            let substation = resolve("storage", &s.id, &s.sub)?;
            if !(s.e_max_mwh.is_finite() && s.e_max_mwh > 0.0) {
                return Err(invalid("storage", &s.id, "e_max must be > 0"));
            }
            if !(s.p_max_mw.is_finite() && s.p_max_mw > 0.0) {
                return Err(invalid("storage", &s.id, "p_max must be > 0"));
            }
            for (name, eff) in [("charge efficiency", s.eff_c), ("discharge efficiency", s.eff_d)] {
                if !(eff > 0.0 && eff <= 1.0) {
                    return Err(invalid("storage", &s.id, alloc::format!("{name} must be in (0, 1]")));
                }
            }
            finite_nonneg("storage", &s.id, "cost per MWh", s.cost_per_mwh)?;
            storages.push(Storage {
                id: s.id.clone(),
                substation,
                e_max: s.e_max_mwh,
                p_max: s.p_max_mw,
                efficiency_charge: s.eff_c,
                efficiency_discharge: s.eff_d,
                cost_per_mwh: s.cost_per_mwh,
            });
        }

        lines.sort_by(|a, b| a.id.cmp(&b.id));
        generators.sort_by(|a, b| a.id.cmp(&b.id));
        loads.sort_by(|a, b| a.id.cmp(&b.id));
        storages.sort_by(|a, b| a.id.cmp(&b.id));

        let substations: Vec<Substation> = sub_ids.into_iter().map(|id| Substation { id }).collect();
        let grid = Self::assemble(spec.base_mva, substations, lines, generators, loads, storages);
        grid.check_connected()?;
        Ok(grid)
    }

    fn assemble(
        base_mva: f64,
        substations: Vec<Substation>,
        lines: Vec<Line>,
        generators: Vec<Generator>,
        loads: Vec<Load>,
        storages: Vec<Storage>,
    ) -> Self {
        let mut sub_elements = vec![Vec::new(); substations.len()];
        for (i, l) in lines.iter().enumerate() {
            sub_elements[l.from].push(Element::LineOrigin(i));
            sub_elements[l.to].push(Element::LineExtremity(i));
        }
        for (i, g) in generators.iter().enumerate() {
            sub_elements[g.substation].push(Element::Generator(i));
        }
        for (i, l) in loads.iter().enumerate() {
            sub_elements[l.substation].push(Element::Load(i));
        }
        for (i, s) in storages.iter().enumerate() {
            sub_elements[s.substation].push(Element::Storage(i));
        }
        for e in &mut sub_elements {
            e.sort();
        }
        let renewables = (0..generators.len()).filter(|&g| generators[g].renewable()).collect();
        let dispatchables = (0..generators.len()).filter(|&g| !generators[g].renewable()).collect();
        Self { base_mva, substations, lines, generators, loads, storages, sub_elements, renewables, dispatchables }
    }

    fn check_connected(&self) -> Result<(), GridError> {
        let n = self.substations.len();
        if n == 0 {
            return Ok(());
        }
        let mut uf = UnionFind::new(n);
        for l in &self.lines {
            uf.union(l.from, l.to);
        }
        let root = uf.find(0);
        for s in 0..n {
            if uf.find(s) != root {
                return Err(GridError::Disconnected { substation: self.substations[s].id.clone() });
            }
        }
        Ok(())
    }

    /// Inverse of [`Grid::new`]: references expressed by id again.
    pub fn to_spec(&self) -> GridSpec {
        let sub = |i: usize| self.substations[i].id.clone();
        GridSpec {
            base_mva: self.base_mva,
            substations: self.substations.iter().map(|s| s.id.clone()).collect(),
            lines: self
                .lines
                .iter()
                .map(|l| LineSpec {
                    id: l.id.clone(),
                    from: sub(l.from),
                    to: sub(l.to),
                    x_pu: l.reactance,
                    r_pu: l.resistance,
                    thermal_limit_mw: l.thermal_limit,
                })
                .collect(),
            generators: self
                .generators
                .iter()
                .map(|g| GeneratorSpec {
                    id: g.id.clone(),
                    sub: sub(g.substation),
                    gen_type: g.gen_type,
                    p_max: g.p_max,
                    p_min: g.p_min,
                    ramp_mw_per_step: g.ramp_rate,
                    marginal_cost: g.marginal_cost,
                })
                .collect(),
            loads: self.loads.iter().map(|l| LoadSpec { id: l.id.clone(), sub: sub(l.substation) }).collect(),
            storages: self
                .storages
                .iter()
                .map(|s| StorageSpec {
                    id: s.id.clone(),
                    sub: sub(s.substation),
                    e_max_mwh: s.e_max,
                    p_max_mw: s.p_max,
                    eff_c: s.efficiency_charge,
                    eff_d: s.efficiency_discharge,
                    cost_per_mwh: s.cost_per_mwh,
                })
                .collect(),
        }
    }

    pub fn n_sub(&self) -> usize {
        self.substations.len()
    }
    pub fn n_line(&self) -> usize {
        self.lines.len()
    }
    pub fn n_gen(&self) -> usize {
        self.generators.len()
    }
    pub fn n_load(&self) -> usize {
        self.loads.len()
    }
    pub fn n_storage(&self) -> usize {
        self.storages.len()
    }

    /// Generator indices of solar and wind units, in id order.
    pub fn renewables(&self) -> &[usize] {
        &self.renewables
    }

    /// Generator indices of nuclear, thermal and hydro units, in id order.
    pub fn dispatchables(&self) -> &[usize] {
        &self.dispatchables
    }

    /// Position of generator `gen` within [`Grid::renewables`].
    pub fn renewable_slot(&self, gen: usize) -> Option<usize> {
        self.renewables.binary_search(&gen).ok()
    }

    /// Elements attached to a substation, sorted.
    pub fn elements_at(&self, sub: usize) -> &[Element] {
        &self.sub_elements[sub]
    }

    pub fn substation_of(&self, element: Element) -> usize {
        match element {
            Element::LineOrigin(l) => self.lines[l].from,
            Element::LineExtremity(l) => self.lines[l].to,
            Element::Generator(g) => self.generators[g].substation,
            Element::Load(l) => self.loads[l].substation,
            Element::Storage(s) => self.storages[s].substation,
        }
    }

    pub fn element_exists(&self, element: Element) -> bool {
        match element {
            Element::LineOrigin(i) | Element::LineExtremity(i) => i < self.lines.len(),
            Element::Generator(i) => i < self.generators.len(),
            Element::Load(i) => i < self.loads.len(),
            Element::Storage(i) => i < self.storages.len(),
        }
    }

    pub fn line_index(&self, id: &str) -> Option<usize> {
        self.lines.binary_search_by(|l| l.id.as_str().cmp(id)).ok()
    }
    pub fn generator_index(&self, id: &str) -> Option<usize> {
        self.generators.binary_search_by(|g| g.id.as_str().cmp(id)).ok()
    }
    pub fn load_index(&self, id: &str) -> Option<usize> {
        self.loads.binary_search_by(|l| l.id.as_str().cmp(id)).ok()
    }
    pub fn storage_index(&self, id: &str) -> Option<usize> {
        self.storages.binary_search_by(|s| s.id.as_str().cmp(id)).ok()
    }
    pub fn substation_index(&self, id: &str) -> Option<usize> {
        self.substations.binary_search_by(|s| s.id.as_str().cmp(id)).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Busbar {
    One,
    Two,
}

impl Busbar {
    pub fn number(self) -> u8 {
        match self {
            Busbar::One => 1,
            Busbar::Two => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Busbar::One),
            2 => Some(Busbar::Two),
            _ => None,
        }
    }
}

/// Switching state of the network: line status, busbar assignments and
/// action cooldowns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopologyState {
    pub line_status: Vec<bool>,
    pub line_origin_bus: Vec<Busbar>,
    pub line_extremity_bus: Vec<Busbar>,
    pub gen_bus: Vec<Busbar>,
    pub load_bus: Vec<Busbar>,
    pub storage_bus: Vec<Busbar>,
    pub line_cooldown: Vec<u32>,
    pub sub_cooldown: Vec<u32>,
}

impl TopologyState {
    /// All lines in service, every element on busbar 1, no cooldowns.
    pub fn initial(grid: &Grid) -> Self {
        Self {
            line_status: vec![true; grid.n_line()],
            line_origin_bus: vec![Busbar::One; grid.n_line()],
            line_extremity_bus: vec![Busbar::One; grid.n_line()],
            gen_bus: vec![Busbar::One; grid.n_gen()],
            load_bus: vec![Busbar::One; grid.n_load()],
            storage_bus: vec![Busbar::One; grid.n_storage()],
            line_cooldown: vec![0; grid.n_line()],
            sub_cooldown: vec![0; grid.n_sub()],
        }
    }

    pub fn busbar(&self, element: Element) -> Busbar {
        match element {
            Element::LineOrigin(l) => self.line_origin_bus[l],
            Element::LineExtremity(l) => self.line_extremity_bus[l],
            Element::Generator(g) => self.gen_bus[g],
            Element::Load(l) => self.load_bus[l],
            Element::Storage(s) => self.storage_bus[s],
        }
    }

    pub fn set_busbar(&mut self, element: Element, bus: Busbar) {
        match element {
            Element::LineOrigin(l) => self.line_origin_bus[l] = bus,
            Element::LineExtremity(l) => self.line_extremity_bus[l] = bus,
            Element::Generator(g) => self.gen_bus[g] = bus,
            Element::Load(l) => self.load_bus[l] = bus,
            Element::Storage(s) => self.storage_bus[s] = bus,
        }
    }

    /// Whether the element currently touches its busbar. Line ends of
    /// out-of-service lines do not.
    pub fn is_connected(&self, element: Element) -> bool {
        match element {
            Element::LineOrigin(l) | Element::LineExtremity(l) => self.line_status[l],
            _ => true,
        }
    }

    pub fn matches(&self, grid: &Grid) -> bool {
        self.line_status.len() == grid.n_line()
            && self.line_origin_bus.len() == grid.n_line()
            && self.line_extremity_bus.len() == grid.n_line()
            && self.gen_bus.len() == grid.n_gen()
            && self.load_bus.len() == grid.n_load()
            && self.storage_bus.len() == grid.n_storage()
            && self.line_cooldown.len() == grid.n_line()
            && self.sub_cooldown.len() == grid.n_sub()
    }
}

/// Electrical buses induced by a topology.
#[derive(Debug, Clone, PartialEq)]
pub struct BusGraph {
    /// (substation, busbar) for every bus, sorted.
    pub buses: Vec<(usize, Busbar)>,
    pub line_from_bus: Vec<Option<usize>>,
    pub line_to_bus: Vec<Option<usize>>,
    pub gen_bus: Vec<usize>,
    pub load_bus: Vec<usize>,
    pub storage_bus: Vec<usize>,
    /// Connected components over in-service lines; each lists bus indices in
    /// ascending order, components ordered by their smallest bus.
    pub components: Vec<Vec<usize>>,
    pub component_of_bus: Vec<usize>,
}

impl BusGraph {
    pub fn n_bus(&self) -> usize {
        self.buses.len()
    }
}

/// Builds the bus graph: one bus per occupied (substation, busbar) pair and
/// its connected components through in-service lines.
pub fn effective_buses(grid: &Grid, topology: &TopologyState) -> BusGraph {
    let mut occupied = vec![[false; 2]; grid.n_sub()];
    for sub in 0..grid.n_sub() {
        for &e in grid.elements_at(sub) {
            if topology.is_connected(e) {
                occupied[sub][(topology.busbar(e).number() - 1) as usize] = true;
            }
        }
    }
    let mut buses = Vec::new();
    let mut bus_index = vec![[usize::MAX; 2]; grid.n_sub()];
    for (sub, occ) in occupied.iter().enumerate() {
        for (k, bb) in [Busbar::One, Busbar::Two].into_iter().enumerate() {
            if occ[k] {
                bus_index[sub][k] = buses.len();
                buses.push((sub, bb));
            }
        }
    }
    let bus_of = |e: Element| {
        let sub = grid.substation_of(e);
        bus_index[sub][(topology.busbar(e).number() - 1) as usize]
    };

    let mut line_from_bus = vec![None; grid.n_line()];
    let mut line_to_bus = vec![None; grid.n_line()];
    let mut uf = UnionFind::new(buses.len());
    for l in 0..grid.n_line() {
        if topology.line_status[l] {
            let f = bus_of(Element::LineOrigin(l));
            let t = bus_of(Element::LineExtremity(l));
            line_from_bus[l] = Some(f);
            line_to_bus[l] = Some(t);
            uf.union(f, t);
        }
    }
    let gen_bus = (0..grid.n_gen()).map(|g| bus_of(Element::Generator(g))).collect();
    let load_bus = (0..grid.n_load()).map(|l| bus_of(Element::Load(l))).collect();
    let storage_bus = (0..grid.n_storage()).map(|s| bus_of(Element::Storage(s))).collect();

    let mut component_of_bus = vec![usize::MAX; buses.len()];
    let mut root_to_comp = vec![usize::MAX; buses.len()];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for b in 0..buses.len() {
        let r = uf.find(b);
        if root_to_comp[r] == usize::MAX {
            root_to_comp[r] = components.len();
            components.push(Vec::new());
        }
        component_of_bus[b] = root_to_comp[r];
        components[root_to_comp[r]].push(b);
    }

    BusGraph { buses, line_from_bus, line_to_bus, gen_bus, load_bus, storage_bus, components, component_of_bus }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Keep the smaller index as root so component order is stable.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn line(id: &str, from: &str, to: &str) -> LineSpec {
        LineSpec { id: id.into(), from: from.into(), to: to.into(), x_pu: 0.1, r_pu: 0.01, thermal_limit_mw: 100.0 }
    }

    fn gen(id: &str, sub: &str) -> GeneratorSpec {
        GeneratorSpec {
            id: id.into(),
            sub: sub.into(),
            gen_type: GenType::Thermal,
            p_max: 100.0,
            p_min: 0.0,
            ramp_mw_per_step: 10.0,
            marginal_cost: 50.0,
        }
    }

    fn minimal() -> GridSpec {
        GridSpec {
            base_mva: 100.0,
            substations: vec!["A".into(), "B".into()],
            lines: vec![line("L0", "A", "B")],
            generators: vec![gen("G0", "A")],
            loads: vec![LoadSpec { id: "D0".into(), sub: "B".into() }],
            storages: vec![],
        }
    }

    #[test]
    fn minimal_grid_counts() {
        let g = Grid::new(minimal()).unwrap();
        assert_eq!((g.n_sub(), g.n_line(), g.n_gen(), g.n_load(), g.n_storage()), (2, 1, 1, 1, 0));
    }

    #[test]
    fn dangling_reference_reports_element() {
        let mut spec = minimal();
        spec.lines.push(line("L1", "A", "Z"));
        let err = Grid::new(spec).unwrap_err();
        assert_eq!(err, GridError::DanglingReference { class: "line", id: "L1".into(), substation: "Z".into() });
        assert!(err.to_string().contains("L1"));
    }

    #[test]
    fn rejects_zero_reactance_and_duplicates() {
        let mut spec = minimal();
        spec.lines[0].x_pu = 0.0;
        assert!(matches!(Grid::new(spec).unwrap_err(), GridError::NonPositiveReactance { .. }));

        let mut spec = minimal();
        spec.loads.push(LoadSpec { id: "D0".into(), sub: "A".into() });
        assert!(matches!(Grid::new(spec).unwrap_err(), GridError::DuplicateId { class: "load", .. }));
    }

    #[test]
    fn rejects_disconnected_grid() {
        let mut spec = minimal();
        spec.substations.push("C".into());
        assert!(matches!(Grid::new(spec).unwrap_err(), GridError::Disconnected { .. }));
    }

    #[test]
    fn elements_sorted_by_id() {
        let mut spec = minimal();
        spec.substations.push("C".into());
        spec.lines.push(line("L2", "B", "C"));
        spec.lines.push(line("L1", "A", "C"));
        let g = Grid::new(spec).unwrap();
        let ids: Vec<_> = g.lines.iter().map(|l| l.id.as_str()).collect();
        assert_eq!(ids, ["L0", "L1", "L2"]);
        assert_eq!(g.line_index("L2"), Some(2));
        assert_eq!(Grid::new(g.to_spec()).unwrap(), g);
    }

    fn triangle() -> Grid {
        let mut spec = minimal();
        spec.substations.push("C".into());
        spec.lines.push(line("L1", "B", "C"));
        spec.lines.push(line("L2", "A", "C"));
        spec.loads.push(LoadSpec { id: "D1".into(), sub: "C".into() });
        Grid::new(spec).unwrap()
    }

    #[test]
    fn unsplit_topology_gives_one_bus_per_substation() {
        let g = triangle();
        let topo = TopologyState::initial(&g);
        let bg = effective_buses(&g, &topo);
        assert_eq!(bg.n_bus(), 3);
        assert_eq!(bg.components.len(), 1);
        assert!(bg.buses.iter().all(|&(_, b)| b == Busbar::One));
    }

    #[test]
    fn splitting_adds_a_bus() {
        let g = triangle();
        let mut topo = TopologyState::initial(&g);
        // Move the load at C to busbar 2: it becomes an isolated bus.
        topo.set_busbar(Element::Load(1), Busbar::Two);
        let bg = effective_buses(&g, &topo);
        assert_eq!(bg.n_bus(), g.n_sub() + 1);
        assert_eq!(bg.components.len(), 2);
    }

    #[test]
    fn disconnecting_only_line_isolates_bus() {
        let g = Grid::new(minimal()).unwrap();
        let mut topo = TopologyState::initial(&g);
        topo.line_status[0] = false;
        let bg = effective_buses(&g, &topo);
        assert_eq!(bg.n_bus(), 2);
        assert_eq!(bg.components, vec![vec![0], vec![1]]);
        assert_eq!(bg.line_from_bus[0], None);
    }
}
