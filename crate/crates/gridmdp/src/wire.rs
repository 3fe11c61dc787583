//! JSON form of actions, referring to elements by id.
//!
//! `schema/action.schema.json` describes the same format for clients.

use gridmdp_core::env::Action;
use gridmdp_core::grid::{Busbar, Element, Grid};
use serde::{Deserialize, Serialize};

pub const ACTION_SCHEMA: &str = include_str!("../schema/action.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum WireAction {
    DoNothing,
    SetLineStatus {
        line: String,
        connected: bool,
    },
    SetBusbar {
        substation: String,
        assignments: Vec<WireAssignment>,
    },
    Curtail {
        caps: Vec<WireCap>,
    },
    SetStorage {
        setpoints: Vec<WireSetpoint>,
    },
    Composite {
        #[serde(default)]
        caps: Vec<WireCap>,
        #[serde(default)]
        setpoints: Vec<WireSetpoint>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    LineOrigin,
    LineExtremity,
    Generator,
    Load,
    Storage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireAssignment {
    pub kind: ElementKind,
    pub id: String,
    /// 1 or 2.
    pub busbar: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireCap {
    pub generator: String,
    /// Fraction of `p_max`.
    pub cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireSetpoint {
    pub storage: String,
    /// MW, positive when charging.
    pub p_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WireError {
    #[error("unknown {class} {id:?}")]
    UnknownId { class: &'static str, id: String },
    #[error("busbar must be 1 or 2, got {0}")]
    BadBusbar(u8),
}

fn lookup(found: Option<usize>, class: &'static str, id: &str) -> Result<usize, WireError> {
    found.ok_or_else(|| WireError::UnknownId { class, id: id.to_string() })
}

impl WireAction {
    /// Resolves ids against `grid`. Bounds and cooldowns are left to the
    /// environment, which turns violations into a flagged do-nothing.
    pub fn resolve(&self, grid: &Grid) -> Result<Action, WireError> {
        let line = |id: &str| lookup(grid.line_index(id), "line", id);
        let caps = |caps: &[WireCap]| {
            caps.iter()
                .map(|c| Ok((lookup(grid.generator_index(&c.generator), "generator", &c.generator)?, c.cap)))
                .collect::<Result<Vec<_>, WireError>>()
        };
        let setpoints = |sp: &[WireSetpoint]| {
            sp.iter()
                .map(|s| Ok((lookup(grid.storage_index(&s.storage), "storage", &s.storage)?, s.p_mw)))
                .collect::<Result<Vec<_>, WireError>>()
        };
        Ok(match self {
            WireAction::DoNothing => Action::DoNothing,
            WireAction::SetLineStatus { line: id, connected } => {
                Action::SetLineStatus { line: line(id)?, connected: *connected }
            }
            WireAction::SetBusbar { substation, assignments } => Action::SetBusbar {
                substation: lookup(grid.substation_index(substation), "substation", substation)?,
                assignments: assignments
                    .iter()
                    .map(|a| {
                        let element = match a.kind {
                            ElementKind::LineOrigin => Element::LineOrigin(line(&a.id)?),
                            ElementKind::LineExtremity => Element::LineExtremity(line(&a.id)?),
                            ElementKind::Generator => {
                                Element::Generator(lookup(grid.generator_index(&a.id), "generator", &a.id)?)
                            }
                            ElementKind::Load => Element::Load(lookup(grid.load_index(&a.id), "load", &a.id)?),
                            ElementKind::Storage => {
                                Element::Storage(lookup(grid.storage_index(&a.id), "storage", &a.id)?)
                            }
                        };
                        let bus = Busbar::from_number(a.busbar).ok_or(WireError::BadBusbar(a.busbar))?;
                        Ok((element, bus))
                    })
                    .collect::<Result<_, WireError>>()?,
            },
            WireAction::Curtail { caps: c } => Action::Curtail(caps(c)?),
            WireAction::SetStorage { setpoints: s } => Action::SetStorage(setpoints(s)?),
            WireAction::Composite { caps: c, setpoints: s } => {
                Action::Composite { curtail: caps(c)?, storage: setpoints(s)? }
            }
        })
    }

    /// # Panics
    /// If `action` refers to an element `grid` does not have.
    pub fn from_action(action: &Action, grid: &Grid) -> Self {
        let caps = |c: &[(usize, f64)]| {
            c.iter().map(|&(g, cap)| WireCap { generator: grid.generators[g].id.clone(), cap }).collect()
        };
        let setpoints = |s: &[(usize, f64)]| {
            s.iter().map(|&(k, p)| WireSetpoint { storage: grid.storages[k].id.clone(), p_mw: p }).collect()
        };
        match action {
            Action::DoNothing => WireAction::DoNothing,
            Action::SetLineStatus { line, connected } => {
                WireAction::SetLineStatus { line: grid.lines[*line].id.clone(), connected: *connected }
            }
            Action::SetBusbar { substation, assignments } => WireAction::SetBusbar {
                substation: grid.substations[*substation].id.clone(),
                assignments: assignments
                    .iter()
                    .map(|&(e, bus)| {
                        let (kind, id) = match e {
                            Element::LineOrigin(i) => (ElementKind::LineOrigin, &grid.lines[i].id),
                            Element::LineExtremity(i) => (ElementKind::LineExtremity, &grid.lines[i].id),
                            Element::Generator(i) => (ElementKind::Generator, &grid.generators[i].id),
                            Element::Load(i) => (ElementKind::Load, &grid.loads[i].id),
                            Element::Storage(i) => (ElementKind::Storage, &grid.storages[i].id),
                        };
                        WireAssignment { kind, id: id.clone(), busbar: bus.number() }
                    })
                    .collect(),
            },
            Action::Curtail(c) => WireAction::Curtail { caps: caps(c) },
            Action::SetStorage(s) => WireAction::SetStorage { setpoints: setpoints(s) },
            Action::Composite { curtail, storage } => {
                WireAction::Composite { caps: caps(curtail), setpoints: setpoints(storage) }
            }
        }
    }
}
