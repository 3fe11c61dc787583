use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::grid::{Busbar, Element, Grid};

/// Agent action. Indices refer to the grid's id-sorted element order;
/// curtailment targets are generator indices of renewable units.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub enum Action {
    #[default]
    DoNothing,
    SetLineStatus {
        line: usize,
        connected: bool,
    },
    SetBusbar {
        substation: usize,
        assignments: Vec<(Element, Busbar)>,
    },
    /// Cap ratio in `[0, 1]` of `p_max` per renewable generator.
    Curtail(Vec<(usize, f64)>),
    /// Storage power in MW, positive when charging.
    SetStorage(Vec<(usize, f64)>),
    Composite {
        curtail: Vec<(usize, f64)>,
        storage: Vec<(usize, f64)>,
    },
}

/// Why an action was rejected and replaced by do-nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Illegal {
    UnknownElement,
    LineCooldown,
    SubstationCooldown,
    InMaintenance,
    WrongSubstation,
    CapOutOfRange,
    StoragePowerOutOfRange,
    NotRenewable,
}

impl Action {
    pub fn curtail_part(&self) -> &[(usize, f64)] {
        match self {
            Action::Curtail(c) | Action::Composite { curtail: c, .. } => c,
            _ => &[],
        }
    }

    pub fn storage_part(&self) -> &[(usize, f64)] {
        match self {
            Action::SetStorage(s) | Action::Composite { storage: s, .. } => s,
            _ => &[],
        }
    }

    pub fn is_do_nothing(&self) -> bool {
        matches!(self, Action::DoNothing)
    }

    /// Bound and reference checks that do not depend on the episode state.
    pub fn check_static(&self, grid: &Grid) -> Result<(), Illegal> {
        match self {
            Action::DoNothing => Ok(()),
            Action::SetLineStatus { line, .. } => {
                if *line < grid.n_line() {
                    Ok(())
                } else {
                    Err(Illegal::UnknownElement)
                }
            }
            Action::SetBusbar { substation, assignments } => {
                if *substation >= grid.n_sub() {
                    return Err(Illegal::UnknownElement);
                }
                for &(e, _) in assignments {
                    if !grid.element_exists(e) {
                        return Err(Illegal::UnknownElement);
                    }
                    if grid.substation_of(e) != *substation {
                        return Err(Illegal::WrongSubstation);
                    }
                }
                Ok(())
            }
            _ => {
                for &(g, cap) in self.curtail_part() {
                    if g >= grid.n_gen() {
                        return Err(Illegal::UnknownElement);
                    }
                    if !grid.generators[g].renewable() {
                        return Err(Illegal::NotRenewable);
                    }
                    if !(0.0..=1.0).contains(&cap) {
                        return Err(Illegal::CapOutOfRange);
                    }
                }
                for &(s, p) in self.storage_part() {
                    if s >= grid.n_storage() {
                        return Err(Illegal::UnknownElement);
                    }
                    if !(p.is_finite() && p.abs() <= grid.storages[s].p_max * (1.0 + 1e-12)) {
                        return Err(Illegal::StoragePowerOutOfRange);
                    }
                }
                Ok(())
            }
        }
    }
}
