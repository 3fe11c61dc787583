//! JSON grid file format.

use std::path::Path;

use gridmdp_core::grid::{GenType, GeneratorSpec, Grid, GridError, GridSpec, LineSpec, LoadSpec, StorageSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum GridFileError {
    #[error("grid file schema violation: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("invalid grid: {0}")]
    Invalid(#[from] GridError),
    #[error("cannot read grid file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDocument {
    pub base_mva: f64,
    pub substations: Vec<SubstationEntry>,
    pub lines: Vec<LineEntry>,
    pub generators: Vec<GeneratorEntry>,
    pub loads: Vec<LoadEntry>,
    #[serde(default)]
    pub storages: Vec<StorageEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubstationEntry {
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineEntry {
    pub id: String,
    pub from: String,
    pub to: String,
    pub x_pu: f64,
    pub r_pu: f64,
    pub thermal_limit_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorEntry {
    pub id: String,
    pub sub: String,
    #[serde(rename = "type")]
    pub gen_type: GenType,
    pub p_max: f64,
    pub p_min: f64,
    pub ramp_mw_per_step: f64,
    pub marginal_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadEntry {
    pub id: String,
    pub sub: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageEntry {
    pub id: String,
    pub sub: String,
    pub e_max_mwh: f64,
    pub p_max_mw: f64,
    pub eff_c: f64,
    pub eff_d: f64,
    pub cost_per_mwh: f64,
}

impl From<GridDocument> for GridSpec {
    fn from(d: GridDocument) -> Self {
        GridSpec {
            base_mva: d.base_mva,
            substations: d.substations.into_iter().map(|s| s.id).collect(),
            lines: d
                .lines
                .into_iter()
                .map(|l| LineSpec {
                    id: l.id,
                    from: l.from,
                    to: l.to,
                    x_pu: l.x_pu,
                    r_pu: l.r_pu,
                    thermal_limit_mw: l.thermal_limit_mw,
                })
                .collect(),
            generators: d
                .generators
                .into_iter()
                .map(|g| GeneratorSpec {
                    id: g.id,
                    sub: g.sub,
                    gen_type: g.gen_type,
                    p_max: g.p_max,
                    p_min: g.p_min,
                    ramp_mw_per_step: g.ramp_mw_per_step,
                    marginal_cost: g.marginal_cost,
                })
                .collect(),
            loads: d.loads.into_iter().map(|l| LoadSpec { id: l.id, sub: l.sub }).collect(),
            storages: d
                .storages
                .into_iter()
                .map(|s| StorageSpec {
                    id: s.id,
                    sub: s.sub,
                    e_max_mwh: s.e_max_mwh,
                    p_max_mw: s.p_max_mw,
                    eff_c: s.eff_c,
                    eff_d: s.eff_d,
                    cost_per_mwh: s.cost_per_mwh,
                })
                .collect(),
        }
    }
}

impl From<GridSpec> for GridDocument {
    fn from(s: GridSpec) -> Self {
        GridDocument {
            base_mva: s.base_mva,
            substations: s.substations.into_iter().map(|id| SubstationEntry { id }).collect(),
            lines: s
                .lines
                .into_iter()
                .map(|l| LineEntry {
                    id: l.id,
                    from: l.from,
                    to: l.to,
                    x_pu: l.x_pu,
                    r_pu: l.r_pu,
                    thermal_limit_mw: l.thermal_limit_mw,
                })
                .collect(),
            generators: s
                .generators
                .into_iter()
                .map(|g| GeneratorEntry {
                    id: g.id,
                    sub: g.sub,
                    gen_type: g.gen_type,
                    p_max: g.p_max,
                    p_min: g.p_min,
                    ramp_mw_per_step: g.ramp_mw_per_step,
                    marginal_cost: g.marginal_cost,
                })
                .collect(),
            loads: s.loads.into_iter().map(|l| LoadEntry { id: l.id, sub: l.sub }).collect(),
            storages: s
                .storages
                .into_iter()
                .map(|st| StorageEntry {
                    id: st.id,
                    sub: st.sub,
                    e_max_mwh: st.e_max_mwh,
                    p_max_mw: st.p_max_mw,
                    eff_c: st.eff_c,
                    eff_d: st.eff_d,
                    cost_per_mwh: st.cost_per_mwh,
                })
                .collect(),
        }
    }
}

pub fn parse_grid(text: &str) -> Result<Grid, GridFileError> {
    let doc: GridDocument = serde_json::from_str(text)?;
    Ok(Grid::new(doc.into())?)
}

pub fn serialize_grid(grid: &Grid) -> String {
    let doc = GridDocument::from(grid.to_spec());
    // Serializing plain data with string keys cannot fail.
    serde_json::to_string_pretty(&doc).expect("grid document serializes")
}

pub fn read_grid(path: &Path) -> Result<Grid, GridFileError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| GridFileError::Io { path: path.display().to_string(), source })?;
    parse_grid(&text)
}

pub const DEFAULT_GRID_JSON: &str = include_str!("../data/default_grid.json");

/// The shipped 14-substation grid.
pub fn default_grid() -> Grid {
    parse_grid(DEFAULT_GRID_JSON).expect("shipped default grid is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "base_mva": 100,
        "substations": [{"id": "A"}, {"id": "B"}],
        "lines": [{"id": "L0", "from": "A", "to": "B", "x_pu": 0.1, "r_pu": 0.01, "thermal_limit_mw": 50}],
        "generators": [{"id": "G0", "sub": "A", "type": "thermal", "p_max": 100, "p_min": 0,
                        "ramp_mw_per_step": 10, "marginal_cost": 40}],
        "loads": [{"id": "D0", "sub": "B"}]
    }"#;

    #[test]
    fn minimal_document() {
        let g = parse_grid(MINIMAL).unwrap();
        assert_eq!((g.n_sub(), g.n_line(), g.n_gen(), g.n_load(), g.n_storage()), (2, 1, 1, 1, 0));
    }

    #[test]
    fn unknown_substation_is_dangling() {
        let text = MINIMAL.replace(r#""to": "B""#, r#""to": "Q""#);
        let err = parse_grid(&text).unwrap_err();
        assert!(matches!(err, GridFileError::Invalid(GridError::DanglingReference { ref id, .. }) if id == "L0"));
    }

    #[test]
    fn schema_violation() {
        let text = MINIMAL.replace("x_pu", "reactance");
        assert!(matches!(parse_grid(&text).unwrap_err(), GridFileError::Schema(_)));
    }

    #[test]
    fn default_grid_counts() {
        let g = default_grid();
        assert_eq!(g.n_sub(), 14);
        assert_eq!(g.n_line(), 20);
        assert_eq!(g.n_load(), 11);
        assert_eq!(g.n_gen(), 5);
        assert_eq!(g.n_storage(), 2);
        let mut types: Vec<GenType> = g.generators.iter().map(|g| g.gen_type).collect();
        types.sort();
        let mut all = GenType::ALL.to_vec();
        all.sort();
        assert_eq!(types, all);
    }

    #[test]
    fn round_trip_is_identity() {
        let g = default_grid();
        assert_eq!(parse_grid(&serialize_grid(&g)).unwrap(), g);
    }
}
