//! Scenario directories.
//!
//! ```text
//! grid.json                 the grid the chronics were generated for
//! meta.json                 {"seed", "start", "n_steps"}
//! load_p.csv                step, then one column per load id
//! renewable_potential.csv   step, then one column per renewable generator id
//! dispatch_p.csv            step, then one column per generator id
//! maintenance.csv           line_id,start_step,n_steps
//! ```
//!
//! Values are written in shortest round-trip form, so a save/load cycle is
//! exact.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{Datelike, NaiveDateTime, Timelike};
use gridmdp_core::calendar::StartTime;
use gridmdp_core::chronics::{Chronics, ChronicsMeta, Maintenance};
use gridmdp_core::env::Scenario;
use gridmdp_core::grid::Grid;
use serde::{Deserialize, Serialize};

use crate::grid_file::{self, GridFileError};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Grid(#[from] GridFileError),
    #[error(transparent)]
    Env(#[from] gridmdp_core::env::EnvError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MetaFile {
    seed: u64,
    /// `YYYY-MM-DDTHH:MM[:SS]`.
    start: String,
    n_steps: usize,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Csv { path: path.to_path_buf(), source }
}

fn format_err(path: &Path, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Format { path: path.to_path_buf(), message: message.into() }
}

pub fn parse_start(s: &str) -> Option<StartTime> {
    let dt = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M"))
        .ok()?;
    Some(StartTime {
        year: dt.year(),
        month: dt.month() as u8,
        day: dt.day() as u8,
        hour: dt.hour() as u8,
        minute: dt.minute() as u8,
    })
}

fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut head = vec!["step"];
    head.extend_from_slice(header);
    w.write_record(&head).map_err(csv_err(path))?;
    for (t, row) in rows.iter().enumerate() {
        let mut rec = Vec::with_capacity(row.len() + 1);
        rec.push(t.to_string());
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn read_table(path: &Path, header: &[&str], n_steps: usize) -> Result<Vec<Vec<f64>>, ScenarioError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let head = r.headers().map_err(csv_err(path))?.clone();
    let expected: Vec<&str> = std::iter::once("step").chain(header.iter().copied()).collect();
    if head.iter().collect::<Vec<_>>() != expected {
        return Err(format_err(path, format!("header must be {}", expected.join(","))));
    }
    let mut rows = Vec::with_capacity(n_steps);
    for (t, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        if rec.get(0).and_then(|s| s.parse::<usize>().ok()) != Some(t) {
            return Err(format_err(path, format!("row {} must have step {t}", t + 1)));
        }
        let row = rec
            .iter()
            .skip(1)
            .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| format_err(path, format!("non-numeric value at step {t}")))?;
        rows.push(row);
    }
    if rows.len() != n_steps {
        return Err(format_err(path, format!("{} rows, meta.json declares {n_steps}", rows.len())));
    }
    Ok(rows)
}

pub fn save_scenario(dir: &Path, grid: &Grid, chronics: &Chronics) -> Result<(), ScenarioError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let p = dir.join("grid.json");
    fs::write(&p, grid_file::serialize_grid(grid)).map_err(io_err(&p))?;

    let meta = MetaFile { seed: chronics.meta.seed, start: chronics.meta.start.to_string(), n_steps: chronics.n_steps };
    let p = dir.join("meta.json");
    fs::write(&p, serde_json::to_string_pretty(&meta).expect("meta serializes")).map_err(io_err(&p))?;

    let loads: Vec<&str> = grid.loads.iter().map(|l| l.id.as_str()).collect();
    let gens: Vec<&str> = grid.generators.iter().map(|g| g.id.as_str()).collect();
    let ren: Vec<&str> = grid.renewables().iter().map(|&g| grid.generators[g].id.as_str()).collect();
    write_table(&dir.join("load_p.csv"), &loads, &chronics.load_p)?;
    write_table(&dir.join("renewable_potential.csv"), &ren, &chronics.renewable_potential)?;
    write_table(&dir.join("dispatch_p.csv"), &gens, &chronics.dispatch_p)?;

    let p = dir.join("maintenance.csv");
    let mut w = csv::Writer::from_path(&p).map_err(csv_err(&p))?;
    w.write_record(["line_id", "start_step", "n_steps"]).map_err(csv_err(&p))?;
    for m in &chronics.maintenance {
        w.write_record([grid.lines[m.line].id.clone(), m.start.to_string(), m.duration.to_string()])
            .map_err(csv_err(&p))?;
    }
    w.flush().map_err(io_err(&p))
}

pub fn load_scenario(dir: &Path) -> Result<Scenario, ScenarioError> {
    let grid = grid_file::read_grid(&dir.join("grid.json"))?;
    let p = dir.join("meta.json");
    let text = fs::read_to_string(&p).map_err(io_err(&p))?;
    let meta: MetaFile =
        serde_json::from_str(&text).map_err(|source| ScenarioError::Json { path: p.clone(), source })?;
    let start = parse_start(&meta.start).ok_or_else(|| format_err(&p, format!("bad start time {:?}", meta.start)))?;

    let loads: Vec<&str> = grid.loads.iter().map(|l| l.id.as_str()).collect();
    let gens: Vec<&str> = grid.generators.iter().map(|g| g.id.as_str()).collect();
    let ren: Vec<&str> = grid.renewables().iter().map(|&g| grid.generators[g].id.as_str()).collect();
    let load_p = read_table(&dir.join("load_p.csv"), &loads, meta.n_steps)?;
    let renewable_potential = read_table(&dir.join("renewable_potential.csv"), &ren, meta.n_steps)?;
    let dispatch_p = read_table(&dir.join("dispatch_p.csv"), &gens, meta.n_steps)?;

    let p = dir.join("maintenance.csv");
    let mut maintenance = Vec::new();
    let mut r = csv::Reader::from_path(&p).map_err(csv_err(&p))?;
    for rec in r.records() {
        let rec = rec.map_err(csv_err(&p))?;
        let bad = || format_err(&p, "rows must be line_id,start_step,n_steps");
        let line_id = rec.get(0).ok_or_else(bad)?;
        let line = grid.line_index(line_id).ok_or_else(|| format_err(&p, format!("unknown line {line_id}")))?;
        let start = rec.get(1).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let duration = rec.get(2).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        maintenance.push(Maintenance { line, start, duration });
    }

    let chronics = Chronics {
        n_steps: meta.n_steps,
        load_p,
        renewable_potential,
        dispatch_p,
        maintenance,
        meta: ChronicsMeta { seed: meta.seed, start },
    };
    let id = dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario".into());
    Ok(Scenario::new(id, Arc::new(grid), Arc::new(chronics))?)
}
