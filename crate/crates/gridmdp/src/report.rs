//! Per-run reports and the leaderboard built from a directory of them.

use std::fs;
use std::path::{Path, PathBuf};

use gridmdp_core::env::{EnvConfig, StepInfo};
use gridmdp_core::grid::Grid;
use gridmdp_core::scoring::{
    episode_costs, leaderboard, normalize_score, EpisodeCosts, LeaderboardRow, ScenarioRefs, ScoreConfig, ScoreEntry,
    ScoringError,
};
use serde::{Deserialize, Serialize};

use crate::wire::WireAction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario_id: String,
    pub agent: String,
    /// Time index reached at the end of the episode.
    pub survived: usize,
    pub horizon: usize,
    pub completed: bool,
    pub env: EnvConfig,
    pub scoring: ScoreConfig,
    pub costs: EpisodeCosts,
    pub refs: ScenarioRefs,
    pub score: f64,
    pub wall_clock_s: f64,
    pub actions: Vec<WireAction>,
    pub steps: Vec<StepInfo>,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: no reports found")]
    Empty { path: PathBuf },
}

impl RunReport {
    /// Recomputes costs from the step records and the score from the
    /// stored references.
    pub fn recompute(&self, grid: &Grid) -> Result<(EpisodeCosts, f64), ScoringError> {
        let costs = episode_costs(&self.steps, self.horizon, grid, &self.scoring)?;
        Ok((costs, normalize_score(costs.total, &self.refs)))
    }

    pub fn save(&self, path: &Path) -> Result<(), ReportError> {
        let text = serde_json::to_string(self).expect("report serializes");
        fs::write(path, text).map_err(|source| ReportError::Io { path: path.to_path_buf(), source })
    }

    pub fn load(path: &Path) -> Result<Self, ReportError> {
        let text = fs::read_to_string(path).map_err(|source| ReportError::Io { path: path.to_path_buf(), source })?;
        serde_json::from_str(&text).map_err(|source| ReportError::Json { path: path.to_path_buf(), source })
    }

    pub fn file_name(&self) -> String {
        let clean = |s: &str| s.replace(|c: char| !(c.is_ascii_alphanumeric() || c == '-' || c == '_'), "_");
        format!("{}__{}.json", clean(&self.agent), clean(&self.scenario_id))
    }
}

/// Reads every `*.json` report in `dir` (not recursive), sorted by file name.
pub fn load_reports(dir: &Path) -> Result<Vec<RunReport>, ReportError> {
    let entries = fs::read_dir(dir).map_err(|source| ReportError::Io { path: dir.to_path_buf(), source })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(ReportError::Empty { path: dir.to_path_buf() });
    }
    paths.iter().map(|p| RunReport::load(p)).collect()
}

pub fn leaderboard_from(reports: &[RunReport]) -> Vec<LeaderboardRow> {
    let entries: Vec<ScoreEntry> = reports
        .iter()
        .map(|r| ScoreEntry { agent: r.agent.clone(), scenario: r.scenario_id.clone(), score: r.score })
        .collect();
    leaderboard(&entries)
}

pub fn format_leaderboard(rows: &[LeaderboardRow]) -> String {
    let width = rows.iter().map(|r| r.agent.len()).max().unwrap_or(0).max(5);
    let mut out = format!("{:<width$}  {:>10}  {:>9}\n", "agent", "mean score", "scenarios");
    for r in rows {
        out.push_str(&format!("{:<width$}  {:>10.2}  {:>9}\n", r.agent, r.mean_score, r.n_scenarios));
    }
    out
}
