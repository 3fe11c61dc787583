//! Agent specifications and scored runs.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use gridmdp_core::agents::{Agent, DoNothing, ExpertAgent, ExpertRulesConfig, MixtureAgent};
use gridmdp_core::env::{EnvConfig, EnvError, Scenario};
use gridmdp_core::episode::run_episode;
use gridmdp_core::scoring::{episode_costs, normalize_score, scenario_refs, ScenarioRefs, ScoreConfig, ScoringError};

use crate::checkpoint::{self, CheckpointError};
use crate::report::RunReport;
use crate::wire::WireAction;

/// `do-nothing`, `expert`, `ppo:DIR` (an agent directory), or
/// `mixture:DIR` (every subdirectory of DIR is an agent directory) or
/// `mixture:SPEC,SPEC,...`.
#[derive(Debug, Clone, PartialEq)]
pub enum AgentSpec {
    DoNothing,
    Expert(ExpertRulesConfig),
    Checkpoint(PathBuf),
    Mixture(Vec<AgentSpec>),
}

impl FromStr for AgentSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "do-nothing" => return Ok(AgentSpec::DoNothing),
            "expert" => return Ok(AgentSpec::Expert(ExpertRulesConfig::default())),
            _ => {}
        }
        if let Some(dir) = s.strip_prefix("ppo:") {
            if dir.is_empty() {
                return Err("ppo: needs a checkpoint directory".into());
            }
            return Ok(AgentSpec::Checkpoint(PathBuf::from(dir)));
        }
        if let Some(rest) = s.strip_prefix("mixture:") {
            let path = Path::new(rest);
            if path.is_dir() {
                return Ok(AgentSpec::Mixture(mixture_dir(path)?));
            }
            let parts = rest
                .split(',')
                .filter(|p| !p.is_empty())
                .map(|p| match p.parse()? {
                    AgentSpec::Mixture(_) => Err("mixtures cannot be nested".to_string()),
                    a => Ok(a),
                })
                .collect::<Result<Vec<_>, _>>()?;
            if parts.is_empty() {
                return Err("mixture needs at least one candidate".into());
            }
            return Ok(AgentSpec::Mixture(parts));
        }
        Err(format!("unknown agent {s:?}; expected do-nothing, expert, ppo:DIR or mixture:DIR"))
    }
}

fn mixture_dir(dir: &Path) -> Result<Vec<AgentSpec>, String> {
    let mut subdirs: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    if subdirs.is_empty() {
        return Err(format!("{}: no agent directories", dir.display()));
    }
    Ok(subdirs.into_iter().map(AgentSpec::Checkpoint).collect())
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("{path}: {message}")]
    Incompatible { path: PathBuf, message: String },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

pub fn build_agent(spec: &AgentSpec, scenario: &Scenario) -> Result<Box<dyn Agent>, RunError> {
    Ok(match spec {
        AgentSpec::DoNothing => Box::new(DoNothing),
        AgentSpec::Expert(cfg) => Box::new(ExpertAgent::rules_only(cfg.clone())),
        AgentSpec::Checkpoint(dir) => Box::new(load_checked(dir, scenario)?),
        AgentSpec::Mixture(parts) => {
            Box::new(MixtureAgent::new(parts.iter().map(|p| build_agent(p, scenario)).collect::<Result<_, _>>()?))
        }
    })
}

fn load_checked(dir: &Path, scenario: &Scenario) -> Result<ExpertAgent, RunError> {
    let agent = checkpoint::load_agent(dir)?;
    if let Some(p) = &agent.policy {
        checkpoint::check_policy_grid(p, &scenario.grid)
            .map_err(|message| RunError::Incompatible { path: dir.to_path_buf(), message })?;
    }
    Ok(agent)
}

/// Score settings consistent with `env`.
pub fn score_config_for(env: &EnvConfig) -> ScoreConfig {
    ScoreConfig { price_mwh: env.price_mwh, step_hours: env.step_hours, ..ScoreConfig::default() }
}

/// Runs `agent` through `scenario` and scores it. `refs` may be passed in
/// when the same scenario is scored repeatedly.
pub fn run_agent(
    agent: &mut dyn Agent,
    scenario: &Scenario,
    env: &EnvConfig,
    refs: Option<ScenarioRefs>,
) -> Result<RunReport, RunError> {
    let scoring = score_config_for(env);
    let refs = match refs {
        Some(r) => r,
        None => scenario_refs(scenario, env, &scoring)?,
    };
    let started = Instant::now();
    let record = run_episode(agent, scenario, env)?;
    let wall_clock_s = started.elapsed().as_secs_f64();
    let costs = episode_costs(&record.steps, record.horizon, &scenario.grid, &scoring)?;
    Ok(RunReport {
        scenario_id: scenario.id.clone(),
        agent: agent.name().to_string(),
        survived: record.survived,
        horizon: record.horizon,
        completed: record.completed(),
        env: env.clone(),
        scoring,
        costs,
        refs,
        score: normalize_score(costs.total, &refs),
        wall_clock_s,
        actions: record.actions.iter().map(|a| WireAction::from_action(a, &scenario.grid)).collect(),
        steps: record.steps,
    })
}

pub fn run_scenario(spec: &AgentSpec, scenario: &Scenario, env: &EnvConfig) -> Result<RunReport, RunError> {
    let mut agent = build_agent(spec, scenario)?;
    run_agent(agent.as_mut(), scenario, env, None)
}
