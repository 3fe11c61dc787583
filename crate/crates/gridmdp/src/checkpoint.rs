//! Agent directories: `rules.json` with the expert-rule settings and, for
//! trained agents, `policy.json` with the network.

use std::fs;
use std::path::{Path, PathBuf};

use gridmdp_core::agents::{ActionDecoder, ExpertAgent, ExpertRulesConfig, PolicyNet};
use gridmdp_core::env::ObsLayout;
use gridmdp_core::grid::Grid;
use serde::{Deserialize, Serialize};

pub const POLICY_FILE: &str = "policy.json";
pub const RULES_FILE: &str = "rules.json";
const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
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
    #[error("{path}: unsupported checkpoint version {found}")]
    Version { path: PathBuf, found: u32 },
    #[error("{path}: {message}")]
    Mismatch { path: PathBuf, message: String },
}

#[derive(Serialize, Deserialize)]
struct PolicyFile {
    version: u32,
    #[serde(flatten)]
    policy: PolicyNet,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CheckpointError> {
    let text = fs::read_to_string(path).map_err(|source| CheckpointError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|source| CheckpointError::Json { path: path.to_path_buf(), source })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CheckpointError> {
    let text = serde_json::to_string(value).expect("checkpoint serializes");
    fs::write(path, text).map_err(|source| CheckpointError::Io { path: path.to_path_buf(), source })
}

pub fn save_agent(dir: &Path, rules: &ExpertRulesConfig, policy: Option<&PolicyNet>) -> Result<(), CheckpointError> {
    fs::create_dir_all(dir).map_err(|source| CheckpointError::Io { path: dir.to_path_buf(), source })?;
    write_json(&dir.join(RULES_FILE), rules)?;
    if let Some(p) = policy {
        write_json(&dir.join(POLICY_FILE), &PolicyFile { version: VERSION, policy: p.clone() })?;
    }
    Ok(())
}

pub fn load_policy(path: &Path) -> Result<PolicyNet, CheckpointError> {
    let f: PolicyFile = read_json(path)?;
    if f.version != VERSION {
        return Err(CheckpointError::Version { path: path.to_path_buf(), found: f.version });
    }
    let p = f.policy;
    let expected = p.params.shape.n_params();
    if p.params.data.len() != expected || p.input_scales.len() != p.params.shape.input {
        return Err(CheckpointError::Mismatch {
            path: path.to_path_buf(),
            message: format!(
                "{} parameters and {} input scales for a shape needing {expected} and {}",
                p.params.data.len(),
                p.input_scales.len(),
                p.params.shape.input
            ),
        });
    }
    if p.decoder.n_action() != p.params.shape.n_action {
        return Err(CheckpointError::Mismatch {
            path: path.to_path_buf(),
            message: "decoder and network disagree on the action size".into(),
        });
    }
    Ok(p)
}

/// Checks that `policy` was trained on a grid shaped like `grid`.
pub fn check_policy_grid(policy: &PolicyNet, grid: &Grid) -> Result<(), String> {
    let layout = ObsLayout::for_grid(grid);
    if policy.params.shape.input != layout.len() {
        return Err(format!(
            "policy expects {} observation values, grid produces {}",
            policy.params.shape.input,
            layout.len()
        ));
    }
    if policy.decoder != ActionDecoder::for_grid(grid) {
        return Err("policy controls different renewables or storage units".into());
    }
    Ok(())
}

/// Loads an agent directory. Without `policy.json` the agent runs the rules
/// alone. The agent is named after the directory.
pub fn load_agent(dir: &Path) -> Result<ExpertAgent, CheckpointError> {
    let rules_path = dir.join(RULES_FILE);
    let rules: ExpertRulesConfig =
        if rules_path.exists() { read_json(&rules_path)? } else { ExpertRulesConfig::default() };
    rules.validate().map_err(|m| CheckpointError::Mismatch { path: rules_path.clone(), message: m.into() })?;
    let policy_path = dir.join(POLICY_FILE);
    let mut agent = if policy_path.exists() {
        ExpertAgent::with_policy(rules, load_policy(&policy_path)?)
    } else if rules_path.exists() {
        ExpertAgent::rules_only(rules)
    } else {
        return Err(CheckpointError::Mismatch {
            path: dir.to_path_buf(),
            message: format!("neither {RULES_FILE} nor {POLICY_FILE} found"),
        });
    };
    if let Some(name) = dir.file_name() {
        agent.name = name.to_string_lossy().into_owned();
    }
    Ok(agent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_file::default_grid;
    use gridmdp_core::agents::CsMargin;
    use gridmdp_core::nn::{MlpParams, MlpShape};

    fn small_policy(grid: &Grid) -> PolicyNet {
        let shape = MlpShape {
            input: ObsLayout::for_grid(grid).len(),
            hidden: vec![8, 8],
            n_action: ActionDecoder::for_grid(grid).n_action(),
        };
        PolicyNet::new(MlpParams::init(shape, 3), grid)
    }

    #[test]
    fn agent_round_trip_is_exact() {
        let grid = default_grid();
        let policy = small_policy(&grid);
        let rules = ExpertRulesConfig { safe_max_rho: 0.85, limit_cs_margin: CsMargin::Oracle };
        let dir = tempfile::tempdir().unwrap();
        let agent_dir = dir.path().join("trained");
        save_agent(&agent_dir, &rules, Some(&policy)).unwrap();
        let a = load_agent(&agent_dir).unwrap();
        assert_eq!(a.name, "trained");
        assert_eq!(a.config, rules);
        assert_eq!(a.policy.as_ref(), Some(&policy));
        check_policy_grid(a.policy.as_ref().unwrap(), &grid).unwrap();
    }

    #[test]
    fn rules_only_directory() {
        let dir = tempfile::tempdir().unwrap();
        save_agent(dir.path(), &ExpertRulesConfig::default(), None).unwrap();
        let a = load_agent(dir.path()).unwrap();
        assert!(a.policy.is_none());
    }

    #[test]
    fn corrupted_policy_is_rejected() {
        let grid = default_grid();
        let mut policy = small_policy(&grid);
        policy.params.data.pop();
        let dir = tempfile::tempdir().unwrap();
        save_agent(dir.path(), &ExpertRulesConfig::default(), Some(&policy)).unwrap();
        assert!(matches!(load_agent(dir.path()), Err(CheckpointError::Mismatch { .. })));
        let empty = tempfile::tempdir().unwrap();
        assert!(load_agent(empty.path()).is_err());
    }
}
