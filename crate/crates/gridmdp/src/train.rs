//! `train-ppo` configuration files.
//!
//! ```json
//! {
//!   "seed": 0,
//!   "ppo": {"total_steps": 50000},
//!   "rules": {"safe_max_rho": 0.2, "limit_cs_margin": "oracle"},
//!   "deploy_rules": {"safe_max_rho": 0.99, "limit_cs_margin": 60},
//!   "env": {},
//!   "scenarios": ["scenarios/week-01"],
//!   "generate": {"days": 7, "seeds": [0, 1, 2]}
//! }
//! ```
//!
//! Every field is optional. `scenarios` are resolved relative to the
//! config file; without them, weeks are generated on the bundled grid.

use std::path::{Path, PathBuf};

use gridmdp_core::agents::{train_ppo, ExpertRulesConfig, PolicyNet, PpoConfig, TrainLog};
use gridmdp_core::chronics::GenConfig;
use gridmdp_core::env::{EnvConfig, Scenario};
use serde::{Deserialize, Serialize};

use crate::checkpoint::save_agent;
use crate::defaults::{generated_scenario, TRAINING_SEEDS};
use crate::scenario_dir::load_scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSpec {
    pub days: u32,
    pub seeds: Vec<u64>,
}

impl Default for GenerateSpec {
    fn default() -> Self {
        Self { days: 7, seeds: TRAINING_SEEDS.collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub seed: u64,
    pub ppo: PpoConfig,
    /// Rules wrapped around the policy while training.
    pub rules: ExpertRulesConfig,
    /// Rules stored with the checkpoint for evaluation.
    pub deploy_rules: ExpertRulesConfig,
    pub env: EnvConfig,
    pub scenarios: Vec<PathBuf>,
    pub generate: GenerateSpec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            ppo: PpoConfig::default(),
            rules: ExpertRulesConfig::training(),
            deploy_rules: ExpertRulesConfig::default(),
            env: EnvConfig::default(),
            scenarios: Vec::new(),
            generate: GenerateSpec::default(),
        }
    }
}

impl TrainConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        let mut cfg: TrainConfig =
            serde_json::from_str(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for s in &mut cfg.scenarios {
            if s.is_relative() {
                *s = base.join(&*s);
            }
        }
        Ok(cfg)
    }

    pub fn scenarios(&self) -> anyhow::Result<Vec<Scenario>> {
        if !self.scenarios.is_empty() {
            return self.scenarios.iter().map(|p| load_scenario(p).map_err(Into::into)).collect();
        }
        let gen = GenConfig { days: self.generate.days, ..GenConfig::default() };
        let out: Vec<Scenario> =
            self.generate.seeds.iter().map(|&s| generated_scenario(&gen, s)).collect::<Result<_, _>>()?;
        anyhow::ensure!(!out.is_empty(), "no training scenarios");
        Ok(out)
    }
}

/// Trains and writes an agent directory plus `train_log.json` to `out`.
pub fn train_to_dir(cfg: &TrainConfig, out: &Path) -> anyhow::Result<(PolicyNet, TrainLog)> {
    cfg.deploy_rules.validate().map_err(anyhow::Error::msg)?;
    let scenarios = cfg.scenarios()?;
    let (policy, log) = train_ppo(&scenarios, &cfg.env, &cfg.ppo, &cfg.rules, cfg.seed)?;
    save_agent(out, &cfg.deploy_rules, Some(&policy))?;
    std::fs::write(out.join("train_log.json"), serde_json::to_string_pretty(&log).expect("log serializes"))?;
    Ok((policy, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checkpoint::load_agent;

    #[test]
    fn short_run_writes_a_loadable_agent() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("train.json");
        std::fs::write(
            &cfg_path,
            r#"{"seed": 4, "ppo": {"total_steps": 300, "hidden": [16, 16]},
                "generate": {"days": 1, "seeds": [0, 1]}}"#,
        )
        .unwrap();
        let cfg = TrainConfig::load(&cfg_path).unwrap();
        assert_eq!(cfg.rules, ExpertRulesConfig::training());
        let out = dir.path().join("agent");
        let (policy, log) = train_to_dir(&cfg, &out).unwrap();
        assert!(log.env_steps >= 300);
        let agent = load_agent(&out).unwrap();
        assert_eq!(agent.policy, Some(policy));
        assert_eq!(agent.config, ExpertRulesConfig::default());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<TrainConfig>(r#"{"sed": 1}"#).is_err());
    }
}
