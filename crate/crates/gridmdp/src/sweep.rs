//! One-parameter sweeps over the expert-rule settings.
//!
//! `safe_max_rho` is swept with `limit_cs_margin` fixed at 60 MW, and
//! `limit_cs_margin` with `safe_max_rho` fixed at 0.99.

use std::fmt;
use std::str::FromStr;

use gridmdp_core::agents::{CsMargin, ExpertAgent, ExpertRulesConfig, PolicyNet};
use gridmdp_core::env::{EnvConfig, Scenario};
use gridmdp_core::scoring::scenario_refs;
use serde::{Deserialize, Serialize};

use crate::runner::{run_agent, score_config_for, RunError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    SafeMaxRho,
    LimitCsMargin,
}

impl FromStr for SweepParam {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "safe-max-rho" => Ok(SweepParam::SafeMaxRho),
            "limit-cs-margin" => Ok(SweepParam::LimitCsMargin),
            _ => Err(format!("unknown sweep parameter {s:?}; expected safe-max-rho or limit-cs-margin")),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::SafeMaxRho => "safe-max-rho",
            SweepParam::LimitCsMargin => "limit-cs-margin",
        })
    }
}

impl SweepParam {
    pub fn rules(self, value: f64) -> ExpertRulesConfig {
        match self {
            SweepParam::SafeMaxRho => ExpertRulesConfig { safe_max_rho: value, limit_cs_margin: CsMargin::Mw(60.0) },
            SweepParam::LimitCsMargin => ExpertRulesConfig { safe_max_rho: 0.99, limit_cs_margin: CsMargin::Mw(value) },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub mean_score: f64,
    pub mean_survived: f64,
    /// Scenarios played to the end.
    pub completed: usize,
    pub n_scenarios: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub param: SweepParam,
    /// Ascending in `value`.
    pub rows: Vec<SweepRow>,
}

/// Evaluates the expert agent, with `policy` if given, at every value.
/// Duplicate values are evaluated once.
pub fn sweep(
    param: SweepParam,
    values: &[f64],
    policy: Option<&PolicyNet>,
    scenarios: &[Scenario],
    env: &EnvConfig,
) -> Result<SweepTable, RunError> {
    let mut values = values.to_vec();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(RunError::Env(gridmdp_core::env::EnvError::Config("sweep values must be finite")));
    }
    values.sort_by(f64::total_cmp);
    values.dedup();
    for &v in &values {
        param.rules(v).validate().map_err(|m| RunError::Env(gridmdp_core::env::EnvError::Config(m)))?;
    }
    let scoring = score_config_for(env);
    let refs = scenarios.iter().map(|s| scenario_refs(s, env, &scoring)).collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::with_capacity(values.len());
    for v in values {
        let rules = param.rules(v);
        let mut agent = match policy {
            Some(p) => ExpertAgent::with_policy(rules, p.clone()),
            None => ExpertAgent::rules_only(rules),
        };
        let (mut score, mut survived, mut completed) = (0.0, 0.0, 0);
        for (s, r) in scenarios.iter().zip(&refs) {
            let report = run_agent(&mut agent, s, env, Some(*r))?;
            score += report.score;
            survived += report.survived as f64;
            completed += usize::from(report.completed);
        }
        let n = scenarios.len().max(1) as f64;
        rows.push(SweepRow {
            value: v,
            mean_score: score / n,
            mean_survived: survived / n,
            completed,
            n_scenarios: scenarios.len(),
        });
    }
    Ok(SweepTable { param, rows })
}

impl fmt::Display for SweepTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>15}  {:>10}  {:>13}  {:>9}",
            self.param.to_string(),
            "mean score",
            "mean survived",
            "completed"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>15}  {:>10.2}  {:>13.1}  {:>5}/{:<3}",
                r.value, r.mean_score, r.mean_survived, r.completed, r.n_scenarios
            )?;
        }
        Ok(())
    }
}
