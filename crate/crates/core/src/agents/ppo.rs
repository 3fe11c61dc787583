//! Proximal policy optimization on top of the expert rules.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{expert_rules, limit_action, ActionDecoder, CsMargin, ExpertRulesConfig, PolicyNet, RuleDecision};
use crate::env::{Action, EnvConfig, EnvError, Environment, Scenario};
use crate::nn::{sample_policy, squashed_log_prob, squashed_log_prob_grad, Adam, MlpParams, MlpShape};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub clip_eps: f64,
    pub batch_size: usize,
    pub env_steps_per_update: usize,
    pub epochs: usize,
    pub lr: f64,
    pub value_coef: f64,
    /// Environment steps to run, including those handled by the rules.
    pub total_steps: usize,
    pub hidden: Vec<usize>,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.999,
            clip_eps: 0.2,
            batch_size: 16,
            env_steps_per_update: 16,
            epochs: 10,
            lr: 3e-6,
            value_coef: 0.5,
            total_steps: 50_000,
            hidden: vec![300, 300, 300],
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err("gamma must be in [0, 1]");
        }
        if !(self.clip_eps > 0.0) {
            return Err("clip_eps must be > 0");
        }
        if self.batch_size == 0 || self.env_steps_per_update == 0 {
            return Err("batch_size and env_steps_per_update must be >= 1");
        }
        if !(self.lr > 0.0) {
            return Err("lr must be > 0");
        }
        Ok(())
    }
}

/// One policy decision and the reward collected until the next one.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub input: Vec<f64>,
    pub u: Vec<f64>,
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
    pub done: bool,
}

/// Discounted-return advantages `A_t = sum_k gamma^k r_{t+k} - V_t`, with
/// sums restarting after each `done`. `bootstrap` stands in for the return
/// after the last entry when that entry's episode is still running.
/// Returns `(advantages, returns)`.
pub fn compute_advantages(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    gamma: f64,
    bootstrap: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    let mut ret = vec![0.0; n];
    let mut next = bootstrap;
    for t in (0..n).rev() {
        if dones[t] {
            next = 0.0;
        }
        next = rewards[t] + gamma * next;
        ret[t] = next;
    }
    let adv = ret.iter().zip(values).map(|(g, v)| g - v).collect();
    (adv, ret)
}

pub fn clipped_surrogate(advantage: f64, ratio: f64, eps: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
    (advantage * ratio).min(advantage * clipped)
}

#[derive(Debug, Clone, Copy)]
pub struct PpoSample<'a> {
    pub input: &'a [f64],
    pub u: &'a [f64],
    pub old_log_prob: f64,
    pub advantage: f64,
    pub ret: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    /// Mean clipped surrogate, to be maximized.
    pub objective: f64,
    pub value_mse: f64,
    /// `-objective + value_coef * value_mse`, minimized.
    pub total: f64,
}

/// Batch loss and, when `grad` is given, its gradient with respect to the
/// flat parameters (accumulated into `grad`).
pub fn ppo_loss(
    params: &MlpParams,
    batch: &[PpoSample<'_>],
    eps: f64,
    value_coef: f64,
    mut grad: Option<&mut [f64]>,
) -> LossReport {
    let n = batch.len().max(1) as f64;
    let mut objective = 0.0;
    let mut value_mse = 0.0;
    for s in batch {
        let (out, cache) = params.forward_cached(s.input).expect("batch input matches the network");
        let lp = squashed_log_prob(&out.mean, &out.log_std, s.u);
        let ratio = libm::exp(lp - s.old_log_prob);
        let unclipped = s.advantage * ratio;
        let surrogate = clipped_surrogate(s.advantage, ratio, eps);
        objective += surrogate;
        let err = out.value - s.ret;
        value_mse += err * err;
        if let Some(g) = grad.as_deref_mut() {
            // The clipped branch is constant in the parameters.
            let d_lp = if unclipped <= surrogate { -unclipped / n } else { 0.0 };
            let (dm, dls) = squashed_log_prob_grad(&out.mean, &out.log_std, s.u);
            let d_mean: Vec<f64> = dm.iter().map(|d| d * d_lp).collect();
            let d_ls: Vec<f64> = dls.iter().map(|d| d * d_lp).collect();
            params.backward(&cache, &d_mean, &d_ls, value_coef * 2.0 * err / n, g);
        }
    }
    objective /= n;
    value_mse /= n;
    LossReport { objective, value_mse, total: -objective + value_coef * value_mse }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateLog {
    pub update: usize,
    pub env_steps: usize,
    pub episodes: usize,
    /// Mean length of the episodes finished since the previous update, or
    /// of the last finished episode when none did.
    pub mean_survived: f64,
    pub objective: f64,
    pub value_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub updates: Vec<UpdateLog>,
    pub env_steps: usize,
    pub episodes: usize,
    pub policy_steps: usize,
}

struct Trainer<'a> {
    cfg: &'a PpoConfig,
    net: PolicyNet,
    adam: Adam,
    buffer: Vec<Transition>,
    log: TrainLog,
    finished: Vec<usize>,
    last_survived: f64,
}

impl Trainer<'_> {
    fn update(&mut self, bootstrap: f64) {
        let rewards: Vec<f64> = self.buffer.iter().map(|t| t.reward).collect();
        let values: Vec<f64> = self.buffer.iter().map(|t| t.value).collect();
        let dones: Vec<bool> = self.buffer.iter().map(|t| t.done).collect();
        let (adv, ret) = compute_advantages(&rewards, &values, &dones, self.cfg.gamma, bootstrap);
        let samples: Vec<PpoSample<'_>> = self
            .buffer
            .iter()
            .zip(adv.iter().zip(&ret))
            .map(|(t, (&a, &r))| PpoSample { input: &t.input, u: &t.u, old_log_prob: t.log_prob, advantage: a, ret: r })
            .collect();
        let n_params = self.net.params.data.len();
        let mut report = LossReport { objective: 0.0, value_mse: 0.0, total: 0.0 };
        for _ in 0..self.cfg.epochs {
            for batch in samples.chunks(self.cfg.batch_size) {
                let mut grad = vec![0.0; n_params];
                report = ppo_loss(&self.net.params, batch, self.cfg.clip_eps, self.cfg.value_coef, Some(&mut grad));
                self.adam.step(&mut self.net.params.data, &grad, self.cfg.lr);
            }
        }
        if !self.finished.is_empty() {
            self.last_survived = self.finished.iter().sum::<usize>() as f64 / self.finished.len() as f64;
        }
        self.log.updates.push(UpdateLog {
            update: self.log.updates.len(),
            env_steps: self.log.env_steps,
            episodes: self.log.episodes,
            mean_survived: self.last_survived,
            objective: report.objective,
            value_mse: report.value_mse,
        });
        self.finished.clear();
        self.buffer.clear();
    }
}

/// Trains a policy behind the expert rules on episodes drawn from
/// `scenarios`. Deterministic for a given seed. With an oracle margin the
/// environment clips actions to the available headroom.
pub fn train_ppo(
    scenarios: &[Scenario],
    env_cfg: &EnvConfig,
    cfg: &PpoConfig,
    rules: &ExpertRulesConfig,
    seed: u64,
) -> Result<(PolicyNet, TrainLog), EnvError> {
    let first = scenarios.first().ok_or(EnvError::Config("no training scenario"))?;
    cfg.validate().map_err(EnvError::Config)?;
    rules.validate().map_err(EnvError::Config)?;
    let grid = &*first.grid;
    let layout = crate::env::ObsLayout::for_grid(grid);
    let decoder = ActionDecoder::for_grid(grid);
    let shape = MlpShape { input: layout.len(), hidden: cfg.hidden.clone(), n_action: decoder.n_action() };
    let params = MlpParams::init(shape, seed);
    let mut env_cfg = env_cfg.clone();
    env_cfg.clip_to_headroom = rules.limit_cs_margin == CsMargin::Oracle;

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut tr = Trainer {
        cfg,
        adam: Adam::new(params.data.len()),
        net: PolicyNet::new(params, grid),
        buffer: Vec::with_capacity(cfg.env_steps_per_update),
        log: TrainLog::default(),
        finished: Vec::new(),
        last_survived: 0.0,
    };

    while tr.log.env_steps < cfg.total_steps {
        let scenario = &scenarios[rng.random_range(0..scenarios.len())];
        let mut env = Environment::new(scenario.clone(), env_cfg.clone())?;
        let mut obs = env.observation();
        // Whether the newest buffered transition still collects reward.
        let mut open = false;
        loop {
            if tr.log.env_steps >= cfg.total_steps {
                break;
            }
            let action = match expert_rules(&obs, rules.safe_max_rho) {
                RuleDecision::Reconnect(line) => Action::SetLineStatus { line, connected: true },
                RuleDecision::Safe => Action::DoNothing,
                RuleDecision::Delegate => {
                    let input = tr.net.input(&obs);
                    let out = tr.net.params.forward(&input).expect("observation matches the network");
                    if tr.buffer.len() == cfg.env_steps_per_update {
                        tr.update(out.value);
                    }
                    let s = sample_policy(&out, &mut rng);
                    let proposed = tr.net.decoder.decode(&s.action);
                    let action =
                        limit_action(&proposed, &obs, &scenario.grid, rules.limit_cs_margin, env_cfg.step_hours);
                    tr.buffer.push(Transition {
                        input,
                        u: s.u,
                        log_prob: s.log_prob,
                        value: s.value,
                        reward: 0.0,
                        done: false,
                    });
                    tr.log.policy_steps += 1;
                    open = true;
                    action
                }
            };
            let r = env.step(&action)?;
            tr.log.env_steps += 1;
            if open {
                if let Some(last) = tr.buffer.last_mut() {
                    last.reward += r.reward;
                    last.done = r.done;
                }
            }
            obs = r.observation;
            if r.done {
                tr.log.episodes += 1;
                tr.finished.push(r.info.t);
                break;
            }
        }
    }
    Ok((tr.net, tr.log))
}
