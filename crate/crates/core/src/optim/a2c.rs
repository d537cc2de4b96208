//! Synchronous advantage actor-critic with GAE for the black-box policy.

use std::io::Write;
use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::evaluate::evaluate_strategy;
use super::gae::compute_gae;
use crate::data::{Dataset, DayRange};
use crate::error::{Error, Result};
use crate::market::{EnvConfig, EnvState, Market};
use crate::nn::{PolicyArch, PolicyGrads, PolicyParams, RmsProp, Trace, ACTION_DIM};
use crate::seeding;
use crate::strategy::{blackbox_bids, ActionMatrix};

/// Trainer settings. Field names double as config keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct A2cConfig {
    /// Training budget in simulated days.
    pub timesteps: usize,
    pub evaluation_frequency: usize,
    pub episode_length: usize,
    pub n_steps: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub vf_coef: f64,
    pub ent_coef: f64,
    pub learning_rate: f64,
    pub rms_prop_alpha: f64,
    pub rms_prop_eps: f64,
    /// Global gradient-norm clip; `None` disables it.
    pub max_grad_norm: Option<f64>,
    /// Rewards are multiplied by this inside the trainer only; reported
    /// balances stay in currency units.
    pub reward_scale: f64,
    pub validation_days: usize,
    pub test_days: usize,
    /// Set per run from the experiment's seed list.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for A2cConfig {
    fn default() -> Self {
        Self {
            timesteps: 200_000,
            evaluation_frequency: 9_000,
            episode_length: 90,
            n_steps: 90,
            gamma: 0.9,
            gae_lambda: 0.9,
            vf_coef: 0.5,
            ent_coef: 0.0,
            learning_rate: 1e-4,
            rms_prop_alpha: 0.99,
            rms_prop_eps: 1e-5,
            max_grad_norm: Some(0.5),
            reward_scale: 0.01,
            validation_days: 90,
            test_days: 365,
            seed: 0,
        }
    }
}

impl A2cConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::invalid(format!(
                "gamma must be in (0, 1], got {}",
                self.gamma
            )));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(Error::invalid(format!(
                "gae_lambda must be in [0, 1], got {}",
                self.gae_lambda
            )));
        }
        if self.n_steps == 0 || self.episode_length == 0 || self.evaluation_frequency == 0 {
            return Err(Error::invalid(
                "n_steps, episode_length and evaluation_frequency must be positive",
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return Err(Error::invalid("reward_scale must be positive"));
        }
        if matches!(self.max_grad_norm, Some(c) if !(c > 0.0)) {
            return Err(Error::invalid("max_grad_norm must be positive"));
        }
        Ok(())
    }
}

/// An episodic environment with the black-box action space.
pub trait Environment {
    fn reset(&mut self, rng: &mut seeding::Rng) -> Result<Vec<f64>>;
    /// Reward and the next observation; `None` ends the episode.
    fn step(&mut self, action: &ActionMatrix) -> Result<(f64, Option<Vec<f64>>)>;
}

/// Fixed-length episodes over random windows of a day range.
pub struct MarketEpisodes<'m, 'a> {
    market: &'m Market<'a>,
    window: DayRange,
    episode_length: usize,
    state: Option<EnvState>,
    taken: usize,
}

impl<'m, 'a> MarketEpisodes<'m, 'a> {
    pub fn new(market: &'m Market<'a>, window: DayRange, episode_length: usize) -> Result<Self> {
        if window.start.max(1) + episode_length > window.end {
            return Err(Error::invalid(format!(
                "training range {}..{} is shorter than one {episode_length}-day episode",
                window.start, window.end
            )));
        }
        Ok(Self {
            market,
            window,
            episode_length,
            state: None,
            taken: 0,
        })
    }

    /// Decision days whose episode delivers entirely inside the window.
    fn starts(&self) -> std::ops::RangeInclusive<usize> {
        self.window.start.max(1) - 1..=self.window.end - self.episode_length - 1
    }
}

impl Environment for MarketEpisodes<'_, '_> {
    fn reset(&mut self, rng: &mut seeding::Rng) -> Result<Vec<f64>> {
        let start = rng.random_range(self.starts());
        let (state, obs) = self.market.reset(start, rng.random())?;
        self.state = Some(state);
        self.taken = 0;
        Ok(obs.into_vec())
    }

    fn step(&mut self, action: &ActionMatrix) -> Result<(f64, Option<Vec<f64>>)> {
        let state = self
            .state
            .as_mut()
            .ok_or_else(|| Error::invalid("step before reset"))?;
        let ctx = self.market.decision_context(state)?;
        let bids = blackbox_bids(action, ctx.max_volume, &ctx.price_anchors);
        let out = self
            .market
            .step_day(state, &bids)?
            .ok_or_else(|| Error::invalid("episode ran past the dataset"))?;
        self.taken += 1;
        let next = match out.observation {
            Some(o) if self.taken < self.episode_length => Some(o.into_vec()),
            _ => {
                self.state = None;
                None
            }
        };
        Ok((out.result.reward, next))
    }
}

/// One transition kept for the update.
struct Step {
    noise: Vec<f64>,
    actor: Trace,
    critic: Trace,
    value: f64,
    reward: f64,
    terminal: bool,
}

/// Losses of one update, before the step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub grad_norm: f64,
}

/// A2C loss gradients for a rollout. `noise` holds the standardized
/// exploration draws, so `(a - mu) / sigma`; `returns` are the critic
/// targets.
///
/// Loss: `-mean(A * log pi) + vf_coef * mean((R - V)^2) - ent_coef * H`.
#[allow(clippy::too_many_arguments)]
pub fn a2c_gradients(
    policy: &PolicyParams,
    actor_traces: &[&Trace],
    critic_traces: &[&Trace],
    noise: &[&[f64]],
    advantages: &[f64],
    returns: &[f64],
    vf_coef: f64,
    ent_coef: f64,
) -> Result<(PolicyGrads, UpdateStats)> {
    let n = advantages.len();
    if [
        actor_traces.len(),
        critic_traces.len(),
        noise.len(),
        returns.len(),
    ]
    .iter()
    .any(|&l| l != n)
        || n == 0
    {
        return Err(Error::Dimension {
            expected: n,
            actual: returns.len(),
        });
    }
    let inv_n = 1.0 / n as f64;
    let sigma: Vec<f64> = policy.log_std.iter().map(|s| s.exp()).collect();
    let mut grads = PolicyGrads::zeros_like(policy);
    let mut stats = UpdateStats::default();
    let mut mu_grad = vec![0.0; ACTION_DIM];
    for t in 0..n {
        let a = advantages[t];
        let xi = noise[t];
        let log_prob = crate::strategy::gaussian_log_prob(xi, &policy.log_std);
        stats.policy_loss -= a * log_prob * inv_n;
        for i in 0..ACTION_DIM {
            // d log pi / d mu = xi / sigma, d log pi / d log_std = xi^2 - 1
            mu_grad[i] = -a * inv_n * xi[i] / sigma[i];
            grads.log_std[i] -= a * inv_n * (xi[i] * xi[i] - 1.0);
        }
        policy
            .actor
            .backward_into(actor_traces[t], &mu_grad, &mut grads.actor)?;
        let v = critic_traces[t].output()[0];
        let err = v - returns[t];
        stats.value_loss += err * err * inv_n;
        policy.critic.backward_into(
            critic_traces[t],
            &[vf_coef * 2.0 * err * inv_n],
            &mut grads.critic,
        )?;
    }
    let half_log_2pie = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
    stats.entropy = policy.log_std.iter().map(|s| s + half_log_2pie).sum();
    if ent_coef != 0.0 {
        grads.log_std.iter_mut().for_each(|g| *g -= ent_coef);
    }
    stats.grad_norm = grads.norm();
    if !(stats.policy_loss.is_finite()
        && stats.value_loss.is_finite()
        && stats.grad_norm.is_finite())
    {
        return Err(Error::Diverged(format!(
            "non-finite loss: policy {}, value {}, gradient norm {}",
            stats.policy_loss, stats.value_loss, stats.grad_norm
        )));
    }
    Ok((grads, stats))
}

/// Train `policy` in place for `config.timesteps` environment steps.
/// `on_eval(step, policy)` runs every `evaluation_frequency` steps and once at the end
/// if the last step was not an evaluation point.
pub fn a2c_learn<E, F>(
    env: &mut E,
    policy: &mut PolicyParams,
    config: &A2cConfig,
    mut on_eval: F,
) -> Result<Vec<UpdateStats>>
where
    E: Environment,
    F: FnMut(usize, &PolicyParams) -> Result<()>,
{
    config.validate()?;
    let mut episode_rng = seeding::child_rng(config.seed, "a2c/episodes");
    let mut noise_rng = seeding::child_rng(config.seed, "a2c/exploration");
    let mut opt = RmsProp::new(
        config.learning_rate,
        config.rms_prop_alpha,
        config.rms_prop_eps,
    );
    let mut obs = env.reset(&mut episode_rng)?;
    let mut steps = 0;
    let mut last_eval = 0;
    let mut history = Vec::new();
    let mut buf: Vec<Step> = Vec::with_capacity(config.n_steps);
    while steps < config.timesteps {
        buf.clear();
        let mut bootstrap = 0.0;
        while buf.len() < config.n_steps && steps < config.timesteps {
            let noise: Vec<f64> = (0..ACTION_DIM)
                .map(|_| StandardNormal.sample(&mut noise_rng))
                .collect();
            let actor = policy.actor.forward_trace(&obs)?;
            let critic = policy.critic.forward_trace(&obs)?;
            let raw: Vec<f64> = actor
                .output()
                .iter()
                .zip(&noise)
                .zip(&policy.log_std)
                .map(|((m, z), s)| m + z * s.exp())
                .collect();
            let action = ActionMatrix::from_flat(&raw)?;
            let (reward, next) = env.step(&action)?;
            steps += 1;
            let terminal = next.is_none();
            buf.push(Step {
                noise,
                value: critic.output()[0],
                actor,
                critic,
                reward: reward * config.reward_scale,
                terminal,
            });
            match next {
                Some(o) => obs = o,
                None => obs = env.reset(&mut episode_rng)?,
            }
        }
        if !buf.last().map_or(true, |s| s.terminal) {
            bootstrap = policy.value(&obs)?;
        }
        let rewards: Vec<f64> = buf.iter().map(|s| s.reward).collect();
        let values: Vec<f64> = buf.iter().map(|s| s.value).collect();
        let terminal: Vec<bool> = buf.iter().map(|s| s.terminal).collect();
        let adv = compute_gae(
            &rewards,
            &values,
            &terminal,
            bootstrap,
            config.gamma,
            config.gae_lambda,
        )?;
        let returns: Vec<f64> = adv.iter().zip(&values).map(|(a, v)| a + v).collect();
        let actor_traces: Vec<&Trace> = buf.iter().map(|s| &s.actor).collect();
        let critic_traces: Vec<&Trace> = buf.iter().map(|s| &s.critic).collect();
        let noise: Vec<&[f64]> = buf.iter().map(|s| s.noise.as_slice()).collect();
        let (mut grads, stats) = a2c_gradients(
            policy,
            &actor_traces,
            &critic_traces,
            &noise,
            &adv,
            &returns,
            config.vf_coef,
            config.ent_coef,
        )?;
        if let Some(clip) = config.max_grad_norm {
            if stats.grad_norm > clip {
                grads.scale(clip / (stats.grad_norm + 1e-6));
            }
        }
        opt.step(&mut policy.tensors_mut(), &grads.tensors())?;
        if !policy.is_finite() {
            return Err(Error::Diverged(format!(
                "parameters became non-finite at step {steps}"
            )));
        }
        history.push(stats);
        if steps / config.evaluation_frequency > last_eval / config.evaluation_frequency {
            last_eval = steps;
            on_eval(steps, policy)?;
        }
    }
    if last_eval != steps {
        on_eval(steps, policy)?;
    }
    Ok(history)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub step: usize,
    pub val_reward: f64,
    pub is_best: bool,
}

/// Result of one seeded training run.
#[derive(Clone, Debug)]
pub struct TrainingRun {
    pub seed: u64,
    pub evaluations: Vec<EvalRecord>,
    /// Parameters with the highest validation reward.
    pub best_policy: PolicyParams,
    pub best_step: usize,
    pub best_val_reward: f64,
    /// Test balance of `best_policy`.
    pub test_balance: f64,
    pub validation_days: DayRange,
    pub test_days: DayRange,
    pub validation_seed: u64,
    pub test_seed: u64,
    pub updates: usize,
}

impl TrainingRun {
    /// Training log: one row per evaluation.
    pub fn write_log(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut text = String::from("step,val_reward,is_best\n");
        for r in &self.evaluations {
            text.push_str(&format!("{},{},{}\n", r.step, r.val_reward, r.is_best));
        }
        f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Train a fresh policy on the dataset's training split, checkpoint on the
/// validation window and test the best checkpoint.
pub fn a2c_train(
    dataset: &Dataset,
    env_config: &EnvConfig,
    include_weather: bool,
    arch: &PolicyArch,
    config: &A2cConfig,
) -> Result<TrainingRun> {
    let splits = *dataset.require_splits()?;
    let market = Market::new(dataset, env_config.clone(), include_weather)?;
    let validation_days = splits.validation.take(config.validation_days);
    let test_days = splits.test.take(config.test_days);
    let validation_seed = seeding::derive(config.seed, "validation");
    let test_seed = seeding::derive(config.seed, "test");
    let mut policy =
        PolicyParams::new(*market.layout(), arch, seeding::derive(config.seed, "init"));
    let mut env = MarketEpisodes::new(&market, splits.train, config.episode_length)?;
    let mut evaluations: Vec<EvalRecord> = Vec::new();
    let mut best: Option<(PolicyParams, usize, f64)> = None;
    let history = a2c_learn(&mut env, &mut policy, config, |step, p| {
        let val_reward = evaluate_strategy(&market, p, validation_days, validation_seed)?;
        let is_best = best.as_ref().map_or(true, |b| val_reward > b.2);
        if is_best {
            best = Some((p.clone(), step, val_reward));
        }
        evaluations.push(EvalRecord {
            step,
            val_reward,
            is_best,
        });
        Ok(())
    })?;
    let (best_policy, best_step, best_val_reward) =
        best.ok_or_else(|| Error::invalid("training ran no evaluation"))?;
    let test_balance = evaluate_strategy(&market, &best_policy, test_days, test_seed)?;
    Ok(TrainingRun {
        seed: config.seed,
        evaluations,
        best_policy,
        best_step,
        best_val_reward,
        test_balance,
        validation_days,
        test_days,
        validation_seed,
        test_seed,
        updates: history.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::ObservationLayout;

    fn tiny_policy(seed: u64) -> PolicyParams {
        let layout = ObservationLayout {
            include_weather: false,
            price_scale: 1.0,
        };
        let arch = PolicyArch {
            net_arch: vec![8],
            ..PolicyArch::default()
        };
        PolicyParams::new(layout, &arch, seed)
    }

    #[test]
    fn bellman_fixed_point_has_zero_gradient() {
        let gamma = 0.9;
        let c = 3.0;
        let v = c / (1.0 - gamma);
        let n = 5;
        let adv = compute_gae(&vec![c; n], &vec![v; n], &vec![false; n], v, gamma, 0.9).unwrap();
        assert!(adv.iter().all(|a| a.abs() < 1e-12));

        let p = tiny_policy(1);
        let obs = vec![0.3; p.input_size()];
        let at = p.actor.forward_trace(&obs).unwrap();
        let ct = p.critic.forward_trace(&obs).unwrap();
        let xi = vec![0.7; ACTION_DIM];
        let zeros = vec![0.0; n];
        let (g, _) = a2c_gradients(
            &p,
            &vec![&at; n],
            &vec![&ct; n],
            &vec![xi.as_slice(); n],
            &zeros,
            &vec![0.0; n],
            0.0,
            0.0,
        )
        .unwrap();
        assert!(g.actor.is_zero());
        assert!(g.log_std.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn invalid_config_rejected() {
        let bad = A2cConfig {
            gamma: 0.0,
            ..A2cConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = A2cConfig {
            gae_lambda: 1.5,
            ..A2cConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
