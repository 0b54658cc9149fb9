use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::replay::{ReplayBuffer, Transition};
use crate::error::{Error, Result};
use crate::slimnet::{mse_loss, Adam, ForwardCache, Gradients, MlpSpec, Optimizer, OutputActivation, SlimMask, SlimmableMlp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Td3Config {
    pub gamma: f64,
    pub tau: f64,
    pub policy_delay: usize,
    /// Environment steps taken with uniform random actions.
    pub exploration_steps: usize,
    pub action_noise_std: f64,
    pub target_noise_std: f64,
    pub target_noise_clip: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub max_episode_steps: usize,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    /// Gradient updates per environment step once learning starts.
    pub updates_per_step: f64,
}

impl Default for Td3Config {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            policy_delay: 2,
            exploration_steps: 2000,
            action_noise_std: 0.1,
            target_noise_std: 0.2,
            target_noise_clip: 0.5,
            batch_size: 128,
            buffer_capacity: 100_000,
            lr_actor: 1e-3,
            lr_critic: 1e-3,
            max_episode_steps: 100,
            actor_hidden: vec![32, 32],
            critic_hidden: vec![64, 64],
            updates_per_step: 1.0,
        }
    }
}

impl Td3Config {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::config(format!("gamma {} outside (0, 1)", self.gamma)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::config(format!("tau {} outside (0, 1]", self.tau)));
        }
        if self.policy_delay == 0 || self.batch_size == 0 || self.max_episode_steps == 0 {
            return Err(Error::config("policy_delay, batch_size and max_episode_steps must be at least 1"));
        }
        if self.buffer_capacity < self.batch_size {
            return Err(Error::config("replay capacity is smaller than one batch"));
        }
        let noises = [self.action_noise_std, self.target_noise_std, self.target_noise_clip];
        if noises.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::config("noise parameters must be non-negative"));
        }
        if !(self.lr_actor > 0.0 && self.lr_critic > 0.0) {
            return Err(Error::config("learning rates must be positive"));
        }
        if self.actor_hidden.is_empty() || self.critic_hidden.is_empty() {
            return Err(Error::config("actor and critic need hidden layers"));
        }
        Ok(())
    }
}

/// Actor, twin critics, their target copies and optimizers.
#[derive(Debug, Clone)]
pub struct Td3Agent {
    pub actor: SlimmableMlp,
    pub actor_target: SlimmableMlp,
    pub critics: [SlimmableMlp; 2],
    pub critic_targets: [SlimmableMlp; 2],
    actor_opt: Adam,
    critic_opts: [Adam; 2],
    updates: u64,
    state_dim: usize,
    action_dim: usize,
}

/// Losses of one update.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    /// Mean of both critics' squared TD errors.
    pub critic_loss: f64,
    /// Negative mean Q of the actor's actions, on delayed steps only.
    pub actor_loss: Option<f64>,
    /// Mean first-critic estimate on the batch.
    pub q_mean: f64,
}

impl Td3Agent {
    pub fn new(state_dim: usize, action_dim: usize, cfg: &Td3Config, seed: u64) -> Result<Self> {
        let actor_spec = MlpSpec::new(state_dim, cfg.actor_hidden.clone(), action_dim, OutputActivation::Tanh { scale: 1.0 })?;
        let critic_spec = MlpSpec::new(state_dim + action_dim, cfg.critic_hidden.clone(), 1, OutputActivation::Identity)?;
        let actor = SlimmableMlp::new(actor_spec, seed)?;
        let critics = [
            SlimmableMlp::new(critic_spec.clone(), seed.wrapping_add(1))?,
            SlimmableMlp::new(critic_spec, seed.wrapping_add(2))?,
        ];
        Ok(Self {
            actor_target: actor.clone(),
            critic_targets: critics.clone(),
            actor_opt: Adam::new(&actor, cfg.lr_actor),
            critic_opts: [Adam::new(&critics[0], cfg.lr_critic), Adam::new(&critics[1], cfg.lr_critic)],
            actor,
            critics,
            updates: 0,
            state_dim,
            action_dim,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Deterministic action in `[-1, 1]`.
    pub fn act(&self, state: &[f32]) -> Result<Vec<f32>> {
        self.actor.forward(state, &SlimMask::full(self.actor.spec()))
    }

    /// Estimate of the first critic.
    pub fn q_value(&self, state: &[f32], action: &[f32]) -> Result<f64> {
        let x = concat(state, action);
        Ok(self.critics[0].forward(&x, &SlimMask::full(self.critics[0].spec()))?[0] as f64)
    }
}

fn concat(a: &[f32], b: &[f32]) -> Vec<f32> {
    let mut x = Vec::with_capacity(a.len() + b.len());
    x.extend_from_slice(a);
    x.extend_from_slice(b);
    x
}

/// Critic regression targets `r + gamma (1 - done) min_k Q'_k(s', a')`
/// with clipped Gaussian smoothing on the target action.
pub fn critic_targets<R: Rng>(agent: &Td3Agent, batch: &[&Transition], cfg: &Td3Config, rng: &mut R) -> Result<Vec<f64>> {
    let noise = Normal::new(0.0, cfg.target_noise_std).map_err(|e| Error::config(e.to_string()))?;
    let actor_mask = SlimMask::full(agent.actor.spec());
    let critic_mask = SlimMask::full(agent.critics[0].spec());
    let mut ys = Vec::with_capacity(batch.len());
    for t in batch {
        // Noise is drawn for every transition so the stream does not depend
        // on `done`.
        let mut a = agent.actor_target.forward(&t.next_state, &actor_mask)?;
        for v in a.iter_mut() {
            let eps = noise.sample(rng).clamp(-cfg.target_noise_clip, cfg.target_noise_clip);
            *v = (*v + eps as f32).clamp(-1.0, 1.0);
        }
        let y = if t.done {
            t.reward
        } else {
            let x = concat(&t.next_state, &a);
            let q1 = agent.critic_targets[0].forward(&x, &critic_mask)?[0] as f64;
            let q2 = agent.critic_targets[1].forward(&x, &critic_mask)?[0] as f64;
            t.reward + cfg.gamma * q1.min(q2)
        };
        ys.push(y);
    }
    Ok(ys)
}

/// One TD3 update from a uniformly sampled batch.
pub fn td3_update<R: Rng>(agent: &mut Td3Agent, buffer: &ReplayBuffer, cfg: &Td3Config, rng: &mut R) -> Result<UpdateStats> {
    let batch = buffer.sample(rng, cfg.batch_size)?;
    td3_update_on(agent, &batch, cfg, rng)
}

/// As [`td3_update`] on an explicit batch.
pub fn td3_update_on<R: Rng>(agent: &mut Td3Agent, batch: &[&Transition], cfg: &Td3Config, rng: &mut R) -> Result<UpdateStats> {
    let ys = critic_targets(agent, batch, cfg, rng)?;
    let weight = 1.0 / batch.len() as f64;
    let critic_mask = SlimMask::full(agent.critics[0].spec());
    let mut cache = ForwardCache::new();
    let mut stats = UpdateStats::default();

    for k in 0..2 {
        let critic = &agent.critics[k];
        let mut grads = Gradients::zeros_like(critic);
        let mut loss = 0.0;
        for (t, &y) in batch.iter().zip(&ys) {
            let x = concat(&t.state, &t.action);
            critic.forward_cached(&x, &critic_mask, &mut cache)?;
            if k == 0 {
                stats.q_mean += cache.output()[0] as f64 * weight;
            }
            let (l, g) = mse_loss(cache.output(), &[y as f32], weight);
            loss += l * weight;
            critic.backward(&cache, &g, &mut grads);
        }
        if !loss.is_finite() {
            return Err(Error::Training(format!("critic {k} loss is {loss} after {} updates", agent.updates)));
        }
        stats.critic_loss += 0.5 * loss;
        agent.critic_opts[k].step(&mut agent.critics[k], &grads)?;
    }

    agent.updates += 1;
    if agent.updates % cfg.policy_delay as u64 == 0 {
        let actor_mask = SlimMask::full(agent.actor.spec());
        let mut actor_cache = ForwardCache::new();
        let mut grads = Gradients::zeros_like(&agent.actor);
        let mut loss = 0.0;
        let state_dim = agent.state_dim;
        for t in batch {
            agent.actor.forward_cached(&t.state, &actor_mask, &mut actor_cache)?;
            let x = concat(&t.state, actor_cache.output());
            agent.critics[0].forward_cached(&x, &critic_mask, &mut cache)?;
            loss -= cache.output()[0] as f64 * weight;
            let dx = agent.critics[0].backward_with_input(&cache, &[-(weight as f32)], None);
            agent.actor.backward(&actor_cache, &dx[state_dim..], &mut grads);
        }
        if !loss.is_finite() {
            return Err(Error::Training(format!("actor loss is {loss} after {} updates", agent.updates)));
        }
        agent.actor_opt.step(&mut agent.actor, &grads)?;
        agent.actor_target.soft_update_from(&agent.actor, cfg.tau);
        for k in 0..2 {
            agent.critic_targets[k].soft_update_from(&agent.critics[k], cfg.tau);
        }
        stats.actor_loss = Some(loss);
    }
    Ok(stats)
}
