use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::worldsim::Terminal;

/// Non-negative weights of the auxiliary reward terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardWeights {
    pub collision: f64,
    pub goal: f64,
    /// Gain on `tanh` of the per-step progress toward the goal.
    pub progress: f64,
    pub step: f64,
    /// Penalty per unit of slimming factor.
    pub compute: f64,
    /// Penalty per summed sensor power level.
    pub sensing: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            collision: 10.0,
            goal: 10.0,
            progress: 1.0,
            step: 0.1,
            compute: 0.1,
            sensing: 0.05,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.collision, self.goal, self.progress, self.step, self.compute, self.sensing];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::config(format!("reward weights must be non-negative: {self:?}")));
        }
        Ok(())
    }
}

/// Reward of one step. `progress` is the decrease in distance to the goal.
pub fn reward(progress: f64, terminal: Terminal, rho: f64, p_f: f64, p_d: f64, w: &RewardWeights) -> f64 {
    match terminal {
        Terminal::Collided => -w.collision,
        Terminal::Reached => w.goal,
        Terminal::Active => w.progress * progress.tanh() - w.step - w.compute * rho - w.sensing * (p_f + p_d),
    }
}

/// Discounted return from step `t` to the end of the episode.
pub fn q_return(rewards: &[f64], gamma: f64, t: usize) -> f64 {
    rewards[t..].iter().rev().fold(0.0, |acc, &r| r + gamma * acc)
}

/// Discounted returns of every step, computed backward in one pass.
pub fn q_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (q, &r) in out.iter_mut().zip(rewards).rev() {
        acc = r + gamma * acc;
        *q = acc;
    }
    out
}

/// Scalar random walk used to vet reward weights before any training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub n_walks: usize,
    pub start_distance: f64,
    /// Mean decrease in goal distance per step.
    pub step_mean: f64,
    pub step_std: f64,
    pub goal_radius: f64,
    pub max_steps: usize,
    /// Resource setting charged on every non-terminal step.
    pub rho: f64,
    pub p_f: f64,
    pub p_d: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            n_walks: 1000,
            start_distance: 100.0,
            step_mean: 1.0,
            step_std: 0.5,
            goal_radius: 2.0,
            max_steps: 500,
            rho: 1.0,
            p_f: 3.0,
            p_d: 3.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeStats {
    /// Return from the first step of each walk.
    pub q_values: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// Fraction of walks that reached the goal before the step cap.
    pub reached: f64,
}

pub fn random_walk_probe(weights: &RewardWeights, gamma: f64, cfg: &ProbeConfig) -> Result<ProbeStats> {
    if cfg.n_walks == 0 || cfg.max_steps == 0 {
        return Err(Error::config("random walk probe needs at least one walk and one step"));
    }
    let noise = Normal::new(cfg.step_mean, cfg.step_std.max(0.0))
        .map_err(|e| Error::config(format!("probe step distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut q_values = Vec::with_capacity(cfg.n_walks);
    let mut reached = 0usize;
    let mut rewards = Vec::new();
    for _ in 0..cfg.n_walks {
        rewards.clear();
        let mut dist = cfg.start_distance;
        for _ in 0..cfg.max_steps {
            let delta = noise.sample(&mut rng);
            let next = dist - delta;
            let terminal = if next <= cfg.goal_radius {
                Terminal::Reached
            } else {
                Terminal::Active
            };
            rewards.push(reward(dist - next, terminal, cfg.rho, cfg.p_f, cfg.p_d, weights));
            dist = next;
            if terminal == Terminal::Reached {
                reached += 1;
                break;
            }
        }
        q_values.push(q_return(&rewards, gamma, 0));
    }
    let n = q_values.len() as f64;
    let mean = q_values.iter().sum::<f64>() / n;
    let std = (q_values.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(ProbeStats {
        q_values,
        mean,
        std,
        reached: reached as f64 / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terminal_branches() {
        let w = RewardWeights::default();
        assert_eq!(reward(5.0, Terminal::Collided, 1.0, 3.0, 3.0, &w), -10.0);
        assert_eq!(reward(-5.0, Terminal::Reached, 1.0, 3.0, 3.0, &w), 10.0);
        assert_eq!(reward(0.0, Terminal::Active, 0.0, 0.0, 0.0, &w), -0.1);
    }

    #[test]
    fn mixed_step_reward() {
        // Independently evaluated: tanh(1) - 0.1 - 0.05 - 0.2
        let r = reward(1.0, Terminal::Active, 0.5, 3.0, 1.0, &RewardWeights::default());
        assert!((r - 0.411_594_2).abs() < 1e-6, "{r}");
    }

    #[test]
    fn geometric_return() {
        assert_eq!(q_return(&[1.0, 1.0, 1.0], 0.5, 0), 1.75);
        assert_eq!(q_return(&[3.0, -2.0, 7.0], 0.0, 1), -2.0);
        let rs = [0.3, -1.0, 2.5, 0.1];
        let qs = q_returns(&rs, 0.9);
        for t in 0..rs.len() {
            assert!((qs[t] - q_return(&rs, 0.9, t)).abs() < 1e-12);
        }
    }

    #[test]
    fn goal_only_noiseless_walk() {
        let w = RewardWeights {
            collision: 0.0,
            goal: 10.0,
            progress: 0.0,
            step: 0.0,
            compute: 0.0,
            sensing: 0.0,
        };
        let cfg = ProbeConfig {
            n_walks: 3,
            start_distance: 10.0,
            step_mean: 1.0,
            step_std: 0.0,
            ..ProbeConfig::default()
        };
        let stats = random_walk_probe(&w, 0.9, &cfg).unwrap();
        // Distance 10 -> 2 takes 8 steps.
        let want = 0.9f64.powi(7) * 10.0;
        assert!(stats.q_values.iter().all(|q| (q - want).abs() < 1e-9));
        assert_eq!(stats.reached, 1.0);
    }

    #[test]
    fn stalled_walks_only_pay_penalties() {
        let cfg = ProbeConfig {
            n_walks: 20,
            step_mean: 0.0,
            step_std: 0.0,
            ..ProbeConfig::default()
        };
        let stats = random_walk_probe(&RewardWeights::default(), 0.99, &cfg).unwrap();
        assert_eq!(stats.reached, 0.0);
        assert!(stats.mean < 0.0);
    }

    #[test]
    fn negative_weight_is_rejected() {
        let w = RewardWeights {
            step: -0.1,
            ..RewardWeights::default()
        };
        assert!(w.validate().is_err());
    }
}
