use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::curriculum::{curriculum_controller, CurriculumConfig};
use super::episode::{run_episode, AuxPolicy, Controller, EpisodeConfig, EpisodeLog};
use super::policy::{ActorPolicy, NoisyPolicy, UniformPolicy};
use super::replay::ReplayBuffer;
use super::reward::RewardWeights;
use super::td3::{td3_update, Td3Agent, Td3Config};
use crate::distill::{Mode, NavPolicy};
use crate::error::{Error, Result};
use crate::pathoracle::{OptimalPath, Region, RegionMap, TaskSampler, FLIGHT_LEVEL};
use crate::slimnet::SlimmableMlp;
use crate::worldsim::VoxelGrid;

/// Path-length constraint and the reporting trade-off weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstraintConfig {
    pub alpha: f64,
    /// Flown length may be at most `beta` times the optimal length, both
    /// counted in time steps.
    pub beta: f64,
}

impl Default for ConstraintConfig {
    fn default() -> Self {
        Self { alpha: 0.5, beta: 1.5 }
    }
}

impl ConstraintConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) || !(self.beta >= 1.0) {
            return Err(Error::config(format!(
                "constraint needs alpha in [0, 1] and beta >= 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuxTrainConfig {
    pub td3: Td3Config,
    pub curriculum: CurriculumConfig,
    pub weights: RewardWeights,
    pub constraint: ConstraintConfig,
    /// Environment steps to train for.
    pub total_steps: usize,
    pub seed: u64,
    pub gate_episodes: usize,
    /// Seed of the gate task set, independent of the training seed.
    pub gate_seed: u64,
    /// Spawn-goal distance range of the final gate tasks, meters.
    pub gate_distance: (f64, f64),
}

impl Default for AuxTrainConfig {
    fn default() -> Self {
        Self {
            td3: Td3Config::default(),
            curriculum: CurriculumConfig::default(),
            weights: RewardWeights::default(),
            constraint: ConstraintConfig::default(),
            total_steps: 6000,
            seed: 1,
            gate_episodes: 20,
            gate_seed: 2024,
            gate_distance: (8.0, 10.0),
        }
    }
}

impl AuxTrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.td3.validate()?;
        self.curriculum.validate()?;
        self.weights.validate()?;
        self.constraint.validate()?;
        if self.gate_episodes == 0 || !(self.gate_distance.0 > 0.0 && self.gate_distance.1 >= self.gate_distance.0) {
            return Err(Error::config("gate needs episodes and a positive distance range"));
        }
        Ok(())
    }
}

/// A world together with its region partition.
#[derive(Debug, Clone)]
pub struct AuxWorld {
    pub grid: VoxelGrid,
    pub regions: RegionMap,
}

/// One training episode's summary.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    pub episode: usize,
    pub env_steps: usize,
    pub updates: u64,
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub q_mean: f64,
    pub episode_return: f64,
    pub outcome: &'static str,
    pub mean_rho: f64,
    pub curriculum_distance: f64,
    /// Set on episodes followed by an evaluation.
    pub eval_success: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateViolation {
    pub episode: usize,
    pub steps: usize,
    pub optimal_steps: usize,
    pub reached: bool,
}

/// Outcome of the final path-length gate on test tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct GateReport {
    pub episodes: usize,
    pub successes: usize,
    pub violations: Vec<GateViolation>,
    pub beta: f64,
    pub logs: Vec<EpisodeLog>,
    pub paths: Vec<OptimalPath>,
}

impl GateReport {
    /// Every episode reached its goal within `beta` times the optimal steps.
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.successes == self.episodes
    }

    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.episodes.max(1) as f64
    }

    /// Error describing every failure, or `Ok` when the gate passed.
    pub fn check(&self) -> Result<()> {
        if self.passed() {
            return Ok(());
        }
        let detail: Vec<String> = self
            .violations
            .iter()
            .map(|v| {
                if v.reached {
                    format!(
                        "episode {}: {} steps > {} x {} optimal",
                        v.episode, v.steps, self.beta, v.optimal_steps
                    )
                } else {
                    format!("episode {}: goal not reached after {} steps", v.episode, v.steps)
                }
            })
            .collect();
        Err(Error::Constraint(format!(
            "{}/{} gate episodes succeeded; {}",
            self.successes,
            self.episodes,
            detail.join("; ")
        )))
    }
}

#[derive(Debug, Clone)]
pub struct AuxOutcome {
    pub actor: SlimmableMlp,
    pub log: Vec<TrainRecord>,
    pub gate: GateReport,
    pub final_distance: f64,
}

fn flight_level(cfg: &EpisodeConfig) -> Option<usize> {
    cfg.vertical_locked.then_some(FLIGHT_LEVEL)
}

/// Auxiliary action width for a mode.
pub fn action_dim(mode: Mode) -> usize {
    match mode {
        Mode::Compute => 1,
        Mode::Sense => 2,
    }
}

/// Draws `count` tasks from `region`, cycling through the worlds.
pub fn sample_tasks(
    worlds: &[AuxWorld],
    region: Region,
    episode: &EpisodeConfig,
    distance: (f64, f64),
    count: usize,
    seed: u64,
) -> Result<Vec<(usize, OptimalPath)>> {
    let samplers = worlds
        .iter()
        .map(|w| TaskSampler::new(&w.grid, &w.regions, region, episode.vertical_locked, flight_level(episode)))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut misses = 0;
    let mut w = 0;
    while out.len() < count {
        let k = w % worlds.len();
        w += 1;
        match samplers[k].sample(&mut rng, distance.0, distance.1, 500) {
            Some(p) => out.push((k, p)),
            None => {
                misses += 1;
                if misses > 4 * worlds.len() + count {
                    return Err(Error::config(format!(
                        "cannot place {:?} m tasks in the {} region",
                        distance,
                        region.as_str()
                    )));
                }
            }
        }
    }
    Ok(out)
}

/// Flies `tasks` with the deterministic actor.
pub fn evaluate_auxiliary(
    worlds: &[AuxWorld],
    tasks: &[(usize, OptimalPath)],
    nav: &NavPolicy<'_>,
    actor: &SlimmableMlp,
    mode: Mode,
    episode: &EpisodeConfig,
    weights: &RewardWeights,
) -> Result<Vec<EpisodeLog>> {
    tasks
        .iter()
        .map(|(k, path)| {
            let grid = &worlds[*k].grid;
            let mut policy = ActorPolicy::new(actor);
            run_episode(
                grid,
                nav,
                Controller::Aux {
                    policy: &mut policy,
                    mode,
                },
                episode,
                weights,
                grid.center(path.start()),
                grid.center(path.goal()),
            )
        })
        .collect()
}

/// Checks every test episode against `beta` times its optimal step count.
pub fn constraint_gate(logs: Vec<EpisodeLog>, paths: Vec<OptimalPath>, beta: f64) -> GateReport {
    let mut violations = Vec::new();
    let mut successes = 0;
    for (i, (log, path)) in logs.iter().zip(&paths).enumerate() {
        let reached = log.reached();
        successes += reached as usize;
        if !reached || log.len() as f64 > beta * path.steps() as f64 {
            violations.push(GateViolation {
                episode: i,
                steps: log.len(),
                optimal_steps: path.steps(),
                reached,
            });
        }
    }
    GateReport {
        episodes: logs.len(),
        successes,
        violations,
        beta,
        logs,
        paths,
    }
}

/// TD3 training of the auxiliary policy against a frozen navigation
/// network, with a distance curriculum and a final path-length gate on the
/// test regions.
pub fn train_auxiliary(
    worlds: &[AuxWorld],
    nav_net: &SlimmableMlp,
    mode: Mode,
    episode: &EpisodeConfig,
    cfg: &AuxTrainConfig,
) -> Result<AuxOutcome> {
    cfg.validate()?;
    if worlds.is_empty() {
        return Err(Error::config("auxiliary training needs at least one world"));
    }
    let mut episode_cfg = *episode;
    episode_cfg.max_steps = cfg.td3.max_episode_steps;
    let nav = NavPolicy::new(nav_net, episode.sim.max_step);
    let train_samplers = worlds
        .iter()
        .map(|w| TaskSampler::new(&w.grid, &w.regions, Region::Train, episode.vertical_locked, flight_level(episode)))
        .collect::<Result<Vec<_>>>()?;

    let dim = action_dim(mode);
    let mut agent = Td3Agent::new(nav_net.spec().inputs, dim, &cfg.td3, cfg.seed)?;
    let mut buffer = ReplayBuffer::new(cfg.td3.buffer_capacity);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut history: Vec<f64> = Vec::new();
    let mut log = Vec::new();
    let mut env_steps = 0usize;
    let mut update_budget = 0.0f64;
    let mut ep = 0usize;
    let mut misses = 0usize;
    let cur = &cfg.curriculum;

    while env_steps < cfg.total_steps {
        let d = curriculum_controller(&history, cur);
        let k = ep % worlds.len();
        let Some(path) = train_samplers[k].sample(&mut rng, (d - cur.window).max(1.0), d, 500) else {
            misses += 1;
            if misses > 100 {
                return Err(Error::config(format!("cannot place {d} m training tasks")));
            }
            ep += 1;
            continue;
        };
        let grid = &worlds[k].grid;
        let exploring = env_steps < cfg.td3.exploration_steps;
        let episode_log = {
            let mut uniform;
            let mut noisy;
            let policy: &mut dyn AuxPolicy = if exploring {
                uniform = UniformPolicy::new(dim, &mut rng);
                &mut uniform
            } else {
                noisy = NoisyPolicy::new(&agent.actor, cfg.td3.action_noise_std, &mut rng);
                &mut noisy
            };
            run_episode(
                grid,
                &nav,
                Controller::Aux { policy, mode },
                &episode_cfg,
                &cfg.weights,
                grid.center(path.start()),
                grid.center(path.goal()),
            )?
        };
        for t in episode_log.transitions() {
            buffer.push(t);
        }
        env_steps += episode_log.len();

        let (mut critic, mut actor, mut q, mut n_up, mut n_actor) = (0.0, 0.0, 0.0, 0usize, 0usize);
        if env_steps >= cfg.td3.exploration_steps && buffer.len() >= cfg.td3.batch_size {
            update_budget += episode_log.len() as f64 * cfg.td3.updates_per_step;
            while update_budget >= 1.0 {
                update_budget -= 1.0;
                let s = td3_update(&mut agent, &buffer, &cfg.td3, &mut rng)?;
                critic += s.critic_loss;
                q += s.q_mean;
                n_up += 1;
                if let Some(a) = s.actor_loss {
                    actor += a;
                    n_actor += 1;
                }
            }
        }

        ep += 1;
        let mut eval_success = None;
        if env_steps >= cfg.td3.exploration_steps && ep % cur.eval_interval == 0 {
            let tasks = sample_tasks(
                worlds,
                Region::Test,
                &episode_cfg,
                ((d - cur.window).max(1.0), d),
                cur.eval_episodes,
                cfg.seed.wrapping_mul(7919).wrapping_add(ep as u64),
            )?;
            let logs = evaluate_auxiliary(worlds, &tasks, &nav, &agent.actor, mode, &episode_cfg, &cfg.weights)?;
            let rate = logs.iter().filter(|l| l.reached()).count() as f64 / logs.len() as f64;
            history.push(rate);
            eval_success = Some(rate);
        }
        log.push(TrainRecord {
            episode: ep,
            env_steps,
            updates: agent.updates(),
            critic_loss: if n_up > 0 { critic / n_up as f64 } else { f64::NAN },
            actor_loss: if n_actor > 0 { actor / n_actor as f64 } else { f64::NAN },
            q_mean: if n_up > 0 { q / n_up as f64 } else { f64::NAN },
            episode_return: episode_log.rewards().iter().sum(),
            outcome: episode_log.outcome.as_str(),
            mean_rho: episode_log.mean_rho(),
            curriculum_distance: d,
            eval_success,
        });
    }

    let gate_tasks = sample_tasks(
        worlds,
        Region::Test,
        &episode_cfg,
        cfg.gate_distance,
        cfg.gate_episodes,
        cfg.gate_seed,
    )?;
    let logs = evaluate_auxiliary(worlds, &gate_tasks, &nav, &agent.actor, mode, &episode_cfg, &cfg.weights)?;
    let paths = gate_tasks.into_iter().map(|(_, p)| p).collect();
    let gate = constraint_gate(logs, paths, cfg.constraint.beta);
    Ok(AuxOutcome {
        actor: agent.actor,
        log,
        gate,
        final_distance: curriculum_controller(&history, cur),
    })
}
