use serde::{Deserialize, Serialize};

use super::replay::Transition;
use super::reward::{reward, RewardWeights};
use crate::distill::{Mode, NavPolicy};
use crate::error::{Error, Result};
use crate::slimnet::{active_params, SlimMask};
use crate::worldsim::{sense, step, DroneState, FifoQueue, MotionCommand, SensorConfig, SimParams, Terminal, VoxelGrid, MAX_POWER, MIN_FORWARD_POWER, OBS_WIDTH};

/// Episode-level constants shared by evaluation and training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    pub sim: SimParams,
    pub vertical_locked: bool,
    pub max_steps: usize,
    /// Lower bound of the slimming factor the auxiliary policy can pick.
    pub rho_min: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            sim: SimParams::default(),
            vertical_locked: true,
            max_steps: 100,
            rho_min: 0.25,
        }
    }
}

/// Fixed resource setting used when no auxiliary policy is attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Setting {
    /// Slimming factor, sensing at maximum power.
    Width(f64),
    /// Sensor power levels, full-width network.
    Power(SensorConfig),
}

/// An auxiliary policy emitting normalized actions in `[-1, 1]`.
pub trait AuxPolicy {
    fn act(&mut self, state: &[f32]) -> Result<Vec<f32>>;
}

/// Who picks the resource setting during an episode.
pub enum Controller<'a> {
    Fixed(Setting),
    Aux { policy: &'a mut dyn AuxPolicy, mode: Mode },
}

/// Slimming factor for a normalized action.
pub fn action_to_rho(a: f32, rho_min: f64) -> f64 {
    let u = (a.clamp(-1.0, 1.0) as f64 + 1.0) / 2.0;
    rho_min + u * (1.0 - rho_min)
}

/// Continuous power levels `(p_f, p_d)` for a normalized action pair.
pub fn action_to_power(a: &[f32]) -> (f64, f64) {
    let u = |v: f32| (v.clamp(-1.0, 1.0) as f64 + 1.0) / 2.0;
    let lo = MIN_FORWARD_POWER as f64;
    let hi = MAX_POWER as f64;
    (lo + u(a[0]) * (hi - lo), u(a[1]) * hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    /// Position at which the step's decision was made.
    pub position: [f64; 3],
    pub rho: f64,
    /// Power levels the step's observation was acquired with.
    pub p_f: u8,
    pub p_d: u8,
    pub reward: f64,
    /// Active navigation-network parameters.
    pub m_active: usize,
    pub mean_forward_depth: Option<f64>,
    pub mean_downward_depth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub spawn: [f64; 3],
    pub goal: [f64; 3],
    pub steps: Vec<StepRecord>,
    /// `Active` when the step limit ended the episode.
    pub outcome: Terminal,
    pub final_position: [f64; 3],
    /// Meters flown.
    pub distance_flown: f64,
    /// Auxiliary inputs, one per step plus the one after the last step.
    /// Empty without an auxiliary policy.
    pub states: Vec<Vec<f32>>,
    /// Normalized auxiliary actions, one per step.
    pub actions: Vec<Vec<f32>>,
}

impl EpisodeLog {
    pub fn reached(&self) -> bool {
        self.outcome == Terminal::Reached
    }

    /// Path length in time steps.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.reward).collect()
    }

    pub fn mean_rho(&self) -> f64 {
        self.steps.iter().map(|s| s.rho).sum::<f64>() / self.steps.len().max(1) as f64
    }

    /// Replay transitions; the last one is terminal unless the step limit
    /// cut the episode short.
    pub fn transitions(&self) -> Vec<Transition> {
        if self.states.len() != self.steps.len() + 1 {
            return Vec::new();
        }
        let n = self.steps.len();
        (0..n)
            .map(|t| Transition {
                state: self.states[t].clone(),
                action: self.actions[t].clone(),
                reward: self.steps[t].reward,
                next_state: self.states[t + 1].clone(),
                done: t + 1 == n && self.outcome != Terminal::Active,
            })
            .collect()
    }
}

/// Flies one episode: sense, optionally ask the auxiliary policy, move with
/// the navigation network, score the step.
///
/// In compute mode the policy's slimming factor applies to the current
/// step. In sensing mode the policy's power levels apply to the next
/// acquisition, and the first acquisition uses maximum power.
pub fn run_episode(
    grid: &VoxelGrid,
    nav: &NavPolicy<'_>,
    controller: Controller<'_>,
    cfg: &EpisodeConfig,
    weights: &RewardWeights,
    spawn: [f64; 3],
    goal: [f64; 3],
) -> Result<EpisodeLog> {
    if grid.is_occupied_at(spawn) || grid.is_occupied_at(goal) {
        return Err(Error::config(format!("spawn {spawn:?} or goal {goal:?} is inside an obstacle")));
    }
    let sim = &cfg.sim;
    let spec = nav.net().spec();
    let mut state = DroneState::spawn(spawn, goal, cfg.vertical_locked);
    let mut fifo = FifoQueue::new(sim.fifo_depth, OBS_WIDTH);
    let mut last = MotionCommand::zero();
    let mut power = SensorConfig::MAX;
    let record_aux = matches!(controller, Controller::Aux { .. });
    let mut controller = controller;
    let mut log = EpisodeLog {
        spawn,
        goal,
        steps: Vec::new(),
        outcome: Terminal::Active,
        final_position: spawn,
        distance_flown: 0.0,
        states: Vec::new(),
        actions: Vec::new(),
    };

    let mode = match &controller {
        Controller::Fixed(Setting::Width(_)) => Mode::Compute,
        Controller::Fixed(Setting::Power(p)) => {
            power = *p;
            Mode::Sense
        }
        Controller::Aux { mode, .. } => *mode,
    };

    for t in 0..cfg.max_steps {
        let obs = sense(grid, &state, power, &last, sim)?;
        let acquired = obs.acquired_mask();
        fifo.push_masked(obs.to_vector(), acquired)?;
        let input = fifo.flatten();

        let mut rho = 1.0;
        let mut next_power = power;
        let mut charged_power = (MAX_POWER as f64, MAX_POWER as f64);
        match &mut controller {
            Controller::Fixed(Setting::Width(r)) => rho = *r,
            Controller::Fixed(Setting::Power(p)) => charged_power = (p.p_f as f64, p.p_d as f64),
            Controller::Aux { policy, .. } => {
                let a = policy.act(&input)?;
                match mode {
                    Mode::Compute => rho = action_to_rho(a[0], cfg.rho_min),
                    Mode::Sense => {
                        let (pf, pd) = action_to_power(&a);
                        next_power = SensorConfig::from_continuous(pf, pd);
                        charged_power = (next_power.p_f as f64, next_power.p_d as f64);
                    }
                }
                log.states.push(input.clone());
                log.actions.push(a);
            }
        }

        let mut mask = SlimMask::width(spec, rho)?;
        if mode == Mode::Sense {
            mask = mask.with_inputs(fifo.flatten_mask());
        }
        let command = nav.motion(&input, &mask, obs.heading)?;
        let before = state.distance_to_goal();
        let position = state.position;
        let next = step(grid, &state, &command, sim.max_step, sim.goal_radius);
        let progress = before - next.distance_to_goal();
        let r = reward(progress, next.terminal, rho, charged_power.0, charged_power.1, weights);
        log.distance_flown += crate::worldsim::distance(position, next.position);
        log.steps.push(StepRecord {
            t,
            position,
            rho,
            p_f: power.p_f,
            p_d: power.p_d,
            reward: r,
            m_active: active_params(spec, rho)?.exact,
            mean_forward_depth: obs.mean_forward_depth(),
            mean_downward_depth: obs.mean_downward_depth(),
        });
        last = command.clamped(sim.max_step, cfg.vertical_locked);
        state = next;
        power = next_power;
        if state.terminal != Terminal::Active {
            break;
        }
    }

    log.outcome = state.terminal;
    log.final_position = state.position;
    if record_aux {
        let final_state = if state.terminal == Terminal::Active {
            let obs = sense(grid, &state, power, &last, sim)?;
            let acquired = obs.acquired_mask();
            fifo.push_masked(obs.to_vector(), acquired)?;
            fifo.flatten()
        } else {
            log.states.last().cloned().unwrap_or_default()
        };
        log.states.push(final_state);
    }
    Ok(log)
}
