//! One-dimensional control task for checking the TD3 learner in isolation:
//! a point on a line is pushed toward the origin, reward `-|x|`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::replay::{ReplayBuffer, Transition};
use super::td3::{td3_update, Td3Agent, Td3Config};
use crate::error::Result;

const HORIZON: usize = 20;
const SPAN: f32 = 4.0;
const STEP_SCALE: f32 = 0.5;

fn advance(x: f32, a: f32) -> f32 {
    (x + STEP_SCALE * a.clamp(-1.0, 1.0)).clamp(-SPAN, SPAN)
}

/// Mean undiscounted return of the deterministic actor over fixed starts.
pub fn line_task_return(agent: &Td3Agent) -> Result<f64> {
    let starts = [-3.5f32, -2.5, -1.5, -0.5, 0.5, 1.5, 2.5, 3.5];
    let mut total = 0.0;
    for &x0 in &starts {
        let mut x = x0;
        for _ in 0..HORIZON {
            let a = agent.act(&[x / SPAN])?[0];
            x = advance(x, a);
            total -= x.abs() as f64;
        }
    }
    Ok(total / starts.len() as f64)
}

/// Trains for `steps` environment steps with one update per step after
/// the exploration phase. Returns the evaluation return before and after.
pub fn line_task_training(seed: u64, steps: usize, cfg: &Td3Config) -> Result<(f64, f64)> {
    let mut agent = Td3Agent::new(1, 1, cfg, seed)?;
    let before = line_task_return(&agent)?;
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x70e);
    let mut x = rng.random_range(-SPAN..SPAN);
    let mut t = 0;
    for step in 0..steps {
        let a = if step < cfg.exploration_steps {
            rng.random_range(-1.0f32..=1.0)
        } else {
            let noise: f32 = rng.random_range(-1.0f32..=1.0) * cfg.action_noise_std as f32 * 1.732;
            (agent.act(&[x / SPAN])?[0] + noise).clamp(-1.0, 1.0)
        };
        let next = advance(x, a);
        t += 1;
        let end = t == HORIZON;
        buffer.push(Transition {
            state: vec![x / SPAN],
            action: vec![a],
            reward: -(next.abs() as f64),
            next_state: vec![next / SPAN],
            done: false,
        });
        x = if end {
            t = 0;
            rng.random_range(-SPAN..SPAN)
        } else {
            next
        };
        if step >= cfg.exploration_steps && buffer.len() >= cfg.batch_size {
            td3_update(&mut agent, &buffer, cfg, &mut rng)?;
        }
    }
    Ok((before, line_task_return(&agent)?))
}

/// Relative improvement of a negative return.
pub fn improvement(before: f64, after: f64) -> f64 {
    (after - before) / before.abs().max(1e-12)
}
