use crate::auxtrain::{run_episode, Controller, EpisodeConfig, EpisodeLog, RewardWeights, Setting};
use crate::error::{Error, Result};
use crate::pathoracle::{Dataset, OptimalPath};
use crate::slimnet::{input_mask_from_power, SlimMask, SlimmableMlp};
use crate::worldsim::{body_to_world, sensor_input_layout, world_to_body, MotionCommand, VoxelGrid};

/// The navigation network as a motion policy. Its outputs are body-frame
/// displacements divided by the maximum step.
#[derive(Debug, Clone, Copy)]
pub struct NavPolicy<'a> {
    net: &'a SlimmableMlp,
    max_step: f64,
}

impl<'a> NavPolicy<'a> {
    pub fn new(net: &'a SlimmableMlp, max_step: f64) -> Self {
        Self { net, max_step }
    }

    pub fn net(&self) -> &'a SlimmableMlp {
        self.net
    }

    /// World-frame motion for a flattened FIFO sensed in the frame yawed by
    /// `heading`.
    pub fn motion(&self, input: &[f32], mask: &SlimMask, heading: f64) -> Result<MotionCommand> {
        let out = self.net.forward(input, mask)?;
        let body = [0, 1, 2].map(|k| out[k] as f64 * self.max_step);
        Ok(MotionCommand::new(body_to_world(body, heading)))
    }
}

/// Body-frame training target of a sample, divided by `max_step`.
pub fn body_target(target: [f32; 3], heading: f32, max_step: f64) -> [f32; 3] {
    let t = target.map(|v| v as f64);
    world_to_body(t, heading as f64).map(|v| (v / max_step) as f32)
}

/// Root mean squared error of the predicted motion, meters per component.
pub fn rmse(net: &SlimmableMlp, data: &Dataset, mask: &SlimMask) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::config("RMSE of an empty dataset"));
    }
    let mut sq = 0.0;
    for s in &data.samples {
        let y = net.forward(&s.fifo, mask)?;
        let t = body_target(s.target, s.heading, data.max_step);
        for k in 0..3 {
            sq += ((y[k] - t[k]) as f64 * data.max_step).powi(2);
        }
    }
    Ok((sq / (3 * data.len()) as f64).sqrt())
}

/// Mask realizing a fixed setting on a network fed by a full FIFO.
pub fn setting_mask(net: &SlimmableMlp, setting: Setting, fifo_depth: usize) -> Result<SlimMask> {
    match setting {
        Setting::Width(rho) => SlimMask::width(net.spec(), rho),
        Setting::Power(p) => {
            let layout = sensor_input_layout(fifo_depth);
            Ok(SlimMask::full(net.spec()).with_inputs(input_mask_from_power(p.p_f, p.p_d, &layout)?))
        }
    }
}

pub fn rmse_at(net: &SlimmableMlp, data: &Dataset, setting: Setting) -> Result<f64> {
    rmse(net, data, &setting_mask(net, setting, data.fifo_depth)?)
}

/// Success and path quality of a frozen navigation network.
#[derive(Debug, Clone, PartialEq)]
pub struct NavEval {
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Mean flown distance over optimal length, successful episodes only.
    pub mean_length_ratio: f64,
    /// Motion RMSE on the labeled test set, when one was given.
    pub rmse: Option<f64>,
    pub logs: Vec<EpisodeLog>,
}

/// Flies every task at a fixed setting without an auxiliary policy.
pub fn evaluate_navigation(
    net: &SlimmableMlp,
    tasks: &[(&VoxelGrid, &OptimalPath)],
    setting: Setting,
    cfg: &EpisodeConfig,
    labeled: Option<&Dataset>,
) -> Result<NavEval> {
    let nav = NavPolicy::new(net, cfg.sim.max_step);
    let weights = RewardWeights::default();
    let mut logs = Vec::with_capacity(tasks.len());
    let mut successes = 0;
    let mut ratio_sum = 0.0;
    for (grid, path) in tasks {
        let log = run_episode(
            grid,
            &nav,
            Controller::Fixed(setting),
            cfg,
            &weights,
            grid.center(path.start()),
            grid.center(path.goal()),
        )?;
        if log.reached() {
            successes += 1;
            ratio_sum += log.distance_flown / path.length;
        }
        logs.push(log);
    }
    let rmse = labeled.map(|d| rmse_at(net, d, setting)).transpose()?;
    Ok(NavEval {
        episodes: tasks.len(),
        successes,
        success_rate: successes as f64 / tasks.len().max(1) as f64,
        mean_length_ratio: if successes > 0 { ratio_sum / successes as f64 } else { f64::NAN },
        rmse,
        logs,
    })
}
