use serde::{Deserialize, Serialize};

use super::drone::{DroneState, MotionCommand, Terminal};
use super::grid::VoxelGrid;
use super::ray::cast_ray;
use crate::error::{Error, Result};
use crate::slimnet::{InputLayout, PoweredBlock};

/// Side of the forward ray grid at maximum power.
pub const FORWARD_SIDE: usize = 8;
/// Side of the downward ray grid at maximum power.
pub const DOWNWARD_SIDE: usize = 6;
pub const FORWARD_RAYS: usize = FORWARD_SIDE * FORWARD_SIDE;
pub const DOWNWARD_RAYS: usize = DOWNWARD_SIDE * DOWNWARD_SIDE;
/// Goal direction (3), goal distance (1) and last action (3).
pub const GOAL_FEATURES: usize = 7;
/// Width of one flattened observation.
pub const OBS_WIDTH: usize = FORWARD_RAYS + DOWNWARD_RAYS + GOAL_FEATURES;

pub const MAX_POWER: u8 = 3;
pub const MIN_FORWARD_POWER: u8 = 1;

/// Square grid side acquired by the forward sensor at each power level.
const FORWARD_LEVEL_SIDE: [usize; 4] = [0, 4, 6, 8];
/// Square grid side acquired by the downward sensor at each power level.
const DOWNWARD_LEVEL_SIDE: [usize; 4] = [0, 2, 4, 6];

/// Power levels of the two depth sensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SensorConfig {
    /// Forward sensor power, 1..=3.
    pub p_f: u8,
    /// Downward sensor power, 0..=3; 0 switches the sensor off.
    pub p_d: u8,
}

impl SensorConfig {
    pub const MAX: SensorConfig = SensorConfig { p_f: 3, p_d: 3 };
    pub const MIN: SensorConfig = SensorConfig { p_f: 1, p_d: 0 };

    pub fn new(p_f: u8, p_d: u8) -> Result<Self> {
        if !(MIN_FORWARD_POWER..=MAX_POWER).contains(&p_f) || p_d > MAX_POWER {
            return Err(Error::contract(format!(
                "power levels (p_f={p_f}, p_d={p_d}) outside {{1..3}}x{{0..3}}"
            )));
        }
        Ok(Self { p_f, p_d })
    }

    /// Rounds continuous levels to the nearest valid integer pair.
    pub fn from_continuous(p_f: f64, p_d: f64) -> Self {
        let p_f = p_f.round().clamp(MIN_FORWARD_POWER as f64, MAX_POWER as f64) as u8;
        let p_d = p_d.round().clamp(0.0, MAX_POWER as f64) as u8;
        Self { p_f, p_d }
    }

    pub fn forward_rays(&self) -> usize {
        FORWARD_LEVEL_SIDE[self.p_f as usize].pow(2)
    }

    pub fn downward_rays(&self) -> usize {
        DOWNWARD_LEVEL_SIDE[self.p_d as usize].pow(2)
    }
}

/// Sensor and motion constants shared by the simulator and the policies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    /// Largest per-axis displacement of one motion command, meters.
    pub max_step: f64,
    pub goal_radius: f64,
    /// Depth sensor range, meters; depths are normalized by it.
    pub max_range: f64,
    /// Normalization scale for the goal distance feature, meters.
    pub goal_scale: f64,
    /// Number of observations stacked in the FIFO.
    pub fifo_depth: usize,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            max_step: 2.0,
            goal_radius: 2.0,
            max_range: 100.0,
            goal_scale: 100.0,
            fifo_depth: 4,
        }
    }
}

/// One sensor acquisition. Depth entries are `None` where the ray was not
/// acquired at the configured power level.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub forward_depths: Vec<Option<f32>>,
    pub downward_depths: Vec<Option<f32>>,
    /// Unit vector toward the goal, world frame.
    pub goal_vector: [f32; 3],
    /// Distance to goal divided by the goal scale.
    pub goal_distance: f32,
    /// Previous motion command in the sensing frame, divided by `max_step`.
    pub last_action: [f32; 3],
    /// Yaw of the sensing frame, radians.
    pub heading: f64,
    pub config: SensorConfig,
}

impl Observation {
    /// Flattened vector; unacquired depths are written as 0 and flagged by
    /// [`Observation::acquired_mask`].
    pub fn to_vector(&self) -> Vec<f32> {
        let mut v = Vec::with_capacity(OBS_WIDTH);
        v.extend(self.forward_depths.iter().map(|d| d.unwrap_or(0.0)));
        v.extend(self.downward_depths.iter().map(|d| d.unwrap_or(0.0)));
        v.extend_from_slice(&self.goal_vector);
        v.push(self.goal_distance);
        v.extend_from_slice(&self.last_action);
        v
    }

    pub fn acquired_mask(&self) -> Vec<bool> {
        let mut m = Vec::with_capacity(OBS_WIDTH);
        m.extend(self.forward_depths.iter().map(Option::is_some));
        m.extend(self.downward_depths.iter().map(Option::is_some));
        m.extend(std::iter::repeat_n(true, GOAL_FEATURES));
        m
    }

    pub fn mean_forward_depth(&self) -> Option<f64> {
        mean_acquired(&self.forward_depths)
    }

    pub fn mean_downward_depth(&self) -> Option<f64> {
        mean_acquired(&self.downward_depths)
    }
}

fn mean_acquired(depths: &[Option<f32>]) -> Option<f64> {
    let (sum, n) = depths
        .iter()
        .flatten()
        .fold((0.0f64, 0usize), |(s, n), &d| (s + d as f64, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Indices (row-major within a `side`-square grid) of the central `inner`-square.
fn central_square(side: usize, inner: usize) -> Vec<usize> {
    let off = (side - inner) / 2;
    (off..off + inner)
        .flat_map(|r| (off..off + inner).map(move |c| r * side + c))
        .collect()
}

/// Ray indices acquired by the forward sensor at power `p_f`.
pub fn forward_ray_set(p_f: u8) -> Vec<usize> {
    central_square(FORWARD_SIDE, FORWARD_LEVEL_SIDE[p_f.min(MAX_POWER) as usize])
}

/// Ray indices acquired by the downward sensor at power `p_d`.
pub fn downward_ray_set(p_d: u8) -> Vec<usize> {
    central_square(DOWNWARD_SIDE, DOWNWARD_LEVEL_SIDE[p_d.min(MAX_POWER) as usize])
}

/// Input layout of a FIFO of `fifo_depth` observations, for input gating.
pub fn sensor_input_layout(fifo_depth: usize) -> InputLayout {
    InputLayout {
        slot_width: OBS_WIDTH,
        slots: fifo_depth,
        forward: PoweredBlock {
            offset: 0,
            len: FORWARD_RAYS,
            min_level: MIN_FORWARD_POWER,
            levels: (0..=MAX_POWER).map(forward_ray_set).collect(),
        },
        downward: PoweredBlock {
            offset: FORWARD_RAYS,
            len: DOWNWARD_RAYS,
            min_level: 0,
            levels: (0..=MAX_POWER).map(downward_ray_set).collect(),
        },
    }
}

/// Yaw of the sensing frame: horizontal bearing from `position` to `goal`.
pub fn heading_toward(position: [f64; 3], goal: [f64; 3]) -> f64 {
    (goal[1] - position[1]).atan2(goal[0] - position[0])
}

/// Rotates a world-frame vector into the frame yawed by `heading`.
pub fn world_to_body(v: [f64; 3], heading: f64) -> [f64; 3] {
    let (s, c) = heading.sin_cos();
    [c * v[0] + s * v[1], -s * v[0] + c * v[1], v[2]]
}

/// Rotates a body-frame vector back into the world frame.
pub fn body_to_world(v: [f64; 3], heading: f64) -> [f64; 3] {
    let (s, c) = heading.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]]
}

/// Offset of cell `i` in a pinhole grid spanning a 90 degree field of view.
#[inline]
fn fov_offset(i: usize, side: usize) -> f64 {
    1.0 - (2 * i + 1) as f64 / side as f64
}

/// Forward ray directions, row-major from top-left as seen by the sensor.
pub fn forward_directions(heading: f64) -> Vec<[f64; 3]> {
    let f = body_to_world([1.0, 0.0, 0.0], heading);
    let l = body_to_world([0.0, 1.0, 0.0], heading);
    let mut dirs = Vec::with_capacity(FORWARD_RAYS);
    for row in 0..FORWARD_SIDE {
        let up = fov_offset(row, FORWARD_SIDE);
        for col in 0..FORWARD_SIDE {
            let left = fov_offset(col, FORWARD_SIDE);
            dirs.push([f[0] + left * l[0], f[1] + left * l[1], up]);
        }
    }
    dirs
}

/// Downward ray directions; rows run along the forward axis.
pub fn downward_directions(heading: f64) -> Vec<[f64; 3]> {
    let f = body_to_world([1.0, 0.0, 0.0], heading);
    let l = body_to_world([0.0, 1.0, 0.0], heading);
    let mut dirs = Vec::with_capacity(DOWNWARD_RAYS);
    for row in 0..DOWNWARD_SIDE {
        let fwd = fov_offset(row, DOWNWARD_SIDE);
        for col in 0..DOWNWARD_SIDE {
            let left = fov_offset(col, DOWNWARD_SIDE);
            dirs.push([fwd * f[0] + left * l[0], fwd * f[1] + left * l[1], -1.0]);
        }
    }
    dirs
}

/// Acquires depths at the given power levels, plus goal features.
///
/// The sensing frame is yawed toward the goal. `last_action` is the
/// previous world-frame motion command (zero at spawn).
pub fn sense(
    grid: &VoxelGrid,
    state: &DroneState,
    config: SensorConfig,
    last_action: &MotionCommand,
    params: &SimParams,
) -> Result<Observation> {
    if state.terminal != Terminal::Active {
        return Err(Error::contract("sense called on a terminal drone state"));
    }
    let heading = heading_toward(state.position, state.goal);
    let max_range = params.max_range;
    let acquire = |dirs: Vec<[f64; 3]>, active: Vec<usize>| -> Result<Vec<Option<f32>>> {
        let mut out = vec![None; dirs.len()];
        for i in active {
            let d = cast_ray(grid, state.position, dirs[i], max_range)?;
            out[i] = Some((d / max_range).clamp(0.0, 1.0) as f32);
        }
        Ok(out)
    };
    let forward_depths = acquire(forward_directions(heading), forward_ray_set(config.p_f))?;
    let downward_depths = acquire(downward_directions(heading), downward_ray_set(config.p_d))?;

    let to_goal = [
        state.goal[0] - state.position[0],
        state.goal[1] - state.position[1],
        state.goal[2] - state.position[2],
    ];
    let dist = (to_goal[0].powi(2) + to_goal[1].powi(2) + to_goal[2].powi(2)).sqrt();
    let goal_vector = if dist > 0.0 {
        to_goal.map(|v| (v / dist) as f32)
    } else {
        [0.0; 3]
    };
    let last = world_to_body(last_action.delta, heading);
    Ok(Observation {
        forward_depths,
        downward_depths,
        goal_vector,
        goal_distance: (dist / params.goal_scale) as f32,
        last_action: [
            (last[0] / params.max_step) as f32,
            (last[1] / params.max_step) as f32,
            (last[2] / params.max_step) as f32,
        ],
        heading,
        config,
    })
}
