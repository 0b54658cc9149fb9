use serde::{Deserialize, Serialize};

use super::grid::VoxelGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Terminal {
    Active,
    Collided,
    Reached,
}

impl Terminal {
    pub fn as_str(&self) -> &'static str {
        match self {
            Terminal::Active => "active",
            Terminal::Collided => "collided",
            Terminal::Reached => "reached",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroneState {
    /// Meters, world frame.
    pub position: [f64; 3],
    pub goal: [f64; 3],
    pub step_count: usize,
    pub terminal: Terminal,
    pub vertical_locked: bool,
}

impl DroneState {
    pub fn spawn(position: [f64; 3], goal: [f64; 3], vertical_locked: bool) -> Self {
        Self {
            position,
            goal,
            step_count: 0,
            terminal: Terminal::Active,
            vertical_locked,
        }
    }

    pub fn distance_to_goal(&self) -> f64 {
        distance(self.position, self.goal)
    }
}

/// Per-step displacement, meters, world frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MotionCommand {
    pub delta: [f64; 3],
}

impl MotionCommand {
    pub fn new(delta: [f64; 3]) -> Self {
        Self { delta }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Clamps every component to `[-max_step, max_step]`; zeroes z when locked.
    pub fn clamped(&self, max_step: f64, vertical_locked: bool) -> Self {
        let mut delta = self.delta.map(|c| {
            if c.is_finite() {
                c.clamp(-max_step, max_step)
            } else {
                0.0
            }
        });
        if vertical_locked {
            delta[2] = 0.0;
        }
        Self { delta }
    }

    pub fn norm(&self) -> f64 {
        norm(self.delta)
    }
}

#[inline]
pub fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[inline]
pub fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    norm([a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

/// Points sampled along `from -> to` at spacing no larger than half a voxel,
/// excluding `from` and including `to`.
pub fn segment_samples(grid: &VoxelGrid, from: [f64; 3], to: [f64; 3]) -> impl Iterator<Item = [f64; 3]> {
    let len = distance(from, to);
    let n = ((len / (0.5 * grid.resolution())).ceil() as usize).max(1);
    (1..=n).map(move |s| {
        let t = s as f64 / n as f64;
        [
            from[0] + t * (to[0] - from[0]),
            from[1] + t * (to[1] - from[1]),
            from[2] + t * (to[2] - from[2]),
        ]
    })
}

/// First occupied sample along the segment, if any.
pub fn first_collision(grid: &VoxelGrid, from: [f64; 3], to: [f64; 3]) -> Option<[f64; 3]> {
    segment_samples(grid, from, to).find(|&p| grid.is_occupied_at(p))
}

/// Advances the drone by one clamped motion command.
pub fn step(grid: &VoxelGrid, state: &DroneState, command: &MotionCommand, max_step: f64, goal_radius: f64) -> DroneState {
    let mut next = *state;
    next.step_count += 1;
    if state.terminal != Terminal::Active {
        return next;
    }
    let cmd = command.clamped(max_step, state.vertical_locked);
    let target = [
        state.position[0] + cmd.delta[0],
        state.position[1] + cmd.delta[1],
        state.position[2] + cmd.delta[2],
    ];
    if let Some(hit) = first_collision(grid, state.position, target) {
        next.position = hit;
        next.terminal = Terminal::Collided;
        return next;
    }
    next.position = target;
    if distance(target, state.goal) <= goal_radius {
        next.terminal = Terminal::Reached;
    }
    next
}
