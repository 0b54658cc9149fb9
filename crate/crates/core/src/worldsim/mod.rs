//! Deterministic voxel world with a point drone, variable-power depth
//! sensors and a goal-relative GPS feature.

mod drone;
mod fifo;
mod grid;
mod ray;
mod sensor;

pub use drone::{distance, first_collision, norm, segment_samples, step, DroneState, MotionCommand, Terminal};
pub use fifo::FifoQueue;
pub use grid::{generate_world, Voxel, VoxelGrid, WorldParams, MIN_DIMS};
pub use ray::cast_ray;
pub use sensor::{
    body_to_world, downward_directions, downward_ray_set, forward_directions, forward_ray_set, heading_toward,
    sense, sensor_input_layout, world_to_body, Observation, SensorConfig, SimParams, DOWNWARD_RAYS, FORWARD_RAYS,
    GOAL_FEATURES, MAX_POWER, MIN_FORWARD_POWER, OBS_WIDTH,
};
