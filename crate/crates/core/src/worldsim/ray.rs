use super::grid::VoxelGrid;
use crate::error::{Error, Result};

/// Distance in meters from `origin` along `direction` to the first occupied
/// voxel, found by voxel-traversal marching. Returns `max_range` when nothing
/// is hit within range.
pub fn cast_ray(grid: &VoxelGrid, origin: [f64; 3], direction: [f64; 3], max_range: f64) -> Result<f64> {
    let norm = (direction[0].powi(2) + direction[1].powi(2) + direction[2].powi(2)).sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Sensor(format!("degenerate ray direction {direction:?}")));
    }
    let dir = [direction[0] / norm, direction[1] / norm, direction[2] / norm];
    let res = grid.resolution();
    let mut cell = grid.voxel_of(origin);
    if grid.is_occupied(cell) {
        return Err(Error::Sensor(format!("ray origin {origin:?} is inside an occupied voxel")));
    }

    let mut step = [0i64; 3];
    let mut t_max = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    for a in 0..3 {
        if dir[a] > 0.0 {
            step[a] = 1;
            let boundary = (cell[a] + 1) as f64 * res;
            t_max[a] = (boundary - origin[a]) / dir[a];
            t_delta[a] = res / dir[a];
        } else if dir[a] < 0.0 {
            step[a] = -1;
            let boundary = cell[a] as f64 * res;
            t_max[a] = (boundary - origin[a]) / dir[a];
            t_delta[a] = -res / dir[a];
        }
    }

    loop {
        // Axis whose boundary is crossed next; ties resolve to the lowest axis.
        let mut axis = 0;
        if t_max[1] < t_max[axis] {
            axis = 1;
        }
        if t_max[2] < t_max[axis] {
            axis = 2;
        }
        let t = t_max[axis];
        if t > max_range {
            return Ok(max_range);
        }
        cell[axis] += step[axis];
        t_max[axis] += t_delta[axis];
        if grid.is_occupied(cell) {
            return Ok(t.max(0.0));
        }
    }
}
