use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::astar::{astar, OptimalPath, Region};
use super::graph::{build_graph_in, MapGraph};
use crate::error::{Error, Result};
use crate::worldsim::{Voxel, VoxelGrid};

/// Height index at which planar (vertically locked) tasks are flown. Every
/// generated obstacle reaches this level.
pub const FLIGHT_LEVEL: usize = 2;

/// Disjoint x-slabs assigned to the train, validation and test sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMap {
    slabs: [Range<usize>; 3],
}

impl RegionMap {
    pub fn slab(&self, region: Region) -> Range<usize> {
        self.slabs[region.index()].clone()
    }

    pub fn region_of(&self, x: usize) -> Option<Region> {
        Region::ALL.into_iter().find(|r| self.slabs[r.index()].contains(&x))
    }
}

/// Longest straight distance between two interior voxel centers of a slab.
fn slab_span(grid: &VoxelGrid, slab: &Range<usize>) -> f64 {
    let [nx, ny, _] = grid.dims();
    let lo = slab.start.max(1);
    let hi = slab.end.min(nx - 1);
    if hi <= lo {
        return 0.0;
    }
    let wx = (hi - lo - 1) as f64;
    let wy = (ny - 3) as f64;
    (wx * wx + wy * wy).sqrt() * grid.resolution()
}

/// Splits the grid along x into slabs with the given train, validation and
/// test fractions. Each region in `required` must be able to host two
/// points `min_distance` meters apart.
pub fn partition_regions(
    grid: &VoxelGrid,
    fractions: [f64; 3],
    required: &[Region],
    min_distance: f64,
) -> Result<RegionMap> {
    if fractions.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
        return Err(Error::config(format!("region fractions {fractions:?} must be non-negative")));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::config(format!("region fractions {fractions:?} sum to {total}, not 1")));
    }
    let nx = grid.dims()[0];
    let b1 = ((fractions[0] * nx as f64).round() as usize).min(nx);
    let b2 = (((fractions[0] + fractions[1]) * nx as f64).round() as usize).clamp(b1, nx);
    let map = RegionMap {
        slabs: [0..b1, b1..b2, b2..nx],
    };
    for &r in required {
        let span = slab_span(grid, &map.slabs[r.index()]);
        if span < min_distance {
            return Err(Error::config(format!(
                "{} region {:?} spans {span:.2} m, below the {min_distance} m task distance",
                r.as_str(),
                map.slabs[r.index()]
            )));
        }
    }
    Ok(map)
}

/// Draws spawn/goal tasks inside one region and solves them with A*.
pub struct TaskSampler<'a> {
    grid: &'a VoxelGrid,
    graph: MapGraph,
    region: Region,
    spawn_ids: Vec<usize>,
    flight_level: Option<usize>,
}

impl<'a> TaskSampler<'a> {
    /// `flight_level` pins spawn and goal to one height; `None` allows any.
    pub fn new(
        grid: &'a VoxelGrid,
        map: &RegionMap,
        region: Region,
        vertical_locked: bool,
        flight_level: Option<usize>,
    ) -> Result<Self> {
        let graph = build_graph_in(grid, vertical_locked, map.slab(region));
        let spawn_ids: Vec<usize> = (0..graph.vertex_count())
            .filter(|&i| flight_level.is_none_or(|z| graph.vertex(i)[2] == z))
            .collect();
        if spawn_ids.is_empty() {
            return Err(Error::config(format!(
                "{} region has no free voxel at the flight level",
                region.as_str()
            )));
        }
        Ok(Self {
            grid,
            graph,
            region,
            spawn_ids,
            flight_level,
        })
    }

    pub fn graph(&self) -> &MapGraph {
        &self.graph
    }

    /// One task whose straight spawn-goal distance lies in `[lo, hi]`
    /// meters, or `None` if `attempts` draws all fail.
    pub fn sample<R: Rng>(&self, rng: &mut R, lo: f64, hi: f64, attempts: usize) -> Option<OptimalPath> {
        let res = self.grid.resolution();
        let nz = self.grid.dims()[2];
        for _ in 0..attempts {
            let spawn = self.graph.vertex(self.spawn_ids[rng.random_range(0..self.spawn_ids.len())]);
            let d = if hi > lo { rng.random_range(lo..=hi) } else { lo } / res;
            let gz = match self.flight_level {
                Some(z) => z,
                None => rng.random_range(1..nz - 1),
            };
            let dz = gz as f64 - spawn[2] as f64;
            if dz.abs() > d {
                continue;
            }
            let horiz = (d * d - dz * dz).sqrt();
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            let gx = (spawn[0] as f64 + horiz * theta.cos()).round();
            let gy = (spawn[1] as f64 + horiz * theta.sin()).round();
            if gx < 0.0 || gy < 0.0 {
                continue;
            }
            let goal: Voxel = [gx as usize, gy as usize, gz];
            if goal == spawn || !self.graph.contains(goal) {
                continue;
            }
            let dist = crate::worldsim::distance(self.grid.center(spawn), self.grid.center(goal));
            if dist < lo - 1e-9 || dist > hi + 1e-9 {
                continue;
            }
            if let Ok(mut path) = astar(&self.graph, spawn, goal) {
                path.region = Some(self.region);
                return Some(path);
            }
        }
        None
    }
}

/// `count` tasks from one region with spawn-goal distance in `distance`
/// meters, deterministic in `seed`.
pub fn sample_paths(
    grid: &VoxelGrid,
    map: &RegionMap,
    region: Region,
    vertical_locked: bool,
    flight_level: Option<usize>,
    distance: (f64, f64),
    count: usize,
    seed: u64,
) -> Result<Vec<OptimalPath>> {
    let sampler = TaskSampler::new(grid, map, region, vertical_locked, flight_level)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let path = sampler.sample(&mut rng, distance.0, distance.1, 2000).ok_or_else(|| {
            Error::config(format!(
                "could not place a {:?} m task in the {} region",
                distance,
                region.as_str()
            ))
        })?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worldsim::{generate_world, WorldParams};

    #[test]
    fn sixty_twenty_twenty_on_hundred() {
        let grid = VoxelGrid::empty([100, 20, 8], 1.0).unwrap();
        let map = partition_regions(&grid, [0.6, 0.2, 0.2], &Region::ALL, 5.0).unwrap();
        assert_eq!(map.slab(Region::Train), 0..60);
        assert_eq!(map.slab(Region::Validation), 60..80);
        assert_eq!(map.slab(Region::Test), 80..100);
        assert_eq!(map.region_of(79), Some(Region::Validation));
    }

    #[test]
    fn empty_required_region_is_rejected() {
        let grid = VoxelGrid::empty([100, 20, 8], 1.0).unwrap();
        assert!(partition_regions(&grid, [1.0, 0.0, 0.0], &[Region::Train], 5.0).is_ok());
        assert!(partition_regions(&grid, [1.0, 0.0, 0.0], &[Region::Validation], 5.0).is_err());
        assert!(partition_regions(&grid, [0.5, 0.2, 0.2], &[], 0.0).is_err());
        assert!(partition_regions(&grid, [0.6, 0.2, 0.2], &[Region::Test], 500.0).is_err());
    }

    #[test]
    fn sampled_paths_stay_in_their_slab() {
        let grid = generate_world(&WorldParams {
            seed: 3,
            ..WorldParams::default()
        })
        .unwrap();
        let map = partition_regions(&grid, [0.6, 0.2, 0.2], &Region::ALL, 10.0).unwrap();
        for region in Region::ALL {
            let paths = sample_paths(&grid, &map, region, true, Some(FLIGHT_LEVEL), (8.0, 12.0), 5, 11).unwrap();
            let slab = map.slab(region);
            for p in &paths {
                assert_eq!(p.region, Some(region));
                assert!(p.waypoints.iter().all(|w| slab.contains(&w[0]) && w[2] == FLIGHT_LEVEL));
                let d = crate::worldsim::distance(grid.center(p.start()), grid.center(p.goal()));
                assert!((8.0..=12.0).contains(&d));
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let grid = generate_world(&WorldParams::default()).unwrap();
        let map = partition_regions(&grid, [0.6, 0.2, 0.2], &Region::ALL, 10.0).unwrap();
        let a = sample_paths(&grid, &map, Region::Train, false, None, (5.0, 15.0), 4, 2).unwrap();
        let b = sample_paths(&grid, &map, Region::Train, false, None, (5.0, 15.0), 4, 2).unwrap();
        assert_eq!(a, b);
    }
}
