use std::cmp::Reverse;
use std::collections::BinaryHeap;

use navislim::pathoracle::{astar, astar_with_stats, build_graph, label_dataset, partition_regions, sample_paths, Region};
use navislim::worldsim::{generate_world, step, DroneState, MotionCommand, SimParams, Terminal, Voxel, VoxelGrid, WorldParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Move costs as (straight, diagonal) counts, compared by length.
#[derive(Clone, Copy, PartialEq, Debug)]
struct Cost(u32, u32);

impl Cost {
    fn len(self) -> f64 {
        self.0 as f64 + self.1 as f64 * std::f64::consts::SQRT_2
    }
}

fn free(grid: &VoxelGrid, v: [i64; 3]) -> bool {
    grid.in_bounds(v) && !grid.is_occupied(v)
}

/// Uniform-cost search over voxel centers with its own move model. Returns
/// the optimal cost and the number of settled vertices.
fn dijkstra(grid: &VoxelGrid, locked: bool, start: Voxel, goal: Voxel) -> Option<(Cost, usize)> {
    let [nx, ny, nz] = grid.dims();
    let idx = |v: [i64; 3]| (v[0] as usize) + nx * ((v[1] as usize) + ny * v[2] as usize);
    let mut best: Vec<Option<Cost>> = vec![None; nx * ny * nz];
    let mut done = vec![false; nx * ny * nz];
    let s = start.map(|c| c as i64);
    let t = goal.map(|c| c as i64);
    if !free(grid, s) || !free(grid, t) {
        return None;
    }
    let key = |c: Cost| (c.len() * 1e9).round() as u64;
    let mut heap = BinaryHeap::new();
    best[idx(s)] = Some(Cost(0, 0));
    heap.push(Reverse((0u64, s)));
    let mut settled = 0;
    while let Some(Reverse((_, v))) = heap.pop() {
        if done[idx(v)] {
            continue;
        }
        done[idx(v)] = true;
        settled += 1;
        let g = best[idx(v)].unwrap();
        if v == t {
            return Some((g, settled));
        }
        let mut moves: Vec<([i64; 3], bool)> = Vec::new();
        for dx in -1..=1i64 {
            for dy in -1..=1i64 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let diag = dx != 0 && dy != 0;
                if diag && !(free(grid, [v[0] + dx, v[1], v[2]]) && free(grid, [v[0], v[1] + dy, v[2]])) {
                    continue;
                }
                moves.push(([v[0] + dx, v[1] + dy, v[2]], diag));
            }
        }
        if !locked {
            moves.push(([v[0], v[1], v[2] + 1], false));
            moves.push(([v[0], v[1], v[2] - 1], false));
        }
        for (w, diag) in moves {
            if !free(grid, w) || done[idx(w)] {
                continue;
            }
            let c = if diag { Cost(g.0, g.1 + 1) } else { Cost(g.0 + 1, g.1) };
            if best[idx(w)].is_none_or(|b| c.len() < b.len() - 1e-12) {
                best[idx(w)] = Some(c);
                heap.push(Reverse((key(c), w)));
            }
        }
    }
    None
}

fn random_free(grid: &VoxelGrid, rng: &mut ChaCha8Rng, z: Option<usize>) -> Voxel {
    let [nx, ny, nz] = grid.dims();
    loop {
        let v = [
            rng.random_range(1..nx - 1),
            rng.random_range(1..ny - 1),
            z.unwrap_or_else(|| rng.random_range(1..nz - 1)),
        ];
        if !grid.is_occupied(v.map(|c| c as i64)) {
            return v;
        }
    }
}

#[test]
fn astar_matches_uniform_cost_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    for world in 0..20u64 {
        let locked = world % 2 == 0;
        let grid = generate_world(&WorldParams {
            dims: [24, 24, 8],
            density: 0.1 + 0.02 * (world % 5) as f64,
            seed: world,
            ..WorldParams::default()
        })
        .unwrap();
        let graph = build_graph(&grid, locked);
        for _ in 0..10 {
            let z = locked.then_some(2);
            let (a, b) = (random_free(&grid, &mut rng, z), random_free(&grid, &mut rng, z));
            let oracle = dijkstra(&grid, locked, a, b);
            match astar_with_stats(&graph, a, b) {
                Ok((path, stats)) => {
                    let (cost, settled) = oracle.expect("oracle finds a path too");
                    assert_eq!((path.cost.straight, path.cost.diagonal), (cost.0, cost.1));
                    assert!(stats.expanded <= settled, "{} > {}", stats.expanded, settled);
                }
                Err(_) => assert!(oracle.is_none()),
            }
            checked += 1;
        }
    }
    assert_eq!(checked, 200);
}

#[test]
fn optimal_paths_fly_without_collision() {
    let grid = generate_world(&WorldParams { density: 0.15, seed: 8, ..WorldParams::default() }).unwrap();
    let map = partition_regions(&grid, [0.6, 0.2, 0.2], &Region::ALL, 10.0).unwrap();
    for locked in [true, false] {
        let level = locked.then_some(2);
        let paths = sample_paths(&grid, &map, Region::Train, locked, level, (5.0, 30.0), 30, 3).unwrap();
        for p in &paths {
            let goal = grid.center(p.goal());
            let mut s = DroneState::spawn(grid.center(p.start()), goal, locked);
            for w in p.waypoints.windows(2) {
                let (a, b) = (grid.center(w[0]), grid.center(w[1]));
                s = step(&grid, &s, &MotionCommand::new([b[0] - a[0], b[1] - a[1], b[2] - a[2]]), 2.0, 0.0);
                assert_ne!(s.terminal, Terminal::Collided);
            }
            assert_eq!(s.position, goal);
        }
    }
}

#[test]
fn a_full_wall_splits_the_plane() {
    let mut grid = VoxelGrid::empty([20, 20, 6], 1.0).unwrap();
    grid.fill_box([10, 0, 0], [10, 19, 5]);
    let graph = build_graph(&grid, true);
    assert_eq!(graph.component_count(), 2 * 4);
    assert!(astar(&graph, [3, 3, 2], [15, 3, 2]).is_err());
    assert!(astar(&graph, [3, 3, 2], [8, 17, 2]).is_ok());
    let plane = build_graph(&VoxelGrid::empty([20, 20, 3], 1.0).unwrap(), true);
    assert_eq!(plane.component_count(), 1);
}

#[test]
fn labels_follow_the_waypoints() {
    let grid = generate_world(&WorldParams { seed: 2, ..WorldParams::default() }).unwrap();
    let map = partition_regions(&grid, [0.6, 0.2, 0.2], &Region::ALL, 10.0).unwrap();
    let paths = sample_paths(&grid, &map, Region::Validation, true, Some(2), (4.0, 12.0), 10, 9).unwrap();
    let sim = SimParams::default();
    let data = label_dataset(&grid, &paths, &sim).unwrap();
    assert_eq!(data.len(), paths.iter().map(|p| p.steps()).sum::<usize>());
    let mut k = 0;
    for p in &paths {
        for w in p.waypoints.windows(2) {
            let (a, b) = (grid.center(w[0]), grid.center(w[1]));
            let t = data.samples[k].target;
            for d in 0..3 {
                assert_eq!(t[d], (b[d] - a[d]) as f32);
            }
            k += 1;
        }
    }
}
