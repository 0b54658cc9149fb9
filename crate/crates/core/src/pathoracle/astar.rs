use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::graph::{MapGraph, MoveCost};
use crate::error::{Error, Result};
use crate::worldsim::Voxel;

/// Spatial region a path was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    Train,
    Validation,
    Test,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Train, Region::Validation, Region::Test];

    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Train => "train",
            Region::Validation => "validation",
            Region::Test => "test",
        }
    }

    pub fn index(&self) -> usize {
        *self as usize
    }
}

impl std::str::FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Region::Train),
            "validation" | "val" => Ok(Region::Validation),
            "test" => Ok(Region::Test),
            _ => Err(Error::config(format!("unknown region `{s}`"))),
        }
    }
}

/// A length-optimal path between two graph vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalPath {
    pub waypoints: Vec<Voxel>,
    pub cost: MoveCost,
    /// Meters.
    pub length: f64,
    pub region: Option<Region>,
}

impl OptimalPath {
    pub fn from_waypoints(waypoints: Vec<Voxel>, resolution: f64, region: Option<Region>) -> Self {
        let mut cost = MoveCost::default();
        for w in waypoints.windows(2) {
            let moved = (0..3).filter(|&k| w[0][k] != w[1][k]).count();
            cost = cost + if moved > 1 { MoveCost::DIAGONAL } else { MoveCost::STRAIGHT };
        }
        Self {
            waypoints,
            cost,
            length: cost.units() * resolution,
            region,
        }
    }

    pub fn start(&self) -> Voxel {
        self.waypoints[0]
    }

    pub fn goal(&self) -> Voxel {
        self.waypoints[self.waypoints.len() - 1]
    }

    /// Number of moves.
    pub fn steps(&self) -> usize {
        self.waypoints.len() - 1
    }
}

/// Search effort of one query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SearchStats {
    /// Vertices removed from the open set and expanded.
    pub expanded: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Open {
    f: f64,
    h: f64,
    voxel: Voxel,
    id: usize,
}

impl Eq for Open {}

impl Ord for Open {
    // Reversed so that `BinaryHeap` pops the smallest (f, h, voxel).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.voxel.cmp(&self.voxel))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn euclid(a: Voxel, b: Voxel) -> f64 {
    let d = |k: usize| a[k] as f64 - b[k] as f64;
    (d(0) * d(0) + d(1) * d(1) + d(2) * d(2)).sqrt()
}

/// Shortest path by A* with the Euclidean heuristic.
pub fn astar(graph: &MapGraph, start: Voxel, goal: Voxel) -> Result<OptimalPath> {
    astar_with_stats(graph, start, goal).map(|(p, _)| p)
}

/// As [`astar`], also reporting how many vertices were expanded. Ties on
/// `f` are broken by smaller `h`, then by lexicographic vertex order.
pub fn astar_with_stats(graph: &MapGraph, start: Voxel, goal: Voxel) -> Result<(OptimalPath, SearchStats)> {
    let no_path = || Error::NoPath { start, goal };
    let s = graph.id_of(start).ok_or_else(no_path)?;
    let t = graph.id_of(goal).ok_or_else(no_path)?;

    let n = graph.vertex_count();
    let mut best: Vec<Option<MoveCost>> = vec![None; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let mut stats = SearchStats::default();

    best[s] = Some(MoveCost::default());
    let h0 = euclid(start, goal);
    open.push(Open {
        f: h0,
        h: h0,
        voxel: start,
        id: s,
    });
    while let Some(Open { id, .. }) = open.pop() {
        if closed[id] {
            continue;
        }
        closed[id] = true;
        stats.expanded += 1;
        let g = best[id].expect("open vertices carry a cost");
        if id == t {
            let mut waypoints = vec![graph.vertex(t)];
            let mut v = t;
            while v != s {
                v = parent[v];
                waypoints.push(graph.vertex(v));
            }
            waypoints.reverse();
            let path = OptimalPath {
                waypoints,
                cost: g,
                length: g.units() * graph.resolution(),
                region: None,
            };
            return Ok((path, stats));
        }
        for (m, step) in graph.neighbors(id) {
            if closed[m] {
                continue;
            }
            let cand = g + step;
            if best[m].is_none_or(|b| cand.units() < b.units()) {
                best[m] = Some(cand);
                parent[m] = id;
                let voxel = graph.vertex(m);
                let h = euclid(voxel, goal);
                open.push(Open {
                    f: cand.units() + h,
                    h,
                    voxel,
                    id: m,
                });
            }
        }
    }
    Err(no_path())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathoracle::build_graph;
    use crate::worldsim::VoxelGrid;

    #[test]
    fn straight_line_on_empty_plane() {
        let grid = VoxelGrid::empty([12, 12, 3], 1.0).unwrap();
        let g = build_graph(&grid, true);
        let p = astar(&g, [1, 1, 1], [6, 1, 1]).unwrap();
        assert_eq!(p.length, 5.0);
        assert_eq!(p.steps(), 5);
        assert_eq!(p.waypoints.first(), Some(&[1, 1, 1]));
        assert_eq!(p.waypoints.last(), Some(&[6, 1, 1]));
    }

    #[test]
    fn diagonal_costs_root_two() {
        let grid = VoxelGrid::empty([12, 12, 3], 1.0).unwrap();
        let g = build_graph(&grid, true);
        let p = astar(&g, [1, 1, 1], [4, 4, 1]).unwrap();
        assert_eq!(p.cost, MoveCost { straight: 0, diagonal: 3 });
        assert!((p.length - 3.0 * std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn goal_in_obstacle_has_no_path() {
        let mut grid = VoxelGrid::empty([12, 12, 3], 1.0).unwrap();
        grid.fill_box([5, 5, 1], [5, 5, 1]);
        let g = build_graph(&grid, true);
        assert!(matches!(astar(&g, [1, 1, 1], [5, 5, 1]), Err(Error::NoPath { .. })));
    }

    #[test]
    fn walled_off_goal_has_no_path() {
        let mut grid = VoxelGrid::empty([12, 12, 3], 1.0).unwrap();
        grid.fill_box([6, 0, 0], [6, 11, 2]);
        let g = build_graph(&grid, true);
        assert!(astar(&g, [1, 1, 1], [9, 9, 1]).is_err());
    }

    #[test]
    fn identical_queries_give_identical_paths() {
        let mut grid = VoxelGrid::empty([16, 16, 3], 1.0).unwrap();
        grid.fill_box([7, 3, 1], [8, 12, 1]);
        let g = build_graph(&grid, true);
        let a = astar(&g, [2, 8, 1], [13, 8, 1]).unwrap();
        let b = astar(&g, [2, 8, 1], [13, 8, 1]).unwrap();
        assert_eq!(a, b);
        assert_eq!(OptimalPath::from_waypoints(a.waypoints.clone(), 1.0, None), a);
    }
}
