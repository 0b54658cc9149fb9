use std::ops::Range;

use crate::worldsim::{first_collision, Voxel, VoxelGrid};

/// Length of a move sequence as counts of axis-aligned and diagonal unit
/// moves, so that costs compare exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MoveCost {
    pub straight: u32,
    pub diagonal: u32,
}

impl MoveCost {
    pub const STRAIGHT: MoveCost = MoveCost {
        straight: 1,
        diagonal: 0,
    };
    pub const DIAGONAL: MoveCost = MoveCost {
        straight: 0,
        diagonal: 1,
    };

    /// Length in voxel units.
    pub fn units(&self) -> f64 {
        self.straight as f64 + self.diagonal as f64 * std::f64::consts::SQRT_2
    }

    pub fn steps(&self) -> usize {
        (self.straight + self.diagonal) as usize
    }
}

impl std::ops::Add for MoveCost {
    type Output = MoveCost;

    fn add(self, rhs: MoveCost) -> MoveCost {
        MoveCost {
            straight: self.straight + rhs.straight,
            diagonal: self.diagonal + rhs.diagonal,
        }
    }
}

/// Motion graph over free voxel centers.
///
/// Horizontal moves are 8-connected; diagonal moves additionally require both
/// side-adjacent voxels to be free, so no move clips an obstacle corner.
/// Vertical moves are added when the graph is not vertically locked.
#[derive(Debug, Clone)]
pub struct MapGraph {
    dims: [usize; 3],
    resolution: f64,
    vertical_locked: bool,
    x_range: Range<usize>,
    vertices: Vec<Voxel>,
    vertex_id: Vec<u32>,
    adjacency: Vec<Vec<(u32, MoveCost)>>,
}

const NO_VERTEX: u32 = u32::MAX;

const HORIZONTAL_MOVES: [(i64, i64); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

impl MapGraph {
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn vertical_locked(&self) -> bool {
        self.vertical_locked
    }

    /// Columns `x` admitted as vertices.
    pub fn x_range(&self) -> Range<usize> {
        self.x_range.clone()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn vertices(&self) -> &[Voxel] {
        &self.vertices
    }

    pub fn vertex(&self, id: usize) -> Voxel {
        self.vertices[id]
    }

    pub fn id_of(&self, v: Voxel) -> Option<usize> {
        if v.iter().zip(self.dims.iter()).any(|(&c, &d)| c >= d) {
            return None;
        }
        let i = v[0] + self.dims[0] * (v[1] + self.dims[1] * v[2]);
        match self.vertex_id[i] {
            NO_VERTEX => None,
            id => Some(id as usize),
        }
    }

    pub fn contains(&self, v: Voxel) -> bool {
        self.id_of(v).is_some()
    }

    /// Neighbors of vertex `id` with the cost of each move.
    pub fn neighbors(&self, id: usize) -> impl Iterator<Item = (usize, MoveCost)> + '_ {
        self.adjacency[id].iter().map(|&(n, c)| (n as usize, c))
    }

    /// Number of connected components.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.vertices.len()];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..self.vertices.len() {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for (n, _) in self.neighbors(v) {
                    if !seen[n] {
                        seen[n] = true;
                        stack.push(n);
                    }
                }
            }
        }
        count
    }
}

/// Builds the motion graph of the whole grid.
pub fn build_graph(grid: &VoxelGrid, vertical_locked: bool) -> MapGraph {
    build_graph_in(grid, vertical_locked, 0..grid.dims()[0])
}

/// Builds the motion graph restricted to voxels with `x` in `x_range`.
pub fn build_graph_in(grid: &VoxelGrid, vertical_locked: bool, x_range: Range<usize>) -> MapGraph {
    let dims = grid.dims();
    let [nx, ny, nz] = dims;
    let admitted = |x: i64, y: i64, z: i64| {
        x >= x_range.start as i64 && x < x_range.end as i64 && !grid.is_occupied([x, y, z])
    };

    let mut vertex_id = vec![NO_VERTEX; nx * ny * nz];
    let mut vertices = Vec::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in x_range.start..x_range.end.min(nx) {
                if admitted(x as i64, y as i64, z as i64) {
                    vertex_id[grid.index([x, y, z])] = vertices.len() as u32;
                    vertices.push([x, y, z]);
                }
            }
        }
    }

    let mut adjacency = vec![Vec::new(); vertices.len()];
    for (id, &[x, y, z]) in vertices.iter().enumerate() {
        let (xi, yi, zi) = (x as i64, y as i64, z as i64);
        let mut link = |n: [i64; 3], cost: MoveCost| {
            let nid = vertex_id[grid.index([n[0] as usize, n[1] as usize, n[2] as usize])];
            let from = grid.center([x, y, z]);
            let to = grid.center([n[0] as usize, n[1] as usize, n[2] as usize]);
            if first_collision(grid, from, to).is_none() {
                adjacency[id].push((nid, cost));
            }
        };
        for (dx, dy) in HORIZONTAL_MOVES {
            let (nxi, nyi) = (xi + dx, yi + dy);
            if !admitted(nxi, nyi, zi) {
                continue;
            }
            if dx != 0 && dy != 0 {
                if !admitted(xi + dx, yi, zi) || !admitted(xi, yi + dy, zi) {
                    continue;
                }
                link([nxi, nyi, zi], MoveCost::DIAGONAL);
            } else {
                link([nxi, nyi, zi], MoveCost::STRAIGHT);
            }
        }
        if !vertical_locked {
            for dz in [-1, 1] {
                if admitted(xi, yi, zi + dz) {
                    link([xi, yi, zi + dz], MoveCost::STRAIGHT);
                }
            }
        }
    }

    MapGraph {
        dims,
        resolution: grid.resolution(),
        vertical_locked,
        x_range,
        vertices,
        vertex_id,
        adjacency,
    }
}
