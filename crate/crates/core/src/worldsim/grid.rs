use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest world accepted by [`generate_world`].
pub const MIN_DIMS: [usize; 3] = [16, 16, 8];

const WORLD_MAGIC: &str = "NAVIWORLD";
const WORLD_VERSION: &str = "v1";

/// Inclusive range of obstacle footprint edge lengths, in voxels.
const BLOCK_FOOTPRINT: (usize, usize) = (2, 6);

/// Integer voxel coordinate `[x, y, z]`.
pub type Voxel = [usize; 3];

/// Parameters of a procedurally generated world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldParams {
    pub dims: [usize; 3],
    pub resolution: f64,
    pub density: f64,
    pub seed: u64,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self {
            dims: [64, 64, 8],
            resolution: 1.0,
            density: 0.1,
            seed: 1,
        }
    }
}

/// Static occupancy map. The outer shell of voxels is always occupied.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    dims: [usize; 3],
    resolution: f64,
    occupancy: Vec<bool>,
    seed: u64,
    density: f64,
}

impl VoxelGrid {
    /// An enclosed world with nothing but its boundary shell.
    pub fn empty(dims: [usize; 3], resolution: f64) -> Result<Self> {
        if dims.iter().any(|&d| d < 3) {
            return Err(Error::config(format!(
                "grid dims {dims:?} leave no interior"
            )));
        }
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(Error::config(format!("invalid resolution {resolution}")));
        }
        let [nx, ny, nz] = dims;
        let mut occupancy = vec![false; nx * ny * nz];
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    if x == 0 || y == 0 || z == 0 || x == nx - 1 || y == ny - 1 || z == nz - 1 {
                        occupancy[x + nx * (y + ny * z)] = true;
                    }
                }
            }
        }
        Ok(Self {
            dims,
            resolution,
            occupancy,
            seed: 0,
            density: 0.0,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn len(&self) -> usize {
        self.occupancy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupancy.is_empty()
    }

    #[inline]
    pub fn index(&self, [x, y, z]: Voxel) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn in_bounds(&self, v: [i64; 3]) -> bool {
        v.iter()
            .zip(self.dims.iter())
            .all(|(&c, &d)| c >= 0 && (c as usize) < d)
    }

    /// Occupancy of a voxel; anything outside the grid counts as occupied.
    #[inline]
    pub fn is_occupied(&self, v: [i64; 3]) -> bool {
        if !self.in_bounds(v) {
            return true;
        }
        self.occupancy[self.index([v[0] as usize, v[1] as usize, v[2] as usize])]
    }

    /// Voxel containing a point given in meters.
    #[inline]
    pub fn voxel_of(&self, p: [f64; 3]) -> [i64; 3] {
        [
            (p[0] / self.resolution).floor() as i64,
            (p[1] / self.resolution).floor() as i64,
            (p[2] / self.resolution).floor() as i64,
        ]
    }

    #[inline]
    pub fn is_occupied_at(&self, p: [f64; 3]) -> bool {
        self.is_occupied(self.voxel_of(p))
    }

    /// Center of a voxel, in meters.
    pub fn center(&self, v: Voxel) -> [f64; 3] {
        [
            (v[0] as f64 + 0.5) * self.resolution,
            (v[1] as f64 + 0.5) * self.resolution,
            (v[2] as f64 + 0.5) * self.resolution,
        ]
    }

    /// Marks the inclusive box `min..=max` as occupied.
    pub fn fill_box(&mut self, min: Voxel, max: Voxel) {
        for z in min[2]..=max[2].min(self.dims[2] - 1) {
            for y in min[1]..=max[1].min(self.dims[1] - 1) {
                for x in min[0]..=max[0].min(self.dims[0] - 1) {
                    let i = self.index([x, y, z]);
                    self.occupancy[i] = true;
                }
            }
        }
    }

    /// Clears an inclusive box, leaving the boundary shell intact.
    pub fn clear_box(&mut self, min: Voxel, max: Voxel) {
        let [nx, ny, nz] = self.dims;
        for z in min[2].max(1)..=max[2].min(nz - 2) {
            for y in min[1].max(1)..=max[1].min(ny - 2) {
                for x in min[0].max(1)..=max[0].min(nx - 2) {
                    let i = self.index([x, y, z]);
                    self.occupancy[i] = false;
                }
            }
        }
    }

    pub fn is_boundary(&self, [x, y, z]: Voxel) -> bool {
        let [nx, ny, nz] = self.dims;
        x == 0 || y == 0 || z == 0 || x == nx - 1 || y == ny - 1 || z == nz - 1
    }

    /// Fraction of interior voxels that are occupied.
    pub fn interior_occupancy(&self) -> f64 {
        let [nx, ny, nz] = self.dims;
        let mut occupied = 0usize;
        for z in 1..nz - 1 {
            for y in 1..ny - 1 {
                for x in 1..nx - 1 {
                    occupied += self.occupancy[self.index([x, y, z])] as usize;
                }
            }
        }
        occupied as f64 / ((nx - 2) * (ny - 2) * (nz - 2)) as f64
    }

    /// Fraction of interior columns holding at least one occupied voxel.
    pub fn column_density(&self) -> f64 {
        let [nx, ny, nz] = self.dims;
        let mut covered = 0usize;
        for y in 1..ny - 1 {
            for x in 1..nx - 1 {
                if (1..nz - 1).any(|z| self.occupancy[self.index([x, y, z])]) {
                    covered += 1;
                }
            }
        }
        covered as f64 / ((nx - 2) * (ny - 2)) as f64
    }

    pub fn save(&self, path: &Path, comments: &[String]) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        out.write_all(self.to_text(comments).as_bytes())?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_text(std::io::BufReader::new(file)).map_err(|e| match e {
            Error::Config(reason) => Error::load(path, reason),
            other => other,
        })
    }

    /// Text encoding: a `NAVIWORLD v1 nx ny nz resolution` header, optional
    /// `#` comment lines, a `meta` line, then one `value count` run per line
    /// in x-fastest voxel order.
    pub fn to_text(&self, comments: &[String]) -> String {
        let [nx, ny, nz] = self.dims;
        let mut s = format!(
            "{WORLD_MAGIC} {WORLD_VERSION} {nx} {ny} {nz} {}\n",
            self.resolution
        );
        for c in comments {
            let _ = writeln!(s, "# {c}");
        }
        let _ = writeln!(s, "meta seed {} density {}", self.seed, self.density);
        let mut iter = self.occupancy.iter().peekable();
        while let Some(&v) = iter.next() {
            let mut run = 1usize;
            while iter.peek() == Some(&&v) {
                iter.next();
                run += 1;
            }
            let _ = writeln!(s, "{} {run}", v as u8);
        }
        s
    }

    pub fn read_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::config("empty world file"))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 6 || fields[0] != WORLD_MAGIC || fields[1] != WORLD_VERSION {
            return Err(Error::config(format!("bad world header `{header}`")));
        }
        let parse_dim = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::config(format!("bad dimension `{s}`")))
        };
        let dims = [
            parse_dim(fields[2])?,
            parse_dim(fields[3])?,
            parse_dim(fields[4])?,
        ];
        let resolution: f64 = fields[5]
            .parse()
            .map_err(|_| Error::config(format!("bad resolution `{}`", fields[5])))?;
        let mut grid = VoxelGrid::empty(dims, resolution)?;
        let mut filled = 0usize;
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("meta ") {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if let ["seed", seed, "density", density] = parts.as_slice() {
                    grid.seed = seed
                        .parse()
                        .map_err(|_| Error::config(format!("bad seed `{seed}`")))?;
                    grid.density = density
                        .parse()
                        .map_err(|_| Error::config(format!("bad density `{density}`")))?;
                    continue;
                }
                return Err(Error::config(format!("bad meta line `{line}`")));
            }
            let (value, count) = line
                .split_once(' ')
                .ok_or_else(|| Error::config(format!("bad run `{line}`")))?;
            let value = match value {
                "0" => false,
                "1" => true,
                _ => return Err(Error::config(format!("bad run value `{value}`"))),
            };
            let count: usize = count
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("bad run length `{count}`")))?;
            if filled + count > grid.occupancy.len() {
                return Err(Error::config("runs exceed grid size"));
            }
            grid.occupancy[filled..filled + count].fill(value);
            filled += count;
        }
        if filled != grid.occupancy.len() {
            return Err(Error::config(format!(
                "runs cover {filled} of {} voxels",
                grid.occupancy.len()
            )));
        }
        let [nx, ny, nz] = dims;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    if grid.is_boundary([x, y, z]) && !grid.occupancy[grid.index([x, y, z])] {
                        return Err(Error::config("boundary shell is not closed"));
                    }
                }
            }
        }
        Ok(grid)
    }
}

/// Builds an enclosed world filled with axis-aligned blocks standing on the
/// floor until `density` of the interior columns are covered.
pub fn generate_world(params: &WorldParams) -> Result<VoxelGrid> {
    let WorldParams {
        dims,
        resolution,
        density,
        seed,
    } = *params;
    if dims.iter().zip(MIN_DIMS.iter()).any(|(d, m)| d < m) {
        return Err(Error::config(format!(
            "world dims {dims:?} below minimum {MIN_DIMS:?}"
        )));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::config(format!("density {density} outside [0, 1]")));
    }
    let mut grid = VoxelGrid::empty(dims, resolution)?;
    grid.seed = seed;
    grid.density = density;

    let [nx, ny, nz] = dims;
    let (ix, iy) = (nx - 2, ny - 2);
    let total = ix * iy;
    let target = (density * total as f64).round() as usize;
    let mut covered = vec![false; total];
    let mut n_covered = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_height = nz - 2;
    while n_covered < target {
        let w = rng.random_range(BLOCK_FOOTPRINT.0..=BLOCK_FOOTPRINT.1).min(ix);
        let d = rng.random_range(BLOCK_FOOTPRINT.0..=BLOCK_FOOTPRINT.1).min(iy);
        let h = rng.random_range(2..=max_height);
        let x0 = rng.random_range(1..=nx - 1 - w);
        let y0 = rng.random_range(1..=ny - 1 - d);
        for y in y0..y0 + d {
            for x in x0..x0 + w {
                if n_covered >= target {
                    break;
                }
                let c = (x - 1) + ix * (y - 1);
                if !covered[c] {
                    covered[c] = true;
                    n_covered += 1;
                }
                for z in 1..=h {
                    let i = grid.index([x, y, z]);
                    grid.occupancy[i] = true;
                }
            }
        }
    }
    Ok(grid)
}
