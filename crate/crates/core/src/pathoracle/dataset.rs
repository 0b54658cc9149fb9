use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use super::astar::{OptimalPath, Region};
use crate::error::{Error, Result};
use crate::worldsim::{sense, DroneState, FifoQueue, MotionCommand, SensorConfig, SimParams, Voxel, VoxelGrid, OBS_WIDTH};

const DATASET_MAGIC: &str = "NAVISLIM-D v1";

/// One supervised example: the FIFO at a waypoint and the optimal move from
/// it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    /// Flattened FIFO, newest observation first, sensed at maximum power.
    pub fifo: Vec<f32>,
    /// Displacement to the next waypoint, meters, world frame.
    pub target: [f32; 3],
    /// Yaw of the sensing frame the FIFO was acquired in.
    pub heading: f32,
}

/// Labeled samples plus the layout they were recorded with.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub obs_width: usize,
    pub fifo_depth: usize,
    pub max_step: f64,
    pub samples: Vec<LabeledSample>,
}

impl Dataset {
    pub fn input_width(&self) -> usize {
        self.obs_width * self.fifo_depth
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn save(&self, path: &Path, comments: &[String]) -> Result<()> {
        std::fs::write(path, self.encode(comments))?;
        Ok(())
    }

    pub fn encode(&self, comments: &[String]) -> Vec<u8> {
        let mut head = format!("{DATASET_MAGIC}\n");
        for c in comments {
            let _ = writeln!(head, "# {c}");
        }
        let SensorConfig { p_f, p_d } = SensorConfig::MAX;
        let _ = writeln!(
            head,
            "layout obs_width={} fifo={} p_f={p_f} p_d={p_d} max_step={} samples={}",
            self.obs_width,
            self.fifo_depth,
            self.max_step,
            self.samples.len()
        );
        let mut out = head.into_bytes();
        for s in &self.samples {
            for v in s.fifo.iter().chain(s.target.iter()).chain(std::iter::once(&s.heading)) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::decode(&bytes).map_err(|reason| Error::load(path, reason))
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, String> {
        let mut pos = 0usize;
        let mut next_line = || -> Result<&str, String> {
            let end = bytes[pos..]
                .iter()
                .position(|&b| b == b'\n')
                .ok_or("truncated header")?;
            let line = std::str::from_utf8(&bytes[pos..pos + end]).map_err(|e| e.to_string())?;
            pos += end + 1;
            Ok(line)
        };
        if next_line()? != DATASET_MAGIC {
            return Err("not a dataset file".into());
        }
        let layout = loop {
            let line = next_line()?;
            if !line.starts_with('#') {
                break line.to_string();
            }
        };
        let fields = layout
            .strip_prefix("layout ")
            .ok_or_else(|| format!("bad layout line `{layout}`"))?;
        let get = |key: &str| -> Result<String, String> {
            fields
                .split_whitespace()
                .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
                .map(str::to_string)
                .ok_or_else(|| format!("layout is missing `{key}`"))
        };
        let num = |s: String| s.parse::<usize>().map_err(|e| e.to_string());
        let obs_width = num(get("obs_width")?)?;
        let fifo_depth = num(get("fifo")?)?;
        let count = num(get("samples")?)?;
        let max_step: f64 = get("max_step")?.parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
        let (p_f, p_d) = (num(get("p_f")?)?, num(get("p_d")?)?);
        let max = SensorConfig::MAX;
        if (p_f, p_d) != (max.p_f as usize, max.p_d as usize) {
            return Err(format!("dataset sensed at power ({p_f}, {p_d}), expected maximum"));
        }

        let record = obs_width * fifo_depth + 4;
        let body = &bytes[pos..];
        if body.len() != count * record * 4 {
            return Err(format!(
                "expected {} bytes of records, found {}",
                count * record * 4,
                body.len()
            ));
        }
        let floats: Vec<f32> = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let w = obs_width * fifo_depth;
        let samples = floats
            .chunks_exact(record)
            .map(|r| LabeledSample {
                fifo: r[..w].to_vec(),
                target: [r[w], r[w + 1], r[w + 2]],
                heading: r[w + 3],
            })
            .collect();
        Ok(Self {
            obs_width,
            fifo_depth,
            max_step,
            samples,
        })
    }
}

/// Replays each path from voxel center to voxel center, sensing at maximum
/// power before every move. Yields one sample per move.
pub fn label_dataset(grid: &VoxelGrid, paths: &[OptimalPath], sim: &SimParams) -> Result<Dataset> {
    let mut samples = Vec::new();
    for path in paths {
        let goal = grid.center(path.goal());
        let mut fifo = FifoQueue::new(sim.fifo_depth, OBS_WIDTH);
        let mut last = MotionCommand::zero();
        for w in path.waypoints.windows(2) {
            let here = grid.center(w[0]);
            let next = grid.center(w[1]);
            let state = DroneState::spawn(here, goal, false);
            let obs = sense(grid, &state, SensorConfig::MAX, &last, sim)?;
            fifo.push(obs.to_vector())?;
            let delta = [next[0] - here[0], next[1] - here[1], next[2] - here[2]];
            samples.push(LabeledSample {
                fifo: fifo.flatten(),
                target: delta.map(|d| d as f32),
                heading: obs.heading as f32,
            });
            last = MotionCommand::new(delta);
        }
    }
    Ok(Dataset {
        obs_width: OBS_WIDTH,
        fifo_depth: sim.fifo_depth,
        max_step: sim.max_step,
        samples,
    })
}

/// Plain-text path list: `#` comments, then one `x y z` voxel triple per
/// line, with paths separated by blank lines.
pub fn encode_paths(paths: &[OptimalPath], comments: &[String]) -> String {
    let mut s = String::new();
    for c in comments {
        let _ = writeln!(s, "# {c}");
    }
    for (i, p) in paths.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        for w in &p.waypoints {
            let _ = writeln!(s, "{} {} {}", w[0], w[1], w[2]);
        }
    }
    s
}

pub fn save_paths(path: &Path, paths: &[OptimalPath], comments: &[String]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(encode_paths(paths, comments).as_bytes())?;
    f.flush()?;
    Ok(())
}

pub fn decode_paths(text: &str, resolution: f64, region: Option<Region>) -> Result<Vec<OptimalPath>, String> {
    let mut paths = Vec::new();
    let mut current: Vec<Voxel> = Vec::new();
    let mut flush = |current: &mut Vec<Voxel>| {
        if !current.is_empty() {
            paths.push(OptimalPath::from_waypoints(std::mem::take(current), resolution, region));
        }
    };
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            flush(&mut current);
            continue;
        }
        let parts: Vec<usize> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| format!("line {}: {e}", n + 1))?;
        let [x, y, z] = parts[..] else {
            return Err(format!("line {}: expected three coordinates", n + 1));
        };
        current.push([x, y, z]);
    }
    flush(&mut current);
    if let Some(p) = paths.iter().find(|p| p.waypoints.len() < 2) {
        return Err(format!("path starting at {:?} has a single waypoint", p.start()));
    }
    Ok(paths)
}

pub fn load_paths(path: &Path, resolution: f64, region: Option<Region>) -> Result<Vec<OptimalPath>> {
    let text = std::fs::read_to_string(path)?;
    decode_paths(&text, resolution, region).map_err(|reason| Error::load(path, reason))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corridor() -> (VoxelGrid, OptimalPath) {
        let grid = VoxelGrid::empty([20, 10, 5], 1.0).unwrap();
        let wps = (2..=7).map(|x| [x, 4, 2]).collect();
        (grid, OptimalPath::from_waypoints(wps, 1.0, None))
    }

    #[test]
    fn one_sample_per_step() {
        let (grid, path) = corridor();
        let sim = SimParams::default();
        let ds = label_dataset(&grid, &[path.clone()], &sim).unwrap();
        assert_eq!(ds.len(), 5);
        assert_eq!(ds.input_width(), OBS_WIDTH * sim.fifo_depth);
        for (k, s) in ds.samples.iter().enumerate() {
            let a = path.waypoints[k];
            let b = path.waypoints[k + 1];
            let want = [0, 1, 2].map(|i| b[i] as f32 - a[i] as f32);
            assert_eq!(s.target, want);
            assert_eq!(s.fifo.len(), ds.input_width());
        }
        // Cold start: only the newest slot is populated.
        let first = &ds.samples[0].fifo;
        assert!(first[OBS_WIDTH..].iter().all(|&v| v == 0.0));
        assert!(first[..OBS_WIDTH].iter().any(|&v| v != 0.0));
    }

    #[test]
    fn dataset_round_trip() {
        let (grid, path) = corridor();
        let ds = label_dataset(&grid, &[path], &SimParams::default()).unwrap();
        let bytes = ds.encode(&["hash 1234".into()]);
        assert_eq!(Dataset::decode(&bytes).unwrap(), ds);
        assert!(Dataset::decode(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn paths_round_trip() {
        let (_, a) = corridor();
        let b = OptimalPath::from_waypoints(vec![[1, 1, 1], [2, 2, 1], [2, 3, 1]], 1.0, None);
        let text = encode_paths(&[a.clone(), b.clone()], &["note".into()]);
        assert_eq!(decode_paths(&text, 1.0, None).unwrap(), vec![a, b]);
        assert!(decode_paths("1 2\n3 4 5\n", 1.0, None).is_err());
    }
}
