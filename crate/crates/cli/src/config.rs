use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use navislim::auxtrain::{AuxTrainConfig, ConstraintConfig, CurriculumConfig, EpisodeConfig, RewardWeights, Td3Config};
use navislim::distill::{DistillConfig, Mode};
use navislim::pathoracle::FLIGHT_LEVEL;
use navislim::worldsim::{SimParams, WorldParams, MAX_POWER, MIN_DIMS, MIN_FORWARD_POWER};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Procedural world family and region split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldSection {
    pub dims: [usize; 3],
    pub resolution: f64,
    pub density: f64,
    pub seeds: Vec<u64>,
    pub vertical_locked: bool,
    /// Train, validation and test fractions of the x extent.
    pub region_fractions: [f64; 3],
    /// Minimum spawn-goal separation across regions, meters.
    pub region_gap: f64,
}

impl Default for WorldSection {
    fn default() -> Self {
        Self {
            dims: [64, 64, 8],
            resolution: 1.0,
            density: 0.1,
            seeds: vec![1, 2, 3, 4],
            vertical_locked: true,
            region_fractions: [0.6, 0.2, 0.2],
            region_gap: 10.0,
        }
    }
}

/// Optimal path sampling per world and region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleSection {
    pub train_paths: usize,
    pub val_paths: usize,
    pub test_paths: usize,
    pub train_distance: (f64, f64),
    pub val_distance: (f64, f64),
    pub test_distance: (f64, f64),
    /// Offset added to each world seed for path sampling.
    pub seed: u64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            train_paths: 300,
            val_paths: 75,
            test_paths: 75,
            train_distance: (4.0, 40.0),
            val_distance: (4.0, 20.0),
            test_distance: (4.0, 40.0),
            seed: 0,
        }
    }
}

/// Navigation network and its distillation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NavSection {
    pub hidden: Vec<usize>,
    pub distill: DistillConfig,
}

impl Default for NavSection {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            distill: DistillConfig {
                max_epochs: 100,
                patience: 6,
                seeds: 1,
                ..DistillConfig::default()
            },
        }
    }
}

/// Auxiliary training run outside the TD3, curriculum and reward tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuxSection {
    pub total_steps: usize,
    pub seed: u64,
    pub rho_min: f64,
    pub max_steps: usize,
    pub gate_episodes: usize,
    pub gate_seed: u64,
    pub gate_distance: (f64, f64),
}

impl Default for AuxSection {
    fn default() -> Self {
        let train = AuxTrainConfig::default();
        Self {
            total_steps: train.total_steps,
            seed: train.seed,
            rho_min: EpisodeConfig::default().rho_min,
            max_steps: train.td3.max_episode_steps,
            gate_episodes: train.gate_episodes,
            gate_seed: train.gate_seed,
            gate_distance: train.gate_distance,
        }
    }
}

/// Test-region evaluation of the frozen and adaptive systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSection {
    /// Upper edges of the distance buckets, meters.
    pub distances: Vec<f64>,
    /// Bucket width below each upper edge, meters.
    pub bucket_width: f64,
    pub episodes_per_bucket: usize,
    /// Fixed slimming factors flown by the navigation network alone.
    pub rho_grid: Vec<f64>,
    /// Fixed `[p_f, p_d]` levels flown by the navigation network alone.
    pub power_grid: Vec<[u8; 2]>,
    pub aux_episodes: usize,
    pub aux_distance: (f64, f64),
    pub seed: u64,
    /// Heatmap and depth-bin cell size, meters.
    pub cell: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            distances: vec![10.0, 20.0, 30.0, 40.0],
            bucket_width: 2.0,
            episodes_per_bucket: 50,
            rho_grid: vec![0.25, 0.5, 0.75, 1.0],
            power_grid: vec![[1, 0], [2, 1], [3, 2], [3, 3]],
            aux_episodes: 50,
            aux_distance: (8.0, 10.0),
            seed: 7,
            cell: 1.0,
        }
    }
}

/// Timing of adaptive versus static navigation inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchSection {
    pub nav_sizes: Vec<Vec<usize>>,
    pub observations: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            nav_sizes: vec![vec![32], vec![64, 64], vec![128, 128], vec![256, 256]],
            observations: 256,
            repeats: 9,
            seed: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    #[serde(with = "mode_text")]
    pub mode: Mode,
    pub output_dir: PathBuf,
    pub world: WorldSection,
    pub sensor: SimParams,
    pub oracle: OracleSection,
    pub nav: NavSection,
    pub aux: AuxSection,
    pub td3: Td3Config,
    pub curriculum: CurriculumConfig,
    pub reward: RewardWeights,
    pub constraint: ConstraintConfig,
    pub eval: EvalSection,
    pub bench: BenchSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Compute,
            output_dir: PathBuf::from("runs/default"),
            world: WorldSection::default(),
            sensor: SimParams {
                max_range: 10.0,
                ..SimParams::default()
            },
            oracle: OracleSection::default(),
            nav: NavSection::default(),
            aux: AuxSection::default(),
            td3: Td3Config::default(),
            curriculum: CurriculumConfig::default(),
            reward: RewardWeights::default(),
            constraint: ConstraintConfig::default(),
            eval: EvalSection::default(),
            bench: BenchSection::default(),
        }
    }
}

mod mode_text {
    use navislim::distill::Mode;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(mode: &Mode, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(mode.as_str())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mode, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Pipeline stages; each artifact is stamped with the hash of the config
/// sections its stage and all upstream stages read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    World,
    Oracle,
    Nav,
    Aux,
    Eval,
    Bench,
    Report,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::World => "world",
            Stage::Oracle => "oracle",
            Stage::Nav => "nav",
            Stage::Aux => "aux",
            Stage::Eval => "eval",
            Stage::Bench => "bench",
            Stage::Report => "report",
        }
    }

    fn sections(&self) -> &'static [&'static str] {
        match self {
            Stage::World => &["world"],
            Stage::Oracle => &["world", "sensor", "oracle"],
            Stage::Nav => &["world", "sensor", "oracle", "mode", "nav"],
            Stage::Aux => &[
                "world", "sensor", "oracle", "mode", "nav", "aux", "td3", "curriculum", "reward", "constraint",
            ],
            Stage::Eval => &[
                "world", "sensor", "oracle", "mode", "nav", "aux", "td3", "curriculum", "reward", "constraint", "eval",
            ],
            Stage::Bench => &[
                "world", "sensor", "oracle", "mode", "nav", "aux", "td3", "curriculum", "reward", "constraint", "bench",
            ],
            Stage::Report => &[
                "world", "sensor", "oracle", "mode", "nav", "aux", "td3", "curriculum", "reward", "constraint", "eval",
                "bench",
            ],
        }
    }
}

impl ExperimentConfig {
    /// Reads a TOML file, applies `key=value` overrides and validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml(&text, overrides)
    }

    pub fn from_toml(text: &str, overrides: &[String]) -> CliResult<Self> {
        let mut table: toml::Table = text.parse().map_err(|e| CliError::config(format!("invalid TOML: {e}")))?;
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let cfg: ExperimentConfig = toml::Value::Table(table.clone())
            .try_into()
            .map_err(|e| CliError::config(format!("{e}")))?;
        let known = toml::Value::try_from(&cfg).map_err(|e| CliError::config(e.to_string()))?;
        let mut unknown = BTreeSet::new();
        unknown_keys(&toml::Value::Table(table), &known, "", &mut unknown);
        if let Some(key) = unknown.into_iter().next() {
            return Err(CliError::config(format!("unknown config key `{key}`")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&toml::Value::try_from(self).expect("config serializes")).expect("config serializes")
    }

    /// Hex digest of the config sections read by `stage` and its upstream.
    pub fn stage_hash(&self, stage: Stage) -> String {
        let full = toml::Value::try_from(self).expect("config serializes");
        let mut subset = toml::Table::new();
        for key in stage.sections() {
            if let Some(v) = full.get(*key) {
                subset.insert((*key).to_string(), v.clone());
            }
        }
        let text = toml::to_string(&subset).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(12).map(|b| format!("{b:02x}")).collect()
    }

    pub fn world_params(&self, seed: u64) -> WorldParams {
        WorldParams {
            dims: self.world.dims,
            resolution: self.world.resolution,
            density: self.world.density,
            seed,
        }
    }

    pub fn flight_level(&self) -> Option<usize> {
        self.world.vertical_locked.then_some(FLIGHT_LEVEL)
    }

    pub fn episode(&self) -> EpisodeConfig {
        EpisodeConfig {
            sim: self.sensor,
            vertical_locked: self.world.vertical_locked,
            max_steps: self.aux.max_steps,
            rho_min: self.aux.rho_min,
        }
    }

    pub fn aux_train(&self) -> AuxTrainConfig {
        let mut td3 = self.td3.clone();
        td3.max_episode_steps = self.aux.max_steps;
        AuxTrainConfig {
            td3,
            curriculum: self.curriculum,
            weights: self.reward,
            constraint: self.constraint,
            total_steps: self.aux.total_steps,
            seed: self.aux.seed,
            gate_episodes: self.aux.gate_episodes,
            gate_seed: self.aux.gate_seed,
            gate_distance: self.aux.gate_distance,
        }
    }

    /// Checks every range the pipeline relies on.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let w = &self.world;
        if w.dims.iter().zip(MIN_DIMS).any(|(d, m)| *d < m) {
            return bad(format!("world.dims {:?} below the minimum {:?}", w.dims, MIN_DIMS));
        }
        if !(w.resolution > 0.0 && w.resolution.is_finite()) {
            return bad(format!("world.resolution {} must be positive", w.resolution));
        }
        if !(0.0..1.0).contains(&w.density) {
            return bad(format!("world.density {} outside [0, 1)", w.density));
        }
        if w.seeds.is_empty() {
            return bad("world.seeds is empty".into());
        }
        let mut seen = BTreeSet::new();
        if !w.seeds.iter().all(|s| seen.insert(*s)) {
            return bad(format!("world.seeds {:?} has duplicates", w.seeds));
        }
        if w.region_fractions.iter().any(|f| !(*f > 0.0)) || (w.region_fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad(format!("world.region_fractions {:?} must be positive and sum to 1", w.region_fractions));
        }
        if w.region_gap < 0.0 {
            return bad("world.region_gap must be non-negative".into());
        }
        if w.vertical_locked && w.dims[2] <= FLIGHT_LEVEL + 1 {
            return bad(format!("world.dims z {} leaves no flight level", w.dims[2]));
        }
        let s = &self.sensor;
        for (name, v) in [("max_step", s.max_step), ("goal_radius", s.goal_radius), ("max_range", s.max_range), ("goal_scale", s.goal_scale)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("sensor.{name} {v} must be positive"));
            }
        }
        if s.fifo_depth == 0 {
            return bad("sensor.fifo_depth must be at least 1".into());
        }
        let o = &self.oracle;
        for (name, n, r) in [
            ("train", o.train_paths, o.train_distance),
            ("val", o.val_paths, o.val_distance),
            ("test", o.test_paths, o.test_distance),
        ] {
            if n == 0 {
                return bad(format!("oracle.{name}_paths must be positive"));
            }
            check_range(&format!("oracle.{name}_distance"), r)?;
        }
        if self.nav.hidden.is_empty() || self.nav.hidden.contains(&0) {
            return bad(format!("nav.hidden {:?} needs positive widths", self.nav.hidden));
        }
        self.nav.distill.validate()?;
        let a = &self.aux;
        if !(a.rho_min > 0.0 && a.rho_min <= 1.0) {
            return bad(format!("aux.rho_min {} outside (0, 1]", a.rho_min));
        }
        if a.max_steps == 0 || a.gate_episodes == 0 || a.total_steps == 0 {
            return bad("aux.max_steps, aux.gate_episodes and aux.total_steps must be positive".into());
        }
        check_range("aux.gate_distance", a.gate_distance)?;
        self.aux_train().validate()?;
        let e = &self.eval;
        if e.distances.is_empty() || e.distances.iter().any(|d| !(*d > e.bucket_width)) {
            return bad(format!("eval.distances {:?} must exceed eval.bucket_width", e.distances));
        }
        if !(e.bucket_width > 0.0) || e.episodes_per_bucket == 0 || e.aux_episodes == 0 {
            return bad("eval bucket width and episode counts must be positive".into());
        }
        if e.rho_grid.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
            return bad(format!("eval.rho_grid {:?} outside (0, 1]", e.rho_grid));
        }
        if e.power_grid.iter().any(|[f, d]| *f < MIN_FORWARD_POWER || *f > MAX_POWER || *d > MAX_POWER) {
            return bad(format!("eval.power_grid {:?} outside the sensor levels", e.power_grid));
        }
        check_range("eval.aux_distance", e.aux_distance)?;
        if !(e.cell > 0.0) {
            return bad("eval.cell must be positive".into());
        }
        let b = &self.bench;
        if b.nav_sizes.is_empty() || b.nav_sizes.iter().any(|h| h.is_empty() || h.contains(&0)) {
            return bad(format!("bench.nav_sizes {:?} needs positive widths", b.nav_sizes));
        }
        if b.observations == 0 || b.repeats == 0 {
            return bad("bench.observations and bench.repeats must be positive".into());
        }
        Ok(())
    }
}

fn check_range(name: &str, (lo, hi): (f64, f64)) -> CliResult<()> {
    if lo > 0.0 && lo <= hi && hi.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(format!("{name} ({lo}, {hi}) is not an increasing positive range")))
    }
}

/// Sets a dotted key to a TOML literal, or to a bare string when the value
/// does not parse as one.
fn apply_override(table: &mut toml::Table, item: &str) -> CliResult<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("override `{item}` is not key=value")))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::config(format!("bad override key `{key}`")));
    }
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| CliError::config(format!("override `{key}` descends into a non-table")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn unknown_keys(given: &toml::Value, known: &toml::Value, prefix: &str, out: &mut BTreeSet<String>) {
    let (Some(g), Some(k)) = (given.as_table(), known.as_table()) else {
        return;
    };
    for (key, value) in g {
        let path = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
        match k.get(key) {
            None => {
                out.insert(path);
            }
            Some(kv) => unknown_keys(value, kv, &path, out),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let back = ExperimentConfig::from_toml(&cfg.to_toml(), &[]).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let cfg = ExperimentConfig::from_toml(
            "mode = \"S\"\n[world]\ndensity = 0.2\n",
            &["world.density=0.15".into(), "nav.hidden=[32]".into(), "output_dir=out/x".into()],
        )
        .unwrap();
        assert_eq!(cfg.mode, Mode::Sense);
        assert_eq!(cfg.world.density, 0.15);
        assert_eq!(cfg.nav.hidden, vec![32]);
        assert_eq!(cfg.output_dir, PathBuf::from("out/x"));
    }

    #[test]
    fn bad_values_are_config_errors() {
        for bad in ["world.density=1.5", "nav.hidden=[]", "mode=X", "world.typo=1", "aux.rho_min=0", "eval.rho_grid=[0.0]"] {
            let err = ExperimentConfig::from_toml("", &[bad.into()]).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad}: {err}");
        }
    }

    #[test]
    fn stage_hashes_follow_their_sections() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig::from_toml("", &["eval.seed=99".into()]).unwrap();
        assert_eq!(a.stage_hash(Stage::Nav), b.stage_hash(Stage::Nav));
        assert_eq!(a.stage_hash(Stage::Aux), b.stage_hash(Stage::Aux));
        assert_ne!(a.stage_hash(Stage::Eval), b.stage_hash(Stage::Eval));
        let c = ExperimentConfig::from_toml("", &["output_dir=elsewhere".into()]).unwrap();
        assert_eq!(a.stage_hash(Stage::Report), c.stage_hash(Stage::Report));
        let d = ExperimentConfig::from_toml("", &["world.density=0.2".into()]).unwrap();
        assert_ne!(a.stage_hash(Stage::World), d.stage_hash(Stage::World));
    }
}
