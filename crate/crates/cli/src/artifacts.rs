use std::io::Read;
use std::path::{Path, PathBuf};

use navislim::distill::Mode;
use navislim::pathoracle::Region;

use crate::config::{ExperimentConfig, Stage};
use crate::error::{CliError, CliResult};

const HEADER_PREFIX: &str = "navislim stage=";

/// File locations of every artifact under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            root: cfg.output_dir.clone(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn world(&self, seed: u64) -> PathBuf {
        self.root.join("worlds").join(format!("world_{seed}.txt"))
    }

    pub fn paths(&self, region: Region, seed: u64) -> PathBuf {
        self.root.join("oracle").join(format!("paths_{}_{seed}.txt", region.as_str()))
    }

    pub fn dataset(&self, region: Region) -> PathBuf {
        self.root.join("oracle").join(format!("{}.ds", region.as_str()))
    }

    pub fn nav_weights(&self, mode: Mode) -> PathBuf {
        self.root.join("nav").join(format!("nav_{mode}.w"))
    }

    pub fn nav_log(&self, mode: Mode) -> PathBuf {
        self.root.join("nav").join(format!("train_nav_{mode}.csv"))
    }

    pub fn nav_summary(&self, mode: Mode) -> PathBuf {
        self.root.join("nav").join(format!("train_nav_summary_{mode}.csv"))
    }

    fn aux_tag(mode: Mode, seed: u64) -> String {
        format!("{mode}_s{seed}")
    }

    pub fn aux_weights(&self, mode: Mode, seed: u64) -> PathBuf {
        self.root.join("aux").join(format!("aux_{}.w", Self::aux_tag(mode, seed)))
    }

    pub fn aux_log(&self, mode: Mode, seed: u64) -> PathBuf {
        self.root.join("aux").join(format!("train_aux_{}.csv", Self::aux_tag(mode, seed)))
    }

    pub fn gate(&self, mode: Mode, seed: u64) -> PathBuf {
        self.root.join("aux").join(format!("gate_{}.csv", Self::aux_tag(mode, seed)))
    }

    pub fn nav_success(&self, mode: Mode) -> PathBuf {
        self.root.join("eval").join(format!("nav_success_{mode}.csv"))
    }

    pub fn nav_rmse(&self, mode: Mode) -> PathBuf {
        self.root.join("eval").join(format!("nav_rmse_{mode}.csv"))
    }

    pub fn episode_steps(&self, mode: Mode, seed: u64) -> PathBuf {
        self.root.join("eval").join(format!("episodes_{}.csv", Self::aux_tag(mode, seed)))
    }

    pub fn episode_summary(&self, mode: Mode, seed: u64) -> PathBuf {
        self.root.join("eval").join(format!("episode_summary_{}.csv", Self::aux_tag(mode, seed)))
    }

    pub fn bench(&self, mode: Mode, seed: u64) -> PathBuf {
        self.root.join("bench").join(format!("bench_{}.csv", Self::aux_tag(mode, seed)))
    }

    pub fn report_dir(&self, mode: Mode, seed: u64) -> PathBuf {
        self.root.join("report").join(Self::aux_tag(mode, seed))
    }

    pub fn config_copy(&self, command: &str, cfg: &ExperimentConfig) -> PathBuf {
        let name = match command {
            "gen-world" | "oracle" => command.to_string(),
            "train-nav" => format!("{command}_{}", cfg.mode),
            _ => format!("{command}_{}", Self::aux_tag(cfg.mode, cfg.aux.seed)),
        };
        self.root.join("configs").join(format!("{name}.toml"))
    }
}

/// Header comment identifying the stage and config hash of an artifact.
pub fn header(cfg: &ExperimentConfig, stage: Stage) -> String {
    format!("{HEADER_PREFIX}{} hash={}", stage.as_str(), cfg.stage_hash(stage))
}

/// `(stage, hash)` from the header comment among the first lines of a file.
pub fn read_header(path: &Path) -> CliResult<Option<(String, String)>> {
    let mut buf = Vec::with_capacity(4096);
    std::fs::File::open(path)?.take(4096).read_to_end(&mut buf)?;
    for line in buf.split(|&b| b == b'\n').take(16) {
        let text = String::from_utf8_lossy(line);
        let Some(rest) = text.trim_start_matches('#').trim().strip_prefix(HEADER_PREFIX) else {
            continue;
        };
        let mut fields = rest.split_whitespace();
        let stage = fields.next().unwrap_or_default().to_string();
        let hash = fields
            .next()
            .and_then(|f| f.strip_prefix("hash="))
            .unwrap_or_default()
            .to_string();
        return Ok(Some((stage, hash)));
    }
    Ok(None)
}

/// Requires `path` to exist and to carry the current config's hash for
/// `stage`; `producer` names the command that writes it.
pub fn require(cfg: &ExperimentConfig, stage: Stage, path: &Path, producer: &str) -> CliResult<()> {
    if !path.is_file() {
        return Err(CliError::dependency(path, format!("file not found; run `navislim {producer}` first")));
    }
    let expected = cfg.stage_hash(stage);
    match read_header(path)? {
        Some((s, h)) if s == stage.as_str() && h == expected => Ok(()),
        Some((s, h)) => Err(CliError::dependency(
            path,
            format!(
                "written by stage `{s}` with config hash {h}, the current config expects stage `{}` hash {expected}; rerun `navislim {producer}`",
                stage.as_str()
            ),
        )),
        None => Err(CliError::dependency(path, "no navislim header")),
    }
}

pub fn ensure_parent(path: &Path) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

/// Writes a CSV body under a header comment.
pub fn write_csv(path: &Path, cfg: &ExperimentConfig, stage: Stage, body: &[u8]) -> CliResult<()> {
    ensure_parent(path)?;
    let mut out = format!("# {}\n", header(cfg, stage)).into_bytes();
    out.extend_from_slice(body);
    std::fs::write(path, out)?;
    Ok(())
}

/// Serializes rows to CSV bytes.
pub fn csv_bytes<R: serde::Serialize>(rows: &[R]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| CliError::Run(e.to_string()))
}

/// Reads rows of a headed CSV artifact after checking its stage hash.
pub fn read_csv<R: serde::de::DeserializeOwned>(
    cfg: &ExperimentConfig,
    stage: Stage,
    path: &Path,
    producer: &str,
) -> CliResult<Vec<R>> {
    require(cfg, stage, path, producer)?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    reader
        .deserialize()
        .collect::<Result<Vec<R>, _>>()
        .map_err(|e| CliError::dependency(path, format!("malformed CSV: {e}")))
}

/// Writes the serialized config used by `command`.
pub fn write_config_copy(cfg: &ExperimentConfig, command: &str) -> CliResult<()> {
    let path = Layout::new(cfg).config_copy(command, cfg);
    ensure_parent(&path)?;
    std::fs::write(&path, cfg.to_toml())?;
    Ok(())
}
