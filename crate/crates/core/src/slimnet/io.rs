use std::io::Write;
use std::path::Path;

use super::network::{Layer, SlimmableMlp};
use super::spec::{MlpSpec, OutputActivation};
use crate::error::{Error, Result};

const MAGIC: &str = "NAVISLIM-W v1";

fn activation_token(a: OutputActivation) -> String {
    match a {
        OutputActivation::Identity => "identity".to_string(),
        OutputActivation::Tanh { scale } => format!("tanh:{scale}"),
    }
}

fn parse_activation(s: &str) -> Option<OutputActivation> {
    if s == "identity" {
        return Some(OutputActivation::Identity);
    }
    let scale = s.strip_prefix("tanh:")?.parse().ok()?;
    Some(OutputActivation::Tanh { scale })
}

/// The spec line written after the magic.
fn spec_line(spec: &MlpSpec, seed: u64) -> String {
    let q: Vec<String> = spec.hidden.iter().map(usize::to_string).collect();
    format!(
        "spec u={} q={} v={} hidden=relu output={} seed={seed}",
        spec.inputs,
        q.join(","),
        spec.outputs,
        activation_token(spec.output_activation)
    )
}

fn parse_spec_line(line: &str) -> Option<(MlpSpec, u64)> {
    let rest = line.strip_prefix("spec ")?;
    let (mut u, mut q, mut v, mut out, mut seed, mut hidden) = (None, None, None, None, None, None);
    for field in rest.split_whitespace() {
        let (k, val) = field.split_once('=')?;
        match k {
            "u" => u = val.parse().ok(),
            "q" => q = val.split(',').map(|x| x.parse().ok()).collect::<Option<Vec<usize>>>(),
            "v" => v = val.parse().ok(),
            "hidden" => hidden = (val == "relu").then_some(()),
            "output" => out = parse_activation(val),
            "seed" => seed = val.parse().ok(),
            _ => return None,
        }
    }
    hidden?;
    let spec = MlpSpec::new(u?, q?, v?, out?).ok()?;
    Some((spec, seed?))
}

/// Writes `NAVISLIM-W v1`, optional `# ` comment lines, the spec line, then
/// every layer's row-major weights followed by its biases as little-endian f32.
pub fn save_weights(net: &SlimmableMlp<f32>, path: &Path, comments: &[String]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(encode_weights(net, comments).as_slice())?;
    out.flush()?;
    Ok(())
}

pub fn encode_weights(net: &SlimmableMlp<f32>, comments: &[String]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(64 + 4 * net.num_params());
    buf.extend_from_slice(MAGIC.as_bytes());
    buf.push(b'\n');
    for c in comments {
        buf.extend_from_slice(format!("# {c}\n").as_bytes());
    }
    buf.extend_from_slice(spec_line(net.spec(), net.seed()).as_bytes());
    buf.push(b'\n');
    for layer in net.layers() {
        for w in layer.weights.iter().chain(&layer.biases) {
            buf.extend_from_slice(&w.to_le_bytes());
        }
    }
    buf
}

/// Comment lines of a weights file, without the `# ` prefix.
pub fn weights_comments(bytes: &[u8]) -> Vec<String> {
    let mut out = Vec::new();
    for line in bytes.split(|&b| b == b'\n').skip(1) {
        match line.strip_prefix(b"# ") {
            Some(c) => out.push(String::from_utf8_lossy(c).into_owned()),
            None => break,
        }
    }
    out
}

/// Loads weights, optionally requiring a particular spec.
pub fn load_weights(path: &Path, expected: Option<&MlpSpec>) -> Result<SlimmableMlp<f32>> {
    let bytes = std::fs::read(path)?;
    decode_weights(&bytes, expected).map_err(|reason| Error::load(path, reason))
}

pub fn decode_weights(bytes: &[u8], expected: Option<&MlpSpec>) -> Result<SlimmableMlp<f32>, String> {
    let mut pos = 0usize;
    let next_line = |pos: &mut usize| -> Result<String, String> {
        let rest = &bytes[*pos..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| "unterminated header".to_string())?;
        let line = std::str::from_utf8(&rest[..end]).map_err(|_| "header is not UTF-8".to_string())?;
        *pos += end + 1;
        Ok(line.to_string())
    };
    let magic = next_line(&mut pos)?;
    if magic != MAGIC {
        return Err(format!("bad magic `{magic}`, expected `{MAGIC}`"));
    }
    let mut line = next_line(&mut pos)?;
    while line.starts_with('#') {
        line = next_line(&mut pos)?;
    }
    let (spec, seed) = parse_spec_line(&line).ok_or_else(|| format!("bad spec line `{line}`"))?;
    if let Some(want) = expected {
        if *want != spec {
            return Err(format!("spec mismatch: file has `{line}`, expected `{}`", spec_line(want, seed)));
        }
    }
    let payload = &bytes[pos..];
    let need = 4 * spec.num_params();
    if payload.len() != need {
        return Err(format!("payload holds {} bytes, spec needs {need}", payload.len()));
    }
    let mut floats = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
    let widths = spec.widths();
    let mut layers = Vec::with_capacity(widths.len() - 1);
    for w in widths.windows(2) {
        let weights: Vec<f32> = floats.by_ref().take(w[0] * w[1]).collect();
        let biases: Vec<f32> = floats.by_ref().take(w[1]).collect();
        layers.push(Layer {
            inputs: w[0],
            outputs: w[1],
            weights,
            biases,
        });
    }
    SlimmableMlp::from_parts(spec, seed, layers).map_err(|e| e.to_string())
}
