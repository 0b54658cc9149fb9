use std::collections::BTreeMap;
use std::hint::black_box;
use std::time::Instant;

use navislim::auxtrain::{action_to_power, action_to_rho};
use navislim::distill::Mode;
use navislim::pathoracle::Region;
use navislim::slimnet::{input_mask_from_power, ForwardCache, MlpSpec, OutputActivation, SlimMask, SlimmableMlp};
use navislim::worldsim::{sensor_input_layout, SensorConfig};
use serde::{Deserialize, Serialize};

use crate::artifacts::{csv_bytes, write_config_copy, write_csv, Layout};
use crate::commands::{load_aux, load_dataset, Summary};
use crate::config::{ExperimentConfig, Stage};
use crate::error::CliResult;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub nav_hidden: String,
    pub full_params: usize,
    pub mean_rho: f64,
    pub mean_active_params: f64,
    pub aux_params: usize,
    /// Median time per observation of the full network, nanoseconds.
    pub static_ns: f64,
    /// Median time per observation of the auxiliary network plus the
    /// selected truncated network, nanoseconds.
    pub adaptive_ns: f64,
    /// `(static - adaptive) / static`.
    pub speedup: f64,
}

/// A physically truncated sub-network and the inputs it keeps.
struct Variant {
    net: SlimmableMlp,
    mask: SlimMask,
    kept_inputs: Option<Vec<usize>>,
}

/// Active hidden widths and optional `(p_f, p_d)` of a sub-network.
type VariantKey = (Vec<usize>, Option<(u8, u8)>);

/// Sub-network key chosen by the auxiliary output.
fn choose(aux_out: &[f32], mode: Mode, rho_min: f64, spec: &MlpSpec) -> (Vec<usize>, Option<(u8, u8)>, f64) {
    match mode {
        Mode::Compute => {
            let rho = action_to_rho(aux_out[0], rho_min);
            let widths = spec.hidden.iter().map(|&q| navislim::slimnet::active_width(rho, q)).collect();
            (widths, None, rho)
        }
        Mode::Sense => {
            let (f, d) = action_to_power(aux_out);
            let p = SensorConfig::from_continuous(f, d);
            (spec.hidden.clone(), Some((p.p_f, p.p_d)), 1.0)
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Times the adaptive pipeline against the full navigation network on a
/// fixed observation set, for each navigation size in the grid.
pub fn bench(cfg: &ExperimentConfig) -> CliResult<Summary> {
    let layout = Layout::new(cfg);
    let actor = load_aux(cfg)?;
    let test = load_dataset(cfg, Region::Test)?;
    let stride = (test.len() / cfg.bench.observations).max(1);
    let obs: Vec<&[f32]> = test
        .samples
        .iter()
        .step_by(stride)
        .take(cfg.bench.observations)
        .map(|s| s.fifo.as_slice())
        .collect();
    let aux_mask = SlimMask::full(actor.spec());
    let input_layout = sensor_input_layout(test.fifo_depth);
    let mut rows = Vec::new();
    let mut out = Vec::new();

    for (k, hidden) in cfg.bench.nav_sizes.iter().enumerate() {
        let spec = MlpSpec::new(test.input_width(), hidden.clone(), 3, OutputActivation::Identity)?;
        let net = SlimmableMlp::new(spec.clone(), cfg.bench.seed + k as u64)?;
        let full_mask = SlimMask::full(&spec);

        let mut variants: BTreeMap<VariantKey, Variant> = BTreeMap::new();
        let (mut rho_sum, mut m_sum) = (0.0, 0.0);
        for x in &obs {
            let a = actor.forward(x, &aux_mask)?;
            let (widths, power, rho) = choose(&a, cfg.mode, cfg.aux.rho_min, &spec);
            rho_sum += rho;
            let key = (widths.clone(), power);
            if !variants.contains_key(&key) {
                let mut mask = SlimMask::width(&spec, rho)?;
                mask.active_hidden = widths;
                if let Some((f, d)) = power {
                    mask = mask.with_inputs(input_mask_from_power(f, d, &input_layout)?);
                }
                let small = net.truncated(&mask)?;
                let kept_inputs = mask
                    .active_inputs
                    .as_ref()
                    .map(|m| m.iter().enumerate().filter(|(_, on)| **on).map(|(i, _)| i).collect());
                variants.insert(
                    key.clone(),
                    Variant {
                        mask: SlimMask::full(small.spec()),
                        net: small,
                        kept_inputs,
                    },
                );
            }
            m_sum += variants[&key].net.num_params() as f64;
        }

        let mut aux_cache = ForwardCache::new();
        let mut nav_cache = ForwardCache::new();
        let mut gathered: Vec<f32> = Vec::with_capacity(spec.inputs);
        let (mut static_t, mut adaptive_t) = (Vec::new(), Vec::new());
        for _ in 0..cfg.bench.repeats {
            let t0 = Instant::now();
            let mut acc = 0.0f32;
            for x in &obs {
                net.forward_cached(x, &full_mask, &mut nav_cache)?;
                acc += nav_cache.output()[0];
            }
            black_box(acc);
            static_t.push(t0.elapsed().as_nanos() as f64 / obs.len() as f64);

            let t0 = Instant::now();
            let mut acc = 0.0f32;
            for x in &obs {
                actor.forward_cached(x, &aux_mask, &mut aux_cache)?;
                let (widths, power, _) = choose(aux_cache.output(), cfg.mode, cfg.aux.rho_min, &spec);
                let v = &variants[&(widths, power)];
                let input: &[f32] = match &v.kept_inputs {
                    Some(idx) => {
                        gathered.clear();
                        gathered.extend(idx.iter().map(|&i| x[i]));
                        &gathered
                    }
                    None => x,
                };
                v.net.forward_cached(input, &v.mask, &mut nav_cache)?;
                acc += nav_cache.output()[0];
            }
            black_box(acc);
            adaptive_t.push(t0.elapsed().as_nanos() as f64 / obs.len() as f64);
        }
        let (v, u) = (median(static_t), median(adaptive_t));
        let label = hidden.iter().map(usize::to_string).collect::<Vec<_>>().join("x");
        let row = BenchRow {
            nav_hidden: label,
            full_params: spec.num_params(),
            mean_rho: rho_sum / obs.len() as f64,
            mean_active_params: m_sum / obs.len() as f64,
            aux_params: actor.num_params(),
            static_ns: v,
            adaptive_ns: u,
            speedup: (v - u) / v,
        };
        out.push(format!(
            "nav {:>9}: static {:>9.0} ns, adaptive {:>9.0} ns, mean rho {:.3}, speedup {:+.3}",
            row.nav_hidden, v, u, row.mean_rho, row.speedup
        ));
        rows.push(row);
    }
    write_csv(&layout.bench(cfg.mode, cfg.aux.seed), cfg, Stage::Bench, &csv_bytes(&rows)?)?;
    write_config_copy(cfg, "bench")?;
    Ok(out)
}
