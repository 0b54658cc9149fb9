use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::slimnet::{input_mask_from_power, mse_loss, ForwardCache, Gradients, InputLayout, Scalar, SlimMask, SlimmableMlp};
use crate::worldsim::{MAX_POWER, MIN_FORWARD_POWER};

/// What the auxiliary module adapts, and so what the navigation network is
/// distilled over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Width slimming factor.
    Compute,
    /// Sensor power levels.
    Sense,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Compute => "C",
            Mode::Sense => "S",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "C" | "c" | "compute" => Ok(Mode::Compute),
            "S" | "s" | "sense" => Ok(Mode::Sense),
            _ => Err(Error::config(format!("unknown mode `{s}` (expected C or S)"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistillConfig {
    pub rho_min: f64,
    pub n_random_rhos: usize,
    pub n_random_powers: usize,
    /// Without distillation only the hard-target pass is trained.
    pub distill: bool,
    pub batch_size: usize,
    pub lr: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Independent training runs; the best validation loss wins.
    pub seeds: usize,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self {
            rho_min: 0.25,
            n_random_rhos: 2,
            n_random_powers: 2,
            distill: true,
            batch_size: 64,
            lr: 1e-3,
            max_epochs: 60,
            patience: 8,
            seed: 1,
            seeds: 3,
        }
    }
}

impl DistillConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho_min > 0.0 && self.rho_min <= 1.0) {
            return Err(Error::config(format!("rho_min {} outside (0, 1]", self.rho_min)));
        }
        if self.patience == 0 || self.batch_size == 0 || self.max_epochs == 0 || self.seeds == 0 {
            return Err(Error::config(
                "patience, batch_size, max_epochs and seeds must all be at least 1",
            ));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::config(format!("learning rate {} must be positive", self.lr)));
        }
        Ok(())
    }
}

/// Mean losses of one batch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BatchLosses {
    /// Super-network against the hard targets.
    pub hard: f64,
    /// Sum over sub-network passes against the soft targets.
    pub soft: f64,
}

/// Reusable buffers for [`sandwich_gradients`].
#[derive(Debug, Clone, Default)]
pub struct Scratch<S> {
    cache: ForwardCache<S>,
    soft: Vec<Vec<S>>,
}

impl<S: Scalar> Scratch<S> {
    pub fn new() -> Self {
        Self {
            cache: ForwardCache::new(),
            soft: Vec::new(),
        }
    }
}

/// Sub-network settings visited after the hard pass, in order.
pub fn sandwich_masks<R: Rng>(
    net_spec: &crate::slimnet::MlpSpec,
    mode: Mode,
    cfg: &DistillConfig,
    layout: Option<&InputLayout>,
    rng: &mut R,
) -> Result<Vec<SlimMask>> {
    if !cfg.distill {
        return Ok(Vec::new());
    }
    let mut masks = Vec::new();
    match mode {
        Mode::Compute => {
            masks.push(SlimMask::width(net_spec, cfg.rho_min)?);
            for _ in 0..cfg.n_random_rhos {
                let rho = if cfg.rho_min < 1.0 {
                    rng.random_range(cfg.rho_min..=1.0)
                } else {
                    1.0
                };
                masks.push(SlimMask::width(net_spec, rho)?);
            }
        }
        Mode::Sense => {
            let layout = layout.ok_or_else(|| Error::config("power distillation needs an input layout"))?;
            let full = SlimMask::full(net_spec);
            masks.push(full.clone().with_inputs(input_mask_from_power(MIN_FORWARD_POWER, 0, layout)?));
            for _ in 0..cfg.n_random_powers {
                let p_f = rng.random_range(MIN_FORWARD_POWER..=MAX_POWER);
                let p_d = rng.random_range(0..=MAX_POWER);
                masks.push(full.clone().with_inputs(input_mask_from_power(p_f, p_d, layout)?));
            }
        }
    }
    Ok(masks)
}

/// Accumulates the gradients of one sandwich step into `grads`.
///
/// The super-network is trained against `targets`; its outputs are then
/// frozen as soft targets for every mask in `sub_masks`. Each sample's
/// losses carry weight `1 / batch` so the result is a batch mean.
pub fn sandwich_gradients<S: Scalar>(
    net: &SlimmableMlp<S>,
    inputs: &[&[S]],
    targets: &[&[S]],
    sub_masks: &[SlimMask],
    grads: &mut Gradients<S>,
    scratch: &mut Scratch<S>,
) -> Result<BatchLosses> {
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(Error::contract(format!(
            "batch of {} inputs and {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    let weight = 1.0 / inputs.len() as f64;
    let full = SlimMask::full(net.spec());
    let mut losses = BatchLosses::default();

    scratch.soft.resize_with(inputs.len(), Vec::new);
    for (k, (x, t)) in inputs.iter().zip(targets).enumerate() {
        net.forward_cached(x, &full, &mut scratch.cache)?;
        let (loss, g) = mse_loss(scratch.cache.output(), t, weight);
        net.backward(&scratch.cache, &g, grads);
        losses.hard += loss * weight;
        scratch.soft[k].clear();
        scratch.soft[k].extend_from_slice(scratch.cache.output());
    }
    for mask in sub_masks {
        for (k, x) in inputs.iter().enumerate() {
            net.forward_cached(x, mask, &mut scratch.cache)?;
            let (loss, g) = mse_loss(scratch.cache.output(), &scratch.soft[k], weight);
            net.backward(&scratch.cache, &g, grads);
            losses.soft += loss * weight;
        }
    }
    Ok(losses)
}
