use super::spec::{active_width, MlpSpec};
use crate::error::{Error, Result};

/// Which nodes of a network take part in a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct SlimMask {
    pub rho: f64,
    /// Active prefix length of each hidden layer.
    pub active_hidden: Vec<usize>,
    /// Input gate; `None` means every input is active.
    pub active_inputs: Option<Vec<bool>>,
}

impl SlimMask {
    /// The whole super-network.
    pub fn full(spec: &MlpSpec) -> Self {
        Self {
            rho: 1.0,
            active_hidden: spec.hidden.clone(),
            active_inputs: None,
        }
    }

    /// Width slimming only: `ceil(rho * q_i)` nodes stay active per layer.
    pub fn width(spec: &MlpSpec, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::contract(format!("slimming factor {rho} outside (0, 1]")));
        }
        Ok(Self {
            rho,
            active_hidden: spec.hidden.iter().map(|&q| active_width(rho, q)).collect(),
            active_inputs: None,
        })
    }

    pub fn with_inputs(mut self, active_inputs: Vec<bool>) -> Self {
        self.active_inputs = Some(active_inputs);
        self
    }

    pub fn check(&self, spec: &MlpSpec) -> Result<()> {
        if self.active_hidden.len() != spec.hidden.len()
            || self
                .active_hidden
                .iter()
                .zip(&spec.hidden)
                .any(|(&a, &q)| a == 0 || a > q)
        {
            return Err(Error::contract(format!(
                "hidden mask {:?} inconsistent with widths {:?}",
                self.active_hidden, spec.hidden
            )));
        }
        if let Some(inputs) = &self.active_inputs {
            if inputs.len() != spec.inputs {
                return Err(Error::contract(format!(
                    "input mask width {} != network inputs {}",
                    inputs.len(),
                    spec.inputs
                )));
            }
        }
        Ok(())
    }

    pub fn input_active(&self, i: usize) -> bool {
        self.active_inputs.as_ref().is_none_or(|m| m[i])
    }
}

/// A power-gated run of inputs within one FIFO slot.
#[derive(Debug, Clone, PartialEq)]
pub struct PoweredBlock {
    /// Offset of the block within the slot.
    pub offset: usize,
    pub len: usize,
    /// Smallest valid power level.
    pub min_level: u8,
    /// `levels[k]`: block-relative indices acquired at power `k`.
    pub levels: Vec<Vec<usize>>,
}

impl PoweredBlock {
    pub fn max_level(&self) -> u8 {
        (self.levels.len() - 1) as u8
    }
}

/// Where the power-gated inputs live in a flattened FIFO vector. Inputs
/// outside both blocks are never gated.
#[derive(Debug, Clone, PartialEq)]
pub struct InputLayout {
    pub slot_width: usize,
    pub slots: usize,
    pub forward: PoweredBlock,
    pub downward: PoweredBlock,
}

impl InputLayout {
    pub fn width(&self) -> usize {
        self.slot_width * self.slots
    }
}

/// Input gate for forward power `p_f` and downward power `p_d`, applied to
/// every FIFO slot alike.
pub fn input_mask_from_power(p_f: u8, p_d: u8, layout: &InputLayout) -> Result<Vec<bool>> {
    let check = |p: u8, block: &PoweredBlock, name: &str| {
        if p < block.min_level || p > block.max_level() {
            Err(Error::contract(format!(
                "{name} power {p} outside [{}, {}]",
                block.min_level,
                block.max_level()
            )))
        } else {
            Ok(())
        }
    };
    check(p_f, &layout.forward, "forward")?;
    check(p_d, &layout.downward, "downward")?;
    let mut mask = vec![true; layout.width()];
    for slot in 0..layout.slots {
        let base = slot * layout.slot_width;
        for (block, level) in [(&layout.forward, p_f), (&layout.downward, p_d)] {
            let start = base + block.offset;
            mask[start..start + block.len].fill(false);
            for &i in &block.levels[level as usize] {
                mask[start + i] = true;
            }
        }
    }
    Ok(mask)
}
