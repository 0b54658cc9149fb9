use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
struct Slot {
    values: Vec<f32>,
    acquired: Vec<bool>,
}

/// The `depth` most recent observation vectors, newest first. Slots not yet
/// written hold zero vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FifoQueue {
    width: usize,
    slots: VecDeque<Slot>,
}

impl FifoQueue {
    pub fn new(depth: usize, width: usize) -> Self {
        assert!(depth >= 1, "FIFO depth must be at least 1");
        let slots = (0..depth)
            .map(|_| Slot {
                values: vec![0.0; width],
                acquired: vec![true; width],
            })
            .collect();
        Self { width, slots }
    }

    pub fn depth(&self) -> usize {
        self.slots.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn push(&mut self, values: Vec<f32>) -> Result<()> {
        let acquired = vec![true; values.len()];
        self.push_masked(values, acquired)
    }

    /// Pushes a vector together with its per-entry acquisition flags.
    pub fn push_masked(&mut self, values: Vec<f32>, acquired: Vec<bool>) -> Result<()> {
        if values.len() != self.width || acquired.len() != self.width {
            return Err(Error::contract(format!(
                "observation width {} (mask {}) does not match FIFO width {}",
                values.len(),
                acquired.len(),
                self.width
            )));
        }
        self.slots.pop_back();
        self.slots.push_front(Slot { values, acquired });
        Ok(())
    }

    pub fn slot(&self, i: usize) -> &[f32] {
        &self.slots[i].values
    }

    /// Concatenated slots, newest first; length `depth * width`.
    pub fn flatten(&self) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.depth() * self.width);
        for s in &self.slots {
            out.extend_from_slice(&s.values);
        }
        out
    }

    /// Concatenated acquisition flags matching [`FifoQueue::flatten`].
    pub fn flatten_mask(&self) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.depth() * self.width);
        for s in &self.slots {
            out.extend_from_slice(&s.acquired);
        }
        out
    }
}
