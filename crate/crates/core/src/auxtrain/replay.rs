use std::collections::VecDeque;

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};

/// One auxiliary decision. Actions are stored normalized to `[-1, 1]`,
/// before any rounding to sensor levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f32>,
    pub action: Vec<f32>,
    pub reward: f64,
    pub next_state: Vec<f32>,
    pub done: bool,
}

/// Bounded transition store with first-in first-out eviction.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.items[i]
    }

    /// Indices of a uniform batch drawn without replacement.
    pub fn sample_indices<R: Rng>(&self, rng: &mut R, batch: usize) -> Result<Vec<usize>> {
        if batch > self.items.len() {
            return Err(Error::contract(format!(
                "batch of {batch} requested from {} transitions",
                self.items.len()
            )));
        }
        Ok(sample(rng, self.items.len(), batch).into_vec())
    }

    pub fn sample<R: Rng>(&self, rng: &mut R, batch: usize) -> Result<Vec<&Transition>> {
        Ok(self.sample_indices(rng, batch)?.into_iter().map(|i| &self.items[i]).collect())
    }
}
