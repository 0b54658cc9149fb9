use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::episode::AuxPolicy;
use crate::error::Result;
use crate::slimnet::{SlimMask, SlimmableMlp};

/// Deterministic actor network.
pub struct ActorPolicy<'a> {
    actor: &'a SlimmableMlp,
    mask: SlimMask,
}

impl<'a> ActorPolicy<'a> {
    pub fn new(actor: &'a SlimmableMlp) -> Self {
        Self {
            mask: SlimMask::full(actor.spec()),
            actor,
        }
    }
}

impl AuxPolicy for ActorPolicy<'_> {
    fn act(&mut self, state: &[f32]) -> Result<Vec<f32>> {
        self.actor.forward(state, &self.mask)
    }
}

/// Actor output plus clipped Gaussian exploration noise.
pub struct NoisyPolicy<'a, R> {
    inner: ActorPolicy<'a>,
    noise: Normal<f64>,
    rng: &'a mut R,
}

impl<'a, R: Rng> NoisyPolicy<'a, R> {
    pub fn new(actor: &'a SlimmableMlp, std: f64, rng: &'a mut R) -> Self {
        Self {
            inner: ActorPolicy::new(actor),
            noise: Normal::new(0.0, std.max(0.0)).expect("finite noise scale"),
            rng,
        }
    }
}

impl<R: Rng> AuxPolicy for NoisyPolicy<'_, R> {
    fn act(&mut self, state: &[f32]) -> Result<Vec<f32>> {
        let mut a = self.inner.act(state)?;
        for v in a.iter_mut() {
            *v = (*v + self.noise.sample(self.rng) as f32).clamp(-1.0, 1.0);
        }
        Ok(a)
    }
}

/// Uniform actions over `[-1, 1]^dim`.
pub struct UniformPolicy<'a, R> {
    dim: usize,
    rng: &'a mut R,
}

impl<'a, R: Rng> UniformPolicy<'a, R> {
    pub fn new(dim: usize, rng: &'a mut R) -> Self {
        Self { dim, rng }
    }
}

impl<R: Rng> AuxPolicy for UniformPolicy<'_, R> {
    fn act(&mut self, _state: &[f32]) -> Result<Vec<f32>> {
        Ok((0..self.dim).map(|_| self.rng.random_range(-1.0f32..=1.0)).collect())
    }
}

/// The same action at every step.
pub struct ConstantPolicy(pub Vec<f32>);

impl AuxPolicy for ConstantPolicy {
    fn act(&mut self, _state: &[f32]) -> Result<Vec<f32>> {
        Ok(self.0.clone())
    }
}
