use super::network::{Gradients, SlimmableMlp};
use super::spec::Scalar;
use crate::error::{Error, Result};

/// Applies accumulated gradients to a network (gradient descent).
pub trait Optimizer<S: Scalar> {
    fn step(&mut self, net: &mut SlimmableMlp<S>, grads: &Gradients<S>) -> Result<()>;
}

fn ensure_finite<S: Scalar>(grads: &Gradients<S>) -> Result<()> {
    match grads.first_non_finite() {
        None => Ok(()),
        Some((id, value)) => Err(Error::Training(format!(
            "non-finite gradient {value} at {id:?} (gradient norm {})",
            grads.l2_norm()
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sgd {
    pub lr: f64,
}

impl<S: Scalar> Optimizer<S> for Sgd {
    fn step(&mut self, net: &mut SlimmableMlp<S>, grads: &Gradients<S>) -> Result<()> {
        ensure_finite(grads)?;
        let lr = S::from_f64(self.lr);
        for (layer, g) in net.layers_mut().iter_mut().zip(&grads.layers) {
            for (w, &d) in layer.weights.iter_mut().zip(&g.weights) {
                *w = *w - lr * d;
            }
            for (b, &d) in layer.biases.iter_mut().zip(&g.biases) {
                *b = *b - lr * d;
            }
        }
        Ok(())
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam<S: Scalar = f32> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Gradients<S>,
    v: Gradients<S>,
}

impl<S: Scalar> Adam<S> {
    pub fn new(net: &SlimmableMlp<S>, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }
}

impl<S: Scalar> Optimizer<S> for Adam<S> {
    fn step(&mut self, net: &mut SlimmableMlp<S>, grads: &Gradients<S>) -> Result<()> {
        ensure_finite(grads)?;
        self.t += 1;
        let (b1, b2) = (S::from_f64(self.beta1), S::from_f64(self.beta2));
        let (c1, c2) = (S::one() - b1, S::one() - b2);
        let t = self.t as i32;
        let step_size = S::from_f64(self.lr / (1.0 - self.beta1.powi(t)));
        let v_corr = S::from_f64(1.0 / (1.0 - self.beta2.powi(t)));
        let eps = S::from_f64(self.eps);
        let update = |p: &mut [S], g: &[S], m: &mut [S], v: &mut [S]| {
            for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + c1 * g;
                *v = b2 * *v + c2 * g * g;
                *p = *p - step_size * *m / ((*v * v_corr).sqrt() + eps);
            }
        };
        for (((layer, g), m), v) in net
            .layers_mut()
            .iter_mut()
            .zip(&grads.layers)
            .zip(self.m.layers.iter_mut())
            .zip(self.v.layers.iter_mut())
        {
            update(&mut layer.weights, &g.weights, &mut m.weights, &mut v.weights);
            update(&mut layer.biases, &g.biases, &mut m.biases, &mut v.biases);
        }
        Ok(())
    }
}
