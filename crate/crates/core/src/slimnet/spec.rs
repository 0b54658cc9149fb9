use std::fmt::Debug;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floating point type a network can be instantiated with.
pub trait Scalar: Float + Default + Debug + Send + Sync + 'static {
    fn from_f64(x: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// Activation applied to the output layer. Hidden layers always use ReLU.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OutputActivation {
    Identity,
    /// `scale * tanh(z)`.
    Tanh { scale: f64 },
}

/// Layer widths of a dense network: `inputs -> hidden[0] -> ... -> outputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub inputs: usize,
    pub hidden: Vec<usize>,
    pub outputs: usize,
    pub output_activation: OutputActivation,
}

impl MlpSpec {
    pub fn new(inputs: usize, hidden: Vec<usize>, outputs: usize, output_activation: OutputActivation) -> Result<Self> {
        let spec = Self {
            inputs,
            hidden,
            outputs,
            output_activation,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() {
            return Err(Error::config("network needs at least one hidden layer"));
        }
        if self.inputs == 0 || self.outputs == 0 || self.hidden.contains(&0) {
            return Err(Error::config(format!("network widths must be >= 1: {self:?}")));
        }
        if let OutputActivation::Tanh { scale } = self.output_activation {
            if !(scale.is_finite() && scale > 0.0) {
                return Err(Error::config(format!("tanh scale {scale} must be positive")));
            }
        }
        Ok(())
    }

    /// Widths of every layer including input and output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(self.inputs);
        w.extend_from_slice(&self.hidden);
        w.push(self.outputs);
        w
    }

    pub fn num_params(&self) -> usize {
        self.widths().windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

/// Active node count `ceil(rho * q)` of a hidden layer of width `q`.
///
/// A slack of 1e-9 absorbs the representation error of `rho`, so that e.g.
/// `0.7 * 10` counts 7 nodes rather than 8.
pub fn active_width(rho: f64, q: usize) -> usize {
    ((rho * q as f64 - 1e-9).ceil() as usize).clamp(1, q)
}

/// Active parameter count of the sub-network selected by `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveParams {
    /// Weights and biases touching only active nodes.
    pub exact: usize,
    /// Quadratic law evaluated without rounding node counts.
    pub continuous: f64,
}

/// Coefficients `(a, b, c)` of `m(rho) = a rho^2 + b rho + c`.
pub fn param_law_coefficients(spec: &MlpSpec) -> (f64, f64, f64) {
    let q = &spec.hidden;
    let (u, v) = (spec.inputs as f64, spec.outputs as f64);
    let a: f64 = q.windows(2).map(|w| (w[0] * w[1]) as f64).sum();
    let b = u * q[0] as f64 + v * q[q.len() - 1] as f64 + q.iter().map(|&x| x as f64).sum::<f64>();
    (a, b, v)
}

pub fn active_params(spec: &MlpSpec, rho: f64) -> Result<ActiveParams> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::contract(format!("slimming factor {rho} outside (0, 1]")));
    }
    let mut widths = vec![spec.inputs];
    widths.extend(spec.hidden.iter().map(|&q| active_width(rho, q)));
    widths.push(spec.outputs);
    let exact = widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    let (a, b, c) = param_law_coefficients(spec);
    Ok(ActiveParams {
        exact,
        continuous: a * rho * rho + b * rho + c,
    })
}
