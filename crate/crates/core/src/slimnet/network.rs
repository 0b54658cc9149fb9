use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mask::SlimMask;
use super::spec::{MlpSpec, OutputActivation, Scalar};
use crate::error::{Error, Result};

/// Dot product with a fixed eight-lane accumulation order.
///
/// The order depends only on the slice length, so a prefix of a row gives the
/// same bits whether it lives in the full matrix or in a truncated copy.
#[inline]
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [S::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] = acc[k] + x[k] * y[k];
        }
    }
    let mut tail = S::zero();
    for (&x, &y) in ra.iter().zip(rb) {
        tail = tail + x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

#[inline]
fn axpy<S: Scalar>(y: &mut [S], alpha: S, x: &[S]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

/// Dense layer with a row-major `outputs x inputs` weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<S> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<S>,
    pub biases: Vec<S>,
}

impl<S: Scalar> Layer<S> {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![S::zero(); inputs * outputs],
            biases: vec![S::zero(); outputs],
        }
    }

    #[inline]
    pub fn row(&self, j: usize) -> &[S] {
        &self.weights[j * self.inputs..(j + 1) * self.inputs]
    }
}

/// Identifies a single weight or bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamId {
    Weight { layer: usize, row: usize, col: usize },
    Bias { layer: usize, row: usize },
}

/// Feed-forward network supporting width slimming and input gating.
#[derive(Debug, Clone, PartialEq)]
pub struct SlimmableMlp<S: Scalar = f32> {
    spec: MlpSpec,
    seed: u64,
    layers: Vec<Layer<S>>,
}

/// Activations recorded by a forward pass, consumed by backward.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache<S> {
    /// `buffers[0]` is the gated input, `buffers[l + 1]` the output of layer `l`.
    buffers: Vec<Vec<S>>,
    /// Active width of every buffer.
    widths: Vec<usize>,
    active_inputs: Option<Vec<bool>>,
}

impl<S: Scalar> ForwardCache<S> {
    pub fn new() -> Self {
        Self {
            buffers: Vec::new(),
            widths: Vec::new(),
            active_inputs: None,
        }
    }

    pub fn output(&self) -> &[S] {
        self.buffers.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Active widths from input to output.
    pub fn widths(&self) -> &[usize] {
        &self.widths
    }
}

/// Parameter-shaped gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<S> {
    pub layers: Vec<Layer<S>>,
}

impl<S: Scalar> Gradients<S> {
    pub fn zeros_like(net: &SlimmableMlp<S>) -> Self {
        Self {
            layers: net.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect(),
        }
    }

    pub fn clear(&mut self) {
        for l in &mut self.layers {
            l.weights.fill(S::zero());
            l.biases.fill(S::zero());
        }
    }

    pub fn add_assign(&mut self, other: &Gradients<S>) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            axpy(&mut a.weights, S::one(), &b.weights);
            axpy(&mut a.biases, S::one(), &b.biases);
        }
    }

    pub fn scale(&mut self, k: S) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w = *w * k);
            l.biases.iter_mut().for_each(|b| *b = *b * k);
        }
    }

    pub fn get(&self, id: ParamId) -> S {
        match id {
            ParamId::Weight { layer, row, col } => {
                let l = &self.layers[layer];
                l.weights[row * l.inputs + col]
            }
            ParamId::Bias { layer, row } => self.layers[layer].biases[row],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &S> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.biases.iter()))
    }

    pub fn l2_norm(&self) -> f64 {
        self.iter().map(|g| g.as_f64().powi(2)).sum::<f64>().sqrt()
    }

    /// First non-finite entry, for diagnostics.
    pub fn first_non_finite(&self) -> Option<(ParamId, f64)> {
        for (li, l) in self.layers.iter().enumerate() {
            if let Some(k) = l.weights.iter().position(|w| !w.is_finite()) {
                let id = ParamId::Weight {
                    layer: li,
                    row: k / l.inputs,
                    col: k % l.inputs,
                };
                return Some((id, l.weights[k].as_f64()));
            }
            if let Some(k) = l.biases.iter().position(|b| !b.is_finite()) {
                return Some((ParamId::Bias { layer: li, row: k }, l.biases[k].as_f64()));
            }
        }
        None
    }
}

impl<S: Scalar> SlimmableMlp<S> {
    /// He-uniform hidden layers, Xavier-uniform output layer, zero biases.
    pub fn new(spec: MlpSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let widths = spec.widths();
        let n_layers = widths.len() - 1;
        let mut layers = Vec::with_capacity(n_layers);
        for (l, w) in widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = if l + 1 < n_layers {
                (6.0 / fan_in as f64).sqrt()
            } else {
                (6.0 / (fan_in + fan_out) as f64).sqrt()
            };
            let mut layer = Layer::zeros(fan_in, fan_out);
            for wgt in &mut layer.weights {
                *wgt = S::from_f64(rng.random_range(-bound..bound));
            }
            layers.push(layer);
        }
        Ok(Self { spec, seed, layers })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layers(&self) -> &[Layer<S>] {
        &self.layers
    }

    pub(crate) fn from_parts(spec: MlpSpec, seed: u64, layers: Vec<Layer<S>>) -> Result<Self> {
        spec.validate()?;
        let widths = spec.widths();
        if layers.len() != widths.len() - 1
            || layers
                .iter()
                .zip(widths.windows(2))
                .any(|(l, w)| l.inputs != w[0] || l.outputs != w[1] || l.weights.len() != w[0] * w[1] || l.biases.len() != w[1])
        {
            return Err(Error::contract("layer shapes do not match the spec"));
        }
        Ok(Self { spec, seed, layers })
    }

    pub fn num_params(&self) -> usize {
        self.spec.num_params()
    }

    pub fn param(&self, id: ParamId) -> S {
        match id {
            ParamId::Weight { layer, row, col } => self.layers[layer].weights[row * self.layers[layer].inputs + col],
            ParamId::Bias { layer, row } => self.layers[layer].biases[row],
        }
    }

    pub fn set_param(&mut self, id: ParamId, value: S) {
        match id {
            ParamId::Weight { layer, row, col } => {
                let n = self.layers[layer].inputs;
                self.layers[layer].weights[row * n + col] = value;
            }
            ParamId::Bias { layer, row } => self.layers[layer].biases[row] = value,
        }
    }

    pub fn param_ids(&self) -> impl Iterator<Item = ParamId> + '_ {
        self.layers.iter().enumerate().flat_map(|(layer, l)| {
            let weights = (0..l.outputs).flat_map(move |row| (0..l.inputs).map(move |col| ParamId::Weight { layer, row, col }));
            let biases = (0..l.outputs).map(move |row| ParamId::Bias { layer, row });
            weights.chain(biases)
        })
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<S>] {
        &mut self.layers
    }

    pub fn cast<T: Scalar>(&self) -> SlimmableMlp<T> {
        SlimmableMlp {
            spec: self.spec.clone(),
            seed: self.seed,
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    inputs: l.inputs,
                    outputs: l.outputs,
                    weights: l.weights.iter().map(|w| T::from_f64(w.as_f64())).collect(),
                    biases: l.biases.iter().map(|b| T::from_f64(b.as_f64())).collect(),
                })
                .collect(),
        }
    }

    pub fn forward(&self, x: &[S], mask: &SlimMask) -> Result<Vec<S>> {
        let mut cache = ForwardCache::new();
        self.forward_cached(x, mask, &mut cache)?;
        Ok(cache.output().to_vec())
    }

    /// Forward pass over the active sub-network only. Deactivated hidden
    /// nodes are never computed and gated inputs contribute zero.
    pub fn forward_cached(&self, x: &[S], mask: &SlimMask, cache: &mut ForwardCache<S>) -> Result<()> {
        if x.len() != self.spec.inputs {
            return Err(Error::contract(format!(
                "input width {} != network inputs {}",
                x.len(),
                self.spec.inputs
            )));
        }
        mask.check(&self.spec)?;
        let n_layers = self.layers.len();
        cache.buffers.resize_with(n_layers + 1, Vec::new);
        cache.widths.clear();
        cache.widths.push(self.spec.inputs);
        cache.widths.extend_from_slice(&mask.active_hidden);
        cache.widths.push(self.spec.outputs);

        let input = &mut cache.buffers[0];
        input.clear();
        match &mask.active_inputs {
            Some(m) => input.extend(x.iter().zip(m).map(|(&v, &on)| if on { v } else { S::zero() })),
            None => input.extend_from_slice(x),
        }
        cache.active_inputs.clone_from(&mask.active_inputs);

        for (l, layer) in self.layers.iter().enumerate() {
            let (n_in, n_out) = (cache.widths[l], cache.widths[l + 1]);
            let (head, tail) = cache.buffers.split_at_mut(l + 1);
            let inp = &head[l][..n_in];
            let out = &mut tail[0];
            out.clear();
            for j in 0..n_out {
                let z = dot(&layer.row(j)[..n_in], inp) + layer.biases[j];
                out.push(z);
            }
            if l + 1 < n_layers {
                for z in out.iter_mut() {
                    *z = z.max(S::zero());
                }
            } else if let OutputActivation::Tanh { scale } = self.spec.output_activation {
                let s = S::from_f64(scale);
                for z in out.iter_mut() {
                    *z = s * z.tanh();
                }
            }
        }
        Ok(())
    }

    /// Accumulates parameter gradients of `upstream . output` into `grads`.
    pub fn backward(&self, cache: &ForwardCache<S>, upstream: &[S], grads: &mut Gradients<S>) {
        self.backward_impl(cache, upstream, Some(grads), false);
    }

    /// Like [`SlimmableMlp::backward`] but also returns the gradient with
    /// respect to the input (zero for gated inputs). Parameter gradients are
    /// skipped when `grads` is `None`.
    pub fn backward_with_input(&self, cache: &ForwardCache<S>, upstream: &[S], grads: Option<&mut Gradients<S>>) -> Vec<S> {
        self.backward_impl(cache, upstream, grads, true)
    }

    fn backward_impl(&self, cache: &ForwardCache<S>, upstream: &[S], mut grads: Option<&mut Gradients<S>>, want_input: bool) -> Vec<S> {
        let n_layers = self.layers.len();
        let out = cache.output();
        assert_eq!(upstream.len(), out.len(), "upstream gradient width mismatch");
        let mut delta: Vec<S> = match self.spec.output_activation {
            OutputActivation::Identity => upstream.to_vec(),
            OutputActivation::Tanh { scale } => {
                let s = S::from_f64(scale);
                upstream
                    .iter()
                    .zip(out)
                    .map(|(&g, &y)| {
                        let t = y / s;
                        g * s * (S::one() - t * t)
                    })
                    .collect()
            }
        };
        for l in (0..n_layers).rev() {
            let layer = &self.layers[l];
            let (n_in, n_out) = (cache.widths[l], cache.widths[l + 1]);
            let inp = &cache.buffers[l][..n_in];
            if let Some(g) = grads.as_deref_mut() {
                let gl = &mut g.layers[l];
                for j in 0..n_out {
                    let d = delta[j];
                    let row = &mut gl.weights[j * layer.inputs..j * layer.inputs + n_in];
                    axpy(row, d, inp);
                    gl.biases[j] = gl.biases[j] + d;
                }
            }
            if l == 0 && !want_input {
                break;
            }
            let mut din = vec![S::zero(); n_in];
            for j in 0..n_out {
                axpy(&mut din, delta[j], &layer.row(j)[..n_in]);
            }
            if l > 0 {
                for (d, &a) in din.iter_mut().zip(inp) {
                    if a <= S::zero() {
                        *d = S::zero();
                    }
                }
            } else if let Some(m) = &cache.active_inputs {
                for (d, &on) in din.iter_mut().zip(m) {
                    if !on {
                        *d = S::zero();
                    }
                }
            }
            delta = din;
        }
        if want_input {
            delta
        } else {
            Vec::new()
        }
    }

    /// Polyak averaging: `self <- tau * source + (1 - tau) * self`.
    pub fn soft_update_from(&mut self, source: &SlimmableMlp<S>, tau: f64) {
        let t = S::from_f64(tau);
        let keep = S::from_f64(1.0 - tau);
        for (dst, src) in self.layers.iter_mut().zip(&source.layers) {
            for (d, &s) in dst.weights.iter_mut().zip(&src.weights) {
                *d = t * s + keep * *d;
            }
            for (d, &s) in dst.biases.iter_mut().zip(&src.biases) {
                *d = t * s + keep * *d;
            }
        }
    }

    /// Squared L2 distance between the parameters of two networks.
    pub fn distance_sq(&self, other: &SlimmableMlp<S>) -> f64 {
        self.layers
            .iter()
            .zip(&other.layers)
            .map(|(a, b)| {
                a.weights
                    .iter()
                    .zip(&b.weights)
                    .chain(a.biases.iter().zip(&b.biases))
                    .map(|(x, y)| (x.as_f64() - y.as_f64()).powi(2))
                    .sum::<f64>()
            })
            .sum()
    }

    /// A standalone network holding only the hidden nodes active under `mask`.
    /// Gated inputs are dropped from the first layer.
    pub fn truncated(&self, mask: &SlimMask) -> Result<Self> {
        mask.check(&self.spec)?;
        let kept_inputs: Vec<usize> = (0..self.spec.inputs).filter(|&i| mask.input_active(i)).collect();
        let mut widths = vec![kept_inputs.len()];
        widths.extend_from_slice(&mask.active_hidden);
        widths.push(self.spec.outputs);
        let mut layers = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut t = Layer::zeros(widths[l], widths[l + 1]);
            for j in 0..widths[l + 1] {
                let row = layer.row(j);
                let dst = &mut t.weights[j * widths[l]..(j + 1) * widths[l]];
                if l == 0 {
                    for (d, &i) in dst.iter_mut().zip(&kept_inputs) {
                        *d = row[i];
                    }
                } else {
                    dst.copy_from_slice(&row[..widths[l]]);
                }
                t.biases[j] = layer.biases[j];
            }
            layers.push(t);
        }
        let spec = MlpSpec {
            inputs: widths[0],
            hidden: mask.active_hidden.clone(),
            outputs: self.spec.outputs,
            output_activation: self.spec.output_activation,
        };
        Self::from_parts(spec, self.seed, layers)
    }
}

/// Mean squared error over all entries and its gradient with respect to
/// `output`, scaled by `weight`.
pub fn mse_loss<S: Scalar>(output: &[S], target: &[S], weight: f64) -> (f64, Vec<S>) {
    let n = output.len() as f64;
    let mut loss = 0.0;
    let k = S::from_f64(2.0 * weight / n);
    let grad = output
        .iter()
        .zip(target)
        .map(|(&y, &t)| {
            let r = y - t;
            loss += r.as_f64().powi(2);
            k * r
        })
        .collect();
    (loss / n, grad)
}
