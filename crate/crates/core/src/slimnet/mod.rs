//! Dense networks with universal width slimming and power-gated inputs.
//!
//! A slimming factor `rho` keeps the first `ceil(rho * q)` nodes of every
//! hidden layer of width `q`; the remaining nodes and all weights touching
//! them are skipped. Input gating zeroes the contribution of inputs whose
//! sensor rays were not acquired.

mod io;
mod mask;
mod network;
mod optim;
mod spec;

pub use io::{decode_weights, encode_weights, load_weights, save_weights, weights_comments};
pub use mask::{input_mask_from_power, InputLayout, PoweredBlock, SlimMask};
pub use network::{dot, mse_loss, ForwardCache, Gradients, Layer, ParamId, SlimmableMlp};
pub use optim::{Adam, Optimizer, Sgd};
pub use spec::{active_params, active_width, param_law_coefficients, ActiveParams, MlpSpec, OutputActivation, Scalar};
