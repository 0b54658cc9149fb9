//! Context-adaptive drone navigation with slimmable networks.
//!
//! The crate is split along the training pipeline:
//!
//! - [`worldsim`]: voxel worlds, depth sensing, drone kinematics and the
//!   observation FIFO.
//! - [`pathoracle`]: motion graph, A* shortest paths, region partitioning and
//!   supervised dataset labeling.
//! - [`slimnet`]: a dense network whose hidden layers can be slimmed by a
//!   factor `rho` and whose input layer can be gated by sensor power levels.
//! - [`distill`]: sandwich-rule distillation training of the navigation
//!   network and its evaluation in the simulator.
//! - [`auxtrain`]: the reward, episode runner, TD3 learner and curriculum that
//!   train the auxiliary network choosing `rho` or sensor power at run time.

pub mod auxtrain;
pub mod distill;
pub mod error;
pub mod pathoracle;
pub mod slimnet;
pub mod worldsim;

pub use error::{Error, Result};
