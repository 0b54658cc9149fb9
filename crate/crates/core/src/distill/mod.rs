//! Supervised training of the navigation network against A* motions, with
//! sandwich-rule distillation over slimming factors or sensor power levels.

mod eval;
mod sandwich;
mod train;

pub use eval::{body_target, evaluate_navigation, rmse, rmse_at, setting_mask, NavEval, NavPolicy};
pub use sandwich::{sandwich_gradients, sandwich_masks, BatchLosses, DistillConfig, Mode, Scratch};
pub use train::{train_navigation, train_navigation_best, EpochRecord, TrainReport};
