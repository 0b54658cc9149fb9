use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spawn-goal distance schedule driven by evaluation success.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurriculumConfig {
    /// Meters.
    pub start: f64,
    pub increment: f64,
    pub max: f64,
    pub threshold: f64,
    /// Episodes per evaluation.
    pub eval_episodes: usize,
    /// Training episodes between evaluations.
    pub eval_interval: usize,
    /// Tasks are drawn with distance in `[d - window, d]`.
    pub window: f64,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        Self {
            start: 10.0,
            increment: 10.0,
            max: 40.0,
            threshold: 0.8,
            eval_episodes: 20,
            eval_interval: 10,
            window: 2.0,
        }
    }
}

impl CurriculumConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.start > 0.0 && self.increment >= 0.0 && self.max >= self.start) {
            return Err(Error::config(format!("curriculum distances inconsistent: {self:?}")));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::config(format!("curriculum threshold {} outside [0, 1]", self.threshold)));
        }
        if self.eval_episodes == 0 || self.eval_interval == 0 {
            return Err(Error::config("curriculum evaluation sizes must be positive"));
        }
        if !(self.window >= 0.0 && self.window < self.start) {
            return Err(Error::config("curriculum window must be below the start distance"));
        }
        Ok(())
    }
}

/// Next spawn-goal distance after a history of evaluation success rates:
/// one increment per evaluation at or above the threshold, capped at `max`.
pub fn curriculum_controller(history: &[f64], cfg: &CurriculumConfig) -> f64 {
    let mut d = cfg.start;
    for &rate in history {
        if rate >= cfg.threshold {
            d = (d + cfg.increment).min(cfg.max);
        }
    }
    d
}
