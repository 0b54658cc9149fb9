use super::episode::EpisodeLog;
use crate::error::{Error, Result};
use crate::slimnet::{active_params, MlpSpec};
use crate::worldsim::MAX_POWER;

/// Mean resource use relative to the static maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaSummary {
    /// Mean active parameters over those of the super-network.
    pub eta_m: f64,
    /// Mean summed power levels over the maximum sum.
    pub eta_w: f64,
    pub mean_rho: f64,
    pub mean_p_f: f64,
    pub mean_p_d: f64,
    /// Successful episodes contributing.
    pub episodes: usize,
    pub steps: usize,
}

/// Resource summary over the successful episodes among `logs`.
pub fn compute_eta(logs: &[EpisodeLog], spec: &MlpSpec) -> Result<EtaSummary> {
    let full = active_params(spec, 1.0)?.exact as f64;
    let (mut m, mut rho, mut pf, mut pd) = (0.0, 0.0, 0.0, 0.0);
    let mut steps = 0usize;
    let mut episodes = 0usize;
    for log in logs.iter().filter(|l| l.reached()) {
        episodes += 1;
        for s in &log.steps {
            m += active_params(spec, s.rho)?.exact as f64;
            rho += s.rho;
            pf += s.p_f as f64;
            pd += s.p_d as f64;
            steps += 1;
        }
    }
    if steps == 0 {
        return Err(Error::config("no successful episode steps to summarize"));
    }
    let n = steps as f64;
    let (mean_p_f, mean_p_d) = (pf / n, pd / n);
    Ok(EtaSummary {
        eta_m: m / n / full,
        eta_w: (mean_p_f + mean_p_d) / (2.0 * MAX_POWER as f64),
        mean_rho: rho / n,
        mean_p_f,
        mean_p_d,
        episodes,
        steps,
    })
}

/// Whole percent, halves rounded away from zero after trimming float noise.
pub fn round_percent(fraction: f64) -> i64 {
    ((fraction * 100.0 * 1e6).round() / 1e6).round() as i64
}
