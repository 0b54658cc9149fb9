use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::eval::body_target;
use super::sandwich::{sandwich_gradients, sandwich_masks, DistillConfig, Mode, Scratch};
use crate::error::{Error, Result};
use crate::pathoracle::Dataset;
use crate::slimnet::{Adam, Gradients, MlpSpec, Optimizer, SlimMask, SlimmableMlp};
use crate::worldsim::sensor_input_layout;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean hard-target loss over the epoch's batches.
    pub train_hard: f64,
    /// Mean summed soft-target loss over the epoch's batches.
    pub train_soft: f64,
    /// Validation MSE of the super-network.
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub mode: Mode,
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
    /// `(setting label, RMSE in meters)` filled in by the caller.
    pub rmse_grid: Vec<(String, f64)>,
}

impl TrainReport {
    /// One record per epoch, JSON object per line.
    pub fn to_json_lines(&self) -> String {
        let mut s = String::new();
        for e in &self.epochs {
            let _ = writeln!(
                s,
                "{{\"mode\":\"{}\",\"seed\":{},\"epoch\":{},\"train_hard\":{},\"train_soft\":{},\"val_loss\":{},\"best\":{}}}",
                self.mode,
                self.seed,
                e.epoch,
                e.train_hard,
                e.train_soft,
                e.val_loss,
                e.epoch == self.best_epoch
            );
        }
        s
    }

    /// Summary CSV: header row and one data row.
    pub fn summary_csv(&self) -> String {
        let mut s = String::from("mode,seed,epochs,best_epoch,best_val_loss,stopped_early");
        for (label, _) in &self.rmse_grid {
            let _ = write!(s, ",rmse_{label}");
        }
        let _ = write!(
            s,
            "\n{},{},{},{},{},{}",
            self.mode,
            self.seed,
            self.epochs.len(),
            self.best_epoch,
            self.best_val_loss,
            self.stopped_early
        );
        for (_, v) in &self.rmse_grid {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
        s
    }
}

struct Prepared {
    inputs: Vec<Vec<f32>>,
    targets: Vec<Vec<f32>>,
}

fn prepare(data: &Dataset) -> Prepared {
    Prepared {
        inputs: data.samples.iter().map(|s| s.fifo.clone()).collect(),
        targets: data
            .samples
            .iter()
            .map(|s| body_target(s.target, s.heading, data.max_step).to_vec())
            .collect(),
    }
}

fn mean_loss(net: &SlimmableMlp, data: &Prepared) -> Result<f64> {
    let mask = SlimMask::full(net.spec());
    let mut sum = 0.0;
    for (x, t) in data.inputs.iter().zip(&data.targets) {
        let y = net.forward(x, &mask)?;
        sum += y.iter().zip(t).map(|(a, b)| ((a - b) as f64).powi(2)).sum::<f64>() / y.len() as f64;
    }
    Ok(sum / data.inputs.len() as f64)
}

fn check_data(train: &Dataset, val: &Dataset, spec: &MlpSpec) -> Result<()> {
    if train.is_empty() || val.is_empty() {
        return Err(Error::config(format!(
            "training needs samples (train {}, validation {})",
            train.len(),
            val.len()
        )));
    }
    for d in [train, val] {
        if d.input_width() != spec.inputs {
            return Err(Error::config(format!(
                "dataset input width {} does not match network inputs {}",
                d.input_width(),
                spec.inputs
            )));
        }
    }
    if train.fifo_depth != val.fifo_depth || train.max_step != val.max_step {
        return Err(Error::config("training and validation sets use different layouts"));
    }
    if spec.outputs != 3 {
        return Err(Error::config("navigation network must have three outputs"));
    }
    Ok(())
}

/// Mini-batch training with sandwich distillation and early stopping on
/// the super-network's validation loss. Returns the best snapshot.
pub fn train_navigation(
    train: &Dataset,
    val: &Dataset,
    spec: &MlpSpec,
    cfg: &DistillConfig,
    mode: Mode,
    seed: u64,
) -> Result<(SlimmableMlp, TrainReport)> {
    cfg.validate()?;
    spec.validate()?;
    check_data(train, val, spec)?;
    let train_p = prepare(train);
    let val_p = prepare(val);
    let layout = sensor_input_layout(train.fifo_depth);

    let mut net = SlimmableMlp::new(spec.clone(), seed)?;
    let mut opt = Adam::new(&net, cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grads = Gradients::zeros_like(&net);
    let mut scratch = Scratch::new();
    let mut order: Vec<usize> = (0..train_p.inputs.len()).collect();

    let mut report = TrainReport {
        mode,
        seed,
        epochs: Vec::new(),
        best_epoch: 0,
        best_val_loss: f64::INFINITY,
        stopped_early: false,
        rmse_grid: Vec::new(),
    };
    let mut best = net.clone();
    let mut since_best = 0;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let (mut hard, mut soft, mut batches) = (0.0, 0.0, 0usize);
        for chunk in order.chunks(cfg.batch_size) {
            let inputs: Vec<&[f32]> = chunk.iter().map(|&i| train_p.inputs[i].as_slice()).collect();
            let targets: Vec<&[f32]> = chunk.iter().map(|&i| train_p.targets[i].as_slice()).collect();
            let masks = sandwich_masks(net.spec(), mode, cfg, Some(&layout), &mut rng)?;
            grads.clear();
            let l = sandwich_gradients(&net, &inputs, &targets, &masks, &mut grads, &mut scratch)?;
            opt.step(&mut net, &grads)?;
            hard += l.hard;
            soft += l.soft;
            batches += 1;
        }
        let val_loss = mean_loss(&net, &val_p)?;
        if !val_loss.is_finite() {
            return Err(Error::Training(format!("validation loss is {val_loss} at epoch {epoch}")));
        }
        report.epochs.push(EpochRecord {
            epoch,
            train_hard: hard / batches as f64,
            train_soft: soft / batches as f64,
            val_loss,
        });
        if val_loss < report.best_val_loss {
            report.best_val_loss = val_loss;
            report.best_epoch = epoch;
            best = net.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                report.stopped_early = epoch < cfg.max_epochs;
                break;
            }
        }
    }
    Ok((best, report))
}

/// Trains `cfg.seeds` runs with consecutive seeds from `cfg.seed` and keeps
/// the one with the lowest validation loss. All reports are returned.
pub fn train_navigation_best(
    train: &Dataset,
    val: &Dataset,
    spec: &MlpSpec,
    cfg: &DistillConfig,
    mode: Mode,
) -> Result<(SlimmableMlp, Vec<TrainReport>)> {
    let mut best: Option<(SlimmableMlp, f64)> = None;
    let mut reports = Vec::with_capacity(cfg.seeds);
    for k in 0..cfg.seeds as u64 {
        let (net, report) = train_navigation(train, val, spec, cfg, mode, cfg.seed + k)?;
        if best.as_ref().is_none_or(|(_, v)| report.best_val_loss < *v) {
            best = Some((net, report.best_val_loss));
        }
        reports.push(report);
    }
    Ok((best.expect("at least one seed").0, reports))
}
