use navislim::auxtrain::toy::{improvement, line_task_training};
use navislim::auxtrain::{
    q_returns, run_episode, ConstantPolicy, Controller, EpisodeConfig, RewardWeights, Td3Config,
};
use navislim::distill::{
    sandwich_gradients, sandwich_masks, train_navigation, DistillConfig, Mode, NavPolicy, Scratch,
};
use navislim::pathoracle::{Dataset, LabeledSample};
use navislim::slimnet::{mse_loss, Gradients, MlpSpec, OutputActivation, ParamId, SlimMask, SlimmableMlp};
use navislim::worldsim::{generate_world, sensor_input_layout, Terminal, WorldParams, OBS_WIDTH};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sandwich_loss(net: &SlimmableMlp<f64>, xs: &[Vec<f64>], ts: &[Vec<f64>], masks: &[SlimMask], soft: &[Vec<f64>]) -> f64 {
    let w = 1.0 / xs.len() as f64;
    let full = SlimMask::full(net.spec());
    let mut total = 0.0;
    for (x, t) in xs.iter().zip(ts) {
        total += w * mse_loss(&net.forward(x, &full).unwrap(), t, 1.0).0;
    }
    for m in masks {
        for (x, s) in xs.iter().zip(soft) {
            total += w * mse_loss(&net.forward(x, m).unwrap(), s, 1.0).0;
        }
    }
    total
}

#[test]
fn soft_targets_are_held_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let spec = MlpSpec::new(5, vec![9, 7], 3, OutputActivation::Identity).unwrap();
    let mut net = SlimmableMlp::<f64>::new(spec.clone(), 3).unwrap();
    let ids: Vec<ParamId> = net.param_ids().collect();
    for &id in &ids {
        if let ParamId::Bias { .. } = id {
            net.set_param(id, rng.random_range(-0.3..0.3));
        }
    }
    let xs: Vec<Vec<f64>> = (0..6).map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let ts: Vec<Vec<f64>> = (0..6).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let cfg = DistillConfig::default();
    let masks = sandwich_masks(&spec, Mode::Compute, &cfg, None, &mut rng).unwrap();
    assert_eq!(masks.len(), 1 + cfg.n_random_rhos);

    let inputs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    let targets: Vec<&[f64]> = ts.iter().map(Vec::as_slice).collect();
    let mut grads = Gradients::zeros_like(&net);
    sandwich_gradients(&net, &inputs, &targets, &masks, &mut grads, &mut Scratch::new()).unwrap();

    let full = SlimMask::full(&spec);
    let soft: Vec<Vec<f64>> = xs.iter().map(|x| net.forward(x, &full).unwrap()).collect();
    for _ in 0..40 {
        let id = ids[rng.random_range(0..ids.len())];
        let p = net.param(id);
        let h = 1e-6;
        net.set_param(id, p + h);
        let plus = sandwich_loss(&net, &xs, &ts, &masks, &soft);
        net.set_param(id, p - h);
        let minus = sandwich_loss(&net, &xs, &ts, &masks, &soft);
        net.set_param(id, p);
        let numeric = (plus - minus) / (2.0 * h);
        let analytic = grads.get(id);
        let scale = numeric.abs().max(analytic.abs());
        if scale > 1e-10 {
            assert!((numeric - analytic).abs() / scale < 1e-5, "{id:?}: {numeric} vs {analytic}");
        }
    }
}

#[test]
fn power_sandwich_starts_at_minimum_power() {
    let layout = sensor_input_layout(2);
    let spec = MlpSpec::new(layout.width(), vec![8], 3, OutputActivation::Identity).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let masks = sandwich_masks(&spec, Mode::Sense, &DistillConfig::default(), Some(&layout), &mut rng).unwrap();
    let first = masks[0].active_inputs.as_ref().unwrap();
    let on = first.iter().filter(|&&b| b).count();
    assert_eq!(on, 2 * (16 + (OBS_WIDTH - 64 - 36)));
    assert!(masks.iter().all(|m| m.active_hidden == spec.hidden));
}

fn line_data(n: usize, sign: f32) -> Dataset {
    Dataset {
        obs_width: 2,
        fifo_depth: 1,
        max_step: 2.0,
        samples: (0..n)
            .map(|k| LabeledSample {
                fifo: vec![1.0, k as f32 / n as f32],
                target: [sign * 2.0, 0.0, 0.0],
                heading: 0.0,
            })
            .collect(),
    }
}

#[test]
fn early_stop_returns_the_best_epoch() {
    let spec = MlpSpec::new(2, vec![8], 3, OutputActivation::Identity).unwrap();
    let cfg = DistillConfig {
        patience: 1,
        batch_size: 8,
        lr: 1e-2,
        max_epochs: 50,
        ..DistillConfig::default()
    };
    let (net, report) = train_navigation(&line_data(64, 1.0), &line_data(16, -1.0), &spec, &cfg, Mode::Compute, 4).unwrap();
    assert_eq!(report.epochs.len(), 2);
    assert_eq!(report.best_epoch, 1);
    assert!(report.stopped_early);
    assert!(report.epochs[1].val_loss > report.epochs[0].val_loss);
    let val = line_data(16, -1.0);
    let mask = SlimMask::full(&spec);
    let mut loss = 0.0;
    for s in &val.samples {
        let y = net.forward(&s.fifo, &mask).unwrap();
        loss += mse_loss(&y, &[-1.0, 0.0, 0.0], 1.0).0;
    }
    assert!((loss / 16.0 - report.best_val_loss).abs() < 1e-6);
}

#[test]
fn training_is_deterministic() {
    let spec = MlpSpec::new(2, vec![6, 6], 3, OutputActivation::Identity).unwrap();
    let cfg = DistillConfig { max_epochs: 5, ..DistillConfig::default() };
    let a = train_navigation(&line_data(40, 1.0), &line_data(8, 1.0), &spec, &cfg, Mode::Compute, 9).unwrap();
    let b = train_navigation(&line_data(40, 1.0), &line_data(8, 1.0), &spec, &cfg, Mode::Compute, 9).unwrap();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    let c = train_navigation(&line_data(40, 1.0), &line_data(8, 1.0), &spec, &cfg, Mode::Compute, 10).unwrap();
    assert_ne!(a.0, c.0);
}

#[test]
fn logged_episodes_satisfy_the_return_recursion() {
    let grid = generate_world(&WorldParams { seed: 4, ..WorldParams::default() }).unwrap();
    let cfg = EpisodeConfig::default();
    let spec = MlpSpec::new(OBS_WIDTH * cfg.sim.fifo_depth, vec![16], 3, OutputActivation::Identity).unwrap();
    let net = SlimmableMlp::new(spec, 5).unwrap();
    let nav = NavPolicy::new(&net, cfg.sim.max_step);
    let weights = RewardWeights::default();
    for (k, a) in [-1.0f32, 0.0, 1.0].into_iter().enumerate() {
        let mut policy = ConstantPolicy(vec![a]);
        let spawn = [5.5 + k as f64, 5.5, 2.5];
        let log = run_episode(
            &grid,
            &nav,
            Controller::Aux { policy: &mut policy, mode: Mode::Compute },
            &cfg,
            &weights,
            spawn,
            [40.5, 40.5, 2.5],
        )
        .unwrap();
        let r = log.rewards();
        let q = q_returns(&r, 0.99);
        for t in 0..r.len().saturating_sub(1) {
            assert!((q[t] - (r[t] + 0.99 * q[t + 1])).abs() < 1e-9);
        }
        let trans = log.transitions();
        assert_eq!(trans.len(), log.len());
        for (i, tr) in trans.iter().enumerate() {
            let last = i + 1 == trans.len();
            assert_eq!(tr.done, last && log.outcome != Terminal::Active);
        }
    }
}

#[test]
fn td3_improves_the_line_task() {
    let cfg = Td3Config {
        batch_size: 64,
        exploration_steps: 500,
        ..Td3Config::default()
    };
    let (before, after) = line_task_training(1, 5000, &cfg).unwrap();
    assert!(improvement(before, after) >= 0.5, "{before} -> {after}");
}

