use navislim::auxtrain::{compute_eta, evaluate_auxiliary, sample_tasks, train_auxiliary, AuxWorld, Setting};
use navislim::distill::{evaluate_navigation, rmse_at, train_navigation_best, Mode};
use navislim::pathoracle::{label_dataset, partition_regions, sample_paths, save_paths, Dataset, Region};
use navislim::slimnet::{active_params, load_weights, save_weights, MlpSpec, OutputActivation, SlimmableMlp};
use navislim::worldsim::{generate_world, SensorConfig, VoxelGrid, MAX_POWER};
use serde::{Deserialize, Serialize};

use crate::artifacts::{csv_bytes, ensure_parent, header, require, write_config_copy, write_csv, Layout};
use crate::config::{ExperimentConfig, Stage};
use crate::error::{CliError, CliResult};

/// Lines printed on success.
pub type Summary = Vec<String>;

pub fn gen_world(cfg: &ExperimentConfig) -> CliResult<Summary> {
    let layout = Layout::new(cfg);
    let mut out = Vec::new();
    for &seed in &cfg.world.seeds {
        let grid = generate_world(&cfg.world_params(seed))?;
        let path = layout.world(seed);
        ensure_parent(&path)?;
        grid.save(&path, &[header(cfg, Stage::World)])?;
        out.push(format!(
            "world {seed}: {:?} voxels, column density {:.3} -> {}",
            grid.dims(),
            grid.column_density(),
            path.display()
        ));
    }
    write_config_copy(cfg, "gen-world")?;
    Ok(out)
}

/// Worlds with their region split, in `world.seeds` order.
pub fn load_worlds(cfg: &ExperimentConfig) -> CliResult<Vec<AuxWorld>> {
    let layout = Layout::new(cfg);
    cfg.world
        .seeds
        .iter()
        .map(|&seed| {
            let path = layout.world(seed);
            require(cfg, Stage::World, &path, "gen-world")?;
            let grid = VoxelGrid::load(&path)?;
            let regions = partition_regions(&grid, cfg.world.region_fractions, &Region::ALL, cfg.world.region_gap)?;
            Ok(AuxWorld { grid, regions })
        })
        .collect()
}

fn region_plan(cfg: &ExperimentConfig, region: Region) -> (usize, (f64, f64), u64) {
    let o = &cfg.oracle;
    match region {
        Region::Train => (o.train_paths, o.train_distance, 0),
        Region::Validation => (o.val_paths, o.val_distance, 100),
        Region::Test => (o.test_paths, o.test_distance, 200),
    }
}

pub fn oracle(cfg: &ExperimentConfig) -> CliResult<Summary> {
    let layout = Layout::new(cfg);
    let worlds = load_worlds(cfg)?;
    let stamp = [header(cfg, Stage::Oracle)];
    let mut out = Vec::new();
    for region in Region::ALL {
        let (count, distance, offset) = region_plan(cfg, region);
        let mut merged: Option<Dataset> = None;
        let mut n_paths = 0;
        for (world, &seed) in worlds.iter().zip(&cfg.world.seeds) {
            let paths = sample_paths(
                &world.grid,
                &world.regions,
                region,
                cfg.world.vertical_locked,
                cfg.flight_level(),
                distance,
                count,
                cfg.oracle.seed + seed + offset,
            )?;
            let path_file = layout.paths(region, seed);
            ensure_parent(&path_file)?;
            save_paths(&path_file, &paths, &stamp)?;
            n_paths += paths.len();
            let data = label_dataset(&world.grid, &paths, &cfg.sensor)?;
            match merged.as_mut() {
                Some(m) => m.samples.extend(data.samples),
                None => merged = Some(data),
            }
        }
        let data = merged.expect("at least one world");
        let file = layout.dataset(region);
        data.save(&file, &stamp)?;
        out.push(format!(
            "{}: {n_paths} paths, {} labeled samples -> {}",
            region.as_str(),
            data.len(),
            file.display()
        ));
    }
    write_config_copy(cfg, "oracle")?;
    Ok(out)
}

pub fn load_dataset(cfg: &ExperimentConfig, region: Region) -> CliResult<Dataset> {
    let path = Layout::new(cfg).dataset(region);
    require(cfg, Stage::Oracle, &path, "oracle")?;
    Ok(Dataset::load(&path)?)
}

pub fn nav_spec(cfg: &ExperimentConfig, inputs: usize) -> CliResult<MlpSpec> {
    Ok(MlpSpec::new(inputs, cfg.nav.hidden.clone(), 3, OutputActivation::Identity)?)
}

pub fn load_nav(cfg: &ExperimentConfig) -> CliResult<SlimmableMlp> {
    let path = Layout::new(cfg).nav_weights(cfg.mode);
    require(cfg, Stage::Nav, &path, "train-nav")?;
    let net = load_weights(&path, None)?;
    if net.spec().hidden != cfg.nav.hidden {
        return Err(CliError::dependency(&path, format!("hidden sizes {:?} differ from nav.hidden", net.spec().hidden)));
    }
    Ok(net)
}

pub fn load_aux(cfg: &ExperimentConfig) -> CliResult<SlimmableMlp> {
    let path = Layout::new(cfg).aux_weights(cfg.mode, cfg.aux.seed);
    require(cfg, Stage::Aux, &path, "train-aux")?;
    Ok(load_weights(&path, None)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRow {
    pub seed: u64,
    pub epoch: usize,
    pub train_hard: f64,
    pub train_soft: f64,
    pub val_loss: f64,
    pub best: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NavSummaryRow {
    pub seed: u64,
    pub epochs: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
    pub selected: bool,
}

pub fn train_nav(cfg: &ExperimentConfig) -> CliResult<Summary> {
    let layout = Layout::new(cfg);
    let train = load_dataset(cfg, Region::Train)?;
    let val = load_dataset(cfg, Region::Validation)?;
    let spec = nav_spec(cfg, train.input_width())?;
    let (net, reports) = train_navigation_best(&train, &val, &spec, &cfg.nav.distill, cfg.mode)?;
    let best = reports
        .iter()
        .map(|r| r.best_val_loss)
        .fold(f64::INFINITY, f64::min);
    let mut epochs = Vec::new();
    let mut summary = Vec::new();
    for r in &reports {
        for e in &r.epochs {
            epochs.push(EpochRow {
                seed: r.seed,
                epoch: e.epoch,
                train_hard: e.train_hard,
                train_soft: e.train_soft,
                val_loss: e.val_loss,
                best: e.epoch == r.best_epoch,
            });
        }
        summary.push(NavSummaryRow {
            seed: r.seed,
            epochs: r.epochs.len(),
            best_epoch: r.best_epoch,
            best_val_loss: r.best_val_loss,
            stopped_early: r.stopped_early,
            selected: r.best_val_loss == best,
        });
    }
    let weights = layout.nav_weights(cfg.mode);
    ensure_parent(&weights)?;
    save_weights(&net, &weights, &[header(cfg, Stage::Nav)])?;
    write_csv(&layout.nav_log(cfg.mode), cfg, Stage::Nav, &csv_bytes(&epochs)?)?;
    write_csv(&layout.nav_summary(cfg.mode), cfg, Stage::Nav, &csv_bytes(&summary)?)?;
    write_config_copy(cfg, "train-nav")?;
    Ok(vec![
        format!("{} train / {} val samples, spec {:?}", train.len(), val.len(), spec.hidden),
        format!("best validation loss {best:.6} over {} seed(s) -> {}", reports.len(), weights.display()),
    ])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuxLogRow {
    pub episode: usize,
    pub env_steps: usize,
    pub updates: u64,
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub q_mean: f64,
    pub episode_return: f64,
    pub outcome: String,
    pub mean_rho: f64,
    pub curriculum_distance: f64,
    pub eval_success: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateRow {
    pub episode: usize,
    pub optimal_steps: usize,
    pub optimal_length: f64,
    pub steps: usize,
    pub reached: bool,
    pub within_beta: bool,
    pub mean_rho: f64,
    pub mean_p_f: f64,
    pub mean_p_d: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

pub fn train_aux(cfg: &ExperimentConfig) -> CliResult<Summary> {
    let layout = Layout::new(cfg);
    let nav = load_nav(cfg)?;
    let worlds = load_worlds(cfg)?;
    let outcome = train_auxiliary(&worlds, &nav, cfg.mode, &cfg.episode(), &cfg.aux_train())?;

    let weights = layout.aux_weights(cfg.mode, cfg.aux.seed);
    ensure_parent(&weights)?;
    save_weights(&outcome.actor, &weights, &[header(cfg, Stage::Aux)])?;
    let log: Vec<AuxLogRow> = outcome
        .log
        .iter()
        .map(|r| AuxLogRow {
            episode: r.episode,
            env_steps: r.env_steps,
            updates: r.updates,
            critic_loss: r.critic_loss,
            actor_loss: r.actor_loss,
            q_mean: r.q_mean,
            episode_return: r.episode_return,
            outcome: r.outcome.to_string(),
            mean_rho: r.mean_rho,
            curriculum_distance: r.curriculum_distance,
            eval_success: r.eval_success,
        })
        .collect();
    write_csv(&layout.aux_log(cfg.mode, cfg.aux.seed), cfg, Stage::Aux, &csv_bytes(&log)?)?;

    let gate = &outcome.gate;
    let rows: Vec<GateRow> = gate
        .logs
        .iter()
        .zip(&gate.paths)
        .enumerate()
        .map(|(i, (l, p))| GateRow {
            episode: i,
            optimal_steps: p.steps(),
            optimal_length: p.length,
            steps: l.len(),
            reached: l.reached(),
            within_beta: l.reached() && l.len() as f64 <= gate.beta * p.steps() as f64,
            mean_rho: l.mean_rho(),
            mean_p_f: mean(l.steps.iter().map(|s| s.p_f as f64)),
            mean_p_d: mean(l.steps.iter().map(|s| s.p_d as f64)),
        })
        .collect();
    write_csv(&layout.gate(cfg.mode, cfg.aux.seed), cfg, Stage::Aux, &csv_bytes(&rows)?)?;
    write_config_copy(cfg, "train-aux")?;

    let mut out = vec![format!(
        "{} episodes, {} env steps, final curriculum distance {} m -> {}",
        outcome.log.len(),
        outcome.log.last().map_or(0, |r| r.env_steps),
        outcome.final_distance,
        weights.display()
    )];
    if let Ok(eta) = compute_eta(&gate.logs, nav.spec()) {
        out.push(format!(
            "gate mean rho {:.3} ({} episodes, {} steps), eta_m {:.3}, eta_w {:.3}",
            eta.mean_rho, eta.episodes, eta.steps, eta.eta_m, eta.eta_w
        ));
    }
    out.push(format!("gate {}/{} within beta {}", gate.episodes - gate.violations.len(), gate.episodes, gate.beta));
    gate.check()?;
    Ok(out)
}

/// Fixed settings flown by the navigation network alone.
pub fn eval_settings(cfg: &ExperimentConfig) -> CliResult<Vec<Setting>> {
    match cfg.mode {
        Mode::Compute => Ok(cfg.eval.rho_grid.iter().map(|&r| Setting::Width(r)).collect()),
        Mode::Sense => cfg
            .eval
            .power_grid
            .iter()
            .map(|[f, d]| Ok(Setting::Power(SensorConfig::new(*f, *d)?)))
            .collect(),
    }
}

fn setting_columns(s: Setting) -> (f64, u8, u8) {
    match s {
        Setting::Width(r) => (r, MAX_POWER, MAX_POWER),
        Setting::Power(p) => (1.0, p.p_f, p.p_d),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuccessRow {
    pub rho: f64,
    pub p_f: u8,
    pub p_d: u8,
    pub distance_lo: f64,
    pub distance_hi: f64,
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_length_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RmseRow {
    pub rho: f64,
    pub p_f: u8,
    pub p_d: u8,
    pub samples: usize,
    pub rmse: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRow {
    pub episode_id: usize,
    pub world: u64,
    pub t: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub rho: f64,
    pub p_f: u8,
    pub p_d: u8,
    pub reward: f64,
    pub m_active: usize,
    /// Mean acquired forward depth, meters.
    pub forward_depth: Option<f64>,
    /// Mean acquired downward depth, meters.
    pub downward_depth: Option<f64>,
    pub outcome: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub episode_id: usize,
    pub world: u64,
    pub optimal_steps: usize,
    pub optimal_length: f64,
    pub steps: usize,
    pub distance_flown: f64,
    pub outcome: String,
    pub within_beta: bool,
    pub m_full: usize,
}

pub fn eval(cfg: &ExperimentConfig, skip_aux: bool) -> CliResult<Summary> {
    let layout = Layout::new(cfg);
    let nav = load_nav(cfg)?;
    let test = load_dataset(cfg, Region::Test)?;
    let actor = if skip_aux { None } else { Some(load_aux(cfg)?) };
    let worlds = load_worlds(cfg)?;
    let episode = cfg.episode();
    let settings = eval_settings(cfg)?;
    let mut out = Vec::new();

    let mut success = Vec::new();
    for &d in &cfg.eval.distances {
        let range = (d - cfg.eval.bucket_width, d);
        let tasks = sample_tasks(&worlds, Region::Test, &episode, range, cfg.eval.episodes_per_bucket, cfg.eval.seed + d.round() as u64)?;
        let refs: Vec<_> = tasks.iter().map(|(k, p)| (&worlds[*k].grid, p)).collect();
        for &s in &settings {
            let e = evaluate_navigation(&nav, &refs, s, &episode, None)?;
            let (rho, p_f, p_d) = setting_columns(s);
            success.push(SuccessRow {
                rho,
                p_f,
                p_d,
                distance_lo: range.0,
                distance_hi: range.1,
                episodes: e.episodes,
                successes: e.successes,
                success_rate: e.success_rate,
                mean_length_ratio: e.mean_length_ratio,
            });
        }
    }
    write_csv(&layout.nav_success(cfg.mode), cfg, Stage::Eval, &csv_bytes(&success)?)?;
    out.push(format!("navigation success over {} buckets x {} settings", cfg.eval.distances.len(), settings.len()));

    let mut rmse = Vec::new();
    for &s in &settings {
        let (rho, p_f, p_d) = setting_columns(s);
        rmse.push(RmseRow {
            rho,
            p_f,
            p_d,
            samples: test.len(),
            rmse: rmse_at(&nav, &test, s)?,
        });
    }
    write_csv(&layout.nav_rmse(cfg.mode), cfg, Stage::Eval, &csv_bytes(&rmse)?)?;
    out.push(format!("test RMSE over {} samples", test.len()));

    if let Some(actor) = actor {
        let tasks = sample_tasks(&worlds, Region::Test, &episode, cfg.eval.aux_distance, cfg.eval.aux_episodes, cfg.eval.seed)?;
        let logs = evaluate_auxiliary(&worlds, &tasks, &navislim::distill::NavPolicy::new(&nav, cfg.sensor.max_step), &actor, cfg.mode, &episode, &cfg.reward)?;
        let m_full = active_params(nav.spec(), 1.0)?.exact;
        let mut steps = Vec::new();
        let mut episodes = Vec::new();
        for (i, ((k, path), log)) in tasks.iter().zip(&logs).enumerate() {
            let world = cfg.world.seeds[*k];
            for s in &log.steps {
                steps.push(StepRow {
                    episode_id: i,
                    world,
                    t: s.t,
                    x: s.position[0],
                    y: s.position[1],
                    z: s.position[2],
                    rho: s.rho,
                    p_f: s.p_f,
                    p_d: s.p_d,
                    reward: s.reward,
                    m_active: s.m_active,
                    forward_depth: s.mean_forward_depth.map(|d| d * cfg.sensor.max_range),
                    downward_depth: s.mean_downward_depth.map(|d| d * cfg.sensor.max_range),
                    outcome: log.outcome.as_str().to_string(),
                });
            }
            episodes.push(EpisodeRow {
                episode_id: i,
                world,
                optimal_steps: path.steps(),
                optimal_length: path.length,
                steps: log.len(),
                distance_flown: log.distance_flown,
                outcome: log.outcome.as_str().to_string(),
                within_beta: log.reached() && log.len() as f64 <= cfg.constraint.beta * path.steps() as f64,
                m_full,
            });
        }
        write_csv(&layout.episode_steps(cfg.mode, cfg.aux.seed), cfg, Stage::Eval, &csv_bytes(&steps)?)?;
        write_csv(&layout.episode_summary(cfg.mode, cfg.aux.seed), cfg, Stage::Eval, &csv_bytes(&episodes)?)?;
        let reached = logs.iter().filter(|l| l.reached()).count();
        out.push(format!("adaptive episodes: {reached}/{} reached", logs.len()));
    }
    write_config_copy(cfg, "eval")?;
    Ok(out)
}
