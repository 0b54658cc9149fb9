use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use navislim::auxtrain::toy::{improvement, line_task_training};
use navislim::auxtrain::{compute_eta, q_return, round_percent, EpisodeLog, StepRecord, Td3Config};
use navislim::pathoracle::{astar, build_graph};
use navislim::slimnet::{
    active_params, mse_loss, param_law_coefficients, ForwardCache, Gradients, MlpSpec, OutputActivation, ParamId,
    SlimMask, SlimmableMlp,
};
use navislim::worldsim::{generate_world, Terminal, Voxel, VoxelGrid, WorldParams};
use navislim_cli::bench::BenchRow;
use navislim_cli::commands::{GateRow, RmseRow, StepRow, SuccessRow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GAMMA: f64 = 0.99;
const RHO_TREND_SLACK: f64 = 0.05;
const GATE_RHO_MAX: f64 = 0.95;
const BENCH_RHO_MAX: f64 = 0.7;
const SUCCESS_AT_10M: f64 = 0.9;
const FD_TOLERANCE: f64 = 1e-4;
const TD3_IMPROVEMENT: f64 = 0.5;

fn report(id: u32, name: &str, pass: bool, detail: String, elapsed: Duration) {
    let mark = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout();
    let _ = writeln!(out, "criterion {id:>2} [{mark}] {name}: {detail} ({:.1}s)", elapsed.as_secs_f64());
    let _ = out.flush();
}

fn cli(dir: &Path, command: &[&str], sets: &[&str]) -> i32 {
    let mut args = vec!["navislim".to_string()];
    args.extend(command.iter().map(|s| s.to_string()));
    args.push("--set".into());
    args.push(format!("output_dir=\"{}\"", dir.display()));
    for s in sets {
        args.push("--set".into());
        args.push(s.to_string());
    }
    navislim_cli::run(args)
}

fn read_rows<R: serde::de::DeserializeOwned>(path: &Path) -> Vec<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap()
}

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance")
}

/// Low-density 2-D pipeline shared by the end-to-end criteria.
struct Pipeline {
    dir: PathBuf,
    codes: BTreeMap<&'static str, i32>,
}

const PIPELINE_SETS: &[&str] = &["eval.episodes_per_bucket=100"];

fn pipeline() -> &'static Pipeline {
    static CELL: OnceLock<Pipeline> = OnceLock::new();
    CELL.get_or_init(|| {
        let dir = root().join("low_2d");
        let _ = std::fs::remove_dir_all(&dir);
        let mut codes = BTreeMap::new();
        for cmd in ["gen-world", "oracle", "train-nav", "train-aux", "eval", "bench", "report"] {
            codes.insert(cmd, cli(&dir, &[cmd], PIPELINE_SETS));
        }
        Pipeline { dir, codes }
    })
}

/// Mean slimming factor over the steps of successful gate episodes.
fn gate_mean_rho(rows: &[GateRow]) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for r in rows.iter().filter(|r| r.reached) {
        sum += r.mean_rho * r.steps as f64;
        n += r.steps;
    }
    sum / n as f64
}

fn synthetic_log(p_f: &[u8], p_d: &[u8], outcome: Terminal) -> EpisodeLog {
    let steps = p_f
        .iter()
        .zip(p_d)
        .enumerate()
        .map(|(t, (&f, &d))| StepRecord {
            t,
            position: [0.0; 3],
            rho: 1.0,
            p_f: f,
            p_d: d,
            reward: 0.0,
            m_active: 0,
            mean_forward_depth: None,
            mean_downward_depth: None,
        })
        .collect();
    EpisodeLog {
        spawn: [0.0; 3],
        goal: [1.0; 3],
        steps,
        outcome,
        final_position: [1.0; 3],
        distance_flown: 1.0,
        states: Vec::new(),
        actions: Vec::new(),
    }
}

#[test]
fn criterion_01_sensing_eta_arithmetic() {
    let t = Instant::now();
    let spec = MlpSpec::new(4, vec![8], 3, OutputActivation::Identity).unwrap();
    let first = vec![
        synthetic_log(&[3, 3, 3, 2, 2], &[3, 2, 2, 2, 2], Terminal::Reached),
        synthetic_log(&[1, 1], &[0, 0], Terminal::Collided),
    ];
    let mut p_f = vec![3u8; 90];
    p_f.extend([2u8; 10]);
    let mut p_d = vec![1u8; 73];
    p_d.extend([0u8; 27]);
    let second = vec![
        synthetic_log(&p_f[..50], &p_d[..50], Terminal::Reached),
        synthetic_log(&p_f[50..], &p_d[50..], Terminal::Reached),
    ];
    let a = compute_eta(&first, &spec).unwrap();
    let b = compute_eta(&second, &spec).unwrap();
    let pass = (a.mean_p_f - 2.6).abs() < 1e-12
        && (a.mean_p_d - 2.2).abs() < 1e-12
        && (a.eta_w * 100.0 - 80.0).abs() < 1e-9
        && round_percent(a.eta_w) == 80
        && a.episodes == 1
        && (b.mean_p_f - 2.9).abs() < 1e-12
        && (b.mean_p_d - 0.73).abs() < 1e-12
        && (b.eta_w * 100.0 - 60.5).abs() < 1e-9
        && round_percent(b.eta_w) == 61;
    let elapsed = t.elapsed();
    let pass = pass && elapsed < Duration::from_secs(1);
    report(
        1,
        "eta_w arithmetic",
        pass,
        format!("{:.4}% -> {}%, {:.4}% -> {}%", a.eta_w * 100.0, round_percent(a.eta_w), b.eta_w * 100.0, round_percent(b.eta_w)),
        elapsed,
    );
    assert!(pass);
}

/// Active node count by integer arithmetic: smallest n with n >= k*q/20.
fn active_nodes(k: usize, q: usize) -> usize {
    (k * q).div_ceil(20).clamp(1, q)
}

#[test]
fn criterion_02_parameter_law() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    let mut pass = true;
    for _ in 0..50 {
        let u = rng.random_range(1..=12);
        let hidden: Vec<usize> = (0..rng.random_range(1..=4)).map(|_| rng.random_range(1..=20)).collect();
        let v = rng.random_range(1..=5);
        let spec = MlpSpec::new(u, hidden.clone(), v, OutputActivation::Identity).unwrap();
        let net = SlimmableMlp::<f32>::new(spec.clone(), 0).unwrap();
        let (q1, ql) = (hidden[0] as f64, hidden[hidden.len() - 1] as f64);
        let a: f64 = hidden.windows(2).map(|w| (w[0] * w[1]) as f64).sum();
        let b = u as f64 * q1 + hidden.iter().sum::<usize>() as f64 + v as f64 * ql;
        let c = v as f64;
        pass &= param_law_coefficients(&spec) == (a, b, c);
        for k in 1..=20 {
            let rho = k as f64 / 20.0;
            let m = active_params(&spec, rho).unwrap();
            pass &= m.continuous == a * rho * rho + b * rho + c;
            let mut widths = vec![u];
            widths.extend(hidden.iter().map(|&q| active_nodes(k, q)));
            widths.push(v);
            let brute = net
                .param_ids()
                .filter(|id| match *id {
                    ParamId::Weight { layer, row, col } => row < widths[layer + 1] && col < widths[layer],
                    ParamId::Bias { layer, row } => row < widths[layer + 1],
                })
                .count();
            pass &= m.exact == brute;
            checked += 1;
        }
    }
    let elapsed = t.elapsed();
    let pass = pass && elapsed < Duration::from_secs(5);
    report(2, "parameter law", pass, format!("{checked} (spec, rho) pairs"), elapsed);
    assert!(pass);
}

#[test]
fn criterion_03_slimming_case() {
    let t = Instant::now();
    let spec = MlpSpec::new(2, vec![4, 2], 1, OutputActivation::Identity).unwrap();
    let mut net = SlimmableMlp::<f64>::new(spec.clone(), 5).unwrap();
    let mask = SlimMask::width(&spec, 0.3).unwrap();
    let small = net.truncated(&mask).unwrap();
    let mut pass = mask.active_hidden == vec![2, 1] && small.num_params() == 2 * 2 + 2 + 2 + 1 + 1 + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let inputs: Vec<[f64; 2]> = (0..20).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
    let base: Vec<Vec<f64>> = inputs.iter().map(|x| net.forward(x, &mask).unwrap()).collect();
    for (x, y) in inputs.iter().zip(&base) {
        pass &= small.forward(x, &SlimMask::full(small.spec())).unwrap() == *y;
    }
    let widths = [2, 2, 1, 1];
    let severed: Vec<ParamId> = net
        .param_ids()
        .filter(|id| match *id {
            ParamId::Weight { layer, row, col } => row >= widths[layer + 1] || col >= widths[layer],
            ParamId::Bias { layer, row } => row >= widths[layer + 1],
        })
        .collect();
    pass &= severed.len() == spec.num_params() - 11;
    for id in &severed {
        net.set_param(*id, 100.0);
    }
    for (x, y) in inputs.iter().zip(&base) {
        pass &= net.forward(x, &mask).unwrap() == *y;
    }
    let elapsed = t.elapsed();
    let pass = pass && elapsed < Duration::from_secs(1);
    report(
        3,
        "slimming case",
        pass,
        format!("active {:?}, {} of {} params kept, {} severed", mask.active_hidden, small.num_params(), spec.num_params(), severed.len()),
        elapsed,
    );
    assert!(pass);
}

fn free(grid: &VoxelGrid, v: [i64; 3]) -> bool {
    grid.in_bounds(v) && !grid.is_occupied(v)
}

/// Uniform-cost search with its own move model; cost as (straight, diagonal).
fn dijkstra(grid: &VoxelGrid, locked: bool, start: Voxel, goal: Voxel) -> Option<(u32, u32)> {
    let [nx, ny, nz] = grid.dims();
    let idx = |v: [i64; 3]| v[0] as usize + nx * (v[1] as usize + ny * v[2] as usize);
    let len = |c: (u32, u32)| c.0 as f64 + c.1 as f64 * std::f64::consts::SQRT_2;
    let mut best: Vec<Option<(u32, u32)>> = vec![None; nx * ny * nz];
    let mut done = vec![false; nx * ny * nz];
    let (s, g) = (start.map(|c| c as i64), goal.map(|c| c as i64));
    best[idx(s)] = Some((0, 0));
    let mut heap = BinaryHeap::from([Reverse((0u64, s))]);
    while let Some(Reverse((_, v))) = heap.pop() {
        if std::mem::replace(&mut done[idx(v)], true) {
            continue;
        }
        let c = best[idx(v)].unwrap();
        if v == g {
            return Some(c);
        }
        let mut next = Vec::new();
        for dx in -1..=1i64 {
            for dy in -1..=1i64 {
                let diag = dx != 0 && dy != 0;
                if (dx, dy) == (0, 0) || (diag && !(free(grid, [v[0] + dx, v[1], v[2]]) && free(grid, [v[0], v[1] + dy, v[2]]))) {
                    continue;
                }
                next.push(([v[0] + dx, v[1] + dy, v[2]], diag));
            }
        }
        if !locked {
            next.push(([v[0], v[1], v[2] + 1], false));
            next.push(([v[0], v[1], v[2] - 1], false));
        }
        for (w, diag) in next {
            if !free(grid, w) || done[idx(w)] {
                continue;
            }
            let nc = if diag { (c.0, c.1 + 1) } else { (c.0 + 1, c.1) };
            if best[idx(w)].is_none_or(|b| len(nc) < len(b) - 1e-12) {
                best[idx(w)] = Some(nc);
                heap.push(Reverse(((len(nc) * 1e9).round() as u64, w)));
            }
        }
    }
    None
}

#[test]
fn criterion_04_astar_optimality() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut instances, mut agree) = (0, 0);
    for world in 0..20u64 {
        let locked = world % 2 == 1;
        let grid = generate_world(&WorldParams {
            dims: [32, 32, 8],
            density: 0.15,
            seed: 100 + world,
            ..WorldParams::default()
        })
        .unwrap();
        let graph = build_graph(&grid, locked);
        let pick = |rng: &mut ChaCha8Rng| loop {
            let v = [rng.random_range(1..31), rng.random_range(1..31), if locked { 2 } else { rng.random_range(1..7) }];
            if !grid.is_occupied(v.map(|c| c as i64)) {
                return v;
            }
        };
        for _ in 0..10 {
            let (a, b) = (pick(&mut rng), pick(&mut rng));
            let oracle = dijkstra(&grid, locked, a, b);
            let found = astar(&graph, a, b).ok().map(|p| (p.cost.straight, p.cost.diagonal));
            instances += 1;
            agree += (found == oracle) as usize;
        }
    }
    let elapsed = t.elapsed();
    let pass = instances == 200 && agree == 200 && elapsed < Duration::from_secs(30);
    report(4, "A* optimality", pass, format!("{agree}/{instances} costs equal uniform-cost search"), elapsed);
    assert!(pass);
}

#[test]
fn criterion_05_gradient_check() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for config in 0..10 {
        let act = if config % 2 == 0 { OutputActivation::Identity } else { OutputActivation::Tanh { scale: 1.5 } };
        let hidden: Vec<usize> = (0..rng.random_range(1..=3)).map(|_| rng.random_range(3..=10)).collect();
        let spec = MlpSpec::new(rng.random_range(3..=8), hidden, rng.random_range(1..=3), act).unwrap();
        let mut net = SlimmableMlp::<f64>::new(spec.clone(), config).unwrap();
        let ids: Vec<ParamId> = net.param_ids().collect();
        for &id in &ids {
            if let ParamId::Bias { .. } = id {
                net.set_param(id, rng.random_range(-0.3..0.3));
            }
        }
        let mut gate: Vec<bool> = (0..spec.inputs).map(|_| rng.random_bool(0.75)).collect();
        gate[0] = true;
        let mask = SlimMask::width(&spec, rng.random_range(0.1..=1.0)).unwrap().with_inputs(gate);
        let x: Vec<f64> = (0..spec.inputs).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..spec.outputs).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut cache = ForwardCache::new();
        net.forward_cached(&x, &mask, &mut cache).unwrap();
        let (_, up) = mse_loss(cache.output(), &y, 1.0);
        let mut grads = Gradients::zeros_like(&net);
        net.backward(&cache, &up, &mut grads);
        let loss = |n: &SlimmableMlp<f64>| mse_loss(&n.forward(&x, &mask).unwrap(), &y, 1.0).0;
        for _ in 0..20 {
            let id = ids[rng.random_range(0..ids.len())];
            let p = net.param(id);
            let h = 1e-6;
            net.set_param(id, p + h);
            let plus = loss(&net);
            net.set_param(id, p - h);
            let minus = loss(&net);
            net.set_param(id, p);
            let numeric = (plus - minus) / (2.0 * h);
            let analytic = grads.get(id);
            let scale = numeric.abs().max(analytic.abs());
            if scale > 1e-10 {
                worst = worst.max((numeric - analytic).abs() / scale);
            }
            checked += 1;
        }
    }
    let elapsed = t.elapsed();
    let pass = worst < FD_TOLERANCE && checked == 200 && elapsed < Duration::from_secs(30);
    report(5, "gradient check", pass, format!("worst relative error {worst:.2e} over {checked} parameters"), elapsed);
    assert!(pass);
}

#[test]
fn criterion_06_rmse_trend() {
    let t = Instant::now();
    let p = pipeline();
    let control = root().join("control_2d");
    let _ = std::fs::remove_dir_all(&control);
    let sets = ["nav.distill.distill=false"];
    let mut codes = Vec::new();
    for cmd in [&["gen-world"][..], &["oracle"], &["train-nav"], &["eval", "--skip-aux"]] {
        codes.push(cli(&control, cmd, &sets));
    }
    let distilled: Vec<RmseRow> = read_rows(&p.dir.join("eval/nav_rmse_C.csv"));
    let plain: Vec<RmseRow> = read_rows(&control.join("eval/nav_rmse_C.csv"));
    let train_samples = navislim::pathoracle::Dataset::load(&p.dir.join("oracle/train.ds")).unwrap().len();
    let mut pass = codes.iter().all(|c| *c == 0) && p.codes["train-nav"] == 0 && p.codes["eval"] == 0;
    pass &= train_samples >= 2000;
    let grid: Vec<f64> = distilled.iter().map(|r| r.rho).collect();
    pass &= grid == vec![0.25, 0.5, 0.75, 1.0];
    for w in distilled.windows(2) {
        pass &= w[1].rmse <= w[0].rmse * (1.0 + RHO_TREND_SLACK);
    }
    let at = |rows: &[RmseRow], rho: f64| rows.iter().find(|r| r.rho == rho).map_or(f64::NAN, |r| r.rmse);
    let (slim, control_half) = (at(&distilled, 0.5), at(&plain, 0.5));
    pass &= slim < control_half;
    let curve: Vec<String> = distilled.iter().map(|r| format!("{:.4}", r.rmse)).collect();
    report(
        6,
        "RMSE vs rho",
        pass,
        format!("{train_samples} train samples, RMSE [{}] m, rho 0.5 distilled {slim:.4} vs control {control_half:.4}", curve.join(", ")),
        t.elapsed(),
    );
    assert!(pass);
}

#[test]
fn criterion_07_success_vs_distance() {
    let t = Instant::now();
    let p = pipeline();
    let rows: Vec<SuccessRow> = read_rows(&p.dir.join("eval/nav_success_C.csv"));
    let full: Vec<&SuccessRow> = rows.iter().filter(|r| r.rho == 1.0).collect();
    let edges: Vec<f64> = full.iter().map(|r| r.distance_hi).collect();
    let mut pass = p.codes["eval"] == 0 && edges == vec![10.0, 20.0, 30.0, 40.0];
    pass &= full.iter().all(|r| r.episodes >= 100);
    for w in full.windows(2) {
        pass &= w[1].success_rate <= w[0].success_rate;
    }
    pass &= full.first().is_some_and(|r| r.success_rate >= SUCCESS_AT_10M);
    let rates: Vec<String> = full.iter().map(|r| format!("{}m {:.2}", r.distance_hi, r.success_rate)).collect();
    report(7, "success vs distance", pass, format!("rho 1: {}", rates.join(", ")), t.elapsed());
    assert!(pass);
}

#[test]
fn criterion_08_td3_toy() {
    let t = Instant::now();
    let cfg = Td3Config {
        batch_size: 64,
        exploration_steps: 500,
        ..Td3Config::default()
    };
    let mut gains = Vec::new();
    for seed in 1..=3 {
        let (before, after) = line_task_training(seed, 5000, &cfg).unwrap();
        gains.push(improvement(before, after));
    }
    let pass = gains.iter().all(|g| *g >= TD3_IMPROVEMENT);
    let text: Vec<String> = gains.iter().map(|g| format!("{:.0}%", g * 100.0)).collect();
    report(8, "TD3 toy task", pass, format!("return improvement per seed [{}]", text.join(", ")), t.elapsed());
    assert!(pass);
}

#[test]
fn criterion_09_end_to_end_gate() {
    let t = Instant::now();
    let p = pipeline();
    let gate: Vec<GateRow> = read_rows(&p.dir.join("aux/gate_C_s1.csv"));
    let rho = gate_mean_rho(&gate);
    let reached = gate.iter().filter(|r| r.reached).count();
    let within = gate.iter().filter(|r| r.within_beta).count();
    let code = p.codes["train-aux"];
    let pass = code == 0 && gate.len() == 20 && reached == 20 && within == 20 && rho < GATE_RHO_MAX;
    report(
        9,
        "end-to-end gate",
        pass,
        format!("exit {code}, {reached}/{} reached, {within} within beta, mean rho {rho:.3}", gate.len()),
        t.elapsed(),
    );
    assert!(pass);
}

#[test]
fn criterion_10_difficulty_ordering() {
    let t = Instant::now();
    let p = pipeline();
    let hard = root().join("dense_3d");
    let _ = std::fs::remove_dir_all(&hard);
    let hard_sets = ["world.density=0.2", "world.vertical_locked=false"];
    for cmd in ["gen-world", "oracle", "train-nav"] {
        assert_eq!(cli(&hard, &[cmd], &hard_sets), 0, "{cmd}");
    }
    let (mut easy_rho, mut hard_rho) = (Vec::new(), Vec::new());
    for seed in 1..=3u64 {
        let aux_seed = format!("aux.seed={seed}");
        if seed > 1 {
            let code = cli(&p.dir, &["train-aux"], &[PIPELINE_SETS[0], &aux_seed]);
            assert!(code == 0 || code == 4, "train-aux exit {code}");
        }
        let code = cli(&hard, &["train-aux"], &[hard_sets[0], hard_sets[1], &aux_seed]);
        assert!(code == 0 || code == 4, "train-aux exit {code}");
        easy_rho.push(gate_mean_rho(&read_rows(&p.dir.join(format!("aux/gate_C_s{seed}.csv")))));
        hard_rho.push(gate_mean_rho(&read_rows(&hard.join(format!("aux/gate_C_s{seed}.csv")))));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let pass = mean(&hard_rho) >= mean(&easy_rho);
    let fmt = |v: &[f64]| v.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(", ");
    report(
        10,
        "difficulty ordering",
        pass,
        format!(
            "3-D density 0.2 mean rho {:.3} [{}] vs 2-D density 0.1 {:.3} [{}]",
            mean(&hard_rho),
            fmt(&hard_rho),
            mean(&easy_rho),
            fmt(&easy_rho)
        ),
        t.elapsed(),
    );
    assert!(pass);
}

#[test]
fn criterion_11_timing_trend() {
    let t = Instant::now();
    let p = pipeline();
    let rows: Vec<BenchRow> = read_rows(&p.dir.join("bench/bench_C_s1.csv"));
    let labels: Vec<&str> = rows.iter().map(|r| r.nav_hidden.as_str()).collect();
    let mut pass = p.codes["bench"] == 0 && labels == ["32", "64x64", "128x128", "256x256"];
    pass &= rows.iter().all(|r| r.mean_rho <= BENCH_RHO_MAX);
    pass &= rows.first().is_some_and(|r| r.speedup <= 0.0);
    pass &= rows.last().is_some_and(|r| r.speedup > 0.0);
    for w in rows.windows(2) {
        pass &= w[1].speedup >= w[0].speedup;
    }
    let text: Vec<String> = rows.iter().map(|r| format!("{} {:+.3}", r.nav_hidden, r.speedup)).collect();
    report(
        11,
        "timing trend",
        pass,
        format!("mean rho {:.3}, speedup {}", rows.first().map_or(f64::NAN, |r| r.mean_rho), text.join(", ")),
        t.elapsed(),
    );
    assert!(pass);
}

#[test]
fn criterion_12_return_recursion() {
    let p = pipeline();
    let t = Instant::now();
    let steps: Vec<StepRow> = read_rows(&p.dir.join("eval/episodes_C_s1.csv"));
    let mut episodes: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for s in &steps {
        episodes.entry(s.episode_id).or_default().push(s.reward);
    }
    let mut pass = !episodes.is_empty();
    let mut checked = 0;
    for rewards in episodes.values() {
        let n = rewards.len();
        pass &= q_return(rewards, GAMMA, n - 1) == rewards[n - 1];
        for k in 0..n - 1 {
            let lhs = q_return(rewards, GAMMA, k);
            let rhs = rewards[k] + GAMMA * q_return(rewards, GAMMA, k + 1);
            pass &= (lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs());
            checked += 1;
        }
    }
    let elapsed = t.elapsed();
    let pass = pass && elapsed < Duration::from_secs(1);
    report(12, "return recursion", pass, format!("{} logged episodes, {checked} steps", episodes.len()), elapsed);
    assert!(pass);
}

#[test]
fn pipeline_report_is_reproducible() {
    let p = pipeline();
    assert!(p.codes.values().all(|c| *c == 0), "{:?}", p.codes);
    let dir = p.dir.join("report/C_s1");
    let snapshot = |d: &Path| -> Vec<(PathBuf, Vec<u8>)> {
        let mut files: Vec<_> = std::fs::read_dir(d).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        files.into_iter().map(|f| (f.clone(), std::fs::read(f).unwrap())).collect()
    };
    let before = snapshot(&dir);
    assert_eq!(cli(&p.dir, &["report"], PIPELINE_SETS), 0);
    assert_eq!(before, snapshot(&dir));
}
