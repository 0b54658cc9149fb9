use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use navislim::auxtrain::round_percent;
use navislim::worldsim::MAX_POWER;

use crate::artifacts::{header, read_csv, require, Layout};
use crate::bench::BenchRow;
use crate::commands::{EpisodeRow, RmseRow, StepRow, SuccessRow, Summary};
use crate::config::{ExperimentConfig, Stage};
use crate::error::CliResult;

/// Running means of the adaptation variables.
#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    n: usize,
    rho: f64,
    p_f: f64,
    p_d: f64,
}

impl Acc {
    fn add(&mut self, s: &StepRow) {
        self.n += 1;
        self.rho += s.rho;
        self.p_f += s.p_f as f64;
        self.p_d += s.p_d as f64;
    }

    fn means(&self) -> (f64, f64, f64) {
        let n = self.n as f64;
        (self.rho / n, self.p_f / n, self.p_d / n)
    }
}

fn f6(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        "nan".to_string()
    }
}

fn write_stamped(path: &Path, stamp: &str, body: &str) -> CliResult<()> {
    std::fs::write(path, format!("# {stamp}\n{body}"))?;
    Ok(())
}

/// Emits the summary tables and plot data from the evaluation logs. Output
/// depends only on its inputs, so reruns are byte-identical.
pub fn report(cfg: &ExperimentConfig) -> CliResult<Summary> {
    let layout = Layout::new(cfg);
    let (mode, seed) = (cfg.mode, cfg.aux.seed);
    let success: Vec<SuccessRow> = read_csv(cfg, Stage::Eval, &layout.nav_success(mode), "eval")?;
    let rmse: Vec<RmseRow> = read_csv(cfg, Stage::Eval, &layout.nav_rmse(mode), "eval")?;
    let steps: Vec<StepRow> = read_csv(cfg, Stage::Eval, &layout.episode_steps(mode, seed), "eval")?;
    let episodes: Vec<EpisodeRow> = read_csv(cfg, Stage::Eval, &layout.episode_summary(mode, seed), "eval")?;
    let bench_path = layout.bench(mode, seed);
    let bench: Option<Vec<BenchRow>> = if bench_path.exists() {
        require(cfg, Stage::Bench, &bench_path, "bench")?;
        Some(read_csv(cfg, Stage::Bench, &bench_path, "bench")?)
    } else {
        None
    };

    let dir = layout.report_dir(mode, seed);
    std::fs::create_dir_all(&dir)?;
    let stamp = header(cfg, Stage::Report);
    let mut out = Vec::new();

    let reached: BTreeMap<usize, &EpisodeRow> = episodes
        .iter()
        .filter(|e| e.outcome == "reached")
        .map(|e| (e.episode_id, e))
        .collect();
    let kept: Vec<&StepRow> = steps.iter().filter(|s| reached.contains_key(&s.episode_id)).collect();

    let mut table = String::from(
        "mode,seed,test_episodes,successful_episodes,within_beta,steps,mean_rho,eta_m,eta_m_percent,mean_p_f,mean_p_d,eta_w,eta_w_percent\n",
    );
    let within = episodes.iter().filter(|e| e.within_beta).count();
    let mut total = Acc::default();
    let mut m_sum = 0.0;
    for s in &kept {
        total.add(s);
        m_sum += s.m_active as f64 / reached[&s.episode_id].m_full as f64;
    }
    if total.n > 0 {
        let (rho, p_f, p_d) = total.means();
        let eta_m = m_sum / total.n as f64;
        let eta_w = (p_f + p_d) / (2.0 * MAX_POWER as f64);
        let _ = writeln!(
            table,
            "{mode},{seed},{},{},{within},{},{},{},{},{},{},{},{}",
            episodes.len(),
            reached.len(),
            total.n,
            f6(rho),
            f6(eta_m),
            round_percent(eta_m),
            f6(p_f),
            f6(p_d),
            f6(eta_w),
            round_percent(eta_w)
        );
        out.push(format!(
            "mean rho {rho:.3}, eta_m {}%, mean p_f {p_f:.2}, mean p_d {p_d:.2}, eta_w {}% over {} successful episodes ({} steps)",
            round_percent(eta_m),
            round_percent(eta_w),
            reached.len(),
            total.n
        ));
    } else {
        let _ = writeln!(table, "{mode},{seed},{},0,{within},0,nan,nan,,nan,nan,nan,", episodes.len());
        out.push("no successful episodes to summarize".to_string());
    }
    write_stamped(&dir.join("table1.csv"), &stamp, &table)?;

    let mut body = String::from("rho,p_f,p_d,distance_lo,distance_hi,episodes,successes,success_rate,mean_length_ratio\n");
    for r in &success {
        let _ = writeln!(
            body,
            "{},{},{},{},{},{},{},{},{}",
            f6(r.rho),
            r.p_f,
            r.p_d,
            f6(r.distance_lo),
            f6(r.distance_hi),
            r.episodes,
            r.successes,
            f6(r.success_rate),
            f6(r.mean_length_ratio)
        );
    }
    write_stamped(&dir.join("success_vs_distance.csv"), &stamp, &body)?;

    let mut body = String::from("rho,p_f,p_d,samples,rmse\n");
    for r in &rmse {
        let _ = writeln!(body, "{},{},{},{},{}", f6(r.rho), r.p_f, r.p_d, r.samples, f6(r.rmse));
    }
    write_stamped(&dir.join("rmse_vs_setting.csv"), &stamp, &body)?;

    let cell = cfg.eval.cell;
    let mut cells: BTreeMap<(u64, i64, i64), Acc> = BTreeMap::new();
    for s in &kept {
        let key = (s.world, (s.x / cell).floor() as i64, (s.y / cell).floor() as i64);
        cells.entry(key).or_default().add(s);
    }
    let mut worlds: Vec<u64> = cells.keys().map(|k| k.0).collect();
    worlds.dedup();
    for w in &worlds {
        let mut body = format!(
            "# world {w}, successful episodes only, cell {cell} m\n# x y mean_rho mean_p_f mean_p_d steps\n"
        );
        let mut last_x = None;
        for ((_, cx, cy), acc) in cells.range((*w, i64::MIN, i64::MIN)..=(*w, i64::MAX, i64::MAX)) {
            if last_x.is_some_and(|x| x != *cx) {
                body.push('\n');
            }
            last_x = Some(*cx);
            let (rho, p_f, p_d) = acc.means();
            let _ = writeln!(
                body,
                "{} {} {} {} {} {}",
                f6((*cx as f64 + 0.5) * cell),
                f6((*cy as f64 + 0.5) * cell),
                f6(rho),
                f6(p_f),
                f6(p_d),
                acc.n
            );
        }
        write_stamped(&dir.join(format!("heatmap_world_{w}.dat")), &stamp, &body)?;
    }

    let bins = (cfg.sensor.max_range / cell).ceil() as usize;
    let mut depth = vec![Acc::default(); bins + 1];
    for s in &kept {
        let b = match s.forward_depth {
            Some(d) => ((d / cell).floor() as usize).min(bins - 1),
            None => bins,
        };
        depth[b].add(s);
    }
    let mut body = String::from("depth_lo,depth_hi,steps,mean_rho,mean_p_f,mean_p_d\n");
    for (b, acc) in depth.iter().enumerate() {
        if acc.n == 0 {
            continue;
        }
        let (lo, hi) = if b == bins {
            (cfg.sensor.max_range, f64::INFINITY)
        } else {
            (b as f64 * cell, ((b + 1) as f64 * cell).min(cfg.sensor.max_range))
        };
        let (rho, p_f, p_d) = acc.means();
        let hi = if hi.is_finite() { f6(hi) } else { "inf".into() };
        let _ = writeln!(body, "{},{hi},{},{},{},{}", f6(lo), acc.n, f6(rho), f6(p_f), f6(p_d));
    }
    write_stamped(&dir.join("depth_bins.csv"), &stamp, &body)?;

    if let Some(rows) = bench {
        let mut body = String::from("nav_hidden,full_params,mean_rho,mean_active_params,aux_params,static_ns,adaptive_ns,speedup\n");
        for r in &rows {
            let _ = writeln!(
                body,
                "{},{},{},{},{},{},{},{}",
                r.nav_hidden,
                r.full_params,
                f6(r.mean_rho),
                f6(r.mean_active_params),
                r.aux_params,
                f6(r.static_ns),
                f6(r.adaptive_ns),
                f6(r.speedup)
            );
        }
        write_stamped(&dir.join("timing.csv"), &stamp, &body)?;
        out.push(format!("timing table over {} network sizes", rows.len()));
    }
    out.push(format!("report -> {}", dir.display()));
    Ok(out)
}
