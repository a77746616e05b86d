use serde::Serialize;
use subretrieve::retrieval::{scale_factor, stochastic_retrieval_counts};
use subretrieve::special::normal_abs_moment;
use subretrieve::subordinators::sample_stable_jumps;
use subretrieve::timechange::jump_deltas_i;
use subretrieve::{ProcessSpec, StableConfig};

use super::{default_bound, median_or_nan, par_map, slope, stream};
use crate::config::{Command, ExperimentConfig};
use crate::error::ExpResult;
use crate::output::{write_csv, Report};

pub const FINAL_TOLERANCE: f64 = 0.2;
pub const MIN_TREND_POINTS: usize = 4;
const TAIL_CUTOFF: f64 = 1e-6;

#[derive(Serialize)]
struct TailRow {
    x: f64,
    expected: f64,
    observed: u64,
    z: f64,
}

#[derive(Serialize)]
struct Row {
    n: u64,
    replicate: u64,
    j: u64,
    k: u64,
    scaled: f64,
    estimate: f64,
}

#[derive(Serialize)]
struct MedianRow {
    n: u64,
    median_estimate: f64,
}

#[derive(Serialize)]
struct KRow {
    n: u64,
    mean_k: f64,
    scaled_mean_k: f64,
    regime_fraction: f64,
}

/// Stochastic-integral retrieval: jump tail of `B̂`, the `|X_0|` series and
/// the remainder count `K_{ε,a}` for a Hölder integrand.
pub(super) fn run(cfg: &ExperimentConfig, report: &mut Report) -> ExpResult<()> {
    let cmd = Command::Prop2Demo;
    let sc = StableConfig::new(cfg.alpha, cfg.normalization)?;

    // Jump tail: #{s ≤ ε : |ΔB̂_s| > x} is Poisson(C E|Z|^{2α} ε x^{−2α}).
    let unit = ProcessSpec::Constant { x0: 1.0 };
    let cutoff = TAIL_CUTOFF.min(cfg.tail_eps);
    let per_path = par_map(cfg.tail_replicates, |r| {
        let mut rng = stream(cfg, cmd, &[0, r]);
        let path = sample_stable_jumps(&sc, cfg.tail_eps, cutoff, &mut rng)?;
        let mut one = unit.evaluator(stream(cfg, cmd, &[1, r]))?;
        let deltas = jump_deltas_i(&mut one, &path, cfg.tail_eps, &cfg.em, &mut rng)?;
        Ok(cfg
            .tail_points
            .iter()
            .map(|&x| deltas.iter().filter(|d| d.delta_b.abs() > x).count() as u64)
            .collect::<Vec<_>>())
    })?;
    let rate = sc.tail_constant() * normal_abs_moment(2.0 * cfg.alpha) * cfg.tail_eps;
    let mut tail_rows = Vec::new();
    for (i, &x) in cfg.tail_points.iter().enumerate() {
        let observed: u64 = per_path.iter().map(|c| c[i]).sum();
        let expected = cfg.tail_replicates as f64 * rate * x.powf(-2.0 * cfg.alpha);
        let z = (observed as f64 - expected) / expected.sqrt();
        report.check(
            &format!("jump-tail[x={x}]"),
            z.abs() <= 3.0,
            format!("observed {observed}, expected {expected:.2}, z = {z:.3}"),
        );
        tail_rows.push(TailRow { x, expected, observed, z });
    }

    // |X_0| series.
    let bound = cfg.bound.unwrap_or_else(|| default_bound(&cfg.process));
    let power = 1.0 / (2.0 * cfg.alpha);
    let mut rows = Vec::new();
    let mut medians = Vec::new();
    for (k, &n) in cfg.schedule.points().iter().enumerate() {
        let counts = par_map(cfg.replicates, |r| {
            let mut rng = stream(cfg, cmd, &[2, k as u64, r]);
            Ok(stochastic_retrieval_counts(&cfg.process, &sc, n, cfg.m, cfg.a, bound, &cfg.em, &mut rng)?)
        })?;
        let factor = scale_factor(n, cfg.alpha, cfg.m);
        let mut est = Vec::with_capacity(counts.len());
        for (r, c) in counts.iter().enumerate() {
            let scaled = factor * c.j as f64;
            let estimate = scaled.powf(power);
            est.push(estimate);
            rows.push(Row { n, replicate: r as u64, j: c.j, k: c.k.count, scaled, estimate });
        }
        medians.push(MedianRow { n, median_estimate: median_or_nan(&est) });
    }
    let target = cfg.process.initial_value().abs();
    let last = medians.last().expect("schedule is nonempty").median_estimate;
    if target > 0.0 {
        let rel = (last - target).abs() / target;
        report.check(
            "modulus-estimate",
            rel <= FINAL_TOLERANCE,
            format!("median {last:.5} vs |X_0| = {target}, relative error {rel:.4} (tolerance {FINAL_TOLERANCE})"),
        );
    }
    if matches!(cfg.process, ProcessSpec::Constant { .. }) {
        let nonzero = rows.iter().filter(|r| r.k > 0).count();
        report.check("constant-k-zero", nonzero == 0, format!("{nonzero} paths with K > 0"));
    }

    // K series for the Hölder integrand.
    let k_bound = default_bound(&cfg.k_process);
    let mut k_rows = Vec::new();
    for (k, &n) in cfg.k_schedule.points().iter().enumerate() {
        let counts = par_map(cfg.k_replicates, |r| {
            let mut rng = stream(cfg, cmd, &[3, k as u64, r]);
            Ok(stochastic_retrieval_counts(&cfg.k_process, &sc, n, cfg.m, cfg.a, k_bound, &cfg.em, &mut rng)?)
        })?;
        // E(K, Λ_ε): paths outside the Hölder regime contribute 0.
        let total: u64 = counts.iter().filter(|c| c.k.in_hoelder_regime).map(|c| c.k.count).sum();
        let mean_k = total as f64 / counts.len() as f64;
        let regime = counts.iter().filter(|c| c.k.in_hoelder_regime).count() as f64 / counts.len() as f64;
        k_rows.push(KRow {
            n,
            mean_k,
            scaled_mean_k: scale_factor(n, cfg.alpha, cfg.m) * mean_k,
            regime_fraction: regime,
        });
    }
    let log_n: Vec<f64> = k_rows.iter().map(|r| (r.n as f64).ln()).collect();
    let scaled: Vec<f64> = k_rows.iter().map(|r| r.scaled_mean_k).collect();
    let trend = slope(&log_n, &scaled);
    let decreasing = k_rows.len() >= MIN_TREND_POINTS && trend < 0.0 && scaled.last() < scaled.first();
    report.check(
        "k-trend",
        decreasing,
        format!("{} points, slope {trend:.4e} against log n, scaled means {scaled:?}", k_rows.len()),
    );
    report.stat("bound", bound)?;
    report.stat("final_median_estimate", last)?;
    report.stat("k_slope", trend)?;

    write_csv(&cfg.out_path(cmd, "-tail.csv"), cfg, &tail_rows)?;
    write_csv(&cfg.out_path(cmd, ".csv"), cfg, &rows)?;
    write_csv(&cfg.out_path(cmd, "-medians.csv"), cfg, &medians)?;
    write_csv(&cfg.out_path(cmd, "-k.csv"), cfg, &k_rows)
}
