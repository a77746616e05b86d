use rand::RngCore;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;
use subretrieve::processes::{PathEvaluator, Quadrature};
use subretrieve::quasiinvariance::{scheffe_gap, stable_contrast};
use subretrieve::retrieval::gamma_null_retrieve;
use subretrieve::special::exp_integral_e1;
use subretrieve::stats::ks_two_sample;
use subretrieve::{Jump, JumpPath, StableConfig};

use super::{median_or_nan, par_map, stream};
use crate::config::{Command, ExperimentConfig};
use crate::error::{ExpError, ExpResult};
use crate::output::{write_csv, Report};

pub const MAX_HIT_FRACTION: f64 = 0.01;
pub const MAX_FINAL_GAP: f64 = 0.05;
pub const MIN_STABLE_ACCURACY: f64 = 0.9;
const STEP_PATHS: u64 = 1000;
const STEP_HORIZON: f64 = 5.0;
const STEP_GRID: usize = 100;

#[derive(Serialize)]
struct Row {
    x0: f64,
    n: u64,
    replicate: u64,
    j_pos: u64,
    j_neg: u64,
    estimate_pos: f64,
}

#[derive(Serialize)]
struct GapRow {
    t: f64,
    gap: f64,
    se: f64,
}

/// Gamma time change: retrieval counts, the total-variation gap of scaled
/// gamma paths, the stable/gamma contrast, and a Poisson step time change.
pub(super) fn run(cfg: &ExperimentConfig, report: &mut Report) -> ExpResult<()> {
    let cmd = Command::GammaNull;
    if cfg.scales.is_empty() {
        return Err(ExpError::Config("gamma-null needs at least one scale".into()));
    }
    let schedule = cfg.schedule.points();
    let last_n = *schedule.last().expect("schedule is nonempty");
    let eps = 1.0 / last_n as f64;

    let mut rows = Vec::new();
    let mut last_counts: Vec<Vec<u64>> = Vec::new();
    for (xi, &x0) in cfg.scales.iter().enumerate() {
        let series = par_map(cfg.replicates, |r| {
            let seed = stream(cfg, cmd, &[0, xi as u64, r]).next_u64();
            Ok(gamma_null_retrieve(x0, cfg.alpha, schedule, cfg.m, seed)?)
        })?;
        let mut counts = Vec::with_capacity(series.len());
        let mut estimates = Vec::with_capacity(series.len());
        for (r, s) in series.iter().enumerate() {
            let neg = s.records_neg.as_ref().expect("both sides are counted");
            for (k, rec) in s.records_pos.iter().enumerate() {
                rows.push(Row {
                    x0,
                    n: rec.n,
                    replicate: r as u64,
                    j_pos: rec.count,
                    j_neg: neg[k].count,
                    estimate_pos: s.estimate_pos[k],
                });
            }
            counts.push(s.records_pos.last().unwrap().count);
            estimates.push(*s.estimate_pos.last().unwrap());
        }
        let hits = counts.iter().filter(|&&c| c >= 1).count() as f64 / counts.len() as f64;
        let oracle = 1.0 - (-eps * exp_integral_e1(eps.powf(cfg.m) / x0)).exp();
        report.check(
            &format!("hit-fraction[x0={x0}]"),
            hits < MAX_HIT_FRACTION,
            format!(
                "fraction of paths with J >= 1 at n = {last_n}: {hits:.5} (oracle {oracle:.5}, max {MAX_HIT_FRACTION})"
            ),
        );
        report.stat(&format!("median_final_estimate[x0={x0}]"), median_or_nan(&estimates))?;
        last_counts.push(counts);
    }
    if last_counts.len() >= 2 {
        let as_f64 = |v: &[u64]| v.iter().map(|&c| c as f64).collect::<Vec<f64>>();
        let ks = ks_two_sample(&as_f64(&last_counts[0]), &as_f64(&last_counts[1]), cfg.level)?;
        report.check(
            "indistinguishable",
            ks.pass,
            format!(
                "KS on J counts, x0 = {} vs {}: D = {:.5} vs {:.5}",
                cfg.scales[0], cfg.scales[1], ks.statistic, ks.threshold
            ),
        );
    }

    let x = *cfg.scales.last().unwrap();
    let gap = scheffe_gap(x, &cfg.t_schedule, cfg.tv_replicates, &mut stream(cfg, cmd, &[1]))?;
    let final_gap = gap.points.last().map(|p| p.gap).unwrap_or(f64::NAN);
    report.check("tv-gap-decreasing", gap.strictly_decreasing, format!("decreases (mean, se): {:?}", gap.decreases));
    report.check(
        "tv-gap-final",
        final_gap < MAX_FINAL_GAP,
        format!("gap {final_gap:.5} at the smallest t (max {MAX_FINAL_GAP})"),
    );
    let gap_rows: Vec<GapRow> = gap.points.iter().map(|p| GapRow { t: p.t, gap: p.gap, se: p.se }).collect();

    let sc = StableConfig::new(cfg.alpha, cfg.normalization)?;
    let (x1, x2) = cfg.contrast_scales;
    let contrast =
        stable_contrast(&sc, x1, x2, cfg.contrast_eps, cfg.m, cfg.contrast_replicates, &mut stream(cfg, cmd, &[2]))?;
    report.check(
        "stable-contrast",
        contrast.stable_accuracy > MIN_STABLE_ACCURACY,
        format!(
            "stable accuracy {:.4} (oracle {:.4}), gamma accuracy {:.4} (oracle {:.4})",
            contrast.stable_accuracy, contrast.stable_oracle, contrast.gamma_accuracy, contrast.gamma_oracle
        ),
    );
    report.stat("contrast", &contrast)?;

    let violations = poisson_step_violations(cfg)?;
    report.check("poisson-step", violations == 0, format!("{violations} nonzero values before the first jump"));

    write_csv(&cfg.out_path(cmd, ".csv"), cfg, &rows)?;
    write_csv(&cfg.out_path(cmd, "-tv-gap.csv"), cfg, &gap_rows)
}

/// With `τ` a unit-rate Poisson process, `Ŷ_ℓ = Y_{τ_ℓ}` must vanish before
/// the first jump. Returns the number of grid points where it does not.
fn poisson_step_violations(cfg: &ExperimentConfig) -> ExpResult<u64> {
    let quad = Quadrature { nodes: cfg.quad_nodes, ..Quadrature::default() };
    let per_path = par_map(STEP_PATHS as usize, |r| {
        let mut rng = stream(cfg, Command::GammaNull, &[3, r]);
        let mut jumps = Vec::new();
        let mut t: f64 = Exp1.sample(&mut rng);
        while t <= STEP_HORIZON {
            jumps.push(Jump { time: t, size: 1.0 });
            let e: f64 = Exp1.sample(&mut rng);
            t += e;
        }
        let first = jumps.first().map(|j| j.time).unwrap_or(f64::INFINITY);
        let path = JumpPath::new(STEP_HORIZON, None, 1.0, jumps, 0.0)?;
        let mut x = cfg.process.evaluator(stream(cfg, Command::GammaNull, &[4, r]))?;
        let mut bad = 0u64;
        for g in 0..STEP_GRID {
            let ell = STEP_HORIZON * g as f64 / STEP_GRID as f64;
            if ell >= first {
                break;
            }
            let tau = path.evaluate(ell)?;
            let y = x.summarize(0.0, tau, &quad)?.integral;
            bad += (y != 0.0) as u64;
        }
        Ok(bad)
    })?;
    Ok(per_path.iter().sum())
}
