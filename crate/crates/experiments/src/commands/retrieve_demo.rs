use serde::Serialize;
use subretrieve::processes::Quadrature;
use subretrieve::retrieval::lebesgue_retrieval_counts;
use subretrieve::{CountRecord, ProcessSpec, StableConfig};

use super::{default_bound, median_or_nan, par_map, stream};
use crate::config::{Command, ExperimentConfig};
use crate::error::ExpResult;
use crate::output::{write_csv, Report};

/// Relative tolerance on the final median estimate.
pub const FINAL_TOLERANCE: f64 = 0.15;
/// Largest median estimate accepted on the side opposite to `X_0`.
pub const OPPOSITE_MAX: f64 = 0.1;
/// Points at the end of the schedule over which the error must decrease.
pub const MONOTONE_POINTS: usize = 5;

#[derive(Serialize)]
struct Row {
    n: u64,
    replicate: u64,
    j_pos: u64,
    j_neg: u64,
    scaled_pos: f64,
    scaled_neg: f64,
    estimate_pos: f64,
    estimate_neg: f64,
    cutoff: f64,
    resamples: u32,
}

#[derive(Serialize)]
struct MedianRow {
    n: u64,
    median_estimate_pos: f64,
    median_estimate_neg: f64,
    median_abs_error: f64,
    log_median_error: f64,
}

pub(super) fn run(cfg: &ExperimentConfig, report: &mut Report) -> ExpResult<()> {
    let cmd = Command::RetrieveDemo;
    let sc = StableConfig::new(cfg.alpha, cfg.normalization)?;
    let quad = Quadrature { nodes: cfg.quad_nodes, ..Quadrature::default() };
    let bound = cfg.bound.unwrap_or_else(|| default_bound(&cfg.process));
    let target = cfg.process.initial_value();

    let mut rows = Vec::new();
    let mut medians = Vec::new();
    for (k, &n) in cfg.schedule.points().iter().enumerate() {
        let counts = par_map(cfg.replicates, |r| {
            let mut rng = stream(cfg, cmd, &[k as u64, r]);
            Ok(lebesgue_retrieval_counts(&cfg.process, &sc, n, cfg.m, bound, &quad, &mut rng)?)
        })?;
        let mut pos = Vec::with_capacity(counts.len());
        let mut neg = Vec::with_capacity(counts.len());
        let mut err = Vec::with_capacity(counts.len());
        for (r, c) in counts.iter().enumerate() {
            let rp = CountRecord::new(n, c.j_pos, cfg.alpha, cfg.m)?;
            let rn = CountRecord::new(n, c.j_neg, cfg.alpha, cfg.m)?;
            let (ep, en) = (rp.scaled.powf(1.0 / cfg.alpha), rn.scaled.powf(1.0 / cfg.alpha));
            let side = if target >= 0.0 { ep } else { en };
            pos.push(ep);
            neg.push(en);
            err.push((side - target.abs()).abs());
            rows.push(Row {
                n,
                replicate: r as u64,
                j_pos: c.j_pos,
                j_neg: c.j_neg,
                scaled_pos: rp.scaled,
                scaled_neg: rn.scaled,
                estimate_pos: ep,
                estimate_neg: en,
                cutoff: c.cutoff,
                resamples: c.resamples,
            });
        }
        let median_abs_error = median_or_nan(&err);
        medians.push(MedianRow {
            n,
            median_estimate_pos: median_or_nan(&pos),
            median_estimate_neg: median_or_nan(&neg),
            median_abs_error,
            log_median_error: median_abs_error.ln(),
        });
    }

    let last = medians.last().expect("schedule is nonempty");
    let (side, opposite) = if target >= 0.0 {
        (last.median_estimate_pos, last.median_estimate_neg)
    } else {
        (last.median_estimate_neg, last.median_estimate_pos)
    };
    if target != 0.0 {
        let rel = (side - target.abs()).abs() / target.abs();
        report.check(
            "final-median",
            rel <= FINAL_TOLERANCE,
            format!(
                "median {side:.5} vs |X_0| = {}, relative error {rel:.4} (tolerance {FINAL_TOLERANCE})",
                target.abs()
            ),
        );
        report.check("opposite-side", opposite <= OPPOSITE_MAX, format!("median {opposite:.5} (max {OPPOSITE_MAX})"));
    } else {
        let worst = side.max(opposite);
        report.check("final-median", worst <= OPPOSITE_MAX, format!("largest median {worst:.5} (max {OPPOSITE_MAX})"));
    }
    if matches!(cfg.process, ProcessSpec::Constant { .. }) && target != 0.0 && medians.len() >= MONOTONE_POINTS {
        let tail: Vec<f64> = medians[medians.len() - MONOTONE_POINTS..].iter().map(|m| m.log_median_error).collect();
        let monotone = tail.windows(2).all(|w| w[1] < w[0]);
        report.check("log-error-monotone", monotone, format!("last {MONOTONE_POINTS} log median errors {tail:?}"));
    }
    report.stat("target", target)?;
    report.stat("bound", bound)?;
    report.stat("final_median_estimate_pos", last.median_estimate_pos)?;
    report.stat("final_median_estimate_neg", last.median_estimate_neg)?;
    report.stat("resampled_paths", rows.iter().filter(|r| r.resamples > 0).count())?;

    write_csv(&cfg.out_path(cmd, ".csv"), cfg, &rows)?;
    write_csv(&cfg.out_path(cmd, "-medians.csv"), cfg, &medians)
}
