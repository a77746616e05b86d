use serde::Serialize;
use subretrieve::retrieval::{count_n, default_cutoff};
use subretrieve::stats::chi_square_poisson_gof;
use subretrieve::subordinators::sample_stable_jumps;
use subretrieve::StableConfig;

use super::{par_map, stream};
use crate::config::{Command, ExperimentConfig};
use crate::error::ExpResult;
use crate::output::{write_csv, Report};

#[derive(Serialize)]
struct CellRow {
    eps: f64,
    b: f64,
    lambda: f64,
    paths: usize,
    mean_count: f64,
    statistic: f64,
    threshold: f64,
    pass: bool,
}

/// `N(ε, b)` against Poisson(`C b^α ε^{1−mα}`) on each `(eps_grid, b_grid)` pair.
pub(super) fn run(cfg: &ExperimentConfig, report: &mut Report) -> ExpResult<()> {
    let cmd = Command::PoissonGof;
    let sc = StableConfig::new(cfg.alpha, cfg.normalization)?;
    let mut rows = Vec::new();
    for (cell, (&eps, &b)) in cfg.eps_grid.iter().zip(&cfg.b_grid).enumerate() {
        let cutoff = default_cutoff(eps, cfg.m, b.abs().max(f64::MIN_POSITIVE));
        let counts = par_map(cfg.replicates, |r| {
            let mut rng = stream(cfg, cmd, &[cell as u64, r]);
            let path = sample_stable_jumps(&sc, eps, cutoff, &mut rng)?;
            Ok(count_n(&path, b, eps, cfg.m)?)
        })?;
        let lambda =
            if b > 0.0 { sc.tail_constant() * b.powf(cfg.alpha) * eps.powf(1.0 - cfg.m * cfg.alpha) } else { 0.0 };
        let test = chi_square_poisson_gof(&counts, lambda, cfg.level)?;
        let mean_count = counts.iter().sum::<u64>() as f64 / counts.len() as f64;
        report.check(
            &format!("poisson-gof[eps={eps},b={b}]"),
            test.pass,
            format!(
                "chi2 {:.4} vs {:.4} at level {}, lambda {lambda:.4}, mean {mean_count:.4}",
                test.statistic, test.threshold, cfg.level
            ),
        );
        rows.push(CellRow {
            eps,
            b,
            lambda,
            paths: counts.len(),
            mean_count,
            statistic: test.statistic,
            threshold: test.threshold,
            pass: test.pass,
        });
    }
    report.stat("cells", rows.len())?;
    write_csv(&cfg.out_path(cmd, ".csv"), cfg, &rows)
}
