use serde::Serialize;
use subretrieve::processes::bessel_clock_readings;
use subretrieve::special::argsinh;
use subretrieve::stats::ks_two_sample;
use subretrieve::subordinators::sample_stable_marginal;
use subretrieve::StableConfig;

use super::{par_map, stream};
use crate::config::{Command, ExperimentConfig};
use crate::error::ExpResult;
use crate::output::{write_csv, Report};

pub const MAX_TRUNCATION: f64 = 0.01;

#[derive(Serialize)]
struct Row {
    index: u64,
    tau_ell: f64,
    clock_at_tau: f64,
    truncated: bool,
    tau_a: f64,
}

/// `H_{τ_ℓ}` against `τ_{a(ℓ)}`, `a(ℓ) = argsinh ℓ`.
///
/// Both samples are censored at the clock horizon before the KS test, so
/// truncated clock readings compare like for like.
pub(super) fn run(cfg: &ExperimentConfig, report: &mut Report) -> ExpResult<()> {
    let cmd = Command::E0Check;
    let sc = StableConfig::new(cfg.alpha, cfg.normalization)?;
    let a = argsinh(cfg.ell);
    let horizon = cfg.clock.horizon;
    let rows = par_map(cfg.replicates, |i| {
        let mut rng = stream(cfg, cmd, &[0, i]);
        let tau_ell = sample_stable_marginal(&sc, cfg.ell, &mut rng)?;
        let reading = bessel_clock_readings(&[tau_ell], &cfg.clock, &mut rng)?[0];
        let mut rng = stream(cfg, cmd, &[1, i]);
        let tau_a = sample_stable_marginal(&sc, a, &mut rng)?;
        Ok(Row { index: i, tau_ell, clock_at_tau: reading.clock, truncated: reading.truncated, tau_a })
    })?;
    let lhs: Vec<f64> = rows.iter().map(|r| r.clock_at_tau.min(horizon)).collect();
    let rhs: Vec<f64> = rows.iter().map(|r| r.tau_a.min(horizon)).collect();
    let ks = ks_two_sample(&lhs, &rhs, cfg.level)?;
    let truncated = rows.iter().filter(|r| r.truncated).count() as f64 / rows.len() as f64;
    report.check("ks", ks.pass, format!("D = {:.5} vs {:.5} at level {}", ks.statistic, ks.threshold, cfg.level));
    report.check("truncation", truncated < MAX_TRUNCATION, format!("fraction {truncated:.5} (max {MAX_TRUNCATION})"));
    report.stat("a_ell", a)?;
    report.stat("ks", &ks)?;
    report.stat("truncation_fraction", truncated)?;
    write_csv(&cfg.out_path(cmd, ".csv"), cfg, &rows)
}
