use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use subretrieve::processes::bessel_clock_readings;
use subretrieve::stats::median;
use subretrieve::subordinators::sample_stable_marginal;
use subretrieve::StableConfig;

use super::{par_map, stream};
use crate::config::{Command, ExperimentConfig};
use crate::error::{ExpError, ExpResult};
use crate::output::{write_csv, Report};

/// z-score above which dependence on `R` is declared.
pub const DETECTION_Z: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DependenceStat {
    pub statistic: f64,
    pub df: f64,
    pub z: f64,
}

/// Between-group chi-square for `1{d ≤ median d}` across `bins` quantile
/// bins of `r`, within each of `bins` quantile bins of `h`, summed over the
/// `h`-bins and standardized as `(stat − df)/√(2 df)`.
pub fn dependence_z(h: &[f64], r: &[f64], d: &[f64], bins: usize) -> DependenceStat {
    let n = h.len();
    let Ok(med) = median(d) else {
        return DependenceStat { statistic: 0.0, df: 0.0, z: 0.0 };
    };
    let below: Vec<f64> = d.iter().map(|&x| (x <= med) as u8 as f64).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| h[a].total_cmp(&h[b]));
    let (mut statistic, mut df) = (0.0, 0.0);
    for group in chunks(&order, bins) {
        let mut group = group.to_vec();
        group.sort_by(|&a, &b| r[a].total_cmp(&r[b]));
        let p = group.iter().map(|&i| below[i]).sum::<f64>() / group.len() as f64;
        if p <= 0.0 || p >= 1.0 {
            continue;
        }
        let subs = chunks(&group, bins);
        for sub in &subs {
            let ps = sub.iter().map(|&i| below[i]).sum::<f64>() / sub.len() as f64;
            statistic += sub.len() as f64 * (ps - p) * (ps - p) / (p * (1.0 - p));
        }
        df += (subs.len() - 1) as f64;
    }
    let z = if df > 0.0 { (statistic - df) / (2.0 * df).sqrt() } else { 0.0 };
    DependenceStat { statistic, df, z }
}

/// `k` nearly equal contiguous chunks (fewer if `v` is short).
fn chunks(v: &[usize], k: usize) -> Vec<&[usize]> {
    let k = k.min(v.len()).max(1);
    (0..k).map(|j| &v[j * v.len() / k..(j + 1) * v.len() / k]).filter(|c| !c.is_empty()).collect()
}

#[derive(Serialize)]
struct Row {
    case: &'static str,
    replicate: u64,
    h_ell: f64,
    r_ell: f64,
    h_next: f64,
}

/// Does the law of `H_{τ_{ℓ+ℓ'}}` depend on `R_{τ_ℓ}` beyond `H_{τ_ℓ}`?
///
/// The Bessel clock should show dependence; the control, with clock
/// `H_t = t` and `R` the radius of an exact planar Brownian motion from
/// `(1, 0)`, should not.
pub(super) fn run(cfg: &ExperimentConfig, report: &mut Report) -> ExpResult<()> {
    let cmd = Command::MarkovProbe;
    let sc = StableConfig::new(cfg.alpha, cfg.normalization)?;
    let times = |rng: &mut _| -> ExpResult<(f64, f64)> {
        let t1 = sample_stable_marginal(&sc, cfg.ell, rng)?;
        let t2 = if cfg.ell_prime > 0.0 { t1 + sample_stable_marginal(&sc, cfg.ell_prime, rng)? } else { t1 };
        Ok((t1, t2))
    };
    let bessel = par_map(cfg.replicates, |i| {
        let mut rng = stream(cfg, cmd, &[0, i]);
        let (t1, t2) = times(&mut rng)?;
        let readings = bessel_clock_readings(&[t1, t2], &cfg.clock, &mut rng)?;
        let truncated = readings.iter().any(|r| r.truncated);
        Ok((!truncated).then(|| Row {
            case: "bessel",
            replicate: i,
            h_ell: readings[0].clock,
            r_ell: readings[0].radius,
            h_next: readings[1].clock,
        }))
    })?;
    let control = par_map(cfg.replicates, |i| {
        let mut rng = stream(cfg, cmd, &[1, i]);
        let (t1, t2) = times(&mut rng)?;
        let (z1, z2): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
        let s = t1.sqrt();
        Ok(Some(Row { case: "control", replicate: i, h_ell: t1, r_ell: (1.0 + s * z1).hypot(s * z2), h_next: t2 }))
    })?;
    let truncated = bessel.iter().filter(|r| r.is_none()).count();
    let bessel: Vec<Row> = bessel.into_iter().flatten().collect();
    let control: Vec<Row> = control.into_iter().flatten().collect();
    if bessel.is_empty() {
        return Err(ExpError::Config("every Bessel replicate was truncated".into()));
    }
    let stat = |rows: &[Row]| {
        let h: Vec<f64> = rows.iter().map(|r| r.h_ell).collect();
        let r: Vec<f64> = rows.iter().map(|r| r.r_ell).collect();
        let d: Vec<f64> = rows.iter().map(|r| r.h_next - r.h_ell).collect();
        dependence_z(&h, &r, &d, cfg.bins)
    };
    let sb = stat(&bessel);
    let sc_ = stat(&control);
    report.check(
        "bessel-dependence",
        sb.z > DETECTION_Z,
        format!("z = {:.3} (chi2 {:.2}, df {})", sb.z, sb.statistic, sb.df),
    );
    report.check(
        "control-independence",
        sc_.z <= DETECTION_Z,
        format!("z = {:.3} (chi2 {:.2}, df {})", sc_.z, sc_.statistic, sc_.df),
    );
    report.stat("bessel", sb)?;
    report.stat("control", sc_)?;
    report.stat("truncated_replicates", truncated)?;
    let mut rows = bessel;
    rows.extend(control);
    write_csv(&cfg.out_path(cmd, ".csv"), cfg, &rows)
}
