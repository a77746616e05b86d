use rayon::prelude::*;
use subretrieve::rng::{substream, SimRng};
use subretrieve::stats::median;
use subretrieve::ProcessSpec;

use crate::config::{Command, ExperimentConfig};
use crate::error::ExpResult;
use crate::output::Report;

mod e0_check;
mod gamma_null;
mod markov_probe;
mod poisson_gof;
mod prop2_demo;
mod retrieve_demo;

pub use markov_probe::{dependence_z, DependenceStat};

pub(crate) fn dispatch(command: Command, cfg: &ExperimentConfig, report: &mut Report) -> ExpResult<()> {
    match command {
        Command::E0Check => e0_check::run(cfg, report),
        Command::RetrieveDemo => retrieve_demo::run(cfg, report),
        Command::GammaNull => gamma_null::run(cfg, report),
        Command::Prop2Demo => prop2_demo::run(cfg, report),
        Command::MarkovProbe => markov_probe::run(cfg, report),
        Command::PoissonGof => poisson_gof::run(cfg, report),
    }
}

/// Random stream for `(seed, command, labels…)`.
pub(crate) fn stream(cfg: &ExperimentConfig, command: Command, labels: &[u64]) -> SimRng {
    let mut all = Vec::with_capacity(labels.len() + 1);
    all.push(command.label());
    all.extend_from_slice(labels);
    substream(cfg.seed, &all)
}

/// `f(0), …, f(n−1)` on the current pool, collected in index order.
pub(crate) fn par_map<T, F>(n: usize, f: F) -> ExpResult<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> ExpResult<T> + Sync + Send,
{
    (0..n as u64).into_par_iter().map(f).collect()
}

/// Default `|X|` bound for cutoff selection; the pipelines widen it if
/// the path exceeds it.
pub(crate) fn default_bound(spec: &ProcessSpec<f64>) -> f64 {
    let b = match *spec {
        ProcessSpec::Constant { x0 } => x0.abs(),
        ProcessSpec::Affine { x0, slope } => x0.abs() + slope.abs(),
        ProcessSpec::BesselClockIntegrand => 4.0,
        ProcessSpec::Brownian { x0 } => x0.abs() + 1.0,
        ProcessSpec::HoelderTest { x0, .. } => x0.abs() + 1.0,
    };
    if b > 0.0 {
        b
    } else {
        1.0
    }
}

pub(crate) fn median_or_nan(v: &[f64]) -> f64 {
    median(v).unwrap_or(f64::NAN)
}

/// Least-squares slope of `y` against `x`.
pub(crate) fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
