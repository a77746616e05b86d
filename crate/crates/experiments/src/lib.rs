//! Experiment runner for `subretrieve`: one command per claim, seeded and
//! reproducible, writing CSV series and a JSON summary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{Command, ExperimentConfig, Schedule};
pub use error::{ExpError, ExpResult};
pub use output::{Check, Summary};

/// Runs `command` on a pool of `config.threads` workers (0 = all cores) and
/// writes `<out>/<command>-summary.json` next to the command's CSV files.
pub fn run(command: Command, config: &ExperimentConfig) -> ExpResult<Summary> {
    config.validate()?;
    std::fs::create_dir_all(&config.out)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.threads).build()?;
    let mut report = output::Report::default();
    pool.install(|| commands::dispatch(command, config, &mut report))?;
    let summary = report.finish(command, config)?;
    output::write_summary(&config.out_path(command, "-summary.json"), &summary)?;
    Ok(summary)
}
