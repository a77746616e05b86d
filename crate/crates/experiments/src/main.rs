use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};
use subretrieve_experiments::{run, Command, ExperimentConfig, Schedule};

#[derive(Parser)]
#[command(name = "subretrieve", version, about = "Jump-counting retrieval experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Bessel clock at a stable time against the argsinh identity
    E0Check,
    /// Recover X_0 from jump counts of the time-changed integral
    RetrieveDemo,
    /// Gamma time change: null retrieval, TV gap, stable contrast
    GammaNull,
    /// Stochastic-integral retrieval of |X_0| and the remainder count
    Prop2Demo,
    /// Dependence of the Bessel clock's future on the current radius
    MarkovProbe,
    /// Poisson goodness of fit of the threshold counts
    PoissonGof,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Command {
        match c {
            Cmd::E0Check => Command::E0Check,
            Cmd::RetrieveDemo => Command::RetrieveDemo,
            Cmd::GammaNull => Command::GammaNull,
            Cmd::Prop2Demo => Command::Prop2Demo,
            Cmd::MarkovProbe => Command::MarkovProbe,
            Cmd::PoissonGof => Command::PoissonGof,
        }
    }
}

#[derive(clap::Args)]
struct Flags {
    /// JSON file with configuration keys; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    m: Option<f64>,
    /// `dyadic:a..b` or a comma list of n
    #[arg(long, global = true)]
    schedule: Option<Schedule>,
    #[arg(long, global = true)]
    replicates: Option<usize>,
    /// e.g. `constant:2`, `affine:1,3`, `brownian:0`, `bessel-clock`, `hoelder:1,0.5`
    #[arg(long, global = true)]
    process: Option<String>,
    /// `paper-tail`, `first-passage` or `unit-brownian-tail`
    #[arg(long, global = true)]
    normalization: Option<String>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    level: Option<f64>,
    /// Worker threads (0 = all cores); results do not depend on it
    #[arg(long, global = true)]
    threads: Option<usize>,
}

impl Flags {
    fn overrides(&self) -> Value {
        let mut map = Map::new();
        let mut put = |k: &str, v: Value| {
            map.insert(k.to_string(), v);
        };
        if let Some(v) = self.seed {
            put("seed", json!(v));
        }
        if let Some(v) = self.alpha {
            put("alpha", json!(v));
        }
        if let Some(v) = self.m {
            put("m", json!(v));
        }
        if let Some(v) = &self.schedule {
            put("schedule", json!(v.points()));
        }
        if let Some(v) = self.replicates {
            put("replicates", json!(v));
        }
        if let Some(v) = &self.process {
            put("process", json!(v));
        }
        if let Some(v) = &self.normalization {
            put("normalization", json!(v));
        }
        if let Some(v) = &self.out {
            put("out", json!(v));
        }
        if let Some(v) = self.level {
            put("level", json!(v));
        }
        if let Some(v) = self.threads {
            put("threads", json!(v));
        }
        Value::Object(map)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command: Command = cli.command.into();
    let config = match ExperimentConfig::resolve(command, cli.flags.config.as_deref(), &cli.flags.overrides()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(command, &config) {
        Ok(summary) => {
            for c in &summary.checks {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if summary.pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("failed checks: {}", summary.failures.join(", "));
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
