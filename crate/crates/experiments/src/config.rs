use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use subretrieve::processes::ClockStepping;
use subretrieve::retrieval::check_exponent;
use subretrieve::timechange::EulerMaruyama;
use subretrieve::{Normalization, ProcessSpec};

use crate::error::{ExpError, ExpResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    E0Check,
    RetrieveDemo,
    GammaNull,
    Prop2Demo,
    MarkovProbe,
    PoissonGof,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::E0Check,
        Command::RetrieveDemo,
        Command::GammaNull,
        Command::Prop2Demo,
        Command::MarkovProbe,
        Command::PoissonGof,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::E0Check => "e0-check",
            Command::RetrieveDemo => "retrieve-demo",
            Command::GammaNull => "gamma-null",
            Command::Prop2Demo => "prop2-demo",
            Command::MarkovProbe => "markov-probe",
            Command::PoissonGof => "poisson-gof",
        }
    }

    /// Stream label so that commands never share random numbers.
    pub(crate) fn label(self) -> u64 {
        Command::ALL.iter().position(|c| *c == self).unwrap() as u64 + 1
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = ExpError;

    fn from_str(s: &str) -> ExpResult<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| ExpError::Config(format!("unknown command '{s}'")))
    }
}

/// Increasing list of resolutions `n`.
///
/// Parsed from `dyadic:a..b` (`2^a, …, 2^b`), a comma list, or a JSON array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleRepr", into = "Vec<u64>")]
pub struct Schedule(Vec<u64>);

#[derive(Deserialize)]
#[serde(untagged)]
enum ScheduleRepr {
    List(Vec<u64>),
    Text(String),
}

impl TryFrom<ScheduleRepr> for Schedule {
    type Error = ExpError;

    fn try_from(r: ScheduleRepr) -> ExpResult<Self> {
        match r {
            ScheduleRepr::List(v) => Schedule::new(v),
            ScheduleRepr::Text(s) => s.parse(),
        }
    }
}

impl From<Schedule> for Vec<u64> {
    fn from(s: Schedule) -> Vec<u64> {
        s.0
    }
}

impl Schedule {
    pub fn new(points: Vec<u64>) -> ExpResult<Self> {
        if points.is_empty() || points[0] == 0 || !points.windows(2).all(|w| w[1] > w[0]) {
            return Err(ExpError::Config(format!("schedule must be nonempty, positive and increasing: {points:?}")));
        }
        Ok(Schedule(points))
    }

    pub fn dyadic(lo: u32, hi: u32) -> Self {
        Schedule((lo..=hi).map(|k| 1u64 << k).collect())
    }

    pub fn points(&self) -> &[u64] {
        &self.0
    }
}

impl FromStr for Schedule {
    type Err = ExpError;

    fn from_str(s: &str) -> ExpResult<Self> {
        let bad = || ExpError::Config(format!("cannot parse schedule '{s}'"));
        if let Some(range) = s.strip_prefix("dyadic:") {
            let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
            let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
            let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
            if hi < lo || hi > 40 {
                return Err(bad());
            }
            return Ok(Schedule::dyadic(lo, hi));
        }
        let points = s.split(',').map(|p| p.trim().parse::<u64>().map_err(|_| bad())).collect::<ExpResult<Vec<_>>>()?;
        Schedule::new(points)
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

/// Fully resolved experiment parameters.
///
/// `out` and `threads` never change results and are left out of the copy
/// embedded in output files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub alpha: f64,
    pub m: f64,
    pub schedule: Schedule,
    pub replicates: usize,
    pub process: ProcessSpec<f64>,
    pub normalization: Normalization,
    #[serde(default = "default_out", skip_serializing)]
    pub out: PathBuf,
    pub level: f64,
    #[serde(default, skip_serializing)]
    pub threads: usize,
    /// Cap on `|X|` used to pick the path cutoff; `None` derives it from `X_0`.
    pub bound: Option<f64>,
    pub quad_nodes: usize,
    pub ell: f64,
    pub ell_prime: f64,
    pub clock: ClockStepping,
    pub bins: usize,
    pub eps_grid: Vec<f64>,
    pub b_grid: Vec<f64>,
    pub scales: Vec<f64>,
    pub t_schedule: Vec<f64>,
    pub tv_replicates: usize,
    pub contrast_scales: (f64, f64),
    pub contrast_eps: f64,
    pub contrast_replicates: usize,
    pub em: EulerMaruyama,
    pub a: f64,
    pub tail_eps: f64,
    pub tail_points: Vec<f64>,
    pub tail_replicates: usize,
    pub k_process: ProcessSpec<f64>,
    pub k_schedule: Schedule,
    pub k_replicates: usize,
}

impl ExperimentConfig {
    pub fn defaults(command: Command) -> Self {
        let mut c = ExperimentConfig {
            seed: 20_240_601,
            alpha: 0.5,
            m: 5.0,
            schedule: Schedule::dyadic(4, 14),
            replicates: 200,
            process: ProcessSpec::Constant { x0: 2.0 },
            normalization: Normalization::PaperTail,
            out: default_out(),
            level: 0.01,
            threads: 0,
            bound: None,
            quad_nodes: 64,
            ell: 1.0,
            ell_prime: 0.5,
            clock: ClockStepping::default(),
            bins: 10,
            eps_grid: vec![0.1, 0.05, 0.2],
            b_grid: vec![1.0, 2.0, 0.5],
            scales: vec![1.0, 2.0],
            t_schedule: vec![1.0, 0.1, 0.01, 0.001],
            tv_replicates: 20_000,
            contrast_scales: (1.0, 4.0),
            contrast_eps: 0.1,
            contrast_replicates: 2000,
            em: EulerMaruyama::default(),
            a: 1.0,
            tail_eps: 1.0,
            tail_points: vec![0.5, 1.0, 2.0],
            tail_replicates: 20_000,
            k_process: ProcessSpec::HoelderTest { x0: 1.0, eta: 0.5 },
            k_schedule: Schedule::dyadic(2, 7),
            k_replicates: 1000,
        };
        match command {
            Command::E0Check => {
                c.normalization = Normalization::FirstPassage;
                c.replicates = 10_000;
            }
            Command::RetrieveDemo => {}
            Command::GammaNull => {
                c.schedule = Schedule(vec![10_000]);
                c.replicates = 4000;
            }
            Command::Prop2Demo => {
                c.normalization = Normalization::UnitBrownianTail;
                c.process = ProcessSpec::Constant { x0: -3.0 };
                c.schedule = Schedule::dyadic(4, 11);
                c.replicates = 100;
            }
            Command::MarkovProbe => {
                c.normalization = Normalization::FirstPassage;
                c.ell = 0.5;
                c.ell_prime = 0.5;
                c.replicates = 100_000;
            }
            Command::PoissonGof => {
                c.replicates = 5000;
            }
        }
        c
    }

    /// Defaults, then `file` (JSON with the same keys), then `overrides`.
    pub fn resolve(command: Command, file: Option<&Path>, overrides: &Value) -> ExpResult<Self> {
        let mut value = serde_json::to_value(Self::defaults(command))?;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)?;
            merge(&mut value, serde_json::from_str(&text)?)?;
        }
        merge(&mut value, overrides.clone())?;
        let config: ExperimentConfig = serde_json::from_value(value)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> ExpResult<()> {
        check_exponent(self.alpha, self.m)?;
        self.process.validate()?;
        self.k_process.validate()?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ExpError::Config(format!("{name} must be positive, got {v}")))
            }
        };
        if self.replicates == 0
            || self.tv_replicates < 2
            || self.contrast_replicates < 2
            || self.tail_replicates == 0
            || self.k_replicates == 0
        {
            return Err(ExpError::Config("replicate counts must be positive".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(ExpError::Config(format!("level must lie in (0, 1), got {}", self.level)));
        }
        positive("ell", self.ell)?;
        if self.ell_prime.is_nan() || self.ell_prime < 0.0 {
            return Err(ExpError::Config("ell_prime must be nonnegative".into()));
        }
        positive("a", self.a)?;
        positive("tail_eps", self.tail_eps)?;
        positive("contrast_eps", self.contrast_eps)?;
        if let Some(b) = self.bound {
            positive("bound", b)?;
        }
        if self.eps_grid.len() != self.b_grid.len() || self.eps_grid.is_empty() {
            return Err(ExpError::Config("eps_grid and b_grid must be nonempty and of equal length".into()));
        }
        for &e in &self.eps_grid {
            positive("eps_grid entry", e)?;
        }
        for &s in self.scales.iter().chain(&self.tail_points) {
            positive("scale", s)?;
        }
        if self.bins < 2 {
            return Err(ExpError::Config("bins must be at least 2".into()));
        }
        if self.quad_nodes < 2 {
            return Err(ExpError::Config("quad_nodes must be at least 2".into()));
        }
        Ok(())
    }

    /// Output file `<out>/<command><suffix>`.
    pub fn out_path(&self, command: Command, suffix: &str) -> PathBuf {
        self.out.join(format!("{}{}", command.name(), suffix))
    }
}

fn merge(base: &mut Value, overlay: Value) -> ExpResult<()> {
    match overlay {
        Value::Null => Ok(()),
        Value::Object(map) => {
            let target =
                base.as_object_mut().ok_or_else(|| ExpError::Config("configuration must be a JSON object".into()))?;
            for (k, v) in map {
                target.insert(k, v);
            }
            Ok(())
        }
        _ => Err(ExpError::Config("configuration must be a JSON object".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn schedule_forms() {
        assert_eq!("dyadic:2..4".parse::<Schedule>().unwrap().points(), &[4, 8, 16]);
        assert_eq!("10, 100".parse::<Schedule>().unwrap().points(), &[10, 100]);
        assert!("100,10".parse::<Schedule>().is_err());
        assert!("dyadic:5..2".parse::<Schedule>().is_err());
        let s: Schedule = serde_json::from_value(json!([1, 2, 3])).unwrap();
        assert_eq!(s.points(), &[1, 2, 3]);
    }

    #[test]
    fn resolution_order() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.json");
        std::fs::write(&file, r#"{"seed": 5, "alpha": 0.4, "m": 6.0}"#).unwrap();
        let c = ExperimentConfig::resolve(Command::RetrieveDemo, Some(&file), &json!({"seed": 9})).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.alpha, 0.4);
        assert_eq!(c.replicates, 200);
        let bad = ExperimentConfig::resolve(Command::RetrieveDemo, None, &json!({"m": 3.0}));
        assert!(bad.is_err());
        assert!(ExperimentConfig::resolve(Command::RetrieveDemo, None, &json!({"nope": 1})).is_err());
    }

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
    }

    #[test]
    fn embedded_config_omits_out_and_threads() {
        let mut c = ExperimentConfig::defaults(Command::PoissonGof);
        c.threads = 7;
        c.out = PathBuf::from("/elsewhere");
        let v = serde_json::to_value(&c).unwrap();
        assert!(v.get("threads").is_none() && v.get("out").is_none());
    }
}
