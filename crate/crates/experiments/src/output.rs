use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{Command, ExperimentConfig};
use crate::error::ExpResult;

pub const VERSION: &str = concat!("subretrieve-experiments ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub version: String,
    pub config: Value,
    pub statistics: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub failures: Vec<String>,
    pub pass: bool,
}

impl Summary {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Statistics and acceptance checks gathered while a command runs.
#[derive(Debug, Default)]
pub struct Report {
    statistics: BTreeMap<String, Value>,
    checks: Vec<Check>,
}

impl Report {
    pub fn stat<V: Serialize>(&mut self, name: &str, value: V) -> ExpResult<()> {
        self.statistics.insert(name.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(Check { name: name.to_string(), pass, detail });
    }

    pub fn finish(self, command: Command, config: &ExperimentConfig) -> ExpResult<Summary> {
        let failures: Vec<String> = self.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
        Ok(Summary {
            command: command.name().to_string(),
            version: VERSION.to_string(),
            config: serde_json::to_value(config)?,
            statistics: self.statistics,
            pass: failures.is_empty(),
            checks: self.checks,
            failures,
        })
    }
}

fn create(path: &Path) -> ExpResult<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// CSV with `# config:` and `# version:` header lines, then a header row.
pub fn write_csv<S: Serialize>(path: &Path, config: &ExperimentConfig, rows: &[S]) -> ExpResult<()> {
    let mut w = create(path)?;
    writeln!(w, "# config: {}", serde_json::to_string(config)?)?;
    writeln!(w, "# version: {VERSION}")?;
    let mut csv = csv::Writer::from_writer(w);
    for row in rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_summary(path: &Path, summary: &Summary) -> ExpResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, summary)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
