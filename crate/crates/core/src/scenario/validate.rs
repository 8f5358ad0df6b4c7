//! Configuration check: echoes the canonical config and derived quantities.

use super::output::OutputSink;
use super::ScenarioReport;
use crate::config::{Derived, ExperimentConfig};
use crate::error::Result;
use std::path::Path;

/// Validates `cfg` and returns its derived quantities.
pub fn check(cfg: &ExperimentConfig) -> Result<Derived> {
    cfg.validate()?;
    cfg.derived()
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<ScenarioReport> {
    let derived = check(cfg)?;
    let mut sink = OutputSink::new(out, "validate")?;
    sink.write_text("config.toml", "config", &cfg.canonical())?;
    let mut json = serde_json::to_string_pretty(&derived).expect("derived quantities serialize");
    json.push('\n');
    sink.write_text("derived.json", "derived", &json)?;
    Ok(ScenarioReport {
        scenario: "validate".into(),
        config_hash: cfg.hash(),
        rows: Vec::new(),
        files: sink.finish()?,
    })
}
