//! Batch runner for the experiments in `gowers-core`.
//!
//! One invocation reads one JSON config, validates it completely, runs it,
//! and writes `record.json` (deterministic), `metadata.json` (timings) and
//! one TSV per plot series into the output directory. Nothing is written
//! when validation or the computation fails.

pub mod config;
pub mod error;
pub mod record;
pub mod run;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub use config::{CommandKind, ExperimentConfig, Overrides};
pub use error::{CliError, CliResult};
pub use record::{emit_plot_data, Metadata, RunRecord, Series};

/// Command-line level options.
#[derive(Clone, Debug, Default)]
pub struct Invocation {
    /// Must agree with the config's `command` when given.
    pub command: Option<String>,
    pub config: PathBuf,
    pub overrides: Overrides,
    pub threads: usize,
    pub out: PathBuf,
    /// Series to export; empty means all of them.
    pub plots: Vec<String>,
}

#[derive(Debug)]
pub struct Completed {
    pub record: RunRecord,
    pub written: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Runs a config document that is already in memory and returns the record
/// together with the extra files; nothing touches the disk.
pub fn run_document(mut doc: serde_json::Value, base_dir: &Path, overrides: Overrides) -> CliResult<(RunRecord, run::Outcome)> {
    config::apply_overrides(&mut doc, overrides);
    let prepared = config::prepare(&doc, base_dir)?;
    let command = prepared.command;
    let seed = prepared.seed;
    let echo = prepared.echo;
    let mut outcome = run::execute(prepared.task)?;
    let record = RunRecord {
        tool: "gowers".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command,
        seed,
        config: echo,
        results: std::mem::take(&mut outcome.results),
        series: std::mem::take(&mut outcome.series),
        warnings: outcome.warnings.clone(),
    };
    Ok((record, outcome))
}

pub fn invoke(inv: &Invocation) -> CliResult<Completed> {
    let start = Instant::now();
    let started_unix_seconds = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let doc = config::read_config(&inv.config)?;
    if let Some(cmd) = &inv.command {
        let in_file = doc.get("command").and_then(|c| c.as_str());
        if in_file != Some(cmd.as_str()) {
            return Err(CliError::config(
                "/command",
                format!("command line asks for `{cmd}` but the config says {in_file:?}"),
            ));
        }
    }
    let base_dir = inv.config.parent().unwrap_or(Path::new(".")).to_path_buf();
    let (record, outcome) = run_document(doc, &base_dir, inv.overrides)?;

    let selected: Vec<String> = if inv.plots.is_empty() {
        record.series.keys().cloned().collect()
    } else {
        inv.plots.clone()
    };
    let mut warnings = record.warnings.clone();
    let mut plots = Vec::new();
    for name in selected {
        let (tsv, warn) = emit_plot_data(&record, &name)?;
        warnings.extend(warn);
        plots.push((name, tsv));
    }
    let metadata = Metadata {
        wall_time_seconds: start.elapsed().as_secs_f64(),
        threads: inv.threads,
        started_unix_seconds,
        versions: BTreeMap::from([
            ("gowers-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("gowers-core".to_string(), gowers_core::VERSION.to_string()),
        ]),
    };
    let written = record::write_outputs(&inv.out, &record, &metadata, &plots, &outcome.artifacts)?;
    Ok(Completed {
        record,
        written,
        warnings,
    })
}
