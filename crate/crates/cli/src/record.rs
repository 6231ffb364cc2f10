//! Run records, plot series and output files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use gowers_core::funcspace::write_atomic;
use gowers_core::Table;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::CommandKind;
use crate::error::{CliError, CliResult};

/// Array-valued result that can be exported as a TSV plot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(columns: &[&str]) -> Self {
        Series {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

/// Everything that is a function of config and seed alone. Wall times and
/// thread counts live in [`Metadata`] so records compare byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool: String,
    pub version: String,
    pub command: CommandKind,
    pub seed: Option<u64>,
    pub config: Value,
    pub results: Value,
    pub series: BTreeMap<String, Series>,
    pub warnings: Vec<String>,
}

impl RunRecord {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("records serialize");
        s.push('\n');
        s
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Metadata {
    pub wall_time_seconds: f64,
    pub threads: usize,
    pub started_unix_seconds: u64,
    pub versions: BTreeMap<String, String>,
}

/// Extra files produced by a run.
#[derive(Debug)]
pub enum Artifact {
    Text { name: String, contents: String },
    Table { name: String, table: Table },
}

/// Renders one series as TSV with a one-line header, rows sorted by the
/// first column. The second value is a warning for an empty series.
pub fn emit_plot_data(record: &RunRecord, selector: &str) -> CliResult<(String, Option<String>)> {
    let series = record.series.get(selector).ok_or_else(|| {
        let known: Vec<&str> = record.series.keys().map(String::as_str).collect();
        CliError::config(
            "/plot",
            format!(
                "no series `{selector}` in this record (available: {})",
                if known.is_empty() { "none".to_string() } else { known.join(", ") }
            ),
        )
    })?;
    let mut out = series.columns.join("\t");
    out.push('\n');
    let mut rows: Vec<&Vec<f64>> = series.rows.iter().collect();
    rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    let warning = series
        .rows
        .is_empty()
        .then(|| format!("series `{selector}` is empty; wrote the header only"));
    Ok((out, warning))
}

/// Writes artifacts, plots, metadata and finally `record.json`, each
/// through a temporary file and a rename.
pub fn write_outputs(
    dir: &Path,
    record: &RunRecord,
    metadata: &Metadata,
    plots: &[(String, String)],
    artifacts: &[Artifact],
) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |e: gowers_core::Error| match e {
            gowers_core::Error::Io(io) => CliError::io(&path, io),
            other => CliError::Core(other),
        }
    };
    for a in artifacts {
        match a {
            Artifact::Text { name, contents } => {
                let p = dir.join(name);
                write_atomic(&p, contents.as_bytes()).map_err(io(&p))?;
                written.push(p);
            }
            Artifact::Table { name, table } => {
                let p = dir.join(name);
                table.write_binary(&p).map_err(io(&p))?;
                written.push(p);
            }
        }
    }
    for (name, tsv) in plots {
        let p = dir.join(format!("{name}.tsv"));
        write_atomic(&p, tsv.as_bytes()).map_err(io(&p))?;
        written.push(p);
    }
    let meta = dir.join("metadata.json");
    let mut json = serde_json::to_string_pretty(metadata).expect("metadata serializes");
    json.push('\n');
    write_atomic(&meta, json.as_bytes()).map_err(io(&meta))?;
    written.push(meta);
    let rec = dir.join("record.json");
    write_atomic(&rec, record.to_json().as_bytes()).map_err(io(&rec))?;
    written.push(rec);
    Ok(written)
}
