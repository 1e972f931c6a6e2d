//! CSV and JSON emission with a self-describing header.

use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use crate::harness::config::RunConfig;

/// Header embedded in every output: what ran, with which settings.
#[derive(Clone, Debug, Serialize)]
pub struct RunHeader {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub seed: u64,
    pub config: RunConfig,
    /// Truncation levels, window plan and similar run metadata.
    pub metadata: Value,
}

impl RunHeader {
    pub fn new(subcommand: &str, config: &RunConfig, metadata: Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: crate::VERSION,
            subcommand: subcommand.to_string(),
            seed: config.seed,
            config: config.clone(),
            metadata,
        }
    }
}

/// Round-trip formatting: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `# <header json>` followed by a CSV table.
pub fn write_csv<W: Write>(
    out: W,
    header: &RunHeader,
    columns: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> anyhow::Result<()> {
    let mut out = out;
    writeln!(out, "# {}", serde_json::to_string(header)?)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns)?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `{"header": ..., "result": ...}` as pretty JSON.
pub fn write_json<W: Write, T: Serialize>(
    out: W,
    header: &RunHeader,
    result: &T,
) -> anyhow::Result<()> {
    let mut out = out;
    let doc = serde_json::json!({ "header": header, "result": result });
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)?;
    Ok(())
}
