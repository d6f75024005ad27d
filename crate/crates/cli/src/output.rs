//! Result files. The CSV schema is append-only: new columns go at the end and
//! `schema_version` (always the first column) is bumped.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::{CliError, Result, CODE_VERSION};

pub const SCHEMA_VERSION: u32 = 1;

/// Rows of one results file; every value is already formatted.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        let mut header = vec!["schema_version".to_string()];
        header.extend(columns.iter().map(|c| c.to_string()));
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len() + 1, self.header.len());
        let mut row = vec![SCHEMA_VERSION.to_string()];
        row.extend(cells);
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| CliError::Csv(e.to_string()))
    }
}

/// Shortest round-trip form; `NaN` and infinities spelled out.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub struct PipelineOutput {
    pub table: Table,
    pub result: Value,
    pub summary: Vec<String>,
    /// Additional files (name, contents) written next to the results.
    pub extra: Vec<(String, Vec<u8>)>,
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn section(cfg: &ExperimentConfig, pipeline: &str) -> Value {
    match pipeline {
        "bound" => to_value(&cfg.bound),
        "clt" => to_value(&cfg.clt),
        "knn" => to_value(&cfg.knn),
        "lmc" => to_value(&cfg.lmc),
        _ => Value::Null,
    }
}

pub fn write_outputs(dir: &Path, pipeline: &str, seed: u64, cfg: &ExperimentConfig, out: &PipelineOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("results.csv"), out.table.to_bytes()?)?;
    let report = json!({
        "version": CODE_VERSION,
        "schema_version": SCHEMA_VERSION,
        "pipeline": pipeline,
        "seed": seed,
        "config": section(cfg, pipeline),
        "result": out.result,
    });
    fs::write(dir.join("report.json"), serde_json::to_vec_pretty(&report).expect("json values serialize"))?;
    let mut summary = format!("{CODE_VERSION}\npipeline: {pipeline}\nseed: {seed}\n");
    for line in &out.summary {
        summary.push_str(line);
        summary.push('\n');
    }
    fs::write(dir.join("summary.txt"), summary)?;
    for (name, bytes) in &out.extra {
        fs::write(dir.join(name), bytes)?;
    }
    let stale = dir.join("error.json");
    if stale.exists() {
        fs::remove_file(stale)?;
    }
    Ok(())
}

/// Machine-readable failure record.
pub fn write_error(dir: &Path, pipeline: &str, err: &CliError) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let rec = json!({
        "version": CODE_VERSION,
        "pipeline": pipeline,
        "exit_code": err.exit_code(),
        "kind": err.kind(),
        "field": err.field(),
        "message": err.to_string(),
    });
    fs::write(dir.join("error.json"), serde_json::to_vec_pretty(&rec).expect("json values serialize"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_prefixes_schema_version() {
        let mut t = Table::new(&["n", "value"]);
        t.push(vec!["4".into(), num(0.1)]);
        t.push(vec!["16".into(), num(f64::NAN)]);
        let s = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        assert_eq!(s, "schema_version,n,value\n1,4,0.1\n1,16,NaN\n");
    }
}
