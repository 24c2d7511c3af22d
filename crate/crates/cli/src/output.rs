//! Structured output: CSV data files with a header row and full round-trip
//! float formatting, plus a JSON metadata document embedding the generating
//! configuration.

use crate::config::RunConfig;
use serde::Serialize;
use serde_json::{Map, Value};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Shortest round-trip representation (Rust's float Display contract).
pub fn fmt(v: f64) -> String {
    format!("{v}")
}

pub fn write_csv(
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: &[Vec<String>],
) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut out = fs::File::create(&path)?;
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(path)
}

#[derive(Serialize)]
pub struct Metadata<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'a str,
    pub seed: u64,
    pub config: &'a RunConfig,
    pub measured: Map<String, Value>,
    /// wall-clock milliseconds; excluded from the byte-determinism contract
    pub elapsed_ms: f64,
}

pub fn write_metadata(dir: &Path, name: &str, meta: &Metadata) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut out = fs::File::create(&path)?;
    let text = serde_json::to_string_pretty(meta).expect("metadata serializes");
    writeln!(out, "{text}")?;
    Ok(path)
}

pub fn measured_entry(map: &mut Map<String, Value>, key: &str, value: f64) {
    map.insert(key.to_string(), Value::from(value));
}
