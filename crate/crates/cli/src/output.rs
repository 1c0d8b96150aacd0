use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Text => "txt",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

fn fields<T: Serialize>(row: &T) -> Result<serde_json::Map<String, Value>> {
    match serde_json::to_value(row)? {
        Value::Object(map) => Ok(map),
        other => anyhow::bail!("report row is not a record: {other}"),
    }
}

fn text_value(v: &Value) -> String {
    match v {
        Value::Null => "n/a".into(),
        Value::String(s) => s.clone(),
        Value::Number(n) if n.is_f64() => format!("{:.4}", n.as_f64().unwrap_or(f64::NAN)),
        other => other.to_string(),
    }
}

fn csv_value(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// One record: `key=value` lines, a header plus one CSV row, or a JSON object.
pub fn render_record<T: Serialize>(row: &T, format: Format) -> Result<String> {
    let map = fields(row)?;
    Ok(match format {
        Format::Text => map.iter().map(|(k, v)| format!("{k}={}\n", text_value(v))).collect(),
        Format::Csv => {
            let keys: Vec<&str> = map.keys().map(String::as_str).collect();
            let vals: Vec<String> = map.values().map(csv_value).collect();
            format!("{}\n{}\n", keys.join(","), vals.join(","))
        }
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&Value::Object(map))?),
    })
}

/// Several records as CSV rows or a JSON array. Text falls back to CSV.
pub fn render_rows<T: Serialize>(rows: &[T], format: Format) -> Result<String> {
    if format == Format::Json {
        return Ok(format!("{}\n", serde_json::to_string_pretty(rows)?));
    }
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let map = fields(row)?;
        if i == 0 {
            let keys: Vec<&str> = map.keys().map(String::as_str).collect();
            let _ = writeln!(out, "{}", keys.join(","));
        }
        let vals: Vec<String> = map.values().map(csv_value).collect();
        let _ = writeln!(out, "{}", vals.join(","));
    }
    Ok(out)
}

pub fn print(text: &str) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(text.as_bytes()).context("writing to stdout")?;
    stdout.flush().context("writing to stdout")
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
