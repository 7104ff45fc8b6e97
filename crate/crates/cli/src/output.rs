use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use std::fs;
use std::path::PathBuf;

use crate::CliError;

/// Bumped whenever a column or field changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Master seed; every command is deterministic given it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    #[serde(skip)]
    pub out: PathBuf,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

/// Collects the files one command writes and the manifest describing them.
pub struct Writer {
    dir: PathBuf,
    command: &'static str,
    config: Value,
    files: Vec<String>,
}

impl Writer {
    pub fn new(common: &Common, command: &'static str, config: Value) -> Result<Self, CliError> {
        fs::create_dir_all(&common.out).map_err(|e| CliError::io(&common.out, e))?;
        Ok(Writer {
            dir: common.out.clone(),
            command,
            config,
            files: Vec::new(),
        })
    }

    /// The header every JSON artifact starts with.
    pub fn envelope(&self) -> serde_json::Map<String, Value> {
        let mut m = serde_json::Map::new();
        m.insert("schema_version".into(), json!(SCHEMA_VERSION));
        m.insert("command".into(), json!(self.command));
        m.insert("config".into(), self.config.clone());
        m
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
        s.push('\n');
        self.text(name, &s)
    }

    /// JSON artifact wrapped in the envelope, with `body`'s fields merged in.
    pub fn json_artifact(&mut self, name: &str, body: Value) -> Result<(), CliError> {
        let mut m = self.envelope();
        match body {
            Value::Object(fields) => m.extend(fields),
            other => {
                m.insert("data".into(), other);
            }
        }
        self.json(name, &Value::Object(m))
    }

    /// Writes `{command}.manifest.json` listing every file written so far.
    /// Plain CSV files carry no header metadata, so this is where their
    /// schema version and configuration live.
    pub fn finish(mut self) -> Result<Vec<PathBuf>, CliError> {
        let mut m = self.envelope();
        m.insert("files".into(), json!(self.files));
        let name = format!("{}.manifest.json", self.command);
        self.json(&name, &Value::Object(m))?;
        Ok(self.files.iter().map(|f| self.dir.join(f)).collect())
    }
}

pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

/// Resolved configuration: the parsed arguments plus derived values.
pub fn config_value(args: &impl Serialize, extra: Value) -> Value {
    let mut v = serde_json::to_value(args).unwrap_or(Value::Null);
    if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
        m.extend(e);
    }
    v
}
