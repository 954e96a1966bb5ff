//! Deterministic artifact writing: CSV/JSON tables stamped with the config
//! hash and seed, JSON summaries, JSONL event logs, and a metadata file
//! that is the only place timestamps live.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use maqm_core::protocol::Event;
use serde_json::{json, Map, Value};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> AppResult<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(AppError::config(format!("unknown format {other:?}"))),
        }
    }
}

pub struct OutputWriter {
    out_dir: PathBuf,
    format: Format,
    config_hash: String,
    seed: u64,
}

impl OutputWriter {
    pub fn new(out_dir: &Path, format: Format, config_hash: String, seed: u64) -> AppResult<Self> {
        fs::create_dir_all(out_dir)?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            format,
            config_hash,
            seed,
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    /// Writes one table with provenance columns appended to every row.
    pub fn write_table(
        &self,
        name: &str,
        columns: &[&str],
        rows: &[Vec<Value>],
    ) -> AppResult<PathBuf> {
        match self.format {
            Format::Csv => self.write_csv(name, columns, rows),
            Format::Json => self.write_json_table(name, columns, rows),
        }
    }

    fn write_csv(&self, name: &str, columns: &[&str], rows: &[Vec<Value>]) -> AppResult<PathBuf> {
        let path = self.out_dir.join(format!("{name}.csv"));
        let mut w = csv::Writer::from_path(&path).map_err(AppError::runtime)?;
        let mut header: Vec<&str> = columns.to_vec();
        header.extend(["config_hash", "seed"]);
        w.write_record(&header).map_err(AppError::runtime)?;
        for row in rows {
            let mut record: Vec<String> = row.iter().map(render_value).collect();
            record.push(self.config_hash.clone());
            record.push(self.seed.to_string());
            w.write_record(&record).map_err(AppError::runtime)?;
        }
        w.flush()?;
        Ok(path)
    }

    fn write_json_table(
        &self,
        name: &str,
        columns: &[&str],
        rows: &[Vec<Value>],
    ) -> AppResult<PathBuf> {
        let path = self.out_dir.join(format!("{name}.json"));
        let objects: Vec<Value> = rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (col, val) in columns.iter().zip(row) {
                    obj.insert((*col).to_string(), val.clone());
                }
                obj.insert("config_hash".into(), json!(self.config_hash));
                obj.insert("seed".into(), json!(self.seed));
                Value::Object(obj)
            })
            .collect();
        fs::write(&path, serde_json::to_string_pretty(&objects).expect("table serializes"))?;
        Ok(path)
    }

    /// Writes the scenario summary (always JSON) with provenance fields.
    pub fn write_summary(&self, mut summary: Map<String, Value>) -> AppResult<PathBuf> {
        summary.insert("config_hash".into(), json!(self.config_hash));
        summary.insert("seed".into(), json!(self.seed));
        let path = self.out_dir.join("summary.json");
        fs::write(
            &path,
            serde_json::to_string_pretty(&Value::Object(summary)).expect("summary serializes"),
        )?;
        Ok(path)
    }

    pub fn write_events(&self, events: &[Event]) -> AppResult<PathBuf> {
        let path = self.out_dir.join("events.jsonl");
        let mut text = String::new();
        for event in events {
            text.push_str(&serde_json::to_string(event).expect("event serializes"));
            text.push('\n');
        }
        fs::write(&path, text)?;
        Ok(path)
    }

    pub fn write_text(&self, name: &str, text: &str) -> AppResult<PathBuf> {
        let path = self.out_dir.join(name);
        fs::write(&path, text)?;
        Ok(path)
    }

    /// Timestamps are quarantined here so every other artifact is
    /// byte-reproducible.
    pub fn write_metadata(&self, scenario: &str) -> AppResult<PathBuf> {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        let metadata = json!({
            "scenario": scenario,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "written_at_unix": now,
        });
        let path = self.out_dir.join("metadata.json");
        fs::write(&path, serde_json::to_string_pretty(&metadata).expect("metadata serializes"))?;
        Ok(path)
    }
}

fn render_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}
