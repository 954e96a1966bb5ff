//! Parameter sweeps: patch one numeric field of the config per grid point,
//! re-run the scenario, and merge the flat summaries into a single table.

use serde_json::{json, Map, Value};

use crate::config::Config;
use crate::error::{AppError, AppResult};
use crate::output::OutputWriter;
use crate::scenarios;

/// Parses a grid spec: either a comma list (`1e-4,2e-4`) or an inclusive
/// linspace `start:stop:count`.
pub fn parse_grid(spec: &str) -> AppResult<Vec<f64>> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, stop, count] = parts[..] else {
            return Err(AppError::config("linspace grid must be start:stop:count"));
        };
        let start: f64 = start.parse().map_err(|_| AppError::config("bad grid start"))?;
        let stop: f64 = stop.parse().map_err(|_| AppError::config("bad grid stop"))?;
        let count: usize = count.parse().map_err(|_| AppError::config("bad grid count"))?;
        if count < 2 {
            return Err(AppError::config("linspace grid needs at least 2 points"));
        }
        return Ok((0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect());
    }
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| AppError::config(format!("bad grid value {s:?}")))
        })
        .collect()
}

/// Sets a dotted-path numeric field inside the config document. The path
/// must already exist: sweeps can only move existing knobs.
fn patch(config: &Config, path: &str, value: f64) -> AppResult<Config> {
    let mut doc = serde_json::to_value(config).expect("config serializes");
    let mut node = &mut doc;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, segment) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        let next = match node {
            Value::Object(map) => map.get_mut(*segment),
            Value::Array(items) => segment
                .parse::<usize>()
                .ok()
                .and_then(|idx| items.get_mut(idx)),
            _ => None,
        };
        let Some(next) = next else {
            return Err(AppError::config(format!(
                "parameter path {path:?} does not resolve (missing {segment:?})"
            )));
        };
        if last {
            if !next.is_number() {
                return Err(AppError::config(format!(
                    "parameter path {path:?} does not point at a number"
                )));
            }
            *next = json!(value);
        }
        node = next;
    }
    let patched: Config = serde_json::from_value(doc)
        .map_err(|e| AppError::config(format!("patched config invalid: {e}")))?;
    patched.validate()?;
    Ok(patched)
}

/// One scenario run per grid point; rows carry the parameter value plus all
/// scalar summary fields of the scenario.
pub fn sweep(
    scenario: &str,
    config: &Config,
    param: &str,
    grid: &[f64],
    writer: &OutputWriter,
) -> AppResult<Summary> {
    let mut columns: Vec<String> = vec!["param_value".into()];
    let mut rows: Vec<Vec<Value>> = Vec::new();
    for &value in grid {
        let point_config = patch(config, param, value)?;
        // each point writes its own artifacts into a subdirectory
        let sub = writer.out_dir().join(format!("point_{}", rows.len()));
        let sub_writer = OutputWriter::new(
            &sub,
            crate::output::Format::Json,
            point_config.hash(),
            point_config.seed,
        )?;
        let summary = scenarios::run_scenario(scenario, &point_config, &sub_writer)?;
        if rows.is_empty() {
            for (key, val) in &summary {
                if val.is_number() || val.is_boolean() {
                    columns.push(key.clone());
                }
            }
        }
        let mut row = vec![json!(value)];
        for key in columns.iter().skip(1) {
            row.push(summary.get(key).cloned().unwrap_or(Value::Null));
        }
        rows.push(row);
    }
    let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    writer.write_table("sweep", &column_refs, &rows)?;
    writer.write_metadata("sweep")?;

    let mut summary = Summary::new();
    summary.insert("scenario".into(), json!("sweep"));
    summary.insert("swept_scenario".into(), json!(scenario));
    summary.insert("parameter".into(), json!(param));
    summary.insert("points".into(), json!(grid.len()));
    Ok(summary)
}

pub type Summary = Map<String, Value>;
