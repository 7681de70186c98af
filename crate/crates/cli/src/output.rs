//! Encoders for `run` and `scan` results. Each one embeds the resolved
//! configuration so the file can be passed back with `--config`.

use disperse::engine::RECORD_SCHEMA;
use disperse::harness::{stats_cells, ReplicaBatch, ScanRow, CSV_COLUMNS};
use serde_json::{json, Value};
use toml::Table;

use crate::config::{table_to_toml, Format};
use crate::{svg, CliError};

fn config_json(config: &Table) -> Value {
    serde_json::to_value(config).expect("TOML tables convert to JSON")
}

fn csv_text(config: &Table, rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut out = String::new();
    out.push_str("# # ");
    out.push_str(RECORD_SCHEMA);
    out.push('\n');
    for line in table_to_toml(config).lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).map_err(|e| CliError::Io(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    out.push_str(&String::from_utf8(bytes).expect("CSV cells are UTF-8"));
    Ok(out)
}

fn title(config: &Table, what: &str) -> String {
    let family = config
        .get("topology")
        .and_then(|t| t.get("family"))
        .and_then(|f| f.as_str())
        .unwrap_or("?");
    format!("disperse {what}: {family}")
}

pub fn encode_run(batch: &ReplicaBatch, config: &Table, format: Format) -> Result<String, CliError> {
    let cells = stats_cells("none", "", &batch.experiment, &batch.stats);
    match format {
        Format::Ndjson => {
            let cfg = config_json(config);
            let mut out = String::new();
            for (i, r) in batch.results.iter().enumerate() {
                let mut rec = serde_json::to_value(r.record()).expect("records serialise");
                let obj = rec.as_object_mut().expect("record is an object");
                obj.insert("replica".into(), json!(i));
                obj.insert("config".into(), cfg.clone());
                if let Some(tr) = &batch.trajectories {
                    obj.insert("trajectories".into(), serde_json::to_value(&tr[i]).expect("trajectories serialise"));
                }
                out.push_str(&rec.to_string());
                out.push('\n');
            }
            Ok(out)
        }
        Format::Json => {
            let records: Vec<Value> = batch
                .results
                .iter()
                .map(|r| serde_json::to_value(r.record()).expect("records serialise"))
                .collect();
            let mut doc = json!({
                "schema": RECORD_SCHEMA,
                "config": config_json(config),
                "stats": batch.stats,
                "records": records,
            });
            if let Some(tr) = &batch.trajectories {
                doc["trajectories"] = serde_json::to_value(tr).expect("trajectories serialise");
            }
            Ok(format!("{doc}\n"))
        }
        Format::Csv => csv_text(config, &[cells]),
        Format::SvgSummary => {
            let d: Vec<u64> = batch.results.iter().filter(|r| r.is_dispersed()).map(|r| r.d_disp).collect();
            Ok(svg::run_summary(&title(config, "run"), &cells, &d, &table_to_toml(config)))
        }
    }
}

pub fn encode_scan(rows: &[ScanRow], config: &Table, format: Format) -> Result<String, CliError> {
    let cells: Vec<Vec<String>> = rows.iter().map(ScanRow::csv_cells).collect();
    match format {
        Format::Csv => csv_text(config, &cells),
        Format::Ndjson => {
            let cfg = config_json(config);
            let mut out = String::new();
            for r in &cells {
                let mut obj = serde_json::Map::new();
                obj.insert("schema".into(), json!(RECORD_SCHEMA));
                for (k, v) in CSV_COLUMNS.iter().zip(r) {
                    obj.insert((*k).into(), json!(v));
                }
                obj.insert("config".into(), cfg.clone());
                out.push_str(&Value::Object(obj).to_string());
                out.push('\n');
            }
            Ok(out)
        }
        Format::Json => {
            let doc = json!({"schema": RECORD_SCHEMA, "config": config_json(config), "rows": rows});
            Ok(format!("{doc}\n"))
        }
        Format::SvgSummary => Ok(svg::scan_summary(&title(config, "scan"), &cells, &table_to_toml(config))),
    }
}
