use std::fmt::Write as _;

use clap::ValueEnum;
use serde_json::{json, Map, Value};

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Table,
}

/// The document every analysis subcommand prints.
pub fn envelope(command: &str, config: Value, result: Value) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "result": result,
    })
}

pub fn render(doc: &Value, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(doc).expect("reports serialize") + "\n",
        Format::Table => {
            let mut rows = Vec::new();
            flatten("", doc, &mut rows);
            let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            let mut out = String::new();
            for (k, v) in rows {
                writeln!(out, "{k:<width$}  {v}").unwrap();
            }
            out
        }
    }
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) if !map.is_empty() => {
            for (k, child) in map {
                flatten(&key(k), child, rows);
            }
        }
        Value::Array(items) if items.iter().any(|i| i.is_object()) => {
            for (i, child) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), child, rows);
            }
        }
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

/// Builds a JSON object from key/value pairs in order.
pub fn object<I: IntoIterator<Item = (&'static str, Value)>>(pairs: I) -> Value {
    Value::Object(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect::<Map<_, _>>())
}
