//! Structured run reports written to standard output.

use nestlogit::format::{fmt17, json_number};
use serde_json::{Map, Value};
use std::fmt::Write as _;

pub fn num(x: f64) -> Value {
    json_number(x)
}

#[derive(Debug)]
pub struct Report {
    command: String,
    inputs: Map<String, Value>,
    results: Map<String, Value>,
    seed: Option<u64>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report { command: command.to_owned(), inputs: Map::new(), results: Map::new(), seed: None }
    }

    pub fn input(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.inputs.insert(key.to_owned(), value.into());
        self
    }

    pub fn result(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.results.insert(key.to_owned(), value.into());
        self
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.seed = Some(seed);
        self
    }

    pub fn to_value(&self) -> Value {
        let mut top = Map::new();
        top.insert("command".into(), Value::String(self.command.clone()));
        top.insert("inputs".into(), Value::Object(self.inputs.clone()));
        top.insert("results".into(), Value::Object(self.results.clone()));
        if let Some(s) = self.seed {
            top.insert("seed".into(), Value::from(s));
        }
        top.insert("tool_version".into(), Value::String(env!("CARGO_PKG_VERSION").to_owned()));
        Value::Object(top)
    }

    /// One JSON document terminated by a newline.
    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string(&self.to_value()).expect("report serializes");
        s.push('\n');
        s
    }

    /// Aligned `key  value` lines, nested keys joined with dots.
    pub fn render_table(&self) -> String {
        let mut rows = Vec::new();
        flatten("", &self.to_value(), &mut rows);
        let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<width$}  {v}");
        }
        out
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| if prefix.is_empty() { k.to_owned() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&join(k), x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        Value::Number(n) => out.push((prefix.to_owned(), n.as_f64().map(fmt17).unwrap_or_else(|| n.to_string()))),
        Value::String(s) => out.push((prefix.to_owned(), s.clone())),
        other => out.push((prefix.to_owned(), other.to_string())),
    }
}
