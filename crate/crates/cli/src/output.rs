//! Rendering of command results as CSV or JSON.

use serde_json::{Map, Value};

use crate::config::OutputFormat;
use crate::error::CliError;

/// A command result: either a table of rows or a single JSON object.
#[derive(Debug, Clone, PartialEq)]
pub enum Document {
    Table { columns: Vec<String>, rows: Vec<Vec<Value>> },
    Object(Value),
}

impl Document {
    pub fn table(columns: &[&str]) -> Self {
        Document::Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        if let Document::Table { rows, .. } = self {
            rows.push(row);
        }
    }

    fn natural_format(&self) -> OutputFormat {
        match self {
            Document::Table { .. } => OutputFormat::Csv,
            Document::Object(_) => OutputFormat::Json,
        }
    }

    pub fn render(&self, format: OutputFormat) -> Result<String, CliError> {
        let format = match format {
            OutputFormat::Auto => self.natural_format(),
            f => f,
        };
        match format {
            OutputFormat::Json => Ok(render_json(&self.to_json())),
            _ => self.render_csv(),
        }
    }

    /// Tables become arrays of objects keyed by column.
    pub fn to_json(&self) -> Value {
        match self {
            Document::Object(v) => v.clone(),
            Document::Table { columns, rows } => Value::Array(
                rows.iter()
                    .map(|row| {
                        let obj: Map<String, Value> = columns.iter().cloned().zip(row.iter().cloned()).collect();
                        Value::Object(obj)
                    })
                    .collect(),
            ),
        }
    }

    fn render_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(std::io::Error::other(e));
        match self {
            Document::Table { columns, rows } => {
                w.write_record(columns).map_err(io)?;
                for row in rows {
                    w.write_record(row.iter().map(csv_cell)).map_err(io)?;
                }
            }
            Document::Object(value) => {
                w.write_record(["key", "value"]).map_err(io)?;
                match value {
                    Value::Object(map) => {
                        for (k, v) in map {
                            w.write_record([k.clone(), csv_cell(v)]).map_err(io)?;
                        }
                    }
                    Value::Array(items) => {
                        for (i, v) in items.iter().enumerate() {
                            w.write_record([i.to_string(), csv_cell(v)]).map_err(io)?;
                        }
                    }
                    other => w.write_record(["value".to_string(), csv_cell(other)]).map_err(io)?,
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

/// Floats with 17 significant digits; nested values as compact JSON.
pub fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => match (n.as_i64(), n.as_u64(), n.as_f64()) {
            (Some(i), _, _) => i.to_string(),
            (_, Some(u), _) => u.to_string(),
            (_, _, Some(f)) => format_float(f),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// A float as JSON; non-finite values become `null`.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn point_json(c: [f64; 4]) -> Value {
    Value::Array(c.iter().map(|&x| num(x)).collect())
}
