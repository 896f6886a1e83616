//! Table, CSV and JSON rendering. Every output opens with the tool version,
//! the full parameter set and the seed; CSV and table carry them as `#` lines.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{Format, OutputArgs};
use crate::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub params: Value,
    pub seed: Option<u64>,
}

impl Meta {
    pub fn new(command: &'static str, params: &impl Serialize, seed: Option<u64>) -> Meta {
        Meta {
            tool: "heralded",
            version: env!("CARGO_PKG_VERSION"),
            command,
            params: serde_json::to_value(params).unwrap_or(Value::Null),
            seed,
        }
    }

    fn comment_lines(&self) -> String {
        let seed = self.seed.map_or("none".to_string(), |s| s.to_string());
        format!(
            "# {} {} {}\n# params: {}\n# seed: {}\n",
            self.tool, self.version, self.command, self.params, seed
        )
    }
}

/// A rectangular result: named columns, rows of JSON scalars.
#[derive(Clone, Debug)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Table {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Rows from serializable records whose fields are the columns.
    pub fn from_records<T: Serialize>(columns: &[&str], records: &[T]) -> Table {
        let mut t = Table::new(columns);
        for r in records {
            let v = serde_json::to_value(r).unwrap_or(Value::Null);
            t.push(columns.iter().map(|c| v.get(*c).cloned().unwrap_or(Value::Null)).collect());
        }
        t
    }

    fn records(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().cloned()).collect()))
                .collect(),
        )
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) if n.as_f64() == Some(0.0) => "0".into(),
        Value::Number(n) => n.to_string(),
        other => other.to_string(),
    }
}

fn pretty(v: &Value) -> String {
    match v {
        Value::Number(n) if !n.is_i64() && !n.is_u64() => {
            // `+ 0.0` turns a negative zero into zero.
            let x = n.as_f64().unwrap_or(f64::NAN) + 0.0;
            if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e6) {
                format!("{x:.6e}")
            } else {
                format!("{x:.6}")
            }
        }
        Value::Null => "-".into(),
        other => cell(other),
    }
}

/// A command's result: a main table plus free-form summary fields.
pub struct Report {
    pub meta: Meta,
    pub summary: Vec<(String, Value)>,
    pub table: Table,
    /// JSON key under which the table's rows appear.
    pub rows_key: &'static str,
}

impl Report {
    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Json => {
                let mut data = serde_json::Map::new();
                for (k, v) in &self.summary {
                    data.insert(k.clone(), v.clone());
                }
                data.insert(self.rows_key.into(), self.table.records());
                let doc = json!({ "meta": self.meta, "data": Value::Object(data) });
                Ok(serde_json::to_string_pretty(&doc).map_err(CliError::internal)? + "\n")
            }
            Format::Csv => {
                let mut out = self.meta.comment_lines();
                for (k, v) in &self.summary {
                    out.push_str(&format!("# {k}: {}\n", cell(v)));
                }
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.table.columns).map_err(CliError::internal)?;
                for r in &self.table.rows {
                    w.write_record(r.iter().map(cell)).map_err(CliError::internal)?;
                }
                let bytes = w.into_inner().map_err(CliError::internal)?;
                out.push_str(&String::from_utf8(bytes).map_err(CliError::internal)?);
                Ok(out)
            }
            Format::Table => {
                let mut out = self.meta.comment_lines();
                for (k, v) in &self.summary {
                    out.push_str(&format!("{k}: {}\n", pretty(v)));
                }
                if !self.table.rows.is_empty() {
                    let cells: Vec<Vec<String>> = self.table.rows.iter().map(|r| r.iter().map(pretty).collect()).collect();
                    let widths: Vec<usize> = (0..self.table.columns.len())
                        .map(|j| cells.iter().map(|r| r[j].len()).chain([self.table.columns[j].len()]).max().unwrap_or(0))
                        .collect();
                    let line = |items: Vec<&str>| {
                        items.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect::<Vec<_>>().join("  ")
                    };
                    out.push_str(&line(self.table.columns.iter().map(String::as_str).collect()));
                    out.push('\n');
                    for r in &cells {
                        out.push_str(&line(r.iter().map(String::as_str).collect()));
                        out.push('\n');
                    }
                }
                Ok(out)
            }
        }
    }

    pub fn emit(&self, output: &OutputArgs) -> Result<(), CliError> {
        let text = self.render(output.format)?;
        match &output.out {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| CliError::validation(format!("cannot write {}: {e}", path.display()))),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes()).map_err(CliError::internal)
            }
        }
    }
}
