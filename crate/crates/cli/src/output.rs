use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Rows of already-formatted cells.
#[derive(Clone, Debug)]
pub struct Table {
    pub name: Option<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { name: None, columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> String {
        let line = |cells: &[String]| cells.iter().map(|c| csv_cell(c)).collect::<Vec<_>>().join(",");
        let mut out = line(&self.columns);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> =
                        self.columns.iter().cloned().zip(row.iter().map(|c| Value::String(c.clone()))).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

fn csv_cell(c: &str) -> String {
    if c.contains([',', '"', '\n']) {
        format!("\"{}\"", c.replace('"', "\"\""))
    } else {
        c.to_string()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Everything a command produces.
#[derive(Debug, Default)]
pub struct Report {
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    pub summary: Option<Value>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn table(&mut self, t: Table) {
        self.tables.push(t);
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.to_string(), pass, detail: detail.into() });
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub struct Context<'a> {
    pub command: &'a str,
    pub out: &'a Path,
    pub format: Format,
    pub seed: u64,
    pub args: Value,
    pub config: Option<&'a Path>,
}

/// Writes artifacts plus `<command>.manifest.json` and prints notes and PASS/FAIL lines.
pub fn emit(ctx: &Context<'_>, report: &Report) -> Result<(), CliError> {
    fs::create_dir_all(ctx.out).map_err(|e| CliError::Io(ctx.out.to_path_buf(), e))?;
    let mut artifacts = Vec::new();
    for t in &report.tables {
        let stem = match &t.name {
            Some(name) => format!("{}-{name}", ctx.command),
            None => ctx.command.to_string(),
        };
        let file = format!("{stem}.{}", ctx.format.extension());
        let body = match ctx.format {
            Format::Csv => t.to_csv(),
            Format::Json => pretty(&t.to_json()),
        };
        write(&ctx.out.join(&file), &body)?;
        artifacts.push(file);
    }
    if let Some(summary) = &report.summary {
        let file = format!("{}.summary.json", ctx.command);
        write(&ctx.out.join(&file), &pretty(summary))?;
        artifacts.push(file);
    }
    let manifest = json!({
        "command": ctx.command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": ctx.seed,
        "format": ctx.format,
        "config": ctx.config.map(|p| p.display().to_string()),
        "args": ctx.args,
        "artifacts": artifacts,
        "checks": report.checks,
        "status": if report.checks.is_empty() { "n/a" } else if report.passed() { "PASS" } else { "FAIL" },
    });
    write(&ctx.out.join(format!("{}.manifest.json", ctx.command)), &pretty(&manifest))?;

    for n in &report.notes {
        println!("{n}");
    }
    for c in &report.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn write(path: &Path, body: &str) -> Result<(), CliError> {
    fs::write(path, body).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_cells_with_commas() {
        let mut t = Table::new(&["lambda", "g"]);
        t.push(vec!["(3,1)".into(), "2".into()]);
        assert_eq!(t.to_csv(), "lambda,g\n\"(3,1)\",2\n");
    }

    #[test]
    fn json_rows_are_objects() {
        let mut t = Table::new(&["k", "m"]);
        t.push(vec!["1".into(), "1/2".into()]);
        assert_eq!(t.to_json(), json!([{"k": "1", "m": "1/2"}]));
    }
}
