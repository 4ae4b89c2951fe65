//! Run reports: named invariant checks with exact residuals, scalar values,
//! tables, and the artifacts a run wrote. Rendered as JSON or text.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

use lipmart::rat::{self, Rat};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn csv_cell(c: &str) -> String {
    if c.contains([',', '"', '\n']) {
        format!("\"{}\"", c.replace('"', "\"\""))
    } else {
        c.to_string()
    }
}

impl Table {
    pub fn to_csv(&self) -> String {
        std::iter::once(&self.header)
            .chain(&self.rows)
            .map(|r| r.iter().map(|c| csv_cell(c)).collect::<Vec<_>>().join(",") + "\n")
            .collect()
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub command: String,
    pub values: Vec<(String, Value)>,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    pub artifacts: Vec<String>,
    pub notes: Vec<String>,
}

/// Where artifacts go, if anywhere.
pub struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>) -> std::io::Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Ok(Self { dir })
    }

    pub fn enabled(&self) -> bool {
        self.dir.is_some()
    }

    /// Writes `name` under the output directory and records it.
    pub fn write(&self, report: &mut Report, name: &str, contents: &str) -> std::io::Result<()> {
        if let Some(d) = &self.dir {
            let path = d.join(name);
            fs::write(&path, contents)?;
            report.artifacts.push(path.display().to_string());
        }
        Ok(())
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }
}

impl Report {
    pub fn new(command: String) -> Self {
        Self {
            command,
            ..Default::default()
        }
    }

    pub fn value(&mut self, key: &str, v: impl Into<Value>) {
        self.values.push((key.to_string(), v.into()));
    }

    pub fn rat(&mut self, key: &str, v: &Rat) {
        self.value(key, rat::fmt(v));
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            pass,
            detail: detail.into(),
        });
    }

    /// Passes when `bad` is empty; otherwise lists up to five offenders.
    pub fn check_none<T: std::fmt::Display>(&mut self, name: &str, bad: &[T], what: &str) {
        let detail = if bad.is_empty() {
            format!("no {what}")
        } else {
            let shown: Vec<String> = bad.iter().take(5).map(|b| b.to_string()).collect();
            let more = if bad.len() > 5 { ", …" } else { "" };
            format!("{} {what}: {}{more}", bad.len(), shown.join(", "))
        };
        self.check(name, bad.is_empty(), detail);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self, elapsed: Option<Duration>) -> String {
        let mut obj = serde_json::Map::new();
        obj.insert("command".into(), self.command.clone().into());
        let values: serde_json::Map<String, Value> = self.values.iter().cloned().collect();
        obj.insert("values".into(), Value::Object(values));
        obj.insert("checks".into(), serde_json::to_value(&self.checks).unwrap());
        if !self.tables.is_empty() {
            obj.insert("tables".into(), serde_json::to_value(&self.tables).unwrap());
        }
        obj.insert(
            "artifacts".into(),
            serde_json::to_value(&self.artifacts).unwrap(),
        );
        if !self.notes.is_empty() {
            obj.insert("notes".into(), serde_json::to_value(&self.notes).unwrap());
        }
        obj.insert("passed".into(), self.passed().into());
        if let Some(t) = elapsed {
            obj.insert("elapsed_ms".into(), (t.as_millis() as u64).into());
        }
        serde_json::to_string_pretty(&Value::Object(obj)).unwrap() + "\n"
    }

    pub fn to_text(&self, elapsed: Option<Duration>) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command: {}", self.command);
        if !self.values.is_empty() {
            out.push_str("values:\n");
            for (k, v) in &self.values {
                let shown = match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                let _ = writeln!(out, "  {k} = {shown}");
            }
        }
        for t in &self.tables {
            let _ = writeln!(out, "{}:", t.name);
            out.push_str(&render_table(t));
        }
        if !self.checks.is_empty() {
            out.push_str("checks:\n");
            for c in &self.checks {
                let _ = writeln!(
                    out,
                    "  {} {}: {}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        if !self.artifacts.is_empty() {
            out.push_str("artifacts:\n");
            for a in &self.artifacts {
                let _ = writeln!(out, "  {a}");
            }
        }
        let _ = writeln!(
            out,
            "result: {}",
            if self.passed() { "pass" } else { "FAIL" }
        );
        if let Some(t) = elapsed {
            let _ = writeln!(out, "elapsed: {t:.2?}");
        }
        out
    }
}

fn render_table(t: &Table) -> String {
    let mut widths: Vec<usize> = t.header.iter().map(|h| h.chars().count()).collect();
    for r in &t.rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}", w = *w))
            .collect();
        format!("  {}\n", parts.join("  ").trim_end())
    };
    let mut out = line(&t.header);
    for r in &t.rows {
        out.push_str(&line(r));
    }
    out
}
