//! Table and sidecar emission.

use crate::args::{Format, Global};
use serde_json::{Map, Value};
use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use weyl_core::error::WeylError;

#[derive(Debug)]
pub enum CliError {
    Core(WeylError),
    /// Bad flag values caught before reaching the library.
    Usage(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_contract_violation() => 2,
            CliError::Usage(_) => 2,
            _ => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<WeylError> for CliError {
    fn from(e: WeylError) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// What a subcommand produced.
#[derive(Debug, Default)]
pub struct Report {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub summary: Map<String, Value>,
    /// Plain-text payload written instead of a table.
    pub text: Option<String>,
}

impl Report {
    pub fn table(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            ..Self::default()
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }
}

/// Shortest round-tripping text for a float.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// JSON number, or null for non-finite values.
pub fn jnum(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

fn typed_cell(s: &str) -> Value {
    if let Ok(i) = s.parse::<i64>() {
        return Value::from(i);
    }
    if let Ok(f) = s.parse::<f64>() {
        if f.is_finite() {
            return jnum(f);
        }
    }
    match s {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        _ => Value::String(s.to_string()),
    }
}

fn sidecar_object(global: &Global, threads: usize, subcommand: &str, config: Value, report: &Report) -> Map<String, Value> {
    let mut out = Map::new();
    out.insert("subcommand".into(), Value::from(subcommand));
    if let Value::Object(cfg) = config {
        out.extend(cfg);
    }
    out.insert("format".into(), serde_json::to_value(global.format).unwrap());
    out.insert("threads".into(), Value::from(threads));
    out.insert(
        "output".into(),
        global
            .output
            .as_ref()
            .map_or(Value::from("-"), |p| Value::from(p.display().to_string())),
    );
    for (k, v) in &report.summary {
        let key = if out.contains_key(k) { format!("result_{k}") } else { k.clone() };
        out.insert(key, v.clone());
    }
    out
}

fn sidecar_path(global: &Global) -> Option<PathBuf> {
    if let Some(p) = &global.sidecar {
        return Some(p.clone());
    }
    let out = global.output.as_ref()?;
    let p = out.with_extension("json");
    if &p == out {
        let mut s = out.clone().into_os_string();
        s.push(".json");
        Some(PathBuf::from(s))
    } else {
        Some(p)
    }
}

fn open_output(global: &Global) -> CliResult<Box<dyn Write>> {
    Ok(match &global.output {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

pub fn emit(global: &Global, threads: usize, subcommand: &str, config: Value, report: Report) -> CliResult<()> {
    let meta = sidecar_object(global, threads, subcommand, config, &report);
    match global.format {
        Format::Csv => {
            let mut out = open_output(global)?;
            if let Some(text) = &report.text {
                writeln!(out, "{text}")?;
            } else {
                let mut w = csv::Writer::from_writer(&mut out);
                w.write_record(&report.header)?;
                for r in &report.rows {
                    w.write_record(r)?;
                }
                w.flush()?;
            }
            out.flush()?;
            let json = serde_json::to_string_pretty(&Value::Object(meta)).expect("serializable");
            match sidecar_path(global) {
                Some(p) => std::fs::write(p, json + "\n")?,
                None => eprintln!("{json}"),
            }
        }
        Format::Json => {
            let mut obj = meta;
            if let Some(text) = &report.text {
                obj.insert("text".into(), Value::from(text.as_str()));
            } else {
                let rows: Vec<Value> = report
                    .rows
                    .iter()
                    .map(|r| {
                        Value::Object(
                            report
                                .header
                                .iter()
                                .zip(r)
                                .map(|(h, c)| (h.to_string(), typed_cell(c)))
                                .collect(),
                        )
                    })
                    .collect();
                obj.insert("rows".into(), Value::Array(rows));
            }
            let json = serde_json::to_string_pretty(&Value::Object(obj)).expect("serializable");
            let mut out = open_output(global)?;
            writeln!(out, "{json}")?;
            out.flush()?;
            if let Some(p) = &global.sidecar {
                std::fs::write(p, json + "\n")?;
            }
        }
    }
    Ok(())
}
