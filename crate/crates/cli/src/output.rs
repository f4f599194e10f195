//! Deterministic CSV and JSON emission. Every float in CSV output is
//! printed with 17 significant digits so repeated runs are byte-identical.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::CliError;

/// 17 significant digits, scientific.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table with a mandatory header row.
pub struct Csv {
    header: String,
    rows: Vec<String>,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        Csv {
            header: header.to_string(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, fields: &[String]) {
        self.rows.push(fields.join(","));
    }

    pub fn render(&self) -> String {
        let mut out = String::with_capacity((self.rows.len() + 1) * 32);
        out.push_str(&self.header);
        out.push('\n');
        for row in &self.rows {
            out.push_str(row);
            out.push('\n');
        }
        out
    }
}

/// Write to the path, or to stdout when no path is given.
pub fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, content),
        None => {
            std::io::stdout()
                .write_all(content.as_bytes())
                .map_err(|e| CliError::Io {
                    message: format!("stdout: {e}"),
                })
        }
    }
}

pub fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|e| CliError::Io {
        message: format!("cannot write {}: {e}", path.display()),
    })
}

pub fn render_json(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json values always serialize");
    s.push('\n');
    s
}
