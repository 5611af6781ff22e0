//! Locale-independent number formatting and CSV assembly.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

/// Scientific notation with 9 significant digits.
pub fn sci(x: f64) -> String {
    format!("{x:.8e}")
}

pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.columns);
        let cells: Vec<String> = values.iter().map(|&v| sci(v)).collect();
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn text_row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.columns);
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(text: &str, path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

/// Plain-text `key value` report.
#[derive(Default)]
pub struct Report {
    text: String,
}

impl Report {
    pub fn section(&mut self, title: &str) {
        if !self.text.is_empty() {
            self.text.push('\n');
        }
        let _ = writeln!(self.text, "[{title}]");
    }

    pub fn value(&mut self, key: &str, v: f64) {
        let _ = writeln!(self.text, "{key:<32}{}", sci(v));
    }

    pub fn text(&mut self, key: &str, v: &str) {
        let _ = writeln!(self.text, "{key:<32}{v}");
    }

    pub fn into_string(self) -> String {
        self.text
    }
}
