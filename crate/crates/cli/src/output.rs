//! Text output: a `#`-prefixed header echoing the resolved configuration,
//! followed by comma-separated tables.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Default)]
pub struct Report {
    text: String,
}

impl Report {
    /// Starts a report for `command` with `config` rendered as TOML comments.
    pub fn new<C: Serialize>(command: &str, config: &C) -> CliResult<Self> {
        let mut r = Report::default();
        let _ = writeln!(r.text, "# rwre {command}");
        let body = toml::to_string(config).map_err(|e| CliError::Usage(format!("cannot render config: {e}")))?;
        for line in body.lines().filter(|l| !l.is_empty()) {
            let _ = writeln!(r.text, "# {line}");
        }
        Ok(r)
    }

    /// One `# key = value` metadata line.
    pub fn meta(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "# {key} = {value}");
    }

    pub fn line(&mut self, line: impl AsRef<str>) {
        self.text.push_str(line.as_ref());
        self.text.push('\n');
    }

    pub fn row(&mut self, cells: &[String]) {
        self.line(cells.join(","));
    }

    pub fn raw(&mut self, text: &str) {
        self.text.push_str(text);
    }

    pub fn emit(&self, out: Option<&Path>) -> CliResult<()> {
        match out {
            Some(path) => std::fs::write(path, &self.text).map_err(|e| CliError::io(path, e)),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(self.text.as_bytes())
                    .and_then(|_| stdout.flush())
                    .map_err(|e| CliError::io("<stdout>", e))
            }
        }
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}
