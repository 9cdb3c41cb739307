//! CSV rows with lossless number formatting and the metadata sidecar.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::Config;
use crate::error::CliError;

/// 17 significant digits, enough to reproduce any `f64` exactly.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut c = Self::default();
        c.raw_row(header);
        c
    }

    pub fn raw_row<S: AsRef<str>>(&mut self, cells: &[S]) {
        for (i, s) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            self.text.push_str(s.as_ref());
        }
        self.text.push('\n');
    }

    pub fn row(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|v| num(*v)).collect();
        self.raw_row(&cells);
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, &self.text).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
    }
}

/// Column names `name1 … named`, or just `name` when `d = 1`.
pub fn indexed(name: &str, d: usize) -> Vec<String> {
    if d == 1 {
        vec![name.to_string()]
    } else {
        (1..=d).map(|i| format!("{name}{i}")).collect()
    }
}

/// Run facts written as comments above the resolved configuration.
#[derive(Debug, Default)]
pub struct Meta {
    lines: Vec<String>,
}

impl Meta {
    pub fn new(command: &str) -> Self {
        let mut m = Self::default();
        m.push("version", format!("bindsym {}", env!("CARGO_PKG_VERSION")));
        m.push("command", command);
        m
    }

    pub fn push(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push(format!("{key}: {value}"));
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    /// Comment header plus the resolved config; the file parses as a config.
    pub fn render(&self, config: &Config) -> String {
        let mut out = String::new();
        for l in &self.lines {
            let _ = writeln!(out, "# {}", l.replace('\n', " "));
        }
        out.push('\n');
        out.push_str(&config.to_toml());
        out
    }

    pub fn write(&self, path: &Path, config: &Config) -> Result<(), CliError> {
        fs::write(path, self.render(config)).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
    }
}

pub fn out_dir(dir: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
    Ok(dir.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(num(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(num(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn sidecar_reparses() {
        let mut m = Meta::new("integrate");
        m.push("status", "aborted: trajectory escaped\nat step 3");
        let cfg = Config::parse("delta = 0.25\nq0 = [1.0]\np0 = [0.0]").unwrap();
        assert_eq!(Config::parse(&m.render(&cfg)).unwrap(), cfg);
    }
}
