//! CSV tables, manifests and output directories.
//!
//! CSVs have a header row, `.` decimals and LF endings. Manifests are
//! `key=value` lines in insertion order.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Formats an exponent, spelling infinity as `inf`.
pub fn fmt_exponent(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else {
        format!("{x}")
    }
}

/// Parses an exponent, accepting `inf`.
pub fn parse_exponent(s: &str) -> Result<f64> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("inf") || t == "∞" {
        return Ok(f64::INFINITY);
    }
    t.parse::<f64>()
        .map_err(|_| Error::InvalidArgument(format!("not a number: {s:?}")))
}

/// A CSV table under construction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(
            row.len(),
            self.header.len(),
            "row width differs from header"
        );
        self.rows.push(row);
    }

    /// Push a row of numbers (infinities as `inf`).
    pub fn push_f64(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| fmt_exponent(v)).collect());
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Ordered `key=value` record of a resolved configuration and results.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let v = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = v,
            None => self.entries.push((key.to_string(), v)),
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("line {}: expected key = value", lineno + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Files destined for one output directory.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub manifest: Manifest,
    pub tables: Vec<(String, Table)>,
    pub texts: Vec<(String, String)>,
    pub binaries: Vec<(String, Vec<u8>)>,
}

impl Report {
    pub fn new(manifest: Manifest) -> Self {
        Self {
            manifest,
            ..Self::default()
        }
    }

    pub fn table(&mut self, name: &str, t: Table) {
        self.tables.push((name.to_string(), t));
    }

    pub fn text(&mut self, name: &str, s: String) {
        self.texts.push((name.to_string(), s));
    }

    pub fn binary(&mut self, name: &str, b: Vec<u8>) {
        self.binaries.push((name.to_string(), b));
    }

    fn names(&self) -> Vec<&str> {
        let mut v: Vec<&str> = vec!["manifest.txt"];
        v.extend(self.tables.iter().map(|t| t.0.as_str()));
        v.extend(self.texts.iter().map(|t| t.0.as_str()));
        v.extend(self.binaries.iter().map(|t| t.0.as_str()));
        v
    }

    /// Writes every file into `dir`, creating it if needed. Existing files
    /// are only replaced with `force`.
    pub fn emit(&self, dir: &Path, force: bool) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let names = self.names();
        if !force {
            if let Some(clash) = names.iter().map(|n| dir.join(n)).find(|p| p.exists()) {
                return Err(Error::io(
                    &clash,
                    std::io::Error::new(
                        std::io::ErrorKind::AlreadyExists,
                        "output exists (use --force to overwrite)",
                    ),
                ));
            }
        }
        let mut written = Vec::new();
        let mut put = |name: &str, bytes: &[u8]| -> Result<()> {
            let p = dir.join(name);
            fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
            written.push(p);
            Ok(())
        };
        put("manifest.txt", self.manifest.render().as_bytes())?;
        for (n, t) in &self.tables {
            put(n, t.to_csv().as_bytes())?;
        }
        for (n, s) in &self.texts {
            put(n, s.as_bytes())?;
        }
        for (n, b) in &self.binaries {
            put(n, b)?;
        }
        Ok(written)
    }
}
