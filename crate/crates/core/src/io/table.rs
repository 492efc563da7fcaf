//! Minimal reader/writer for the comma-separated text formats.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct TextTable {
    pub path: PathBuf,
    pub meta: BTreeMap<String, String>,
    /// (1-based line number, fields)
    pub rows: Vec<(usize, Vec<String>)>,
}

impl TextTable {
    pub fn parse(text: &str, path: &Path) -> Self {
        let mut table = TextTable { path: path.to_path_buf(), ..Default::default() };
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                for tok in header.split_whitespace() {
                    if let Some((key, value)) = tok.split_once('=') {
                        table.meta.insert(key.to_string(), value.to_string());
                    }
                }
                continue;
            }
            table.rows.push((k + 1, line.split(',').map(|f| f.trim().to_string()).collect()));
        }
        table
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(Self::parse(&super::read_to_string(path)?, path))
    }

    pub fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse { path: self.path.clone(), line, msg: msg.into() }
    }

    pub fn expect_format(&self, format: &str) -> Result<()> {
        match self.meta.get("format") {
            Some(f) if f == format => Ok(()),
            Some(f) => Err(self.err(1, format!("expected format={format}, found format={f}"))),
            None => Err(self.err(1, format!("missing 'format={format}' header"))),
        }
    }

    pub fn meta<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.meta.get(key).ok_or_else(|| self.err(1, format!("missing header key '{key}'")))?;
        raw.parse().map_err(|_| self.err(1, format!("cannot parse header key '{key}' = '{raw}'")))
    }

    pub fn meta_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        if self.meta.contains_key(key) {
            self.meta(key).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn check_width(&self, line: usize, fields: &[String], n: usize) -> Result<()> {
        if fields.len() != n {
            return Err(self.err(line, format!("expected {n} fields, found {}", fields.len())));
        }
        Ok(())
    }

    pub fn field<T: FromStr>(&self, line: usize, fields: &[String], k: usize) -> Result<T> {
        let raw = fields.get(k).ok_or_else(|| self.err(line, format!("missing field {k}")))?;
        raw.parse().map_err(|_| self.err(line, format!("cannot parse field {k} ('{raw}')")))
    }
}

/// Accumulates a text file: header lines, then records.
pub struct TextWriter {
    buf: String,
}

impl TextWriter {
    /// `format` plus ordered metadata pairs make up the first header line.
    pub fn new(format: &str, meta: &[(&str, String)]) -> Self {
        let mut buf = format!("# format={format}");
        for (k, v) in meta {
            let _ = write!(buf, " {k}={v}");
        }
        buf.push('\n');
        Self { buf }
    }

    pub fn comment(&mut self, text: &str) -> &mut Self {
        let _ = writeln!(self.buf, "# {text}");
        self
    }

    pub fn row<I, D>(&mut self, fields: I) -> &mut Self
    where
        I: IntoIterator<Item = D>,
        D: std::fmt::Display,
    {
        let mut first = true;
        for f in fields {
            if !first {
                self.buf.push_str(", ");
            }
            first = false;
            let _ = write!(self.buf, "{f}");
        }
        self.buf.push('\n');
        self
    }

    pub fn finish(self) -> String {
        self.buf
    }

    pub fn write(self, path: &Path) -> Result<()> {
        super::write_atomic(path, self.buf.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_rows() {
        let mut w = TextWriter::new("demo", &[("hand", "left".into()), ("rate_hz", "100".into())]);
        w.comment("columns: a, b").row([0.1, 1e-7]).row(["x", "y"]);
        let text = w.finish();
        let t = TextTable::parse(&text, Path::new("demo.txt"));
        t.expect_format("demo").unwrap();
        assert_eq!(t.meta::<f64>("rate_hz").unwrap(), 100.0);
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.field::<f64>(t.rows[0].0, &t.rows[0].1, 1).unwrap(), 1e-7);
        assert!(t.expect_format("other").is_err());
        assert!(t.meta::<f64>("missing").is_err());
    }
}
