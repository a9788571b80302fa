//! Minimal `key=value` text documents used for model files and config.
//!
//! Lines starting with `#` are comments, blank lines are ignored, and keys
//! keep their insertion order so that writing is byte-stable.

use std::fmt::Display;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::labelmatrix::data_lines;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvDoc {
    comments: Vec<String>,
    entries: Vec<(String, String)>,
}

impl KvDoc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn comment(&mut self, text: impl Into<String>) -> &mut Self {
        self.comments.push(text.into());
        self
    }

    /// Insert or replace a key.
    pub fn set(&mut self, key: &str, value: impl Display) -> &mut Self {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::invalid(format!("missing key '{key}'")))
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|_| Error::invalid(format!("bad value '{raw}' for key '{key}'")))
    }

    /// Comma-separated list; an empty value is an empty list.
    pub fn parse_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let raw = self.require(key)?;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad list item '{s}' for key '{key}'")))
            })
            .collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut doc = KvDoc::new();
        for item in data_lines(reader) {
            let (line_no, line) = item?;
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                message: "expected key=value".into(),
            })?;
            doc.set(k.trim(), v.trim());
        }
        Ok(doc)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for c in &self.comments {
            writeln!(w, "# {c}")?;
        }
        for (k, v) in &self.entries {
            writeln!(w, "{k}={v}")?;
        }
        Ok(())
    }
}

/// Comma-join values using their shortest round-tripping representation.
pub fn join<T: Display>(values: &[T]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        let xs = [0.1f64, 1.0 / 3.0, -2.5e-17, 6.0];
        let mut doc = KvDoc::new();
        doc.comment("header").set("xs", join(&xs)).set("empty", "");
        let mut buf = Vec::new();
        doc.write(&mut buf).unwrap();
        let back = KvDoc::read(buf.as_slice()).unwrap();
        assert_eq!(back.parse_list::<f64>("xs").unwrap(), xs);
        assert!(back.parse_list::<f64>("empty").unwrap().is_empty());
        assert!(back.require("missing").is_err());
    }

    #[test]
    fn lines_without_equals_are_rejected() {
        assert!(matches!(
            KvDoc::read("a=1\noops\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
