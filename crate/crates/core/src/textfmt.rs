//! A small sectioned key-value text format.
//!
//! ```text
//! # comment
//! format = kace-lstm
//! version = 1
//!
//! [section name]
//! key = value
//! raw payload line without an equals sign
//! ```
//!
//! Used for run configs, model files, ensembles and the run manifest. Lines
//! without `=` inside a section are kept verbatim as payload (tensor rows,
//! preorder tree nodes).

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Section {
    pub name: String,
    pub entries: Vec<(String, String)>,
    pub payload: Vec<String>,
    /// 1-based line of the header, 0 for the preamble.
    pub line: usize,
}

impl Section {
    pub fn new(name: impl Into<String>) -> Self {
        Section { name: name.into(), ..Default::default() }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| {
            Error::parse(self.line, format!("[{}] missing key `{key}`", self.name))
        })
    }

    pub fn parse_value<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                Error::parse(self.line, format!("[{}] bad value for `{key}`: {v:?}", self.name))
            }),
        }
    }

    pub fn parse_required<T: FromStr>(&self, key: &str) -> Result<T> {
        self.parse_value(key)?.ok_or_else(|| {
            Error::parse(self.line, format!("[{}] missing key `{key}`", self.name))
        })
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn push_payload(&mut self, line: impl Into<String>) {
        self.payload.push(line.into());
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Document {
    pub preamble: Section,
    pub sections: Vec<Section>,
}

impl Document {
    pub fn with_header(format: &str, version: u32) -> Self {
        let mut doc = Document::default();
        doc.preamble.set("format", format).set("version", version);
        doc
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn require_section(&self, name: &str) -> Result<&Section> {
        self.section(name).ok_or_else(|| Error::parse(0, format!("missing section [{name}]")))
    }

    pub fn sections_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a Section> {
        self.sections.iter().filter(move |s| s.name.starts_with(prefix))
    }

    pub fn push(&mut self, section: Section) {
        self.sections.push(section);
    }

    /// Check the `format`/`version` preamble, rejecting anything else.
    pub fn expect_header(&self, format: &str, version: u32) -> Result<()> {
        let found = self.preamble.get("format").unwrap_or("");
        if found != format {
            return Err(Error::parse(1, format!("expected format `{format}`, found `{found}`")));
        }
        let v: u32 = self.preamble.parse_required("version")?;
        if v != version {
            return Err(Error::parse(1, format!("unsupported {format} version {v} (expected {version})")));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = Document::default();
        let mut current: Option<Section> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with('[') {
                let name = line
                    .strip_prefix('[')
                    .and_then(|l| l.strip_suffix(']'))
                    .ok_or_else(|| Error::parse(line_no, format!("malformed header {line:?}")))?;
                if let Some(sec) = current.take() {
                    doc.sections.push(sec);
                }
                current = Some(Section { name: name.trim().to_string(), line: line_no, ..Default::default() });
                continue;
            }
            let in_section = current.is_some();
            let target = current.as_mut().unwrap_or(&mut doc.preamble);
            match line.split_once('=') {
                Some((k, v)) => target.entries.push((k.trim().to_string(), v.trim().to_string())),
                None if in_section => target.payload.push(line.to_string()),
                None => return Err(Error::parse(line_no, format!("expected `key = value`, got {line:?}"))),
            }
        }
        if let Some(sec) = current {
            doc.sections.push(sec);
        }
        Ok(doc)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.preamble.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        for sec in &self.sections {
            let _ = writeln!(out, "\n[{}]", sec.name);
            for (k, v) in &sec.entries {
                let _ = writeln!(out, "{k} = {v}");
            }
            for p in &sec.payload {
                out.push_str(p);
                out.push('\n');
            }
        }
        out
    }
}

/// Parse a whitespace-separated row of numbers.
pub fn parse_row<T: FromStr>(line: &str, line_no: usize) -> Result<Vec<T>> {
    line.split_whitespace()
        .map(|tok| tok.parse().map_err(|_| Error::parse(line_no, format!("bad number {tok:?}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_render_roundtrip() {
        let mut doc = Document::with_header("demo", 1);
        let mut s = Section::new("model");
        s.set("hidden_dim", 64).set("name", "a b");
        s.push_payload("1 2 3");
        doc.push(s);
        let text = doc.render();
        let back = Document::parse(&text).unwrap();
        assert_eq!(back.preamble.get("format"), Some("demo"));
        let m = back.require_section("model").unwrap();
        assert_eq!(m.parse_required::<usize>("hidden_dim").unwrap(), 64);
        assert_eq!(m.get("name"), Some("a b"));
        assert_eq!(m.payload, vec!["1 2 3".to_string()]);
        back.expect_header("demo", 1).unwrap();
        assert!(back.expect_header("demo", 2).is_err());
        assert!(back.expect_header("other", 1).is_err());
    }

    #[test]
    fn rejects_bare_preamble_text() {
        assert!(Document::parse("garbage line").is_err());
        assert!(Document::parse("[unterminated").is_err());
    }
}
