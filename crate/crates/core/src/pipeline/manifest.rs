use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::textfmt::{Document, Section};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const MANIFEST_FORMAT: &str = "kace-manifest";
pub const MANIFEST_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Record of a run directory: inputs, emitted files and stage timings.
///
/// Timings make this file itself vary between runs; it is the only output
/// that does.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunManifest {
    pub config_sha256: String,
    pub inputs: BTreeMap<String, String>,
    pub files: BTreeMap<String, String>,
    pub timings: BTreeMap<String, f64>,
    pub formats: BTreeMap<String, u32>,
}

impl RunManifest {
    pub fn load(out_dir: &Path) -> Result<Self> {
        let path = out_dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(RunManifest::default());
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let doc = Document::parse(&text)?;
        doc.expect_header(MANIFEST_FORMAT, MANIFEST_VERSION)?;
        let entries = |name: &str| doc.section(name).map(|s| s.entries.clone()).unwrap_or_default();
        let mut m = RunManifest {
            config_sha256: doc.preamble.get("config_sha256").unwrap_or_default().to_string(),
            ..Default::default()
        };
        m.inputs.extend(entries("inputs"));
        m.files.extend(entries("files"));
        for (k, v) in entries("timings") {
            let t = v.parse().map_err(|_| Error::parse(0, format!("bad timing for {k}")))?;
            m.timings.insert(k, t);
        }
        for (k, v) in entries("formats") {
            let f = v.parse().map_err(|_| Error::parse(0, format!("bad format version for {k}")))?;
            m.formats.insert(k, f);
        }
        Ok(m)
    }

    pub fn render(&self) -> String {
        let mut doc = Document::with_header(MANIFEST_FORMAT, MANIFEST_VERSION);
        doc.preamble.set("config_sha256", &self.config_sha256);
        let section = |name: &str, items: Vec<(String, String)>| {
            let mut s = Section::new(name);
            s.entries = items;
            s
        };
        doc.push(section("formats", self.formats.iter().map(|(k, v)| (k.clone(), v.to_string())).collect()));
        doc.push(section("inputs", self.inputs.clone().into_iter().collect()));
        doc.push(section("files", self.files.clone().into_iter().collect()));
        doc.push(section("timings", self.timings.iter().map(|(k, v)| (k.clone(), format!("{v:.3}"))).collect()));
        doc.render()
    }

    pub fn save(&self, out_dir: &Path) -> Result<()> {
        let path = out_dir.join(MANIFEST_FILE);
        fs::write(&path, self.render()).map_err(|e| Error::io(&path, e))
    }

    /// Re-hash every listed file and report mismatches or missing files.
    pub fn verify(&self, out_dir: &Path) -> Result<Vec<String>> {
        let mut problems = Vec::new();
        for (rel, sum) in &self.files {
            let path = out_dir.join(rel);
            if !path.exists() {
                problems.push(format!("{rel}: missing"));
            } else if &sha256_file(&path)? != sum {
                problems.push(format!("{rel}: checksum mismatch"));
            }
        }
        Ok(problems)
    }
}

/// Writes files under the run directory and records their checksums.
pub(crate) struct Outputs {
    pub root: PathBuf,
    pub written: Vec<(String, String)>,
}

impl Outputs {
    pub fn new(root: &Path) -> Self {
        Outputs { root: root.to_path_buf(), written: Vec::new() }
    }

    pub fn write(&mut self, rel: &str, contents: &str) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.written.push((rel.to_string(), sha256_hex(contents.as_bytes())));
        Ok(())
    }

    pub fn files(&self) -> Vec<String> {
        self.written.iter().map(|(p, _)| p.clone()).collect()
    }
}
