//! File layout of a run directory and loaders for each stage's artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::corpus::{parse_windows, ClassCounts, PeptideWindow, Species};
use crate::error::{Error, Result};
use crate::model::{load_model, parse_features, FeatureVector, LstmModel};
use crate::scalar::Scalar;

pub const SUMMARY_FILE: &str = "prepared/summary.tsv";
pub const CONFIG_SNAPSHOT: &str = "config.snapshot.txt";
pub const POOLED: &str = "pooled";

pub fn prepared_path(species: Species, split: &str) -> String {
    format!("prepared/{}.{split}.tsv", species.slug())
}

pub fn model_path(unit: &str) -> String {
    format!("models/{unit}.lstm")
}

pub fn features_path(species: Species, split: &str) -> String {
    format!("features/{}.{split}.tsv", species.slug())
}

pub fn read_text(root: &Path, rel: &str, stage_hint: &str) -> Result<String> {
    let path = root.join(rel);
    if !path.exists() {
        return Err(Error::data(format!("{} not found; run `{stage_hint}` first", path.display())));
    }
    fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
}

/// One row of the prepared-data summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SummaryRow {
    pub species: Species,
    pub train: ClassCounts,
    pub independent: ClassCounts,
}

pub fn render_summary(rows: &[SummaryRow]) -> String {
    let mut out = String::from("Species\tTraining Positive\tTraining Negative\tIndependent Positive\tIndependent Negative\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.species.name(),
            r.train.positives,
            r.train.negatives,
            r.independent.positives,
            r.independent.negatives
        );
    }
    out
}

pub fn parse_summary(text: &str) -> Result<Vec<SummaryRow>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(Error::parse(i + 1, "summary rows need five columns"));
        }
        let n = |k: usize| cols[k].parse::<usize>().map_err(|_| Error::parse(i + 1, format!("bad count {:?}", cols[k])));
        rows.push(SummaryRow {
            species: cols[0].parse()?,
            train: ClassCounts { positives: n(1)?, negatives: n(2)? },
            independent: ClassCounts { positives: n(3)?, negatives: n(4)? },
        });
    }
    Ok(rows)
}

pub fn load_windows(root: &Path, species: Species, split: &str) -> Result<Vec<PeptideWindow>> {
    parse_windows(&read_text(root, &prepared_path(species, split), "prepare")?)
}

pub fn load_unit_model<S: Scalar>(root: &Path, unit: &str) -> Result<LstmModel<S>> {
    load_model(&read_text(root, &model_path(unit), "train")?)
}

/// Features for one split, checked against the prepared windows they came from.
pub fn load_features<S: Scalar>(root: &Path, species: Species, split: &str, windows: &[PeptideWindow]) -> Result<Vec<FeatureVector<S>>> {
    let feats = parse_features(&read_text(root, &features_path(species, split), "extract")?)?;
    if feats.len() != windows.len() || feats.iter().zip(windows).any(|(f, w)| f.origin != w.origin || f.label != w.label) {
        return Err(Error::data(format!(
            "{} does not match the prepared windows; rerun `extract`",
            features_path(species, split)
        )));
    }
    Ok(feats)
}
