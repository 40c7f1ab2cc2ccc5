//! Model files and feature tables.

use std::fmt::Write as _;

use super::config::ModelConfig;
use super::params::LstmParameters;
use super::tensor::Matrix;
use super::train::{FeatureVector, LstmModel};
use super::vocab::Vocabulary;
use crate::corpus::{Label, Origin};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::textfmt::{parse_row, Document, Section};

pub const MODEL_FORMAT: &str = "kace-lstm";
pub const MODEL_VERSION: u32 = 1;

fn tensor_section<S: Scalar>(name: &str, m: &Matrix<S>) -> Section {
    let mut s = Section::new(format!("tensor {name}"));
    s.set("shape", format!("{} {}", m.rows(), m.cols()));
    for r in 0..m.rows() {
        let mut line = String::new();
        for (i, v) in m.row(r).iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            let _ = write!(line, "{v}");
        }
        s.push_payload(line);
    }
    s
}

fn read_tensor<S: Scalar>(sec: &Section, expected: (usize, usize)) -> Result<Matrix<S>> {
    let shape: Vec<usize> = parse_row(sec.require("shape")?, sec.line)?;
    if shape != [expected.0, expected.1] {
        return Err(Error::Shape(format!("[{}] has shape {shape:?}, expected {expected:?}", sec.name)));
    }
    if sec.payload.len() != expected.0 {
        return Err(Error::Shape(format!("[{}] has {} rows, expected {}", sec.name, sec.payload.len(), expected.0)));
    }
    let mut data = Vec::with_capacity(expected.0 * expected.1);
    for row in &sec.payload {
        let vals: Vec<S> = parse_row(row, sec.line)?;
        if vals.len() != expected.1 {
            return Err(Error::Shape(format!("[{}] row has {} values, expected {}", sec.name, vals.len(), expected.1)));
        }
        data.extend(vals);
    }
    Matrix::from_vec(expected.0, expected.1, data)
}

/// Render a model as versioned text. Values use shortest round-trip
/// decimal form, so loading reproduces the parameters bit for bit.
pub fn save_model<S: Scalar>(model: &LstmModel<S>) -> String {
    let mut doc = Document::with_header(MODEL_FORMAT, MODEL_VERSION);
    doc.push(model.config.to_section("config"));
    let mut v = Section::new("vocabulary");
    v.set("alphabet", model.vocab.alphabet()).set("pad", "X");
    doc.push(v);
    for (name, m) in model.params.tensors() {
        doc.push(tensor_section(&name, m));
    }
    doc.render()
}

pub fn load_model<S: Scalar>(text: &str) -> Result<LstmModel<S>> {
    let doc = Document::parse(text)?;
    doc.expect_header(MODEL_FORMAT, MODEL_VERSION)?;
    let mut config = ModelConfig::default();
    config.apply_section(doc.require_section("config")?)?;
    config.validate()?;
    let alphabet = doc.require_section("vocabulary")?.require("alphabet")?;
    let vocab = Vocabulary::from_alphabet(alphabet).ok_or_else(|| Error::parse(0, "invalid vocabulary"))?;
    let mut params = LstmParameters::<S>::zeros_for(&config, vocab.size());
    let names: Vec<String> = params.tensors().into_iter().map(|(n, _)| n).collect();
    for (name, slot) in names.iter().zip(params.tensors_mut()) {
        let sec = doc.require_section(&format!("tensor {name}"))?;
        *slot = read_tensor(sec, slot.shape())?;
    }
    if !params.is_finite() {
        return Err(Error::Numerical("model file contains non-finite values".into()));
    }
    Ok(LstmModel { config, vocab, params })
}

/// `origin \t label \t v1 .. vH`
pub fn write_features<S: Scalar>(features: &[FeatureVector<S>]) -> String {
    let mut out = String::new();
    for f in features {
        let _ = write!(out, "{}\t{}", f.origin, f.label);
        for v in &f.values {
            let _ = write!(out, "\t{v}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_features<S: Scalar>(text: &str) -> Result<Vec<FeatureVector<S>>> {
    let mut out: Vec<FeatureVector<S>> = Vec::new();
    for (idx, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let wrap = |e: Error| Error::parse(idx + 1, e.to_string());
        let mut cols = line.split('\t');
        let origin: Origin = cols.next().unwrap_or("").parse().map_err(wrap)?;
        let label: Label = cols.next().unwrap_or("").parse().map_err(wrap)?;
        let values: Vec<S> = cols
            .map(|c| c.parse::<S>().map_err(|_| Error::parse(idx + 1, format!("bad feature value {c:?}"))))
            .collect::<Result<_>>()?;
        if values.is_empty() {
            return Err(Error::parse(idx + 1, "feature row has no values"));
        }
        if let Some(first) = out.first() {
            if first.values.len() != values.len() {
                return Err(Error::parse(idx + 1, format!("{} values, previous rows have {}", values.len(), first.values.len())));
            }
        }
        out.push(FeatureVector { values, origin, label });
    }
    Ok(out)
}
