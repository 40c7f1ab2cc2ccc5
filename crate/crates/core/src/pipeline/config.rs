use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::corpus::{parse_species_list, Species};
use crate::ensemble::{parse_kind_list, EnsembleConfig, EnsembleKind};
use crate::error::{Error, Result};
use crate::evaluation::Protocol;
use crate::model::ModelConfig;
use crate::textfmt::{Document, Section};
use crate::tsne::TsneConfig;

pub const RUN_FORMAT: &str = "kace-run";
pub const RUN_VERSION: u32 = 1;

/// Which prepared split a command operates on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitChoice {
    Train,
    Independent,
    Both,
}

impl std::str::FromStr for SplitChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "train" => Ok(SplitChoice::Train),
            "independent" => Ok(SplitChoice::Independent),
            "both" => Ok(SplitChoice::Both),
            other => Err(Error::Config(format!("split must be train, independent or both, got `{other}`"))),
        }
    }
}

impl std::fmt::Display for SplitChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SplitChoice::Train => "train",
            SplitChoice::Independent => "independent",
            SplitChoice::Both => "both",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub fasta: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Empty selects every species found in the input.
    pub species: Vec<Species>,
    pub seed: u64,
    pub identity_threshold: f64,
    pub train_fraction: f64,
    /// Share of the training split held out for early stopping.
    pub validation_fraction: f64,
    /// One model over all selected species instead of one per species.
    pub pooled: bool,
    pub protocols: Vec<Protocol>,
    pub classifiers: Vec<EnsembleKind>,
    /// Retrain the LSTM inside every CV fold; otherwise reuse extracted features.
    pub cv_retrain_lstm: bool,
    pub model: ModelConfig,
    pub ensembles: BTreeMap<EnsembleKind, EnsembleConfig>,
    pub tsne: TsneConfig,
    pub tsne_split: SplitChoice,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            fasta: None,
            annotations: None,
            out_dir: PathBuf::from("kace-out"),
            species: Vec::new(),
            seed: 0,
            identity_threshold: 0.3,
            train_fraction: 0.7,
            validation_fraction: 0.1,
            pooled: false,
            protocols: vec![
                Protocol::Training,
                Protocol::Independent,
                Protocol::CrossValidation(5),
                Protocol::CrossValidation(10),
            ],
            classifiers: EnsembleKind::ALL.to_vec(),
            cv_retrain_lstm: true,
            model: ModelConfig::default(),
            ensembles: EnsembleKind::ALL.iter().map(|&k| (k, EnsembleConfig::new(k))).collect(),
            tsne: TsneConfig::default(),
            tsne_split: SplitChoice::Independent,
        }
    }
}

fn join_list<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn parse_protocols(s: &str) -> Result<Vec<Protocol>> {
    let mut ps = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect::<Result<Vec<Protocol>>>()?;
    ps.sort();
    ps.dedup();
    if ps.is_empty() {
        return Err(Error::Config("at least one evaluation protocol is required".into()));
    }
    Ok(ps)
}

/// Seeds are derived from `[run] seed`; per-stage seeds would silently fork.
fn without_seed(mut s: Section) -> Section {
    s.entries.retain(|(k, _)| k != "seed");
    s
}

fn reject_seed(s: &Section) -> Result<()> {
    if s.get("seed").is_some() {
        return Err(Error::Config(format!("[{}] takes no seed; set `seed` under [run]", s.name)));
    }
    Ok(())
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.identity_threshold > 0.0 && self.identity_threshold <= 1.0) {
            return Err(Error::Config(format!("identity_threshold must be in (0, 1], got {}", self.identity_threshold)));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!("train_fraction must be in (0, 1), got {}", self.train_fraction)));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Config(format!(
                "validation_fraction must be in (0, 1), got {}",
                self.validation_fraction
            )));
        }
        if self.protocols.is_empty() {
            return Err(Error::Config("at least one evaluation protocol is required".into()));
        }
        if self.classifiers.is_empty() {
            return Err(Error::Config("at least one classifier is required".into()));
        }
        self.model.validate()?;
        for c in self.ensembles.values() {
            c.validate()?;
        }
        Ok(())
    }

    pub fn ensemble(&self, kind: EnsembleKind) -> EnsembleConfig {
        self.ensembles.get(&kind).cloned().unwrap_or_else(|| EnsembleConfig::new(kind))
    }

    pub fn to_document(&self) -> Document {
        let mut doc = Document::with_header(RUN_FORMAT, RUN_VERSION);
        let mut paths = Section::new("paths");
        let show = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        paths
            .set("fasta", show(&self.fasta))
            .set("annotations", show(&self.annotations))
            .set("out", self.out_dir.display());
        doc.push(paths);
        let mut run = Section::new("run");
        run.set("seed", self.seed)
            .set("species", self.species.iter().map(|s| s.slug()).collect::<Vec<_>>().join(","))
            .set("identity_threshold", self.identity_threshold)
            .set("train_fraction", self.train_fraction)
            .set("validation_fraction", self.validation_fraction)
            .set("pooled", self.pooled)
            .set("protocols", join_list(&self.protocols))
            .set("classifiers", join_list(&self.classifiers))
            .set("cv_retrain_lstm", self.cv_retrain_lstm);
        doc.push(run);
        doc.push(without_seed(self.model.to_section("model")));
        for (k, c) in &self.ensembles {
            let mut s = without_seed(c.to_section(&format!("ensemble.{}", k.tag())));
            s.entries.retain(|(key, _)| key != "kind");
            doc.push(s);
        }
        let mut t = without_seed(self.tsne.to_section("tsne"));
        t.set("split", self.tsne_split);
        doc.push(t);
        doc
    }

    pub fn render(&self) -> String {
        self.to_document().render()
    }

    /// Parse a run file. Relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let doc = Document::parse(text).map_err(|e| Error::Config(e.to_string()))?;
        if doc.preamble.get("format").is_some() {
            doc.expect_header(RUN_FORMAT, RUN_VERSION).map_err(|e| Error::Config(e.to_string()))?;
        }
        let mut c = RunConfig::default();
        let cfg = |e: Error| match e {
            Error::Parse { msg, .. } => Error::Config(msg),
            other => other,
        };
        for sec in &doc.sections {
            match sec.name.as_str() {
                "paths" => {
                    for (k, v) in &sec.entries {
                        let p = if v.is_empty() { None } else { Some(base_dir.join(v)) };
                        match k.as_str() {
                            "fasta" => c.fasta = p,
                            "annotations" => c.annotations = p,
                            "out" => c.out_dir = p.unwrap_or_else(|| base_dir.to_path_buf()),
                            other => return Err(Error::Config(format!("[paths] unknown key `{other}`"))),
                        }
                    }
                }
                "run" => {
                    for (k, v) in &sec.entries {
                        match k.as_str() {
                            "seed" => c.seed = sec.parse_required(k).map_err(cfg)?,
                            "species" => c.species = parse_species_list(v)?,
                            "identity_threshold" => c.identity_threshold = sec.parse_required(k).map_err(cfg)?,
                            "train_fraction" => c.train_fraction = sec.parse_required(k).map_err(cfg)?,
                            "validation_fraction" => c.validation_fraction = sec.parse_required(k).map_err(cfg)?,
                            "pooled" => c.pooled = sec.parse_required(k).map_err(cfg)?,
                            "protocols" => c.protocols = parse_protocols(v)?,
                            "classifiers" => c.classifiers = parse_kind_list(v)?,
                            "cv_retrain_lstm" => c.cv_retrain_lstm = sec.parse_required(k).map_err(cfg)?,
                            other => return Err(Error::Config(format!("[run] unknown key `{other}`"))),
                        }
                    }
                }
                "model" => {
                    reject_seed(sec)?;
                    c.model.apply_section(sec).map_err(cfg)?;
                }
                "tsne" => {
                    reject_seed(sec)?;
                    c.tsne.apply_section(sec).map_err(cfg)?;
                    if let Some(v) = sec.get("split") {
                        c.tsne_split = v.parse()?;
                    }
                }
                name if name.starts_with("ensemble.") => {
                    reject_seed(sec)?;
                    let kind: EnsembleKind = name["ensemble.".len()..].parse()?;
                    if sec.get("kind").is_some() {
                        return Err(Error::Config(format!("[{name}] the kind comes from the section name")));
                    }
                    let entry = c.ensembles.entry(kind).or_insert_with(|| EnsembleConfig::new(kind));
                    entry.apply_section(sec).map_err(cfg)?;
                }
                other => return Err(Error::Config(format!("unknown section [{other}]"))),
            }
        }
        for p in [&c.fasta, &c.annotations].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::Config(format!("input file {} does not exist", p.display())));
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::parse(&text, base)
    }
}
