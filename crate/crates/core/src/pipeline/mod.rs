//! The end-to-end workflow over a run directory.
//!
//! Every command reads only files written by earlier commands, so stages
//! can be rerun independently. All randomness is derived from `[run] seed`.

mod config;
mod data;
mod manifest;

use std::fs;
use std::marker::PhantomData;
use std::path::Path;
use std::time::Instant;

pub use config::{RunConfig, SplitChoice, RUN_FORMAT, RUN_VERSION};
pub use data::{
    features_path, model_path, parse_summary, prepared_path, render_summary, SummaryRow, CONFIG_SNAPSHOT, POOLED,
    SUMMARY_FILE,
};
pub use manifest::{sha256_file, sha256_hex, RunManifest, MANIFEST_FILE, MANIFEST_FORMAT, MANIFEST_VERSION};

use crate::corpus::{
    assign_sites, check_unique_origins, extract_windows, parse_annotations, parse_fasta, reduce_redundancy,
    split_train_independent, stratified_mask, write_windows, ClassCounts, NegativePolicy, PeptideWindow, Species,
};
use crate::ensemble::{fit_features, save_ensemble, EnsembleKind, ENSEMBLE_FORMAT, ENSEMBLE_VERSION};
use crate::error::{Error, Result};
use crate::evaluation::{
    aggregate_reports, cross_validate, make_fold_plan, render_table, roc_csv, roc_curve, GroupKey, MetricReport,
    Protocol, ReportContext,
};
use crate::model::{extract_features, save_model, train_model, write_features, LstmModel, MODEL_FORMAT, MODEL_VERSION};
use crate::rng::{derive_indexed, derive_seed};
use crate::scalar::Scalar;
use crate::tsne::{embedding_csv, tsne_embed, TsneConfig};
use data::{load_features, load_unit_model, load_windows, read_text};
use manifest::Outputs;

pub const LSTM_CLASSIFIER: &str = "LSTM";

/// A unit is what one LSTM is trained for: a species, or all of them pooled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit {
    pub name: String,
    pub species: Vec<Species>,
}

impl Unit {
    fn label(&self) -> String {
        match self.species.as_slice() {
            [only] if self.name != POOLED => only.name().to_string(),
            _ => "Pooled".to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutcome {
    pub files: Vec<String>,
    pub warnings: Vec<String>,
    pub summary: Vec<SummaryRow>,
    pub reports: Vec<MetricReport>,
}

impl CommandOutcome {
    fn absorb(&mut self, other: CommandOutcome) {
        self.files.extend(other.files);
        self.warnings.extend(other.warnings);
        self.summary.extend(other.summary);
        self.reports.extend(other.reports);
    }
}

type Logger = Box<dyn Fn(&str)>;

pub struct Pipeline<S> {
    pub config: RunConfig,
    log: Logger,
    _scalar: PhantomData<S>,
}

fn status(label: &str, started: Instant) -> (String, f64) {
    (label.to_string(), started.elapsed().as_secs_f64())
}

fn subset(windows: &[PeptideWindow], idx: &[usize]) -> Vec<PeptideWindow> {
    idx.iter().map(|&i| windows[i].clone()).collect()
}

impl<S: Scalar> Pipeline<S> {
    pub fn new(config: RunConfig) -> Self {
        Pipeline { config, log: Box::new(|_| {}), _scalar: PhantomData }
    }

    pub fn with_logger(mut self, log: impl Fn(&str) + 'static) -> Self {
        self.log = Box::new(log);
        self
    }

    fn root(&self) -> &Path {
        &self.config.out_dir
    }

    fn seed_for(&self, purpose: &str) -> u64 {
        derive_seed(self.config.seed, purpose)
    }

    /// Write the manifest after a command: new files replace old entries,
    /// entries for files that no longer exist are dropped.
    fn finish(&self, outputs: Outputs, timings: Vec<(String, f64)>) -> Result<Vec<String>> {
        let root = self.root();
        let mut m = RunManifest::load(root)?;
        let snapshot = self.config.render();
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        fs::write(root.join(CONFIG_SNAPSHOT), &snapshot).map_err(|e| Error::io(root.join(CONFIG_SNAPSHOT), e))?;
        m.config_sha256 = sha256_hex(snapshot.as_bytes());
        m.files.insert(CONFIG_SNAPSHOT.to_string(), m.config_sha256.clone());
        for (rel, sum) in &outputs.written {
            m.files.insert(rel.clone(), sum.clone());
        }
        m.files.retain(|rel, _| root.join(rel).exists());
        m.timings.extend(timings);
        m.formats.insert(RUN_FORMAT.into(), RUN_VERSION);
        m.formats.insert(MODEL_FORMAT.into(), MODEL_VERSION);
        m.formats.insert(ENSEMBLE_FORMAT.into(), ENSEMBLE_VERSION);
        m.formats.insert(MANIFEST_FORMAT.into(), MANIFEST_VERSION);
        for p in [&self.config.fasta, &self.config.annotations].into_iter().flatten() {
            if p.exists() {
                m.inputs.insert(p.display().to_string(), sha256_file(p)?);
            }
        }
        m.save(root)?;
        Ok(outputs.files())
    }

    /// Parse inputs, reduce redundancy per species, cut windows and split.
    pub fn prepare(&self) -> Result<CommandOutcome> {
        let started = Instant::now();
        let c = &self.config;
        let fasta = c.fasta.as_ref().ok_or_else(|| Error::Config("[paths] fasta is required for prepare".into()))?;
        let ann = c
            .annotations
            .as_ref()
            .ok_or_else(|| Error::Config("[paths] annotations is required for prepare".into()))?;
        let proteins = parse_fasta(&fs::read_to_string(fasta).map_err(|e| Error::io(fasta, e))?)?;
        let annotations = parse_annotations(&fs::read_to_string(ann).map_err(|e| Error::io(ann, e))?)?;
        let policy = NegativePolicy::infer(&annotations);
        let mut outcome = CommandOutcome::default();
        if let Some(p) = proteins.iter().find(|p| p.species.is_none()) {
            return Err(Error::data(format!("protein {} has no species in its FASTA header", p.id)));
        }
        let flagged = proteins.iter().filter(|p| p.is_flagged()).count();
        if flagged > 0 {
            outcome.warnings.push(format!("{flagged} proteins contain non-standard residues"));
        }
        let requested = !c.species.is_empty();
        let selection: Vec<Species> = if requested { c.species.clone() } else { Species::ALL.to_vec() };
        let mut out = Outputs::new(self.root());
        for sp in selection {
            let members: Vec<_> = proteins.iter().filter(|p| p.species == Some(sp)).cloned().collect();
            let reps = if members.is_empty() { members } else { reduce_redundancy(&members, c.identity_threshold)? };
            let sites = assign_sites(&reps, &annotations, policy);
            let mut windows = Vec::new();
            for p in &reps {
                if let Some(s) = sites.get(&p.id) {
                    windows.extend(extract_windows(p, s, c.model.window_len)?);
                }
            }
            if windows.is_empty() {
                if requested {
                    return Err(Error::data(format!("{sp}: no windows after preparation")));
                }
                continue;
            }
            check_unique_origins(&windows)?;
            let (train, independent) =
                split_train_independent(&windows, c.train_fraction, self.seed_for(&format!("split:{}", sp.slug())))?;
            out.write(&prepared_path(sp, "train"), &write_windows(&train))?;
            out.write(&prepared_path(sp, "independent"), &write_windows(&independent))?;
            (self.log)(&format!("{sp}: {} proteins kept of {}, {} windows", reps.len(), proteins.iter().filter(|p| p.species == Some(sp)).count(), windows.len()));
            outcome.summary.push(SummaryRow {
                species: sp,
                train: ClassCounts::of(&train),
                independent: ClassCounts::of(&independent),
            });
        }
        if outcome.summary.is_empty() {
            return Err(Error::data("no windows for any species"));
        }
        out.write(SUMMARY_FILE, &render_summary(&outcome.summary))?;
        outcome.files = self.finish(out, vec![status("prepare", started)])?;
        Ok(outcome)
    }

    /// Species available in the prepared data, restricted to the selection.
    pub fn prepared_species(&self) -> Result<Vec<Species>> {
        let rows = parse_summary(&read_text(self.root(), SUMMARY_FILE, "prepare")?)?;
        let have: Vec<Species> = rows.iter().map(|r| r.species).collect();
        if self.config.species.is_empty() {
            return Ok(have);
        }
        for sp in &self.config.species {
            if !have.contains(sp) {
                return Err(Error::data(format!("{sp} was not prepared")));
            }
        }
        Ok(self.config.species.clone())
    }

    pub fn units(&self) -> Result<Vec<Unit>> {
        let species = self.prepared_species()?;
        Ok(if self.config.pooled {
            vec![Unit { name: POOLED.to_string(), species }]
        } else {
            species.into_iter().map(|s| Unit { name: s.slug().to_string(), species: vec![s] }).collect()
        })
    }

    fn unit_windows(&self, unit: &Unit, split: &str) -> Result<Vec<PeptideWindow>> {
        let mut all = Vec::new();
        for &sp in &unit.species {
            all.extend(load_windows(self.root(), sp, split)?);
        }
        Ok(all)
    }

    /// Hold out a stratified validation share and train one LSTM.
    fn fit_lstm(&self, windows: &[PeptideWindow], seed: u64) -> Result<LstmModel<S>> {
        let keys = windows.iter().map(|w| (w.species, w.label));
        let fit_mask = stratified_mask(keys, 1.0 - self.config.validation_fraction, derive_seed(seed, "validation"), false)?;
        let (mut fit, mut val) = (Vec::new(), Vec::new());
        for (w, keep) in windows.iter().zip(fit_mask) {
            if keep {
                fit.push(w.clone())
            } else {
                val.push(w.clone())
            }
        }
        if val.is_empty() || fit.is_empty() {
            return Err(Error::data("too few training windows to hold out a validation set"));
        }
        let config = crate::model::ModelConfig { seed, ..self.config.model.clone() };
        let (model, state) = train_model::<S>(&fit, &val, &config)?;
        (self.log)(&format!(
            "  {} epochs, best validation loss {:.4} at epoch {}",
            state.epochs_run(),
            state.best_validation_loss(),
            state.stopping.best_epoch.unwrap_or(0)
        ));
        Ok(model)
    }

    pub fn train(&self) -> Result<CommandOutcome> {
        let mut out = Outputs::new(self.root());
        let mut timings = Vec::new();
        for unit in self.units()? {
            let started = Instant::now();
            (self.log)(&format!("training LSTM for {}", unit.label()));
            let windows = self.unit_windows(&unit, "train")?;
            let model = self.fit_lstm(&windows, self.seed_for(&format!("lstm:{}", unit.name)))?;
            out.write(&model_path(&unit.name), &save_model(&model))?;
            timings.push(status(&format!("train.{}", unit.name), started));
        }
        Ok(CommandOutcome { files: self.finish(out, timings)?, ..Default::default() })
    }

    /// Final hidden states for both splits, from the saved models.
    pub fn extract(&self) -> Result<CommandOutcome> {
        let mut out = Outputs::new(self.root());
        let mut timings = Vec::new();
        for unit in self.units()? {
            let started = Instant::now();
            let model: LstmModel<S> = load_unit_model(self.root(), &unit.name)?;
            for &sp in &unit.species {
                for split in ["train", "independent"] {
                    let windows = load_windows(self.root(), sp, split)?;
                    out.write(&features_path(sp, split), &write_features(&extract_features(&model, &windows)?))?;
                }
            }
            timings.push(status(&format!("extract.{}", unit.name), started));
        }
        Ok(CommandOutcome { files: self.finish(out, timings)?, ..Default::default() })
    }

    pub fn train_extract(&self) -> Result<CommandOutcome> {
        let mut o = self.train()?;
        o.absorb(self.extract()?);
        Ok(o)
    }

    fn ensemble_seed(&self, unit: &str, kind: EnsembleKind) -> u64 {
        self.seed_for(&format!("ensemble:{unit}:{}", kind.tag()))
    }

    /// Fit every configured ensemble on `train` and score `targets`.
    fn score_ensembles(
        &self,
        unit: &str,
        train: &[crate::model::FeatureVector<S>],
        targets: &[&[crate::model::FeatureVector<S>]],
        seed_offset: Option<u64>,
        out: Option<&mut Outputs>,
    ) -> Result<Vec<(String, Vec<Vec<f64>>)>> {
        let mut results = Vec::new();
        let mut out = out;
        for &kind in &self.config.classifiers {
            let mut cfg = self.config.ensemble(kind);
            cfg.seed = match seed_offset {
                Some(f) => derive_indexed(self.ensemble_seed(unit, kind), f),
                None => self.ensemble_seed(unit, kind),
            };
            let model = fit_features(train, &cfg)?;
            if let Some(o) = out.as_deref_mut() {
                o.write(&format!("ensembles/{unit}.{}.txt", kind.tag()), &save_ensemble(&model))?;
            }
            let scores = targets
                .iter()
                .map(|t| Ok(model.predict_features(t)?.into_iter().map(|v| v.as_f64()).collect()))
                .collect::<Result<Vec<Vec<f64>>>>()?;
            results.push((kind.tag().to_string(), scores));
        }
        Ok(results)
    }

    /// Fit the ensembles and evaluate every requested protocol.
    pub fn evaluate(&self) -> Result<CommandOutcome> {
        let c = &self.config;
        let mut out = Outputs::new(self.root());
        let mut timings = Vec::new();
        let mut reports: Vec<MetricReport> = Vec::new();
        let mut warnings = Vec::new();
        let wants_fixed = c.protocols.iter().any(|p| matches!(p, Protocol::Training | Protocol::Independent));
        for unit in self.units()? {
            let started = Instant::now();
            (self.log)(&format!("evaluating {}", unit.label()));
            let model: LstmModel<S> = load_unit_model(self.root(), &unit.name)?;
            let mut per_species = Vec::new();
            for &sp in &unit.species {
                let tw = load_windows(self.root(), sp, "train")?;
                let iw = load_windows(self.root(), sp, "independent")?;
                let tf = load_features::<S>(self.root(), sp, "train", &tw)?;
                let inf = load_features::<S>(self.root(), sp, "independent", &iw)?;
                per_species.push((sp, tw, iw, tf, inf));
            }
            if wants_fixed {
                let train_all: Vec<_> = per_species.iter().flat_map(|p| p.3.iter().cloned()).collect();
                let mut targets: Vec<&[crate::model::FeatureVector<S>]> = Vec::new();
                for p in &per_species {
                    targets.push(&p.3);
                    targets.push(&p.4);
                }
                let scored = self.score_ensembles(&unit.name, &train_all, &targets, None, Some(&mut out))?;
                for (k, (sp, tw, iw, _, _)) in per_species.iter().enumerate() {
                    let mut rows: Vec<(String, Vec<f64>, Vec<f64>)> = vec![(
                        LSTM_CLASSIFIER.to_string(),
                        model.probabilities(tw)?.into_iter().map(|v| v.as_f64()).collect(),
                        model.probabilities(iw)?.into_iter().map(|v| v.as_f64()).collect(),
                    )];
                    for (name, s) in &scored {
                        rows.push((name.clone(), s[2 * k].clone(), s[2 * k + 1].clone()));
                    }
                    for (protocol, windows, pick) in
                        [(Protocol::Training, tw, 0usize), (Protocol::Independent, iw, 1usize)]
                    {
                        if !c.protocols.contains(&protocol) {
                            continue;
                        }
                        let labels: Vec<u8> = windows.iter().map(|w| w.label.as_u8()).collect();
                        for (name, train_scores, ind_scores) in &rows {
                            let scores = if pick == 0 { train_scores } else { ind_scores };
                            let ctx = ReportContext::new(sp.name(), name.clone(), protocol);
                            reports.push(MetricReport::from_scores(scores, &labels, ctx)?);
                            if let Ok(curve) = roc_curve(scores, &labels) {
                                out.write(&format!("reports/roc/{}.{protocol}.{name}.csv", sp.slug()), &roc_csv(&curve))?;
                            }
                        }
                    }
                }
            }
            for &protocol in &c.protocols {
                let Protocol::CrossValidation(k) = protocol else { continue };
                let cv_started = Instant::now();
                let windows: Vec<PeptideWindow> =
                    per_species.iter().flat_map(|p| p.1.iter().chain(&p.2).cloned()).collect();
                let features: Vec<_> = per_species.iter().flat_map(|p| p.3.iter().chain(&p.4).cloned()).collect();
                let labels: Vec<u8> = windows.iter().map(|w| w.label.as_u8()).collect();
                let plan = make_fold_plan(windows.len(), k, self.seed_for(&format!("folds:{}", unit.name)))?;
                let outcome = cross_validate(&labels, &plan, &unit.label(), |fold, train_idx, test_idx| {
                    (self.log)(&format!("  cv{k} fold {}/{k}", fold + 1));
                    let (train_f, test_f, lstm_scores) = if c.cv_retrain_lstm {
                        let fold_seed = derive_indexed(self.seed_for(&format!("lstm:{}:cv{k}", unit.name)), fold as u64);
                        let train_w = subset(&windows, train_idx);
                        let test_w = subset(&windows, test_idx);
                        let fold_model = self.fit_lstm(&train_w, fold_seed)?;
                        let scores: Vec<f64> =
                            fold_model.probabilities(&test_w)?.into_iter().map(|v| v.as_f64()).collect();
                        (extract_features(&fold_model, &train_w)?, extract_features(&fold_model, &test_w)?, Some(scores))
                    } else {
                        let pick = |idx: &[usize]| idx.iter().map(|&i| features[i].clone()).collect::<Vec<_>>();
                        (pick(train_idx), pick(test_idx), None)
                    };
                    let train_labels: Vec<u8> = train_f.iter().map(|f| f.label.as_u8()).collect();
                    let mut result = Vec::new();
                    if let Some(s) = lstm_scores {
                        result.push((LSTM_CLASSIFIER.to_string(), s));
                    }
                    if !(train_labels.contains(&0) && train_labels.contains(&1)) {
                        return Err(Error::data(format!("cv{k} fold {fold}: training part lacks a class")));
                    }
                    let scored = self.score_ensembles(&unit.name, &train_f, &[&test_f], Some(fold as u64 + 1), None)?;
                    result.extend(scored.into_iter().map(|(n, mut s)| (n, s.remove(0))));
                    Ok(result)
                })?;
                for (fold, r) in &outcome.folds {
                    if r.is_flagged() {
                        warnings.push(format!(
                            "{} cv{k} fold {fold} {}: defaulted {}",
                            unit.label(),
                            r.context.classifier,
                            r.flags.join(",")
                        ));
                    }
                }
                reports.extend(outcome.mean);
                timings.push(status(&format!("evaluate.{}.cv{k}", unit.name), cv_started));
            }
            timings.push(status(&format!("evaluate.{}", unit.name), started));
        }
        let order = |name: &str| {
            std::iter::once(LSTM_CLASSIFIER.to_string())
                .chain(EnsembleKind::ALL.iter().map(|k| k.tag().to_string()))
                .position(|n| n == name)
                .unwrap_or(usize::MAX)
        };
        for &protocol in &c.protocols {
            let mut rows: Vec<MetricReport> = reports.iter().filter(|r| r.context.protocol == protocol).cloned().collect();
            if rows.is_empty() {
                continue;
            }
            rows.sort_by_key(|r| (species_rank(&r.context.species), order(&r.context.classifier)));
            let mut avg = aggregate_reports(&rows, &[GroupKey::Classifier, GroupKey::Protocol])?;
            avg.sort_by_key(|r| order(&r.context.classifier));
            rows.extend(avg.iter().cloned());
            out.write(&format!("reports/{protocol}.tsv"), &render_table(&rows))?;
            reports.extend(avg);
        }
        for w in &warnings {
            (self.log)(&format!("warning: {w}"));
        }
        Ok(CommandOutcome { files: self.finish(out, timings)?, warnings, reports, ..Default::default() })
    }

    /// One t-SNE embedding per species of the configured split.
    pub fn visualize(&self) -> Result<CommandOutcome> {
        let mut out = Outputs::new(self.root());
        let mut warnings = Vec::new();
        let mut timings = Vec::new();
        let splits: &[&str] = match self.config.tsne_split {
            SplitChoice::Train => &["train"],
            SplitChoice::Independent => &["independent"],
            SplitChoice::Both => &["train", "independent"],
        };
        for sp in self.prepared_species()? {
            let started = Instant::now();
            let mut feats = Vec::new();
            for split in splits {
                let w = load_windows(self.root(), sp, split)?;
                feats.extend(load_features::<S>(self.root(), sp, split, &w)?);
            }
            let mut cfg = TsneConfig { seed: self.seed_for(&format!("tsne:{}", sp.slug())), ..self.config.tsne.clone() };
            let fitted = cfg.fitted_perplexity(feats.len());
            if fitted < 1.0 {
                return Err(Error::data(format!("{sp}: {} points are too few for t-SNE", feats.len())));
            }
            if fitted < cfg.perplexity {
                let msg = format!("{sp}: perplexity lowered from {} to {fitted} for {} points", cfg.perplexity, feats.len());
                (self.log)(&format!("warning: {msg}"));
                warnings.push(msg);
                cfg.perplexity = fitted;
            }
            let e = tsne_embed(&feats, &cfg)?;
            out.write(&format!("tsne/{}.csv", sp.slug()), &embedding_csv(&e))?;
            timings.push(status(&format!("visualize.{}", sp.slug()), started));
        }
        Ok(CommandOutcome { files: self.finish(out, timings)?, warnings, ..Default::default() })
    }
}

fn species_rank(name: &str) -> usize {
    Species::ALL.iter().position(|s| s.name() == name).unwrap_or(Species::ALL.len())
}
