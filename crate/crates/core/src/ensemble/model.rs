use std::cmp::Ordering;

use rand::Rng as _;

use super::config::{EnsembleConfig, EnsembleKind};
use super::grow::{Criterion, GrowParams, Grower, Stats, Thresholds};
use super::tree::Tree;
use crate::error::{Error, Result};
use crate::model::FeatureVector;
use crate::rng::{derive_indexed, derive_seed, seeded, stream};
use crate::scalar::Scalar;
use crate::textfmt::{Document, Section};

pub const ENSEMBLE_FORMAT: &str = "kace-ensemble";
pub const ENSEMBLE_VERSION: u32 = 1;

/// AdaBoost weighted error is clamped away from zero before computing α.
const MIN_WEIGHTED_ERROR: f64 = 1e-10;

/// Out-of-bag estimate recorded while fitting a random forest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OobEstimate {
    pub error: f64,
    /// Samples that were out of bag for at least one tree.
    pub evaluated: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel<S> {
    pub config: EnsembleConfig,
    pub n_features: usize,
    pub trees: Vec<Tree<S>>,
    /// AdaBoost α per tree; 1 for the other kinds.
    pub weights: Vec<S>,
    /// Initial log-odds for GB/XGB, 0 otherwise.
    pub base_score: S,
    pub oob: Option<OobEstimate>,
}

impl<S: Scalar> EnsembleModel<S> {
    pub fn kind(&self) -> EnsembleKind {
        self.config.kind
    }

    /// Raw additive score before the final squashing (boosters and AB).
    fn margin(&self, x: &[S]) -> S {
        match self.config.kind {
            EnsembleKind::AdaBoost => {
                let m = self.trees.iter().zip(&self.weights).fold(S::zero(), |acc, (t, &a)| {
                    if t.predict(x) > S::lit(0.5) {
                        acc + a
                    } else {
                        acc - a
                    }
                });
                S::lit(2.0) * m
            }
            _ => self.trees.iter().fold(self.base_score, |acc, t| acc + t.predict(x)),
        }
    }

    /// Probability of the positive class for one feature vector.
    pub fn predict_proba(&self, x: &[S]) -> Result<S> {
        if x.len() != self.n_features {
            return Err(Error::Shape(format!(
                "{} model expects {} features, got {}",
                self.config.kind,
                self.n_features,
                x.len()
            )));
        }
        Ok(self.score_unchecked(x))
    }

    fn score_unchecked(&self, x: &[S]) -> S {
        match self.config.kind {
            EnsembleKind::RandomForest | EnsembleKind::ExtraTrees => {
                let sum = self.trees.iter().fold(S::zero(), |acc, t| acc + t.predict(x));
                sum / S::lit(self.trees.len() as f64)
            }
            _ => self.margin(x).sigmoid(),
        }
    }

    pub fn predict_batch<R: AsRef<[S]>>(&self, rows: &[R]) -> Result<Vec<S>> {
        rows.iter().map(|r| self.predict_proba(r.as_ref())).collect()
    }

    pub fn predict_features(&self, features: &[FeatureVector<S>]) -> Result<Vec<S>> {
        features.iter().map(|f| self.predict_proba(&f.values)).collect()
    }

    /// Out-of-bag misclassification rate. Only random forests record one.
    pub fn oob_error(&self) -> Result<OobEstimate> {
        match (self.config.kind, self.oob) {
            (EnsembleKind::RandomForest, Some(o)) => Ok(o),
            (EnsembleKind::RandomForest, None) => Err(Error::data("random forest has no out-of-bag record")),
            (k, _) => Err(Error::data(format!("out-of-bag error is only defined for RF, not {k}"))),
        }
    }
}

pub fn fit_features<S: Scalar>(features: &[FeatureVector<S>], config: &EnsembleConfig) -> Result<EnsembleModel<S>> {
    let rows: Vec<&[S]> = features.iter().map(|f| f.values.as_slice()).collect();
    let labels: Vec<u8> = features.iter().map(|f| f.label.as_u8()).collect();
    fit_ensemble(&rows, &labels, config)
}

fn check_inputs<S: Scalar, R: AsRef<[S]>>(rows: &[R], labels: &[u8]) -> Result<usize> {
    if rows.len() != labels.len() {
        return Err(Error::Shape(format!("{} rows but {} labels", rows.len(), labels.len())));
    }
    if rows.len() < 2 {
        return Err(Error::data("ensemble fitting needs at least two samples"));
    }
    let d = rows[0].as_ref().len();
    if d == 0 {
        return Err(Error::data("feature vectors are empty"));
    }
    for (i, r) in rows.iter().enumerate() {
        let r = r.as_ref();
        if r.len() != d {
            return Err(Error::Shape(format!("row {i} has {} features, expected {d}", r.len())));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::data(format!("row {i} contains a non-finite feature")));
        }
    }
    if let Some(bad) = labels.iter().find(|&&y| y > 1) {
        return Err(Error::data(format!("labels must be 0 or 1, got {bad}")));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::data("ensemble fitting needs both classes"));
    }
    Ok(d)
}

/// Order samples by feature bits then label so the fit does not depend on
/// input order.
fn canonical_order<S: Scalar>(rows: &[&[S]], labels: &[u8]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..rows.len()).collect();
    idx.sort_by(|&i, &j| {
        for (a, b) in rows[i].iter().zip(rows[j]) {
            match a.total_cmp(b) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        labels[i].cmp(&labels[j])
    });
    idx
}

fn tree_rng(config: &EnsembleConfig, t: usize) -> crate::rng::Rng {
    seeded(derive_indexed(derive_seed(config.seed, stream::BOOTSTRAP), t as u64))
}

pub fn fit_ensemble<S: Scalar, R: AsRef<[S]>>(rows: &[R], labels: &[u8], config: &EnsembleConfig) -> Result<EnsembleModel<S>> {
    config.validate()?;
    let n_features = check_inputs(rows, labels)?;
    let raw: Vec<&[S]> = rows.iter().map(|r| r.as_ref()).collect();
    let order = canonical_order(&raw, labels);
    let x: Vec<&[S]> = order.iter().map(|&i| raw[i]).collect();
    let y: Vec<u8> = order.iter().map(|&i| labels[i]).collect();
    let mut model = EnsembleModel {
        config: config.clone(),
        n_features,
        trees: Vec::with_capacity(config.n_trees),
        weights: Vec::with_capacity(config.n_trees),
        base_score: S::zero(),
        oob: None,
    };
    match config.kind {
        EnsembleKind::RandomForest | EnsembleKind::ExtraTrees => fit_forest(&mut model, &x, &y),
        EnsembleKind::AdaBoost => fit_adaboost(&mut model, &x, &y),
        EnsembleKind::GradientBoosting | EnsembleKind::XGBoost => fit_booster(&mut model, &x, &y),
    }
    Ok(model)
}

fn grow_params<S: Scalar>(config: &EnsembleConfig, criterion: Criterion<S>, thresholds: Thresholds, leaf_scale: S) -> GrowParams<S> {
    GrowParams {
        criterion,
        thresholds,
        max_depth: config.max_depth,
        min_samples_split: config.min_samples_split,
        max_features: config.feature_subsample,
        leaf_scale,
    }
}

fn fit_forest<S: Scalar>(model: &mut EnsembleModel<S>, x: &[&[S]], y: &[u8]) {
    let config = model.config.clone();
    let n = x.len();
    let bootstrap = config.kind == EnsembleKind::RandomForest;
    let thresholds = if bootstrap { Thresholds::Midpoints } else { Thresholds::Random };
    let params = grow_params(&config, Criterion::Gini, thresholds, S::one());
    // per-sample (positive votes, total votes) from trees that did not see it
    let mut votes = vec![(0usize, 0usize); n];
    let mut counts = vec![0usize; n];
    for t in 0..config.n_trees {
        let mut rng = tree_rng(&config, t);
        counts.iter_mut().for_each(|c| *c = 0);
        if bootstrap {
            for _ in 0..n {
                counts[rng.random_range(0..n)] += 1;
            }
        } else {
            counts.iter_mut().for_each(|c| *c = 1);
        }
        let stats = Stats {
            a: (0..n).map(|i| S::lit((counts[i] * y[i] as usize) as f64)).collect(),
            b: counts.iter().map(|&c| S::lit(c as f64)).collect(),
            c: vec![S::zero(); n],
        };
        let samples: Vec<usize> = (0..n).filter(|&i| counts[i] > 0).collect();
        let grower = Grower { features: x, stats: &stats, params, n_features: model.n_features };
        let tree = grower.grow(samples, &mut rng);
        if bootstrap {
            for i in (0..n).filter(|&i| counts[i] == 0) {
                votes[i].1 += 1;
                if tree.predict(x[i]) > S::lit(0.5) {
                    votes[i].0 += 1;
                }
            }
        }
        model.trees.push(tree);
        model.weights.push(S::one());
    }
    if bootstrap {
        let mut evaluated = 0;
        let mut wrong = 0;
        for (i, &(pos, total)) in votes.iter().enumerate() {
            if total == 0 {
                continue;
            }
            evaluated += 1;
            // ties go to the positive class
            let pred = u8::from(2 * pos >= total);
            if pred != y[i] {
                wrong += 1;
            }
        }
        let error = if evaluated == 0 { 0.0 } else { wrong as f64 / evaluated as f64 };
        model.oob = Some(OobEstimate { error, evaluated, total: n });
    }
}

fn fit_adaboost<S: Scalar>(model: &mut EnsembleModel<S>, x: &[&[S]], y: &[u8]) {
    let config = model.config.clone();
    let n = x.len();
    let params = grow_params(&config, Criterion::Gini, Thresholds::Midpoints, S::one());
    let mut w = vec![1.0 / n as f64; n];
    for t in 0..config.n_trees {
        let mut rng = tree_rng(&config, t);
        let stats = Stats {
            a: (0..n).map(|i| S::lit(w[i] * y[i] as f64)).collect(),
            b: w.iter().map(|&v| S::lit(v)).collect(),
            c: vec![S::zero(); n],
        };
        let grower = Grower { features: x, stats: &stats, params, n_features: model.n_features };
        let tree = grower.grow((0..n).collect(), &mut rng);
        let wrong: Vec<bool> = (0..n).map(|i| u8::from(tree.predict(x[i]) > S::lit(0.5)) != y[i]).collect();
        let total: f64 = w.iter().sum();
        let err: f64 = w.iter().zip(&wrong).filter(|(_, &m)| m).map(|(v, _)| v).sum::<f64>() / total;
        if err >= 0.5 {
            break;
        }
        let e = err.max(MIN_WEIGHTED_ERROR);
        let alpha = 0.5 * ((1.0 - e) / e).ln();
        model.trees.push(tree);
        model.weights.push(S::lit(alpha));
        if err == 0.0 {
            break;
        }
        let (up, down) = (alpha.exp(), (-alpha).exp());
        for (v, &m) in w.iter_mut().zip(&wrong) {
            *v *= if m { up } else { down };
        }
        let z: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= z);
    }
}

fn fit_booster<S: Scalar>(model: &mut EnsembleModel<S>, x: &[&[S]], y: &[u8]) {
    let config = model.config.clone();
    let n = x.len();
    let pos = y.iter().filter(|&&v| v == 1).count() as f64;
    let rate = pos / n as f64;
    model.base_score = S::lit((rate / (1.0 - rate)).ln());
    let lr = S::lit(config.learning_rate);
    let criterion = match config.kind {
        EnsembleKind::XGBoost => Criterion::SecondOrder { lambda: S::lit(config.lambda), gamma: S::lit(config.gamma) },
        _ => Criterion::SquaredError,
    };
    let params = grow_params(&config, criterion, Thresholds::Midpoints, lr);
    let mut f = vec![model.base_score; n];
    for t in 0..config.n_trees {
        let mut rng = tree_rng(&config, t);
        let p: Vec<S> = f.iter().map(|v| v.sigmoid()).collect();
        let hess: Vec<S> = p.iter().map(|&q| q * (S::one() - q)).collect();
        let stats = match criterion {
            Criterion::SecondOrder { .. } => Stats {
                a: (0..n).map(|i| p[i] - S::lit(y[i] as f64)).collect(),
                b: hess,
                c: vec![S::zero(); n],
            },
            _ => Stats {
                a: (0..n).map(|i| S::lit(y[i] as f64) - p[i]).collect(),
                b: vec![S::one(); n],
                c: hess,
            },
        };
        let grower = Grower { features: x, stats: &stats, params, n_features: model.n_features };
        let tree = grower.grow((0..n).collect(), &mut rng);
        for (fi, xi) in f.iter_mut().zip(x) {
            *fi += tree.predict(xi);
        }
        model.trees.push(tree);
        model.weights.push(S::one());
    }
}

/// Versioned text with the config, scalars and one preorder block per tree.
pub fn save_ensemble<S: Scalar>(model: &EnsembleModel<S>) -> String {
    let mut doc = Document::with_header(ENSEMBLE_FORMAT, ENSEMBLE_VERSION);
    doc.push(model.config.to_section("config"));
    let mut m = Section::new("model");
    m.set("n_features", model.n_features).set("base_score", model.base_score).set("n_trees", model.trees.len());
    if let Some(o) = model.oob {
        m.set("oob_error", o.error).set("oob_evaluated", o.evaluated).set("oob_total", o.total);
    }
    doc.push(m);
    for (i, (t, w)) in model.trees.iter().zip(&model.weights).enumerate() {
        let mut s = Section::new(format!("tree {i}"));
        s.set("weight", w);
        for line in t.to_preorder() {
            s.push_payload(line);
        }
        doc.push(s);
    }
    doc.render()
}

pub fn load_ensemble<S: Scalar>(text: &str) -> Result<EnsembleModel<S>> {
    let doc = Document::parse(text)?;
    doc.expect_header(ENSEMBLE_FORMAT, ENSEMBLE_VERSION)?;
    let cs = doc.require_section("config")?;
    let mut config = EnsembleConfig::new(cs.require("kind")?.parse()?);
    config.apply_section(cs)?;
    config.validate()?;
    let m = doc.require_section("model")?;
    let n_features: usize = m.parse_required("n_features")?;
    let n_trees: usize = m.parse_required("n_trees")?;
    let oob = match m.parse_value::<f64>("oob_error")? {
        Some(error) => Some(OobEstimate {
            error,
            evaluated: m.parse_required("oob_evaluated")?,
            total: m.parse_required("oob_total")?,
        }),
        None => None,
    };
    let mut trees = Vec::with_capacity(n_trees);
    let mut weights = Vec::with_capacity(n_trees);
    for i in 0..n_trees {
        let s = doc.require_section(&format!("tree {i}"))?;
        let tree = Tree::from_preorder(&s.payload).map_err(|e| Error::parse(s.line, format!("[tree {i}] {e}")))?;
        if tree.max_feature().is_some_and(|f| f >= n_features) {
            return Err(Error::parse(s.line, format!("[tree {i}] feature index out of range")));
        }
        trees.push(tree);
        weights.push(s.parse_required("weight")?);
    }
    Ok(EnsembleModel { config, n_features, trees, weights, base_score: m.parse_required("base_score")?, oob })
}
