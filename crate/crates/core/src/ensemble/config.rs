use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::textfmt::Section;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EnsembleKind {
    RandomForest,
    ExtraTrees,
    AdaBoost,
    GradientBoosting,
    XGBoost,
}

impl EnsembleKind {
    pub const ALL: [EnsembleKind; 5] = [
        EnsembleKind::RandomForest,
        EnsembleKind::ExtraTrees,
        EnsembleKind::AdaBoost,
        EnsembleKind::GradientBoosting,
        EnsembleKind::XGBoost,
    ];

    /// Short tag used in reports and config section names.
    pub fn tag(self) -> &'static str {
        match self {
            EnsembleKind::RandomForest => "RF",
            EnsembleKind::ExtraTrees => "ERT",
            EnsembleKind::AdaBoost => "AB",
            EnsembleKind::GradientBoosting => "GB",
            EnsembleKind::XGBoost => "XGB",
        }
    }

    pub fn is_forest(self) -> bool {
        matches!(self, EnsembleKind::RandomForest | EnsembleKind::ExtraTrees)
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let k = match s.trim().to_ascii_lowercase().as_str() {
            "rf" | "random_forest" | "randomforest" => EnsembleKind::RandomForest,
            "ert" | "extra_trees" | "extratrees" => EnsembleKind::ExtraTrees,
            "ab" | "adaboost" => EnsembleKind::AdaBoost,
            "gb" | "gradient_boosting" | "gbm" => EnsembleKind::GradientBoosting,
            "xgb" | "xgboost" => EnsembleKind::XGBoost,
            _ => return Err(Error::Config(format!("unknown ensemble kind `{s}`"))),
        };
        Ok(k)
    }
}

/// Parses `RF,GB` style lists. Empty means all five.
pub fn parse_kind_list(s: &str) -> Result<Vec<EnsembleKind>> {
    let mut kinds = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(EnsembleKind::from_str)
        .collect::<Result<Vec<_>>>()?;
    if kinds.is_empty() {
        return Ok(EnsembleKind::ALL.to_vec());
    }
    kinds.sort();
    kinds.dedup();
    Ok(kinds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub kind: EnsembleKind,
    pub n_trees: usize,
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub learning_rate: f64,
    /// Features considered per split; `None` = all.
    pub feature_subsample: Option<usize>,
    pub min_samples_split: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub seed: u64,
}

impl EnsembleConfig {
    pub fn new(kind: EnsembleKind) -> Self {
        let forest = kind.is_forest();
        EnsembleConfig {
            kind,
            n_trees: 100,
            max_depth: if forest { None } else { Some(3) },
            learning_rate: 0.1,
            feature_subsample: if forest { Some(8) } else { None },
            min_samples_split: 2,
            lambda: 1.0,
            gamma: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("{}: {m}", self.kind)));
        if self.n_trees == 0 {
            return bad("n_trees must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad(format!("learning_rate must be in (0, 1], got {}", self.learning_rate));
        }
        if self.feature_subsample == Some(0) {
            return bad("feature_subsample must be positive".into());
        }
        if !(self.lambda >= 0.0) || !(self.gamma >= 0.0) {
            return bad("lambda and gamma must be non-negative".into());
        }
        Ok(())
    }

    pub fn to_section(&self, name: &str) -> Section {
        let mut s = Section::new(name);
        s.set("kind", self.kind)
            .set("n_trees", self.n_trees)
            .set("max_depth", opt_to_string(self.max_depth))
            .set("learning_rate", self.learning_rate)
            .set("feature_subsample", opt_to_string(self.feature_subsample))
            .set("min_samples_split", self.min_samples_split)
            .set("lambda", self.lambda)
            .set("gamma", self.gamma)
            .set("seed", self.seed);
        s
    }

    pub fn apply_section(&mut self, section: &Section) -> Result<()> {
        for (key, value) in &section.entries {
            match key.as_str() {
                "kind" => self.kind = value.parse()?,
                "n_trees" => self.n_trees = section.parse_required(key)?,
                "max_depth" => self.max_depth = parse_opt(key, value)?,
                "learning_rate" => self.learning_rate = section.parse_required(key)?,
                "feature_subsample" => self.feature_subsample = parse_opt(key, value)?,
                "min_samples_split" => self.min_samples_split = section.parse_required(key)?,
                "lambda" => self.lambda = section.parse_required(key)?,
                "gamma" => self.gamma = section.parse_required(key)?,
                "seed" => self.seed = section.parse_required(key)?,
                other => return Err(Error::Config(format!("[{}] unknown key `{other}`", section.name))),
            }
        }
        Ok(())
    }
}

fn opt_to_string(v: Option<usize>) -> String {
    v.map_or_else(|| "none".to_string(), |d| d.to_string())
}

fn parse_opt(key: &str, value: &str) -> Result<Option<usize>> {
    match value.trim() {
        "none" | "unlimited" | "all" => Ok(None),
        v => v
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("`{key}` expects an integer or `none`, got `{v}`"))),
    }
}
