use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use super::species::Species;
use super::windows::{Label, PeptideWindow};
use crate::error::{Error, Result};
use crate::rng;

/// Positive/negative counts of one split.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub positives: usize,
    pub negatives: usize,
}

impl ClassCounts {
    pub fn of(windows: &[PeptideWindow]) -> Self {
        let positives = windows.iter().filter(|w| w.label.is_positive()).count();
        ClassCounts { positives, negatives: windows.len() - positives }
    }

    pub fn total(&self) -> usize {
        self.positives + self.negatives
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesDataset {
    pub species: Species,
    pub train: Vec<PeptideWindow>,
    pub independent: Vec<PeptideWindow>,
}

impl SpeciesDataset {
    pub fn train_counts(&self) -> ClassCounts {
        ClassCounts::of(&self.train)
    }

    pub fn independent_counts(&self) -> ClassCounts {
        ClassCounts::of(&self.independent)
    }

    pub fn all(&self) -> Vec<PeptideWindow> {
        self.train.iter().chain(&self.independent).cloned().collect()
    }
}

/// Stratified train/independent split.
///
/// Each (species, label) stratum is shuffled with a seeded stream and its
/// first `round(train_frac * n)` members go to training. Both outputs keep
/// the input order.
pub fn split_train_independent(
    windows: &[PeptideWindow],
    train_frac: f64,
    seed: u64,
) -> Result<(Vec<PeptideWindow>, Vec<PeptideWindow>)> {
    let mask = stratified_mask(windows.iter().map(|w| (w.species, w.label)), train_frac, seed, true)?;
    let (mut train, mut independent) = (Vec::new(), Vec::new());
    for (w, in_train) in windows.iter().zip(mask) {
        if in_train { train.push(w.clone()) } else { independent.push(w.clone()) }
    }
    Ok((train, independent))
}

/// Returns `true` for members of the first part. Strata are keyed by
/// `(species, label)`; with `require_both_classes`, a species missing a class
/// is an error.
pub(crate) fn stratified_mask(
    keys: impl Iterator<Item = (Species, Label)>,
    frac: f64,
    seed: u64,
    require_both_classes: bool,
) -> Result<Vec<bool>> {
    if !(0.0..=1.0).contains(&frac) {
        return Err(Error::data(format!("split fraction must be in [0, 1], got {frac}")));
    }
    let keys: Vec<(Species, Label)> = keys.collect();
    let mut strata: BTreeMap<(Species, Label), Vec<usize>> = BTreeMap::new();
    for (i, k) in keys.iter().enumerate() {
        strata.entry(*k).or_default().push(i);
    }
    if require_both_classes {
        let mut species: Vec<Species> = keys.iter().map(|k| k.0).collect();
        species.dedup();
        species.sort();
        species.dedup();
        if species.is_empty() {
            return Err(Error::data("no windows to split"));
        }
        for sp in species {
            for label in [Label::Positive, Label::Negative] {
                if !strata.contains_key(&(sp, label)) {
                    return Err(Error::data(format!("{sp}: no {} windows to split", if label.is_positive() { "positive" } else { "negative" })));
                }
            }
        }
    }
    let mut rng = rng::substream(seed, rng::stream::SPLIT);
    let mut mask = vec![false; keys.len()];
    for idx in strata.values_mut() {
        idx.shuffle(&mut rng);
        let take = (frac * idx.len() as f64).round() as usize;
        for &i in &idx[..take] {
            mask[i] = true;
        }
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::windows::Origin;

    fn windows(sp: Species, pos: usize, neg: usize) -> Vec<PeptideWindow> {
        (0..pos + neg)
            .map(|i| PeptideWindow {
                residues: format!("{}K{}", "A".repeat(20), "A".repeat(20)),
                label: Label::from_bool(i < pos),
                species: sp,
                origin: Origin { protein_id: format!("{}_{i}", sp.slug()), position: 21 },
            })
            .collect()
    }

    #[test]
    fn exact_proportions() {
        let w = windows(Species::EColi, 50, 50);
        let (tr, ind) = split_train_independent(&w, 0.7, 1).unwrap();
        assert_eq!(tr.len(), 70);
        assert_eq!(ind.len(), 30);
        assert_eq!(ClassCounts::of(&tr), ClassCounts { positives: 35, negatives: 35 });
        assert_eq!(ClassCounts::of(&ind), ClassCounts { positives: 15, negatives: 15 });
    }

    #[test]
    fn deterministic_and_disjoint() {
        let w = windows(Species::BSubtilis, 30, 77);
        let a = split_train_independent(&w, 0.7, 9).unwrap();
        let b = split_train_independent(&w, 0.7, 9).unwrap();
        assert_eq!(a, b);
        let c = split_train_independent(&w, 0.7, 10).unwrap();
        assert_ne!(a, c);
        let mut origins: Vec<_> = a.0.iter().chain(&a.1).map(|w| w.origin.clone()).collect();
        assert_eq!(origins.len(), w.len());
        origins.sort();
        origins.dedup();
        assert_eq!(origins.len(), w.len());
    }

    #[test]
    fn e_coli_table_counts() {
        // 3393 + 1454 positives, 6698 + 2872 negatives
        let w = windows(Species::EColi, 3393 + 1454, 6698 + 2872);
        let (tr, _) = split_train_independent(&w, 0.70, 2024).unwrap();
        let c = ClassCounts::of(&tr);
        assert!(c.positives.abs_diff(3393) <= 1, "{c:?}");
        assert!(c.negatives.abs_diff(6698) <= 1, "{c:?}");
    }

    #[test]
    fn stratified_within_species() {
        let mut w = windows(Species::EColi, 10, 20);
        w.extend(windows(Species::STyphimurium, 3, 30));
        let (tr, _) = split_train_independent(&w, 0.7, 4).unwrap();
        let ecoli: Vec<_> = tr.iter().filter(|w| w.species == Species::EColi).cloned().collect();
        let st: Vec<_> = tr.iter().filter(|w| w.species == Species::STyphimurium).cloned().collect();
        assert_eq!(ClassCounts::of(&ecoli), ClassCounts { positives: 7, negatives: 14 });
        assert_eq!(ClassCounts::of(&st), ClassCounts { positives: 2, negatives: 21 });
    }

    #[test]
    fn missing_class_is_an_error() {
        assert!(split_train_independent(&windows(Species::EColi, 0, 10), 0.7, 1).is_err());
        assert!(split_train_independent(&windows(Species::EColi, 10, 0), 0.7, 1).is_err());
        assert!(split_train_independent(&[], 0.7, 1).is_err());
    }
}
