use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{stream, substream};

/// Assignment of every sample index to one of `k` test folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.assignments[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

fn check(n: usize, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::Config(format!("cross-validation needs k >= 2, got {k}")));
    }
    if n < k {
        return Err(Error::data(format!("cannot split {n} samples into {k} folds")));
    }
    Ok(())
}

/// Seeded shuffle, then round-robin: fold sizes differ by at most one.
pub fn make_fold_plan(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    check(n, k)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut substream(seed, stream::FOLDS));
    let mut assignments = vec![0; n];
    for (j, &i) in order.iter().enumerate() {
        assignments[i] = j % k;
    }
    Ok(FoldPlan { k, seed, assignments })
}

/// Like [`make_fold_plan`] but deals each class out separately, continuing
/// the round-robin counter so overall sizes still differ by at most one.
pub fn make_stratified_fold_plan(labels: &[u8], k: usize, seed: u64) -> Result<FoldPlan> {
    check(labels.len(), k)?;
    let mut rng = substream(seed, stream::FOLDS);
    let mut assignments = vec![0; labels.len()];
    let mut next = 0;
    for class in [1u8, 0] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignments[i] = next % k;
            next += 1;
        }
    }
    Ok(FoldPlan { k, seed, assignments })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn remainder_spreads_over_first_folds() {
        let p = make_fold_plan(103, 10, 4).unwrap();
        let mut sizes = p.fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, [10, 10, 10, 10, 10, 10, 10, 11, 11, 11]);
        assert_eq!(make_fold_plan(10, 10, 0).unwrap().fold_sizes(), vec![1; 10]);
        assert!(make_fold_plan(4, 5, 0).is_err());
        assert!(make_fold_plan(4, 1, 0).is_err());
    }

    #[test]
    fn stratified_keeps_class_balance() {
        let labels: Vec<u8> = (0..100).map(|i| u8::from(i < 20)).collect();
        let p = make_stratified_fold_plan(&labels, 5, 1).unwrap();
        for f in 0..5 {
            let t = p.test_indices(f);
            assert_eq!(t.len(), 20);
            assert_eq!(t.iter().filter(|&&i| labels[i] == 1).count(), 4);
        }
    }
}
