//! Greedy top-down growth shared by all five ensembles.

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::tree::{Tree, TreeNode};
use crate::rng::Rng;
use crate::scalar::Scalar;

/// Split scoring and leaf values.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Criterion<S> {
    /// `a` = weight·y, `b` = weight. Leaf = weighted positive fraction.
    Gini,
    /// `a` = residual, `b` = 1, `c` = hessian. Leaf = one Newton step Σr/Σh.
    SquaredError,
    /// `a` = gradient, `b` = hessian. Leaf = -G/(H+λ).
    SecondOrder { lambda: S, gamma: S },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Thresholds {
    /// Midpoints between consecutive distinct sorted values.
    Midpoints,
    /// One uniform draw in [min, max) per candidate feature.
    Random,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams<S> {
    pub criterion: Criterion<S>,
    pub thresholds: Thresholds,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features examined per node; `None` = all.
    pub max_features: Option<usize>,
    /// Multiplier applied to leaf values (booster shrinkage).
    pub leaf_scale: S,
}

/// Per-sample statistics summed by the criterion.
pub(crate) struct Stats<S> {
    pub a: Vec<S>,
    pub b: Vec<S>,
    pub c: Vec<S>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Sums<S> {
    a: S,
    b: S,
    c: S,
}

impl<S: Scalar> Sums<S> {
    fn zero() -> Self {
        Sums { a: S::zero(), b: S::zero(), c: S::zero() }
    }

    fn add(&mut self, st: &Stats<S>, i: usize) {
        self.a += st.a[i];
        self.b += st.b[i];
        self.c += st.c[i];
    }

    fn minus(&self, o: &Self) -> Self {
        Sums { a: self.a - o.a, b: self.b - o.b, c: self.c - o.c }
    }
}

/// 2p(1-p) for the weighted positive fraction p.
fn gini<S: Scalar>(s: &Sums<S>) -> S {
    if s.b <= S::zero() {
        return S::zero();
    }
    let p = s.a / s.b;
    S::lit(2.0) * p * (S::one() - p)
}

/// XGBoost similarity score (Σg)² / (Σh + λ).
pub fn similarity_score<S: Scalar>(grad_sum: S, hess_sum: S, lambda: S) -> S {
    grad_sum * grad_sum / (hess_sum + lambda)
}

/// ½(sim_L + sim_R − sim_parent) − γ.
pub fn split_gain<S: Scalar>(left: (S, S), right: (S, S), lambda: S, gamma: S) -> S {
    let parent = similarity_score(left.0 + right.0, left.1 + right.1, lambda);
    let l = similarity_score(left.0, left.1, lambda);
    let r = similarity_score(right.0, right.1, lambda);
    S::lit(0.5) * (l + r - parent) - gamma
}

impl<S: Scalar> Criterion<S> {
    fn gain(&self, left: &Sums<S>, right: &Sums<S>, parent: &Sums<S>) -> S {
        match *self {
            Criterion::Gini => parent.b * gini(parent) - left.b * gini(left) - right.b * gini(right),
            Criterion::SquaredError => {
                left.a * left.a / left.b + right.a * right.a / right.b - parent.a * parent.a / parent.b
            }
            Criterion::SecondOrder { lambda, gamma } => split_gain((left.a, left.b), (right.a, right.b), lambda, gamma),
        }
    }

    fn leaf(&self, s: &Sums<S>) -> S {
        match *self {
            Criterion::Gini => {
                if s.b > S::zero() {
                    s.a / s.b
                } else {
                    S::zero()
                }
            }
            Criterion::SquaredError => s.a / s.c.max(S::lit(1e-12)),
            Criterion::SecondOrder { lambda, .. } => -s.a / (s.b + lambda),
        }
    }

    fn pure(&self, s: &Sums<S>) -> bool {
        match self {
            Criterion::Gini => s.a <= S::zero() || s.a >= s.b,
            _ => false,
        }
    }
}

struct Best<S> {
    gain: S,
    feature: usize,
    threshold: S,
}

pub(crate) struct Grower<'a, S> {
    pub features: &'a [&'a [S]],
    pub stats: &'a Stats<S>,
    pub params: GrowParams<S>,
    pub n_features: usize,
}

impl<'a, S: Scalar> Grower<'a, S> {
    pub fn grow(&self, samples: Vec<usize>, rng: &mut Rng) -> Tree<S> {
        let mut nodes = Vec::new();
        self.grow_node(samples, 0, rng, &mut nodes);
        Tree::from_nodes(nodes)
    }

    fn totals(&self, samples: &[usize]) -> Sums<S> {
        let mut s = Sums::zero();
        for &i in samples {
            s.add(self.stats, i);
        }
        s
    }

    fn is_constant(&self, samples: &[usize], f: usize) -> bool {
        let first = self.features[samples[0]][f];
        samples.iter().all(|&i| self.features[i][f] == first)
    }

    fn candidate_features(&self, samples: &[usize], rng: &mut Rng) -> Vec<usize> {
        match self.params.max_features {
            None => (0..self.n_features).collect(),
            Some(m) if m >= self.n_features => (0..self.n_features).collect(),
            Some(m) => {
                let mut all: Vec<usize> = (0..self.n_features).collect();
                all.shuffle(rng);
                // keep drawing past constant features until m usable ones are found
                let mut chosen = Vec::with_capacity(m);
                for f in all {
                    if chosen.len() == m {
                        break;
                    }
                    if !self.is_constant(samples, f) {
                        chosen.push(f);
                    }
                }
                chosen.sort_unstable();
                chosen
            }
        }
    }

    fn consider(&self, best: &mut Option<Best<S>>, gain: S, feature: usize, threshold: S) {
        if !gain.is_finite() {
            return;
        }
        // strict: ties keep the earlier (lower feature, lower threshold) candidate
        if best.as_ref().is_none_or(|b| gain > b.gain) {
            *best = Some(Best { gain, feature, threshold });
        }
    }

    fn best_split(&self, samples: &[usize], total: &Sums<S>, rng: &mut Rng) -> Option<Best<S>> {
        let mut best: Option<Best<S>> = None;
        let crit = self.params.criterion;
        let mut order: Vec<usize> = samples.to_vec();
        for f in self.candidate_features(samples, rng) {
            match self.params.thresholds {
                Thresholds::Midpoints => {
                    order.sort_by(|&i, &j| self.features[i][f].total_cmp(&self.features[j][f]));
                    let mut left = Sums::zero();
                    for k in 0..order.len() - 1 {
                        left.add(self.stats, order[k]);
                        let lo = self.features[order[k]][f];
                        let hi = self.features[order[k + 1]][f];
                        if lo == hi {
                            continue;
                        }
                        let mut thr = lo + (hi - lo) / S::lit(2.0);
                        if thr >= hi {
                            thr = lo;
                        }
                        let right = total.minus(&left);
                        self.consider(&mut best, crit.gain(&left, &right, total), f, thr);
                    }
                }
                Thresholds::Random => {
                    let (mut lo, mut hi) = (S::infinity(), S::neg_infinity());
                    for &i in samples {
                        let v = self.features[i][f];
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                    if !(lo < hi) {
                        continue;
                    }
                    let draw = rng.random_range(lo.as_f64()..hi.as_f64());
                    let mut thr = S::lit(draw);
                    if thr >= hi || thr < lo {
                        thr = lo;
                    }
                    let mut left = Sums::zero();
                    for &i in samples {
                        if self.features[i][f] <= thr {
                            left.add(self.stats, i);
                        }
                    }
                    let right = total.minus(&left);
                    self.consider(&mut best, crit.gain(&left, &right, total), f, thr);
                }
            }
        }
        best
    }

    fn grow_node(&self, samples: Vec<usize>, depth: usize, rng: &mut Rng, nodes: &mut Vec<TreeNode<S>>) -> usize {
        let idx = nodes.len();
        let total = self.totals(&samples);
        let crit = self.params.criterion;
        let leaf = TreeNode::Leaf { value: crit.leaf(&total) * self.params.leaf_scale };
        nodes.push(leaf.clone());
        let depth_exhausted = self.params.max_depth.is_some_and(|d| depth >= d);
        if depth_exhausted || samples.len() < self.params.min_samples_split.max(2) || crit.pure(&total) {
            return idx;
        }
        let Some(best) = self.best_split(&samples, &total, rng) else {
            return idx;
        };
        if !(best.gain > S::zero()) {
            return idx;
        }
        let (l, r): (Vec<usize>, Vec<usize>) =
            samples.iter().partition(|&&i| self.features[i][best.feature] <= best.threshold);
        if l.is_empty() || r.is_empty() {
            return idx;
        }
        let left = self.grow_node(l, depth + 1, rng, nodes);
        let right = self.grow_node(r, depth + 1, rng, nodes);
        nodes[idx] = TreeNode::Split { feature: best.feature, threshold: best.threshold, left, right };
        idx
    }
}
