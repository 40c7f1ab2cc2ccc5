//! Shared oracles and generators for the integration suites.
#![allow(dead_code)]

use kace::corpus::{Label, Origin, PeptideWindow, Species, AMINO_ACIDS};
use kace::model::{forward_with_masks, DropoutMasks, ForwardCache, LstmParameters, LstmState};
use kace::rng::Rng;
use rand::Rng as _;

/// Denominator floor for relative gradient errors.
pub const GRAD_FLOOR: f64 = 1e-7;

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(GRAD_FLOOR)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Scalar-by-scalar evaluation of the cell equations, written without the
/// library's matrix helpers.
pub fn scalar_cell_oracle(x: &[f64], prev: &LstmState<f64>, p: &LstmParameters<f64>) -> LstmState<f64> {
    let hidden = prev.h.len();
    let pre = |gate: usize, j: usize| -> f64 {
        let mut s = 0.0;
        for k in 0..x.len() {
            s += p.w[gate].get(j, k) * x[k];
        }
        for k in 0..hidden {
            s += p.u[gate].get(j, k) * prev.h[k];
        }
        if let Some(b) = &p.b {
            s += b[gate].get(j, 0);
        }
        s
    };
    let mut h = vec![0.0; hidden];
    let mut c = vec![0.0; hidden];
    for j in 0..hidden {
        let cand = pre(0, j).tanh();
        let i = sigmoid(pre(1, j));
        let f = sigmoid(pre(2, j));
        let o = sigmoid(pre(3, j));
        c[j] = i * cand + f * prev.c[j];
        h[j] = o * c[j].tanh();
    }
    LstmState { h, c }
}

/// Mean BCE of a batch replayed with fixed masks (no clipping active at the
/// magnitudes used in the checks).
pub fn batch_loss(p: &LstmParameters<f64>, caches: &[ForwardCache<f64>], labels: &[u8]) -> f64 {
    let mut s = 0.0;
    for (c, &y) in caches.iter().zip(labels) {
        let out = forward_with_masks(&c.tokens, p, c.masks.clone()).unwrap();
        let q = out.probability;
        s -= if y == 1 { q.ln() } else { (1.0 - q).ln() };
    }
    s / labels.len() as f64
}

pub struct FdReport {
    pub checked: usize,
    pub worst: f64,
    pub worst_at: String,
}

/// Central differences on every parameter entry.
pub fn finite_difference_check(
    p: &LstmParameters<f64>,
    caches: &[ForwardCache<f64>],
    labels: &[u8],
    analytic: &LstmParameters<f64>,
    step: f64,
) -> FdReport {
    let mut work = p.clone();
    let names: Vec<String> = p.tensors().into_iter().map(|(n, _)| n).collect();
    let analytic: Vec<Vec<f64>> = analytic.tensors().into_iter().map(|(_, m)| m.as_slice().to_vec()).collect();
    let mut report = FdReport { checked: 0, worst: 0.0, worst_at: String::new() };
    for t in 0..names.len() {
        let len = analytic[t].len();
        for e in 0..len {
            let orig = work.tensors_mut()[t].as_slice()[e];
            work.tensors_mut()[t].as_mut_slice()[e] = orig + step;
            let up = batch_loss(&work, caches, labels);
            work.tensors_mut()[t].as_mut_slice()[e] = orig - step;
            let down = batch_loss(&work, caches, labels);
            work.tensors_mut()[t].as_mut_slice()[e] = orig;
            let numeric = (up - down) / (2.0 * step);
            let err = relative_error(analytic[t][e], numeric);
            report.checked += 1;
            if err > report.worst {
                report.worst = err;
                report.worst_at = format!("{}[{e}] analytic {} numeric {numeric}", names[t], analytic[t][e]);
            }
        }
    }
    report
}

/// Random batch of token sequences with train-mode dropout masks.
pub fn random_batch(
    p: &LstmParameters<f64>,
    rng: &mut Rng,
    batch: usize,
    seq_len: usize,
    dropout: f64,
) -> (Vec<ForwardCache<f64>>, Vec<u8>) {
    let mut caches = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..batch {
        let tokens: Vec<usize> = (0..seq_len).map(|_| rng.random_range(0..p.vocab_size())).collect();
        let masks = DropoutMasks::draw(dropout, seq_len, p.embed_dim(), p.hidden_dim(), rng);
        caches.push(forward_with_masks(&tokens, p, masks).unwrap().cache);
        labels.push(rng.random_range(0..2u8));
    }
    (caches, labels)
}

pub const MOTIF: &str = "WHCMY";

fn random_residue(rng: &mut Rng) -> char {
    let aa = AMINO_ACIDS.as_bytes();
    aa[rng.random_range(0..aa.len())] as char
}

/// 41-residue windows; positives carry `MOTIF` on both sides of the centre K.
pub fn motif_windows(rng: &mut Rng, positives: usize, negatives: usize) -> Vec<PeptideWindow> {
    motif_windows_of(rng, positives, negatives, 41)
}

/// Motif windows of any odd length of at least 11.
pub fn motif_windows_of(rng: &mut Rng, positives: usize, negatives: usize, len: usize) -> Vec<PeptideWindow> {
    motif_windows_with(rng, positives, negatives, len, MOTIF)
}

/// Windows whose positives carry `motif` (five residues) on both sides of K.
pub fn motif_windows_with(
    rng: &mut Rng,
    positives: usize,
    negatives: usize,
    len: usize,
    motif: &str,
) -> Vec<PeptideWindow> {
    let centre = len / 2;
    let mut out = Vec::new();
    for i in 0..positives + negatives {
        let positive = i < positives;
        let mut seq: Vec<char> = (0..len).map(|_| random_residue(rng)).collect();
        seq[centre] = 'K';
        if positive {
            for (k, m) in motif.chars().enumerate() {
                seq[centre - 5 + k] = m;
                seq[centre + 1 + k] = m;
            }
        } else {
            let left: String = seq[centre - 5..centre].iter().collect();
            if left == motif {
                seq[centre - 5] = 'A';
            }
        }
        out.push(PeptideWindow {
            residues: seq.into_iter().collect(),
            label: Label::from_bool(positive),
            species: Species::STyphimurium,
            origin: Origin { protein_id: format!("m{i}"), position: centre + 1 },
        });
    }
    out
}

/// 1-D data labelled by the sign of feature 0, with no samples inside
/// `(-margin, margin)`.
pub fn separable_1d(rng: &mut Rng, n: usize, margin: f64) -> (Vec<Vec<f64>>, Vec<u8>) {
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let positive = i % 2 == 0;
        let mag = rng.random_range(margin..1.0);
        rows.push(vec![if positive { mag } else { -mag }]);
        labels.push(u8::from(positive));
    }
    (rows, labels)
}

/// Two unit-variance Gaussians in `dim` dimensions whose means differ by
/// `shift` on every axis. Class 1 has probability `positive_rate`.
pub fn two_gaussians(rng: &mut Rng, n: usize, dim: usize, shift: f64, positive_rate: f64) -> (Vec<Vec<f64>>, Vec<u8>) {
    use rand_distr::{Distribution, StandardNormal};
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let y = u8::from(rng.random::<f64>() < positive_rate);
        let mu = if y == 1 { shift } else { 0.0 };
        rows.push((0..dim).map(|_| mu + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)).collect());
        labels.push(y);
    }
    (rows, labels)
}

pub fn accuracy(probs: &[f64], labels: &[u8]) -> f64 {
    let hits = probs.iter().zip(labels).filter(|(p, &y)| u8::from(**p >= 0.5) == y).count();
    hits as f64 / labels.len() as f64
}

pub fn majority_baseline(labels: &[u8]) -> f64 {
    let pos = labels.iter().filter(|&&y| y == 1).count() as f64 / labels.len() as f64;
    pos.max(1.0 - pos)
}

/// Per-sample tally followed by the textbook formulas. Zero denominators give 0.
pub fn brute_force_metrics(scores: &[f64], labels: &[u8]) -> [f64; 6] {
    let (mut tp, mut tn, mut fp, mut fn_) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..scores.len() {
        let called = scores[i] >= 0.5;
        let actual = labels[i] == 1;
        if called && actual {
            tp += 1.0;
        } else if called {
            fp += 1.0;
        } else if actual {
            fn_ += 1.0;
        } else {
            tn += 1.0;
        }
    }
    let safe = |n: f64, d: f64| if d == 0.0 { 0.0 } else { n / d };
    let ca = (tp + tn) / (tp + tn + fp + fn_);
    let sn = safe(tp, tp + fn_);
    let sp = safe(tn, fp + tn);
    let pr = safe(tp, tp + fp);
    let f1 = safe(2.0 * tp, 2.0 * tp + fp + fn_);
    let mcc = safe(tp * tn - fp * fn_, ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt());
    [ca, sn, sp, pr, f1, mcc]
}

/// Rank-sum AUC with mid-ranks for ties.
pub fn mann_whitney_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = mid;
        }
        i = j + 1;
    }
    let p = labels.iter().filter(|&&y| y == 1).count() as f64;
    let q = n as f64 - p;
    let r: f64 = (0..n).filter(|&i| labels[i] == 1).map(|i| ranks[i]).sum();
    (r - p * (p + 1.0) / 2.0) / (p * q)
}

/// Scores drawn from a small grid so ties are common, with both classes present.
pub fn random_scored_set(rng: &mut Rng, n: usize) -> (Vec<f64>, Vec<u8>) {
    loop {
        let grid = rng.random_range(2..20) as f64;
        let scores: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * grid).floor() / grid).collect();
        let rate = rng.random_range(0.1..0.9);
        let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < rate)).collect();
        if labels.contains(&0) && labels.contains(&1) {
            return (scores, labels);
        }
    }
}

/// Two isotropic unit-variance clusters whose centres are `separation` apart.
pub fn two_clusters(rng: &mut Rng, per_cluster: usize, dim: usize, separation: f64) -> Vec<Vec<f64>> {
    use rand_distr::{Distribution, StandardNormal};
    let offset = separation / (dim as f64).sqrt();
    let mut rows = Vec::with_capacity(2 * per_cluster);
    for c in 0..2 {
        for _ in 0..per_cluster {
            rows.push(
                (0..dim)
                    .map(|_| c as f64 * offset + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
                    .collect(),
            );
        }
    }
    rows
}

/// Centroid distance divided by mean distance-to-own-centroid.
pub fn separation_ratio(points: &[[f64; 2]], per_cluster: usize) -> f64 {
    let centroid = |ps: &[[f64; 2]]| {
        let n = ps.len() as f64;
        [ps.iter().map(|p| p[0]).sum::<f64>() / n, ps.iter().map(|p| p[1]).sum::<f64>() / n]
    };
    let dist = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let (a, b) = points.split_at(per_cluster);
    let (ca, cb) = (centroid(a), centroid(b));
    let radius =
        (a.iter().map(|p| dist(*p, ca)).sum::<f64>() + b.iter().map(|p| dist(*p, cb)).sum::<f64>()) / points.len() as f64;
    dist(ca, cb) / radius
}

/// FASTA and annotation text for a motif corpus: one protein per site, the
/// annotated lysine in the middle, `flank` extra random residues on each side
/// of the window so that redundancy reduction sees mostly unrelated proteins.
pub fn motif_corpus(rng: &mut Rng, plan: &[(Species, usize, usize)], flank: usize) -> (String, String) {
    let mut fasta = String::new();
    let mut ann = String::from("protein\tposition\tlabel\n");
    for &(sp, pos, neg) in plan {
        for (i, w) in motif_windows(rng, pos, neg).into_iter().enumerate() {
            let left: String = (0..flank).map(|_| random_residue(rng)).collect();
            let right: String = (0..flank).map(|_| random_residue(rng)).collect();
            let id = format!("{}_{i:04}", sp.slug());
            fasta.push_str(&format!(">{id} {}\n{left}{}{right}\n", sp.slug(), w.residues));
            ann.push_str(&format!("{id}\t{}\t{}\n", flank + 21, w.label.as_u8()));
        }
    }
    (fasta, ann)
}

/// Write a motif corpus and a run configuration into `dir`; returns the
/// configuration path. `extra` is appended to the generated config text.
pub fn write_run(
    dir: &std::path::Path,
    seed: u64,
    plan: &[(Species, usize, usize)],
    flank: usize,
    extra: &str,
) -> std::path::PathBuf {
    let mut rng = kace::rng::seeded(seed);
    let (fasta, ann) = motif_corpus(&mut rng, plan, flank);
    std::fs::write(dir.join("proteins.fasta"), fasta).unwrap();
    std::fs::write(dir.join("sites.tsv"), ann).unwrap();
    let config = format!("[paths]\nfasta = proteins.fasta\nannotations = sites.tsv\nout = out\n{extra}");
    let path = dir.join("run.conf");
    std::fs::write(&path, config).unwrap();
    path
}

/// Settings small enough for a full pipeline pass in a few seconds.
pub const TINY_RUN: &str = "\
[model]
embed_dim = 6
hidden_dim = 8
max_epochs = 3
batch_size = 16
[ensemble.RF]
n_trees = 8
[ensemble.ERT]
n_trees = 8
[ensemble.AB]
n_trees = 8
[ensemble.GB]
n_trees = 8
[ensemble.XGB]
n_trees = 8
[tsne]
iterations = 260
exaggeration_iters = 100
";
