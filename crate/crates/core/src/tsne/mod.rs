//! Exact t-SNE for projecting feature vectors to two dimensions.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rand_distr::{Distribution, Normal};

use crate::corpus::{Label, Origin};
use crate::error::{Error, Result};
use crate::model::FeatureVector;
use crate::rng::{stream, substream};
use crate::scalar::Scalar;
use crate::textfmt::Section;

/// Entropy tolerance (nats) for the bandwidth search.
pub const ENTROPY_TOLERANCE: f64 = 1e-5;
pub const MAX_SEARCH_STEPS: usize = 50;
const MIN_GAIN: f64 = 0.01;
const P_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub exaggeration: f64,
    pub exaggeration_iters: usize,
    pub momentum: f64,
    pub final_momentum: f64,
    /// Standard deviation of the Gaussian initialisation.
    pub init_std: f64,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            exaggeration: 12.0,
            exaggeration_iters: 250,
            momentum: 0.5,
            final_momentum: 0.8,
            init_std: 1e-4,
            seed: 0,
        }
    }
}

impl TsneConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.perplexity >= 1.0) {
            return Err(Error::Config(format!("perplexity must be at least 1, got {}", self.perplexity)));
        }
        if self.iterations < 250 || self.iterations <= self.exaggeration_iters {
            return Err(Error::Config(format!(
                "iterations ({}) must be at least 250 and exceed the exaggeration phase ({})",
                self.iterations, self.exaggeration_iters
            )));
        }
        if !(self.learning_rate > 0.0) || !(self.exaggeration >= 1.0) || !(self.init_std > 0.0) {
            return Err(Error::Config("invalid t-SNE step settings".into()));
        }
        if (n as f64) < 3.0 * self.perplexity + 1.0 {
            return Err(Error::data(format!("{n} points are too few for perplexity {}", self.perplexity)));
        }
        Ok(())
    }

    /// Largest perplexity valid for `n` points, capped at the configured one.
    pub fn fitted_perplexity(&self, n: usize) -> f64 {
        self.perplexity.min((n as f64 - 1.0) / 3.0)
    }

    pub fn to_section(&self, name: &str) -> Section {
        let mut s = Section::new(name);
        s.set("perplexity", self.perplexity)
            .set("iterations", self.iterations)
            .set("learning_rate", self.learning_rate)
            .set("exaggeration", self.exaggeration)
            .set("exaggeration_iters", self.exaggeration_iters)
            .set("momentum", self.momentum)
            .set("final_momentum", self.final_momentum)
            .set("init_std", self.init_std)
            .set("seed", self.seed);
        s
    }

    pub fn apply_section(&mut self, section: &Section) -> Result<()> {
        for (key, _) in &section.entries {
            match key.as_str() {
                "perplexity" => self.perplexity = section.parse_required(key)?,
                "iterations" => self.iterations = section.parse_required(key)?,
                "learning_rate" => self.learning_rate = section.parse_required(key)?,
                "exaggeration" => self.exaggeration = section.parse_required(key)?,
                "exaggeration_iters" => self.exaggeration_iters = section.parse_required(key)?,
                "momentum" => self.momentum = section.parse_required(key)?,
                "final_momentum" => self.final_momentum = section.parse_required(key)?,
                "init_std" => self.init_std = section.parse_required(key)?,
                "seed" => self.seed = section.parse_required(key)?,
                // the split to embed is chosen by the pipeline
                "split" => {}
                other => return Err(Error::Config(format!("[{}] unknown key `{other}`", section.name))),
            }
        }
        Ok(())
    }
}

/// Row-stochastic conditional affinities with the bandwidth found per point.
#[derive(Debug, Clone)]
pub struct Affinities<S> {
    pub n: usize,
    /// `p[i*n + j]` = p(j | i).
    pub conditional: Vec<S>,
    pub beta: Vec<S>,
    pub entropy: Vec<S>,
}

fn squared_distances<S: Scalar>(x: &[&[S]]) -> Vec<S> {
    let n = x.len();
    let mut d = vec![S::zero(); n * n];
    for i in 0..n {
        for j in i + 1..n {
            let s = x[i].iter().zip(x[j]).fold(S::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
            d[i * n + j] = s;
            d[j * n + i] = s;
        }
    }
    d
}

/// Binary search on the Gaussian precision of each point until the entropy
/// of p(·|i) matches ln(perplexity).
pub fn calibrate_affinities<S: Scalar>(x: &[&[S]], perplexity: f64) -> Affinities<S> {
    let n = x.len();
    let dist = squared_distances(x);
    let target = S::lit(perplexity.ln());
    let tol = S::lit(ENTROPY_TOLERANCE);
    let mut conditional = vec![S::zero(); n * n];
    let mut betas = vec![S::one(); n];
    let mut entropies = vec![S::zero(); n];
    let mut row = vec![S::zero(); n];
    for i in 0..n {
        let d = &dist[i * n..(i + 1) * n];
        // shift by the nearest neighbour distance so exp() never underflows to all-zero
        let dmin = (0..n).filter(|&j| j != i).map(|j| d[j]).fold(S::infinity(), S::min);
        let eval = |beta: S, row: &mut [S]| -> S {
            let mut sum = S::zero();
            let mut wsum = S::zero();
            for j in 0..n {
                let v = if j == i { S::zero() } else { (-(d[j] - dmin) * beta).exp() };
                row[j] = v;
                sum += v;
                wsum += (d[j] - dmin) * v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
            sum.ln() + beta * wsum / sum
        };
        let (mut lo, mut hi) = (S::zero(), S::infinity());
        let mut beta = S::one();
        let mut h = eval(beta, &mut row);
        for _ in 0..MAX_SEARCH_STEPS {
            let diff = h - target;
            if diff.abs() <= tol {
                break;
            }
            if diff > S::zero() {
                lo = beta;
                beta = if hi.is_infinite() { beta * S::lit(2.0) } else { (beta + hi) / S::lit(2.0) };
            } else {
                hi = beta;
                beta = (beta + lo) / S::lit(2.0);
            }
            h = eval(beta, &mut row);
        }
        conditional[i * n..(i + 1) * n].copy_from_slice(&row);
        betas[i] = beta;
        entropies[i] = h;
    }
    Affinities { n, conditional, beta: betas, entropy: entropies }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsneResult<S> {
    pub points: Vec<[S; 2]>,
    /// KL divergence of the embedding before each iteration, then the final value.
    pub kl_trace: Vec<f64>,
    pub exaggeration_iters: usize,
}

impl<S: Scalar> TsneResult<S> {
    pub fn final_kl(&self) -> f64 {
        *self.kl_trace.last().expect("trace is never empty")
    }

    /// KL of the layout at the end of the exaggeration phase.
    pub fn post_exaggeration_kl(&self) -> f64 {
        self.kl_trace[self.exaggeration_iters]
    }
}

fn canonical_order<S: Scalar>(x: &[&[S]]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| {
        x[a].iter().zip(x[b]).map(|(u, v)| u.total_cmp(v)).find(|o| *o != Ordering::Equal).unwrap_or(Ordering::Equal)
    });
    idx
}

/// Embed rows into 2-D. The result is independent of row order up to the
/// same permutation.
pub fn tsne<S: Scalar, R: AsRef<[S]>>(rows: &[R], config: &TsneConfig) -> Result<TsneResult<S>> {
    let n = rows.len();
    config.validate(n)?;
    let raw: Vec<&[S]> = rows.iter().map(|r| r.as_ref()).collect();
    let d = raw[0].len();
    if raw.iter().any(|r| r.len() != d) {
        return Err(Error::Shape("t-SNE rows differ in length".into()));
    }
    if raw.iter().any(|r| r.iter().any(|v| !v.is_finite())) {
        return Err(Error::data("t-SNE input contains non-finite features"));
    }
    let order = canonical_order(&raw);
    let x: Vec<&[S]> = order.iter().map(|&i| raw[i]).collect();

    let aff = calibrate_affinities(&x, config.perplexity);
    let floor = S::lit(P_FLOOR);
    let denom = S::lit(2.0 * n as f64);
    let mut p = vec![S::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] = ((aff.conditional[i * n + j] + aff.conditional[j * n + i]) / denom).max(floor);
            }
        }
    }

    let mut rng = substream(config.seed, stream::TSNE);
    let normal = Normal::new(0.0, config.init_std).map_err(|e| Error::Config(e.to_string()))?;
    let mut y: Vec<[S; 2]> = (0..n).map(|_| [S::lit(normal.sample(&mut rng)), S::lit(normal.sample(&mut rng))]).collect();
    let mut update = vec![[S::zero(); 2]; n];
    let mut gains = vec![[S::one(); 2]; n];
    let mut num = vec![S::zero(); n * n];
    let mut trace = Vec::with_capacity(config.iterations + 1);
    let lr = S::lit(config.learning_rate);
    let four = S::lit(4.0);

    for it in 0..config.iterations {
        let z = student_kernel(&y, &mut num);
        trace.push(kl(&p, &num, z));
        let exag = if it < config.exaggeration_iters { S::lit(config.exaggeration) } else { S::one() };
        let momentum = S::lit(if it < config.exaggeration_iters { config.momentum } else { config.final_momentum });
        for i in 0..n {
            let mut g = [S::zero(); 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = num[i * n + j];
                let coef = (exag * p[i * n + j] - w / z) * w;
                g[0] += coef * (y[i][0] - y[j][0]);
                g[1] += coef * (y[i][1] - y[j][1]);
            }
            for k in 0..2 {
                let grad = four * g[k];
                let same_sign = (grad > S::zero()) == (update[i][k] > S::zero());
                gains[i][k] = if same_sign { gains[i][k] * S::lit(0.8) } else { gains[i][k] + S::lit(0.2) };
                gains[i][k] = gains[i][k].max(S::lit(MIN_GAIN));
                update[i][k] = momentum * update[i][k] - lr * gains[i][k] * grad;
            }
        }
        for (yi, u) in y.iter_mut().zip(&update) {
            yi[0] += u[0];
            yi[1] += u[1];
        }
        let inv = S::one() / S::lit(n as f64);
        let mean = y.iter().fold([S::zero(); 2], |m, v| [m[0] + v[0] * inv, m[1] + v[1] * inv]);
        for yi in &mut y {
            yi[0] -= mean[0];
            yi[1] -= mean[1];
        }
        if !y.iter().all(|v| v[0].is_finite() && v[1].is_finite()) {
            return Err(Error::Numerical(format!("t-SNE diverged at iteration {it}")));
        }
    }
    let z = student_kernel(&y, &mut num);
    trace.push(kl(&p, &num, z));

    let mut points = vec![[S::zero(); 2]; n];
    for (k, &i) in order.iter().enumerate() {
        points[i] = y[k];
    }
    Ok(TsneResult { points, kl_trace: trace, exaggeration_iters: config.exaggeration_iters })
}

/// Fills `num` with 1/(1+|yi-yj|²) and returns the normaliser.
fn student_kernel<S: Scalar>(y: &[[S; 2]], num: &mut [S]) -> S {
    let n = y.len();
    let mut z = S::zero();
    for i in 0..n {
        num[i * n + i] = S::zero();
        for j in i + 1..n {
            let dx = y[i][0] - y[j][0];
            let dy = y[i][1] - y[j][1];
            let w = S::one() / (S::one() + dx * dx + dy * dy);
            num[i * n + j] = w;
            num[j * n + i] = w;
            z += w + w;
        }
    }
    z
}

fn kl<S: Scalar>(p: &[S], num: &[S], z: S) -> f64 {
    let mut total = 0.0;
    let floor = S::lit(P_FLOOR);
    for (pij, w) in p.iter().zip(num) {
        if *pij > S::zero() {
            let q = (*w / z).max(floor);
            total += (*pij * (*pij / q).ln()).as_f64();
        }
    }
    total
}

/// A 2-D point set carrying the labels and origins of its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding2D<S> {
    pub points: Vec<[S; 2]>,
    pub labels: Vec<Label>,
    pub origins: Vec<Origin>,
    pub final_kl: f64,
    pub kl_trace: Vec<f64>,
    pub config: TsneConfig,
}

pub fn tsne_embed<S: Scalar>(features: &[FeatureVector<S>], config: &TsneConfig) -> Result<Embedding2D<S>> {
    let rows: Vec<&[S]> = features.iter().map(|f| f.values.as_slice()).collect();
    let r = tsne(&rows, config)?;
    Ok(Embedding2D {
        final_kl: r.final_kl(),
        points: r.points,
        labels: features.iter().map(|f| f.label).collect(),
        origins: features.iter().map(|f| f.origin.clone()).collect(),
        kl_trace: r.kl_trace,
        config: config.clone(),
    })
}

/// `# key=value ...` metadata line, then `origin,label,x,y`.
pub fn embedding_csv<S: Scalar>(e: &Embedding2D<S>) -> String {
    let c = &e.config;
    let mut out = format!(
        "# perplexity={} iterations={} learning_rate={} exaggeration={} exaggeration_iters={} seed={} final_kl={}\n",
        c.perplexity, c.iterations, c.learning_rate, c.exaggeration, c.exaggeration_iters, c.seed, e.final_kl
    );
    out.push_str("origin,label,x,y\n");
    for ((p, l), o) in e.points.iter().zip(&e.labels).zip(&e.origins) {
        let _ = writeln!(out, "{o},{l},{},{}", p[0], p[1]);
    }
    out
}
