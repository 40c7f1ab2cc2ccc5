//! Embedding → dropout → LSTM → dropout → dense sigmoid, forward and
//! backpropagation through time.

use rand::Rng as _;

use super::cell::{step_into, GateValues};
use super::params::{Gate, LstmParameters};
use super::tensor::axpy;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::Scalar;

/// Probability clip used by the loss.
pub const BCE_EPSILON: f64 = 1e-7;

pub enum Mode<'a> {
    /// Draw fresh inverted-dropout masks from the stream.
    Train(&'a mut Rng),
    Infer,
}

/// Inverted-dropout masks (entries are 0 or 1/(1-rate)).
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks<S> {
    /// seq_len × embed, applied to the embedded inputs
    pub input: Option<Vec<S>>,
    /// hidden, applied to the final hidden state
    pub feature: Option<Vec<S>>,
}

impl<S: Scalar> DropoutMasks<S> {
    pub fn none() -> Self {
        DropoutMasks { input: None, feature: None }
    }

    pub fn draw(rate: f64, seq_len: usize, embed: usize, hidden: usize, rng: &mut Rng) -> Self {
        if rate <= 0.0 {
            return Self::none();
        }
        let keep = S::lit(1.0 / (1.0 - rate));
        let mut draw_n = |n: usize| -> Vec<S> {
            (0..n).map(|_| if rng.random::<f64>() < rate { S::zero() } else { keep }).collect()
        };
        let input = draw_n(seq_len * embed);
        let feature = draw_n(hidden);
        DropoutMasks { input: Some(input), feature: Some(feature) }
    }
}

/// Everything the backward pass needs from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<S> {
    pub tokens: Vec<usize>,
    pub masks: DropoutMasks<S>,
    /// seq_len × embed, after dropout
    pub inputs: Vec<S>,
    /// per step
    pub gates: Vec<GateValues<S>>,
    /// (seq_len + 1) × hidden, row 0 is the zero initial state
    pub cells: Vec<S>,
    pub hiddens: Vec<S>,
    pub feature: Vec<S>,
    pub probability: S,
}

/// Result of a forward pass.
#[derive(Debug, Clone)]
pub struct Forward<S> {
    pub probability: S,
    /// Final hidden state after the second dropout (identity at inference).
    pub feature: Vec<S>,
    pub cache: ForwardCache<S>,
}

fn check_tokens<S: Scalar>(tokens: &[usize], params: &LstmParameters<S>, seq_len: usize) -> Result<()> {
    if tokens.len() != seq_len {
        return Err(Error::Shape(format!("sequence has {} tokens, expected {seq_len}", tokens.len())));
    }
    if let Some(&t) = tokens.iter().find(|&&t| t >= params.vocab_size()) {
        return Err(Error::Shape(format!("token {t} outside vocabulary of {}", params.vocab_size())));
    }
    Ok(())
}

/// Forward pass with explicit dropout masks (`None` = identity).
pub fn forward_with_masks<S: Scalar>(
    tokens: &[usize],
    params: &LstmParameters<S>,
    masks: DropoutMasks<S>,
) -> Result<Forward<S>> {
    let (embed, hidden, steps) = (params.embed_dim(), params.hidden_dim(), tokens.len());
    check_tokens(tokens, params, steps)?;
    if masks.input.as_ref().is_some_and(|m| m.len() != steps * embed)
        || masks.feature.as_ref().is_some_and(|m| m.len() != hidden)
    {
        return Err(Error::Shape("dropout mask does not match the network".into()));
    }
    let mut inputs = Vec::with_capacity(steps * embed);
    for (t, &tok) in tokens.iter().enumerate() {
        let row = params.embedding.row(tok);
        match &masks.input {
            Some(m) => inputs.extend(row.iter().zip(&m[t * embed..(t + 1) * embed]).map(|(x, k)| *x * *k)),
            None => inputs.extend_from_slice(row),
        }
    }
    let mut cells = vec![S::zero(); (steps + 1) * hidden];
    let mut hiddens = vec![S::zero(); (steps + 1) * hidden];
    let mut gates = Vec::with_capacity(steps);
    let mut pre = vec![S::zero(); 4 * hidden];
    for t in 0..steps {
        let mut g = GateValues::zeros(hidden);
        let (c_prev, c_next) = cells.split_at_mut((t + 1) * hidden);
        let (h_prev, h_next) = hiddens.split_at_mut((t + 1) * hidden);
        step_into(
            &inputs[t * embed..(t + 1) * embed],
            &h_prev[t * hidden..],
            &c_prev[t * hidden..],
            params,
            &mut pre,
            &mut g,
            &mut c_next[..hidden],
            &mut h_next[..hidden],
        );
        gates.push(g);
    }
    let last = &hiddens[steps * hidden..];
    let feature: Vec<S> = match &masks.feature {
        Some(m) => last.iter().zip(m).map(|(h, k)| *h * *k).collect(),
        None => last.to_vec(),
    };
    let logit = super::tensor::dot(params.dense_w.row(0), &feature) + params.dense_bias();
    let probability = logit.sigmoid();
    Ok(Forward {
        probability,
        feature: feature.clone(),
        cache: ForwardCache { tokens: tokens.to_vec(), masks, inputs, gates, cells, hiddens, feature, probability },
    })
}

/// Forward pass over `seq_len` tokens; dropout is active only in train mode.
pub fn forward_sequence<S: Scalar>(
    tokens: &[usize],
    params: &LstmParameters<S>,
    dropout_rate: f64,
    seq_len: usize,
    mode: Mode<'_>,
) -> Result<Forward<S>> {
    check_tokens(tokens, params, seq_len)?;
    let masks = match mode {
        Mode::Train(rng) => DropoutMasks::draw(dropout_rate, seq_len, params.embed_dim(), params.hidden_dim(), rng),
        Mode::Infer => DropoutMasks::none(),
    };
    forward_with_masks(tokens, params, masks)
}

/// Inference without keeping the per-step cache: (probability, feature).
pub fn infer<S: Scalar>(tokens: &[usize], params: &LstmParameters<S>, seq_len: usize) -> Result<(S, Vec<S>)> {
    check_tokens(tokens, params, seq_len)?;
    let hidden = params.hidden_dim();
    let (mut h, mut c) = (vec![S::zero(); hidden], vec![S::zero(); hidden]);
    let (mut h2, mut c2) = (h.clone(), c.clone());
    let mut pre = vec![S::zero(); 4 * hidden];
    let mut g = GateValues::zeros(hidden);
    for &tok in tokens {
        step_into(params.embedding.row(tok), &h, &c, params, &mut pre, &mut g, &mut c2, &mut h2);
        std::mem::swap(&mut h, &mut h2);
        std::mem::swap(&mut c, &mut c2);
    }
    let p = (super::tensor::dot(params.dense_w.row(0), &h) + params.dense_bias()).sigmoid();
    Ok((p, h))
}

fn check_labels(labels: &[u8]) -> Result<()> {
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::data("labels must be 0 or 1"));
    }
    Ok(())
}

/// Mean binary cross-entropy with probabilities clipped to [ε, 1-ε].
pub fn bce_loss<S: Scalar>(probabilities: &[S], labels: &[u8]) -> Result<S> {
    if probabilities.len() != labels.len() {
        return Err(Error::Shape(format!("{} probabilities, {} labels", probabilities.len(), labels.len())));
    }
    if probabilities.is_empty() {
        return Err(Error::data("empty batch"));
    }
    check_labels(labels)?;
    let eps = S::lit(BCE_EPSILON);
    let mut sum = S::zero();
    for (&p, &y) in probabilities.iter().zip(labels) {
        let p = p.max(eps).min(S::one() - eps);
        sum -= if y == 1 { p.ln() } else { (S::one() - p).ln() };
    }
    Ok(sum / S::lit(labels.len() as f64))
}

/// d(mean BCE)/d(logit) for one sample; zero where the clip is active.
fn logit_grad<S: Scalar>(p: S, y: u8, n: usize) -> S {
    let eps = S::lit(BCE_EPSILON);
    if p < eps || p > S::one() - eps {
        return S::zero();
    }
    (p - S::lit(y as f64)) / S::lit(n as f64)
}

/// Exact gradients of the mean BCE over `caches` with respect to every
/// parameter tensor.
pub fn backward_gradients<S: Scalar>(
    caches: &[ForwardCache<S>],
    labels: &[u8],
    params: &LstmParameters<S>,
) -> Result<LstmParameters<S>> {
    if caches.len() != labels.len() {
        return Err(Error::Shape(format!("{} caches, {} labels", caches.len(), labels.len())));
    }
    if caches.is_empty() {
        return Err(Error::data("empty batch"));
    }
    check_labels(labels)?;
    let mut grads = params.zeros_like();
    let (embed, hidden) = (params.embed_dim(), params.hidden_dim());
    let n = caches.len();

    let mut dh = vec![S::zero(); hidden];
    let mut dc = vec![S::zero(); hidden];
    let mut da = vec![S::zero(); 4 * hidden];
    let mut dx = vec![S::zero(); embed];
    let mut dh_prev = vec![S::zero(); hidden];

    for (cache, &y) in caches.iter().zip(labels) {
        let steps = cache.tokens.len();
        if cache.gates.len() != steps || cache.hiddens.len() != (steps + 1) * hidden || cache.feature.len() != hidden {
            return Err(Error::Shape("cache does not match the parameters".into()));
        }
        let dz = logit_grad(cache.probability, y, n);
        grads.dense_b.as_mut_slice()[0] += dz;
        axpy(dz, &cache.feature, grads.dense_w.row_mut(0));

        // through the feature dropout into h_T
        for j in 0..hidden {
            let mut g = dz * params.dense_w.get(0, j);
            if let Some(m) = &cache.masks.feature {
                g *= m[j];
            }
            dh[j] = g;
        }
        dc.iter_mut().for_each(|v| *v = S::zero());

        for t in (0..steps).rev() {
            let gv = &cache.gates[t];
            let c_t = &cache.cells[(t + 1) * hidden..(t + 2) * hidden];
            let c_prev = &cache.cells[t * hidden..(t + 1) * hidden];
            let h_prev = &cache.hiddens[t * hidden..(t + 1) * hidden];
            let x_t = &cache.inputs[t * embed..(t + 1) * embed];
            for j in 0..hidden {
                let tc = c_t[j].tanh();
                let (o, i, f, cand) = (gv.output[j], gv.input[j], gv.forget[j], gv.candidate[j]);
                let d_o = dh[j] * tc;
                let dcj = dc[j] + dh[j] * o * (S::one() - tc * tc);
                let d_i = dcj * cand;
                let d_cand = dcj * i;
                let d_f = dcj * c_prev[j];
                dc[j] = dcj * f; // becomes dc_{t-1}
                da[Gate::Candidate.index() * hidden + j] = d_cand * (S::one() - cand * cand);
                da[Gate::Input.index() * hidden + j] = d_i * i * (S::one() - i);
                da[Gate::Forget.index() * hidden + j] = d_f * f * (S::one() - f);
                da[Gate::Output.index() * hidden + j] = d_o * o * (S::one() - o);
            }
            dx.iter_mut().for_each(|v| *v = S::zero());
            dh_prev.iter_mut().for_each(|v| *v = S::zero());
            for g in Gate::ALL {
                let dag = &da[g.index() * hidden..(g.index() + 1) * hidden];
                grads.w[g.index()].outer_acc(dag, x_t);
                grads.u[g.index()].outer_acc(dag, h_prev);
                if let Some(b) = grads.b.as_mut() {
                    for (bj, &d) in b[g.index()].as_mut_slice().iter_mut().zip(dag) {
                        *bj += d;
                    }
                }
                params.w[g.index()].matvec_t_acc(dag, &mut dx);
                params.u[g.index()].matvec_t_acc(dag, &mut dh_prev);
            }
            let row = grads.embedding.row_mut(cache.tokens[t]);
            match &cache.masks.input {
                Some(m) => {
                    for ((r, &d), &k) in row.iter_mut().zip(&dx).zip(&m[t * embed..(t + 1) * embed]) {
                        *r += d * k;
                    }
                }
                None => axpy(S::one(), &dx, row),
            }
            std::mem::swap(&mut dh, &mut dh_prev);
        }
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn zero_params_give_half() {
        let p = LstmParameters::<f64>::zeros(21, 8, 4, false);
        let out = forward_sequence(&[3; 41], &p, 0.2, 41, Mode::Infer).unwrap();
        assert_eq!(out.probability, 0.5);
        assert!(out.feature.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_rate_train_equals_infer() {
        let mut r = rng::seeded(3);
        let p = LstmParameters::<f64>::random_uniform(21, 8, 4, false, 0.5, &mut r);
        let tokens: Vec<usize> = (0..41).map(|i| i % 21).collect();
        let a = forward_sequence(&tokens, &p, 0.0, 41, Mode::Train(&mut r)).unwrap();
        let b = forward_sequence(&tokens, &p, 0.0, 41, Mode::Infer).unwrap();
        assert_eq!(a.probability, b.probability);
        assert_eq!(a.feature, b.feature);
        let (pi, fi) = infer(&tokens, &p, 41).unwrap();
        assert_eq!(pi, b.probability);
        assert_eq!(fi, b.feature);
    }

    #[test]
    fn infer_is_repeatable_train_is_not() {
        let mut r = rng::seeded(5);
        let p = LstmParameters::<f64>::random_uniform(21, 8, 4, false, 0.5, &mut r);
        let tokens: Vec<usize> = (0..41).map(|i| (i * 7) % 21).collect();
        let a = forward_sequence(&tokens, &p, 0.2, 41, Mode::Infer).unwrap();
        let b = forward_sequence(&tokens, &p, 0.2, 41, Mode::Infer).unwrap();
        assert_eq!(a.probability.to_bits(), b.probability.to_bits());
        let t1 = forward_sequence(&tokens, &p, 0.5, 41, Mode::Train(&mut r)).unwrap();
        let t2 = forward_sequence(&tokens, &p, 0.5, 41, Mode::Train(&mut r)).unwrap();
        assert_ne!(t1.probability, t2.probability);
    }

    #[test]
    fn forward_errors() {
        let p = LstmParameters::<f64>::zeros(21, 8, 4, false);
        assert!(forward_sequence(&[1; 40], &p, 0.2, 41, Mode::Infer).is_err());
        assert!(forward_sequence(&[21; 41], &p, 0.2, 41, Mode::Infer).is_err());
    }

    #[test]
    fn bce_values() {
        assert!((bce_loss(&[0.5f64], &[1]).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((bce_loss(&[0.5f64], &[0]).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        let exact = bce_loss(&[1.0f64, 0.0], &[1, 0]).unwrap();
        assert!(exact <= -(1.0 - BCE_EPSILON).ln() + 1e-15);
        assert!(exact > 0.0);
        let probs = [0.9f64, 0.2, 0.6, 0.01];
        let labels = [1u8, 0, 0, 1];
        let per: Vec<f64> = probs
            .iter()
            .zip(&labels)
            .map(|(&p, &y)| if y == 1 { -(p as f64).ln() } else { -(1.0 - p as f64).ln() })
            .collect();
        let mean = per.iter().sum::<f64>() / 4.0;
        assert!((bce_loss(&probs, &labels).unwrap() - mean).abs() < 1e-12);
        assert!(bce_loss(&[0.5f64], &[1, 0]).is_err());
        assert!(bce_loss(&[0.5f64], &[2]).is_err());
    }

    #[test]
    fn dense_bias_gradient_closed_form() {
        let mut r = rng::seeded(8);
        let p = LstmParameters::<f64>::random_uniform(21, 6, 4, false, 0.3, &mut r);
        let labels = [1u8, 0, 1];
        let caches: Vec<_> = (0..3)
            .map(|k| {
                let toks: Vec<usize> = (0..5).map(|i| (i + 3 * k) % 21).collect();
                forward_sequence(&toks, &p, 0.2, 5, Mode::Train(&mut r)).unwrap().cache
            })
            .collect();
        let g = backward_gradients(&caches, &labels, &p).unwrap();
        let expected: f64 = caches.iter().zip(&labels).map(|(c, &y)| c.probability - y as f64).sum::<f64>() / 3.0;
        assert!((g.dense_b.get(0, 0) - expected).abs() < 1e-15);
        // token 20 never appears in the batch
        let used: std::collections::BTreeSet<usize> = caches.iter().flat_map(|c| c.tokens.clone()).collect();
        for tok in 0..21 {
            if !used.contains(&tok) {
                assert!(g.embedding.row(tok).iter().all(|&v| v == 0.0), "row {tok}");
            }
        }
        assert!(backward_gradients(&caches, &labels[..2], &p).is_err());
    }
}
