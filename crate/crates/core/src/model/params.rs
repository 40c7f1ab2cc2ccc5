use rand::Rng as _;

use super::config::ModelConfig;
use super::tensor::Matrix;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::Scalar;

/// The four gated transforms of the cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Candidate,
    Input,
    Forget,
    Output,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Candidate, Gate::Input, Gate::Forget, Gate::Output];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn tag(self) -> &'static str {
        match self {
            Gate::Candidate => "c",
            Gate::Input => "i",
            Gate::Forget => "f",
            Gate::Output => "o",
        }
    }
}

/// Learnable tensors: embedding table, per-gate input (`w`) and recurrent
/// (`u`) weights, optional gate biases, and the dense sigmoid head.
///
/// The same type doubles as a gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParameters<S> {
    /// vocab × embed
    pub embedding: Matrix<S>,
    /// hidden × embed, indexed by [`Gate::index`]
    pub w: [Matrix<S>; 4],
    /// hidden × hidden
    pub u: [Matrix<S>; 4],
    /// hidden × 1 each, only when biases are enabled
    pub b: Option<[Matrix<S>; 4]>,
    /// 1 × hidden
    pub dense_w: Matrix<S>,
    /// 1 × 1
    pub dense_b: Matrix<S>,
}

impl<S: Scalar> LstmParameters<S> {
    pub fn zeros(vocab: usize, embed: usize, hidden: usize, gate_bias: bool) -> Self {
        let gate = |r, c| [Matrix::zeros(r, c), Matrix::zeros(r, c), Matrix::zeros(r, c), Matrix::zeros(r, c)];
        LstmParameters {
            embedding: Matrix::zeros(vocab, embed),
            w: gate(hidden, embed),
            u: gate(hidden, hidden),
            b: gate_bias.then(|| gate(hidden, 1)),
            dense_w: Matrix::zeros(1, hidden),
            dense_b: Matrix::zeros(1, 1),
        }
    }

    pub fn zeros_for(config: &ModelConfig, vocab: usize) -> Self {
        Self::zeros(vocab, config.embed_dim, config.hidden_dim, config.gate_bias)
    }

    /// Uniform(-scale, scale) on every weight; biases start at zero.
    pub fn random_uniform(vocab: usize, embed: usize, hidden: usize, gate_bias: bool, scale: f64, rng: &mut Rng) -> Self {
        let mut p = Self::zeros(vocab, embed, hidden, gate_bias);
        let mut fill = |m: &mut Matrix<S>| {
            for x in m.as_mut_slice() {
                *x = S::lit(rng.random_range(-scale..scale));
            }
        };
        fill(&mut p.embedding);
        p.w.iter_mut().for_each(&mut fill);
        p.u.iter_mut().for_each(&mut fill);
        fill(&mut p.dense_w);
        fill(&mut p.dense_b);
        p.dense_b.fill(S::zero());
        p
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.rows()
    }

    pub fn embed_dim(&self) -> usize {
        self.embedding.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.dense_w.cols()
    }

    pub fn has_gate_bias(&self) -> bool {
        self.b.is_some()
    }

    pub fn dense_bias(&self) -> S {
        self.dense_b.get(0, 0)
    }

    /// Named tensors in a fixed order (serialisation, optimiser, gradient checks).
    pub fn tensors(&self) -> Vec<(String, &Matrix<S>)> {
        let mut out = vec![("embedding".to_string(), &self.embedding)];
        for g in Gate::ALL {
            out.push((format!("W_{}", g.tag()), &self.w[g.index()]));
            out.push((format!("U_{}", g.tag()), &self.u[g.index()]));
            if let Some(b) = &self.b {
                out.push((format!("b_{}", g.tag()), &b[g.index()]));
            }
        }
        out.push(("dense_w".to_string(), &self.dense_w));
        out.push(("dense_b".to_string(), &self.dense_b));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix<S>> {
        let mut out = vec![&mut self.embedding];
        let mut b = self.b.as_mut().map(|b| b.iter_mut());
        for (w, u) in self.w.iter_mut().zip(self.u.iter_mut()) {
            out.push(w);
            out.push(u);
            if let Some(bi) = b.as_mut() {
                out.push(bi.next().expect("four biases"));
            }
        }
        out.push(&mut self.dense_w);
        out.push(&mut self.dense_b);
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, m)| m.as_slice().len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, m)| m.is_finite())
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        let a = self.tensors();
        let b = other.tensors();
        a.len() == b.len() && a.iter().zip(&b).all(|((na, ma), (nb, mb))| na == nb && ma.shape() == mb.shape())
    }

    pub fn check_shape(&self, other: &Self) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Shape("parameter sets differ in layout".into()))
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.vocab_size(), self.embed_dim(), self.hidden_dim(), self.has_gate_bias())
    }

    pub fn matches_config(&self, config: &ModelConfig) -> Result<()> {
        if self.embed_dim() != config.embed_dim
            || self.hidden_dim() != config.hidden_dim
            || self.has_gate_bias() != config.gate_bias
        {
            return Err(Error::Shape(format!(
                "parameters are embed {} / hidden {} / bias {}, config says {} / {} / {}",
                self.embed_dim(),
                self.hidden_dim(),
                self.has_gate_bias(),
                config.embed_dim,
                config.hidden_dim,
                config.gate_bias
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let p = LstmParameters::<f64>::zeros(21, 128, 64, false);
        let names: Vec<String> = p.tensors().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names.len(), 11);
        assert_eq!(names[0], "embedding");
        assert_eq!(names[1], "W_c");
        assert_eq!(names[10], "dense_b");
        assert_eq!(p.parameter_count(), 21 * 128 + 4 * (64 * 128 + 64 * 64) + 64 + 1);
        let mut q = LstmParameters::<f64>::zeros(21, 6, 4, true);
        assert_eq!(q.tensors().len(), 15);
        assert_eq!(q.tensors_mut().len(), 15);
        assert!(!p.same_shape(&q));
    }

    #[test]
    fn uniform_init_is_bounded_and_seeded() {
        let mut r1 = crate::rng::seeded(1);
        let mut r2 = crate::rng::seeded(1);
        let a = LstmParameters::<f64>::random_uniform(21, 8, 4, true, 0.05, &mut r1);
        let b = LstmParameters::<f64>::random_uniform(21, 8, 4, true, 0.05, &mut r2);
        assert_eq!(a, b);
        for (name, m) in a.tensors() {
            assert!(m.as_slice().iter().all(|x| x.abs() <= 0.05), "{name}");
            if name.starts_with("b_") || name == "dense_b" {
                assert!(m.as_slice().iter().all(|&x| x == 0.0));
            }
        }
    }
}
