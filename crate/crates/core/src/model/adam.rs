use super::config::ModelConfig;
use super::params::LstmParameters;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper { learning_rate: 0.001, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl From<&ModelConfig> for AdamHyper {
    fn from(c: &ModelConfig) -> Self {
        AdamHyper { learning_rate: c.learning_rate, beta1: c.beta1, beta2: c.beta2, epsilon: c.epsilon }
    }
}

/// One bias-corrected Adam step on a flat slice. `step` is the 1-based
/// index of this update.
pub fn adam_step_slice<S: Scalar>(param: &mut [S], grad: &[S], m: &mut [S], v: &mut [S], step: u64, hyper: &AdamHyper) {
    let (b1, b2) = (S::lit(hyper.beta1), S::lit(hyper.beta2));
    let (one, lr, eps) = (S::one(), S::lit(hyper.learning_rate), S::lit(hyper.epsilon));
    let c1 = one - S::lit(hyper.beta1.powi(step as i32));
    let c2 = one - S::lit(hyper.beta2.powi(step as i32));
    for (((p, &g), mi), vi) in param.iter_mut().zip(grad).zip(m.iter_mut()).zip(v.iter_mut()) {
        *mi = b1 * *mi + (one - b1) * g;
        *vi = b2 * *vi + (one - b2) * g * g;
        let m_hat = *mi / c1;
        let v_hat = *vi / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// First and second moment accumulators matching a parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<S> {
    pub m: LstmParameters<S>,
    pub v: LstmParameters<S>,
    pub step: u64,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(like: &LstmParameters<S>) -> Self {
        AdamState { m: like.zeros_like(), v: like.zeros_like(), step: 0 }
    }
}

/// Apply one optimiser step in place.
pub fn adam_update<S: Scalar>(
    params: &mut LstmParameters<S>,
    grads: &LstmParameters<S>,
    state: &mut AdamState<S>,
    hyper: &AdamHyper,
) -> Result<()> {
    params.check_shape(grads)?;
    params.check_shape(&state.m).map_err(|_| Error::Shape("optimiser state does not match parameters".into()))?;
    state.step += 1;
    let step = state.step;
    let grads = grads.tensors();
    let ps = params.tensors_mut();
    let ms = state.m.tensors_mut();
    let vs = state.v.tensors_mut();
    for (((p, (_, g)), m), v) in ps.into_iter().zip(grads).zip(ms).zip(vs) {
        adam_step_slice(p.as_mut_slice(), g.as_slice(), m.as_mut_slice(), v.as_mut_slice(), step, hyper);
    }
    Ok(())
}
