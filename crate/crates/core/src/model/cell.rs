use super::params::{Gate, LstmParameters};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Hidden activation and cell memory.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState<S> {
    pub h: Vec<S>,
    pub c: Vec<S>,
}

impl<S: Scalar> LstmState<S> {
    pub fn zeros(hidden: usize) -> Self {
        LstmState { h: vec![S::zero(); hidden], c: vec![S::zero(); hidden] }
    }
}

/// Gate activations of one step, each of length `hidden`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateValues<S> {
    pub candidate: Vec<S>,
    pub input: Vec<S>,
    pub forget: Vec<S>,
    pub output: Vec<S>,
}

impl<S: Scalar> GateValues<S> {
    pub fn zeros(hidden: usize) -> Self {
        let z = vec![S::zero(); hidden];
        GateValues { candidate: z.clone(), input: z.clone(), forget: z.clone(), output: z }
    }
}

/// One step written into caller-owned buffers.
///
/// `pre` is scratch of length `4 * hidden`.
pub(crate) fn step_into<S: Scalar>(
    x: &[S],
    h_prev: &[S],
    c_prev: &[S],
    params: &LstmParameters<S>,
    pre: &mut [S],
    gates: &mut GateValues<S>,
    c_out: &mut [S],
    h_out: &mut [S],
) {
    let hidden = h_prev.len();
    pre.iter_mut().for_each(|v| *v = S::zero());
    for g in Gate::ALL {
        let block = &mut pre[g.index() * hidden..(g.index() + 1) * hidden];
        params.w[g.index()].matvec_acc(x, block);
        params.u[g.index()].matvec_acc(h_prev, block);
        if let Some(b) = &params.b {
            for (v, bias) in block.iter_mut().zip(b[g.index()].as_slice()) {
                *v += *bias;
            }
        }
    }
    for j in 0..hidden {
        let cand = pre[j].tanh();
        let i = pre[hidden + j].sigmoid();
        let f = pre[2 * hidden + j].sigmoid();
        let o = pre[3 * hidden + j].sigmoid();
        let c = i * cand + f * c_prev[j];
        gates.candidate[j] = cand;
        gates.input[j] = i;
        gates.forget[j] = f;
        gates.output[j] = o;
        c_out[j] = c;
        h_out[j] = o * c.tanh();
    }
}

/// Advance the cell by one input vector.
///
/// ```text
/// c~ = tanh(W_c x + U_c h)     i = σ(W_i x + U_i h)
/// f  = σ(W_f x + U_f h)        o = σ(W_o x + U_o h)
/// c' = i ∘ c~ + f ∘ c          h' = o ∘ tanh(c')
/// ```
pub fn lstm_cell_step<S: Scalar>(x: &[S], prev: &LstmState<S>, params: &LstmParameters<S>) -> Result<LstmState<S>> {
    Ok(lstm_cell_step_with_gates(x, prev, params)?.0)
}

/// Like [`lstm_cell_step`] but also returns the gate activations.
pub fn lstm_cell_step_with_gates<S: Scalar>(
    x: &[S],
    prev: &LstmState<S>,
    params: &LstmParameters<S>,
) -> Result<(LstmState<S>, GateValues<S>)> {
    let hidden = params.hidden_dim();
    if x.len() != params.embed_dim() {
        return Err(Error::Shape(format!("input has {} values, expected {}", x.len(), params.embed_dim())));
    }
    if prev.h.len() != hidden || prev.c.len() != hidden {
        return Err(Error::Shape(format!("state has {}/{} values, expected {hidden}", prev.h.len(), prev.c.len())));
    }
    let mut pre = vec![S::zero(); 4 * hidden];
    let mut gates = GateValues::zeros(hidden);
    let mut next = LstmState::zeros(hidden);
    step_into(x, &prev.h, &prev.c, params, &mut pre, &mut gates, &mut next.c, &mut next.h);
    Ok((next, gates))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_with_unit_memory() {
        let p = LstmParameters::<f64>::zeros(21, 5, 3, false);
        let prev = LstmState { h: vec![0.3, -0.2, 0.9], c: vec![1.0; 3] };
        let (s, g) = lstm_cell_step_with_gates(&[1.0, 2.0, -3.0, 0.5, 7.0], &prev, &p).unwrap();
        for j in 0..3 {
            assert_eq!(g.input[j], 0.5);
            assert_eq!(g.forget[j], 0.5);
            assert_eq!(g.output[j], 0.5);
            assert_eq!(g.candidate[j], 0.0);
            assert_eq!(s.c[j], 0.5);
            assert!((s.h[j] - 0.231_058_65).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_fixed_point() {
        let p = LstmParameters::<f64>::zeros(21, 4, 2, false);
        let s = lstm_cell_step(&[1.0; 4], &LstmState::zeros(2), &p).unwrap();
        assert_eq!(s, LstmState::zeros(2));
    }

    #[test]
    fn shape_errors() {
        let p = LstmParameters::<f64>::zeros(21, 4, 2, false);
        assert!(lstm_cell_step(&[1.0; 3], &LstmState::zeros(2), &p).is_err());
        assert!(lstm_cell_step(&[1.0; 4], &LstmState::zeros(3), &p).is_err());
    }

    #[test]
    fn gate_bias_shifts_preactivation() {
        let mut p = LstmParameters::<f64>::zeros(21, 2, 1, true);
        p.b.as_mut().unwrap()[Gate::Input.index()].set(0, 0, 100.0);
        p.b.as_mut().unwrap()[Gate::Candidate.index()].set(0, 0, 100.0);
        let s = lstm_cell_step(&[0.0, 0.0], &LstmState::zeros(1), &p).unwrap();
        // i ≈ 1, c~ ≈ 1 → c ≈ 1, h ≈ 0.5 tanh(1)
        assert!((s.c[0] - 1.0).abs() < 1e-12);
        assert!((s.h[0] - 0.5 * 1f64.tanh()).abs() < 1e-12);
    }
}
