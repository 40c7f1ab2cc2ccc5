use rand::seq::SliceRandom;

use super::adam::{adam_update, AdamHyper, AdamState};
use super::config::ModelConfig;
use super::network::{backward_gradients, bce_loss, forward_sequence, infer, Mode};
use super::params::{Gate, LstmParameters};
use super::vocab::Vocabulary;
use crate::corpus::{Label, Origin, PeptideWindow};
use crate::error::{Error, Result};
use crate::rng::{self, stream};
use crate::scalar::Scalar;

/// A trained (or freshly initialised) network with its tokenizer.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel<S> {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub params: LstmParameters<S>,
}

impl<S: Scalar> LstmModel<S> {
    pub fn initialize(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let vocab = Vocabulary::standard();
        let mut r = rng::substream(config.seed, stream::INIT);
        let mut params = LstmParameters::random_uniform(
            vocab.size(),
            config.embed_dim,
            config.hidden_dim,
            config.gate_bias,
            config.init_scale,
            &mut r,
        );
        if let Some(b) = params.b.as_mut() {
            b[Gate::Forget.index()].fill(S::lit(config.forget_bias));
        }
        Ok(LstmModel { config: config.clone(), vocab, params })
    }

    pub fn encode(&self, window: &PeptideWindow) -> Result<Vec<usize>> {
        if window.len() != self.config.window_len {
            return Err(Error::Shape(format!(
                "window {} has length {}, model expects {}",
                window.origin,
                window.len(),
                self.config.window_len
            )));
        }
        Ok(self.vocab.encode_window(window))
    }

    /// Inference-mode (probability, feature) for one window.
    pub fn predict(&self, window: &PeptideWindow) -> Result<(S, Vec<S>)> {
        infer(&self.encode(window)?, &self.params, self.config.window_len)
    }

    pub fn probabilities(&self, windows: &[PeptideWindow]) -> Result<Vec<S>> {
        windows.iter().map(|w| self.predict(w).map(|(p, _)| p)).collect()
    }

    /// Mean BCE in inference mode.
    pub fn loss(&self, windows: &[PeptideWindow]) -> Result<S> {
        let probs = self.probabilities(windows)?;
        let labels: Vec<u8> = windows.iter().map(|w| w.label.as_u8()).collect();
        bce_loss(&probs, &labels)
    }

    pub fn accuracy(&self, windows: &[PeptideWindow]) -> Result<f64> {
        let probs = self.probabilities(windows)?;
        let hits = probs.iter().zip(windows).filter(|(p, w)| (**p >= S::lit(0.5)) == w.label.is_positive()).count();
        Ok(hits as f64 / windows.len().max(1) as f64)
    }
}

/// Patience-based stopping on a monitored loss.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best: f64,
    pub best_epoch: Option<usize>,
    pub wait: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping { patience, best: f64::INFINITY, best_epoch: None, wait: 0 }
    }

    pub fn observe(&mut self, epoch: usize, loss: f64) -> StopDecision {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = Some(epoch);
            self.wait = 0;
            StopDecision::Improved
        } else {
            self.wait += 1;
            if self.wait >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean train-mode loss over the epoch's mini-batches (sample weighted).
    pub train_loss: f64,
    pub validation_loss: f64,
}

/// Optimiser and stopping bookkeeping after training.
#[derive(Debug, Clone)]
pub struct TrainingState<S> {
    pub adam: AdamState<S>,
    pub stopping: EarlyStopping,
    pub history: Vec<EpochRecord>,
}

impl<S> TrainingState<S> {
    pub fn best_validation_loss(&self) -> f64 {
        self.stopping.best
    }

    pub fn epochs_run(&self) -> usize {
        self.history.len()
    }
}

/// Mini-batch Adam training with early stopping on validation loss.
///
/// Returns the parameters of the best validation epoch.
pub fn train_model<S: Scalar>(
    train: &[PeptideWindow],
    validation: &[PeptideWindow],
    config: &ModelConfig,
) -> Result<(LstmModel<S>, TrainingState<S>)> {
    train_from(LstmModel::initialize(config)?, train, validation)
}

/// Train starting from the given model's parameters.
pub fn train_from<S: Scalar>(
    mut model: LstmModel<S>,
    train: &[PeptideWindow],
    validation: &[PeptideWindow],
) -> Result<(LstmModel<S>, TrainingState<S>)> {
    if train.is_empty() || validation.is_empty() {
        return Err(Error::data("training and validation sets must be non-empty"));
    }
    let config = model.config.clone();
    config.validate()?;
    let hyper = AdamHyper::from(&config);
    let tokens: Vec<Vec<usize>> = train.iter().map(|w| model.encode(w)).collect::<Result<_>>()?;
    let labels: Vec<u8> = train.iter().map(|w| w.label.as_u8()).collect();
    for w in validation {
        model.encode(w)?;
    }

    let mut shuffle_rng = rng::substream(config.seed, stream::SHUFFLE);
    let mut dropout_rng = rng::substream(config.seed, stream::DROPOUT);
    let mut state = TrainingState {
        adam: AdamState::new(&model.params),
        stopping: EarlyStopping::new(config.patience),
        history: Vec::new(),
    };
    let mut best = model.params.clone();
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut caches = Vec::with_capacity(batch.len());
            let mut probs = Vec::with_capacity(batch.len());
            let mut ys = Vec::with_capacity(batch.len());
            for &i in batch {
                let fwd = forward_sequence(
                    &tokens[i],
                    &model.params,
                    config.dropout_rate,
                    config.window_len,
                    Mode::Train(&mut dropout_rng),
                )?;
                probs.push(fwd.probability);
                caches.push(fwd.cache);
                ys.push(labels[i]);
            }
            let batch_loss = bce_loss(&probs, &ys)?.as_f64();
            if !batch_loss.is_finite() {
                return Err(Error::Numerical(format!("non-finite training loss in epoch {epoch}")));
            }
            loss_sum += batch_loss * batch.len() as f64;
            let grads = backward_gradients(&caches, &ys, &model.params)?;
            adam_update(&mut model.params, &grads, &mut state.adam, &hyper)?;
        }
        if !model.params.is_finite() {
            return Err(Error::Numerical(format!("non-finite parameters after epoch {epoch}")));
        }
        let validation_loss = model.loss(validation)?.as_f64();
        if !validation_loss.is_finite() {
            return Err(Error::Numerical(format!("non-finite validation loss in epoch {epoch}")));
        }
        state.history.push(EpochRecord { epoch, train_loss: loss_sum / train.len() as f64, validation_loss });
        match state.stopping.observe(epoch, validation_loss) {
            StopDecision::Improved => best = model.params.clone(),
            StopDecision::Continue => {}
            StopDecision::Stop if epoch >= config.min_epochs => break,
            StopDecision::Stop => {}
        }
    }
    model.params = best;
    Ok((model, state))
}

/// The 64-dimensional (hidden-size) deep representation of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<S> {
    pub values: Vec<S>,
    pub origin: Origin,
    pub label: Label,
}

/// Inference-mode final hidden state for every window.
pub fn extract_features<S: Scalar>(model: &LstmModel<S>, windows: &[PeptideWindow]) -> Result<Vec<FeatureVector<S>>> {
    windows
        .iter()
        .map(|w| {
            let (_, values) = model.predict(w)?;
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("non-finite feature for {}", w.origin)));
            }
            Ok(FeatureVector { values, origin: w.origin.clone(), label: w.label })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patience_rule() {
        let mut es = EarlyStopping::new(3);
        let losses = [0.9, 0.5, 0.6, 0.55, 0.7];
        let decisions: Vec<_> = losses.iter().enumerate().map(|(e, &l)| es.observe(e + 1, l)).collect();
        assert_eq!(
            decisions,
            vec![StopDecision::Improved, StopDecision::Improved, StopDecision::Continue, StopDecision::Continue, StopDecision::Stop]
        );
        // stops at best + patience
        assert_eq!(es.best_epoch, Some(2));
        assert_eq!(es.best, 0.5);
    }

    #[test]
    fn improvement_resets_wait() {
        let mut es = EarlyStopping::new(2);
        es.observe(1, 1.0);
        es.observe(2, 1.1);
        assert_eq!(es.observe(3, 0.9), StopDecision::Improved);
        assert_eq!(es.wait, 0);
        assert_eq!(es.observe(4, 0.9), StopDecision::Continue);
        assert_eq!(es.observe(5, 0.95), StopDecision::Stop);
    }
}
