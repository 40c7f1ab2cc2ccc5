use crate::corpus::WINDOW_LEN;
use crate::error::{Error, Result};

/// Default half-width of the uniform weight initialisation.
pub const INIT_SCALE: f64 = 0.05;
use crate::textfmt::Section;

/// Network shape, dropout and optimiser settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub window_len: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub dropout_rate: f64,
    pub batch_size: usize,
    pub patience: usize,
    /// Early stopping is not honoured before this many epochs.
    pub min_epochs: usize,
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Add biases to the four gates, initialised to zero except as below.
    pub gate_bias: bool,
    /// Initial forget-gate bias; needs `gate_bias`.
    pub forget_bias: f64,
    /// Weights start uniform in [-init_scale, init_scale].
    pub init_scale: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            window_len: WINDOW_LEN,
            embed_dim: 128,
            hidden_dim: 64,
            dropout_rate: 0.2,
            batch_size: 128,
            patience: 3,
            min_epochs: 0,
            max_epochs: 100,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            gate_bias: false,
            forget_bias: 0.0,
            init_scale: INIT_SCALE,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.window_len == 0 || self.embed_dim == 0 || self.hidden_dim == 0 {
            return bad("model dimensions must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout_rate must be in [0, 1), got {}", self.dropout_rate));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return bad("batch_size, max_epochs and patience must be positive".into());
        }
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("invalid optimiser settings".into());
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive".into());
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return bad(format!("init_scale must be positive, got {}", self.init_scale));
        }
        if !self.forget_bias.is_finite() || (self.forget_bias != 0.0 && !self.gate_bias) {
            return bad("forget_bias must be finite and needs gate_bias = true".into());
        }
        Ok(())
    }

    pub fn to_section(&self, name: &str) -> Section {
        let mut s = Section::new(name);
        s.set("window_len", self.window_len)
            .set("embed_dim", self.embed_dim)
            .set("hidden_dim", self.hidden_dim)
            .set("dropout_rate", self.dropout_rate)
            .set("batch_size", self.batch_size)
            .set("patience", self.patience)
            .set("min_epochs", self.min_epochs)
            .set("max_epochs", self.max_epochs)
            .set("learning_rate", self.learning_rate)
            .set("beta1", self.beta1)
            .set("beta2", self.beta2)
            .set("epsilon", self.epsilon)
            .set("seed", self.seed)
            .set("gate_bias", self.gate_bias)
            .set("forget_bias", self.forget_bias)
            .set("init_scale", self.init_scale);
        s
    }

    /// Overlay keys present in `section` onto `self`.
    pub fn apply_section(&mut self, section: &Section) -> Result<()> {
        for (key, _) in &section.entries {
            match key.as_str() {
                "window_len" => self.window_len = section.parse_required(key)?,
                "embed_dim" => self.embed_dim = section.parse_required(key)?,
                "hidden_dim" => self.hidden_dim = section.parse_required(key)?,
                "dropout_rate" => self.dropout_rate = section.parse_required(key)?,
                "batch_size" => self.batch_size = section.parse_required(key)?,
                "patience" => self.patience = section.parse_required(key)?,
                "min_epochs" => self.min_epochs = section.parse_required(key)?,
                "max_epochs" => self.max_epochs = section.parse_required(key)?,
                "learning_rate" => self.learning_rate = section.parse_required(key)?,
                "beta1" => self.beta1 = section.parse_required(key)?,
                "beta2" => self.beta2 = section.parse_required(key)?,
                "epsilon" => self.epsilon = section.parse_required(key)?,
                "seed" => self.seed = section.parse_required(key)?,
                "gate_bias" => self.gate_bias = section.parse_required(key)?,
                "forget_bias" => self.forget_bias = section.parse_required(key)?,
                "init_scale" => self.init_scale = section.parse_required(key)?,
                other => return Err(Error::Config(format!("[{}] unknown key `{other}`", section.name))),
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_section_roundtrip() {
        let c = ModelConfig::default();
        assert_eq!((c.window_len, c.embed_dim, c.hidden_dim, c.batch_size, c.patience), (41, 128, 64, 128, 3));
        assert_eq!(c.dropout_rate, 0.2);
        c.validate().unwrap();
        let mut d = ModelConfig { hidden_dim: 3, ..Default::default() };
        d.apply_section(&c.to_section("model")).unwrap();
        assert_eq!(d, c);
        assert!(ModelConfig { dropout_rate: 1.0, ..Default::default() }.validate().is_err());
        let mut s = Section::new("model");
        s.set("bogus", 1);
        assert!(d.apply_section(&s).is_err());
    }
}
