//! Embedding + LSTM network producing deep features for each window.

mod adam;
mod cell;
mod config;
mod network;
mod params;
mod persist;
mod tensor;
mod train;
mod vocab;

pub use adam::{adam_step_slice, adam_update, AdamHyper, AdamState};
pub use cell::{lstm_cell_step, lstm_cell_step_with_gates, GateValues, LstmState};
pub use config::{ModelConfig, INIT_SCALE};
pub use network::{
    backward_gradients, bce_loss, forward_sequence, forward_with_masks, infer, DropoutMasks, Forward, ForwardCache,
    Mode, BCE_EPSILON,
};
pub use params::{Gate, LstmParameters};
pub use persist::{load_model, parse_features, save_model, write_features, MODEL_FORMAT, MODEL_VERSION};
pub use tensor::{dot, Matrix};
pub use train::{
    extract_features, train_from, train_model, EarlyStopping, EpochRecord, FeatureVector, LstmModel, StopDecision,
    TrainingState,
};
pub use vocab::{encode_window, Vocabulary};
