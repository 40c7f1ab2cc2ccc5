//! Lysine acetylation site prediction: peptide windows, an LSTM feature
//! extractor, tree ensembles on the learned features, evaluation and t-SNE.
//!
//! Numerical code is generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases below fix the usual double-precision choice.

pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod textfmt;
pub mod tsne;

pub use error::{Error, Result};

pub type Lstm = model::LstmModel<f64>;
pub type Lstm32 = model::LstmModel<f32>;
pub type Ensemble = ensemble::EnsembleModel<f64>;
pub type Ensemble32 = ensemble::EnsembleModel<f32>;
pub type Features = model::FeatureVector<f64>;
pub type Embedding = tsne::Embedding2D<f64>;
pub type Workflow = pipeline::Pipeline<f64>;
pub type Workflow32 = pipeline::Pipeline<f32>;
