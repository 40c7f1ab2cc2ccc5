//! Tree ensembles over fixed-length feature vectors.

mod config;
mod grow;
mod model;
mod tree;

pub use config::{parse_kind_list, EnsembleConfig, EnsembleKind};
pub use grow::{similarity_score, split_gain};
pub use model::{
    fit_ensemble, fit_features, load_ensemble, save_ensemble, EnsembleModel, OobEstimate, ENSEMBLE_FORMAT,
    ENSEMBLE_VERSION,
};
pub use tree::{Tree, TreeNode};
