//! Degree-2 factorization machines trained with hinge-loss SGD, a one-vs-all
//! multiclass wrapper, and the pipeline around them for classifying
//! named-entity candidates that never occur in the training data.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod featurizer;
pub mod fixtures;
pub mod fm;
pub mod io;
pub mod multiclass;
pub mod pipeline;
pub mod sparse;
pub mod sparse_text;
pub mod trainer;

pub use error::{Error, Result};
pub use featurizer::{Candidate, FeatureSpace};
pub use fm::FmModel;
pub use multiclass::OvaModel;
pub use sparse::SparseVector;
pub use trainer::{LabeledInstance, LossKind, TrainConfig};
