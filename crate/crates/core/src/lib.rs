//! Stacked-ensemble credibility classifier for news documents: text
//! preprocessing, Doc2Vec embeddings, five base classifiers, an MLP
//! meta-model, evaluation and model persistence.
//!
//! Numeric code is generic over [`Real`]; the aliases below fix it to
//! `f64`, which the pipeline and the bundle format use.

pub mod bundle;
pub mod config;
pub mod corpus;
pub mod embed;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod models;
pub mod nncore;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix = nncore::Matrix<f64>;
pub type Mlp = nncore::Mlp<f64>;
pub type Doc2VecModel = embed::Doc2VecModel<f64>;
pub type StackingModel = ensemble::StackingModel<f64>;
pub type TrainedBaseModel = models::TrainedBaseModel<f64>;
pub type Prediction = ensemble::Prediction<f64>;
