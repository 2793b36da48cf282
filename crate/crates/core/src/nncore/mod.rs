//! Neural-network building blocks shared by the BiLSTM base model and the
//! stacking meta-model.

mod activation;
mod adam;
mod bilstm_net;
mod dense;
mod lstm;
mod matrix;
mod mlp;

pub use activation::{cross_entropy_loss, softmax};
pub use adam::{adam_step, adam_step_slice, Adam, AdamState};
pub use bilstm_net::BiLstmNet;
pub use dense::Dense;
pub use lstm::{bilstm_layer, lstm_cell, BiLstmLayer, BiLstmTrace, LstmCache, LstmLayerParams};
pub use matrix::Matrix;
pub use mlp::{mlp_predict_proba, mlp_train, mlp_train_traced, Mlp, MlpConfig, MlpFit};
