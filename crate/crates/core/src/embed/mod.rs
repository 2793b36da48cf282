//! Paragraph-vector document embeddings.

mod doc2vec;
mod vocab;

pub use doc2vec::{
    embed_corpus, infer_vector, ns_coefficients, ns_gradients, train_doc2vec, train_doc2vec_traced, Doc2VecConfig,
    Doc2VecMode, Doc2VecModel, DocVector, TrainingTrace,
};
pub use vocab::{build_vocab, NegativeSampler, Vocabulary};
