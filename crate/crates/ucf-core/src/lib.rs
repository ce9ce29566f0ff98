//! Uncertainty-contrastive representation learning for positive-unlabeled data.
//!
//! The pipeline: a parametric PU dataset generator ([`datagen`]), a
//! self-attention LSTM encoder ([`encoder`]) trained in two stages
//! ([`trainer`]) with an uncertainty-weighted adaptive-temperature
//! contrastive loss ([`conpu`]), classical classifiers fitted on the frozen
//! embeddings ([`downstream`]), and a metrics / cross-validation / t-SNE
//! evaluation suite ([`evaluation`]). Everything is seed-deterministic and
//! runs on plain `f64` CPU numerics ([`numcore`]).

pub mod conpu;
pub mod datagen;
pub mod trainer;
pub mod downstream;
pub mod encoder;
pub mod evaluation;
pub mod numcore;
