//! Cross-lingual topic modeling over bilingual corpora.
//!
//! Topics for two languages are generated by a variational topic model whose
//! topic-word matrices are slices of one shared matrix of word topic
//! representations. Linked cross-lingual words (dictionary translations,
//! extended through monolingual embedding neighbors) are aligned with a
//! contrastive mutual-information bound that also keeps unlinked words apart,
//! which prevents the topic representations from collapsing.
//!
//! Pipeline: [`corpus`] → [`embedding`] → [`linking`] → [`model`] /
//! [`trainer`] → [`eval`]. The [`experiment`] module wires the stages
//! together and [`synthetic`] generates a planted-topic benchmark.

pub mod corpus;
pub mod embedding;
mod error;
pub mod eval;
pub mod experiment;
pub mod linking;
pub mod model;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};
