//! Tooling for branching moral narratives.
//!
//! A story pairs a shared context (norm, situation, intention) with a moral
//! and an immoral path (action plus consequence). This crate provides:
//!
//! * [`corpus`]: the story data model, validation and the line-delimited
//!   record format.
//! * [`splitting`]: three adversarial split strategies (norm distance,
//!   lexical bias, minimal pairs) and their audit report.
//! * [`tasks`]: classification and generation samples with fixed input
//!   templates.
//! * [`providers`]: generator, classifier and embedder interfaces, an HTTP
//!   client for each, and deterministic mocks.
//! * [`coe`]: chain-of-experts decoding strategies that rank sampled
//!   generations with classifier posteriors.
//! * [`metrics`]: BLEU, ROUGE-L, n-gram diversity, Krippendorff's alpha and
//!   classification accuracy/F1.
//!
//! Data-parallel loops go through [`exec::Exec`]; with the default
//! `parallel` feature they run on rayon, otherwise sequentially. Results are
//! identical either way.

pub mod coe;
pub mod corpus;
pub mod exec;
pub mod metrics;
pub mod providers;
pub mod seed;
pub mod splitting;
pub mod synthetic;
pub mod tasks;
mod text;

pub use corpus::{Story, StoryField};
pub use exec::Exec;
