//! Evaluation metrics for generated text, classifiers and human ratings.

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod agreement;
mod bleu;
mod classification;
mod diversity;
mod rouge;

pub use agreement::{krippendorff_alpha, RatingMatrix};
pub use bleu::corpus_bleu;
pub use classification::{cls_eval, ClsScores};
pub use diversity::joint_ngram_diversity;
pub use rouge::{rouge_l, ROUGE_BETA};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("no hypotheses to score")]
    NoHypotheses,
    #[error("pair {0} has no references")]
    NoReferences(usize),
    #[error("all outputs are empty")]
    AllEmpty,
    #[error("{predictions} predictions but {gold} gold labels")]
    LengthMismatch { predictions: usize, gold: usize },
    #[error("no item carries two or more ratings")]
    NoPairableItems,
    #[error("item {0} has no ratings")]
    UnratedItem(usize),
}

/// One hypothesis with its references.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalPair {
    pub hypothesis: String,
    pub references: Vec<String>,
}

impl EvalPair {
    pub fn new(hypothesis: impl Into<String>, references: Vec<String>) -> Self {
        EvalPair {
            hypothesis: hypothesis.into(),
            references,
        }
    }

    pub fn single(hypothesis: impl Into<String>, reference: impl Into<String>) -> Self {
        EvalPair::new(hypothesis, vec![reference.into()])
    }
}
