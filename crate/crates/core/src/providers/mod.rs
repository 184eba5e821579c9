//! Expert interfaces: text generators, classifiers and embedders.
//!
//! Backends implement the [`Generator`], [`Classifier`] and [`Embedder`]
//! traits. The free functions [`generate`], [`classify`] and [`embed`] wrap a
//! backend call and enforce the response contract (candidate count,
//! normalized distributions, uniform vector dimension), so every backend,
//! remote or mock, is held to the same rules.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod http;
pub mod mock;

pub use http::HttpProvider;

/// Labels of the action classifiers.
pub const ACTION_LABELS: [&str; 2] = ["moral", "immoral"];
/// Labels of the consequence classifiers.
pub const CONSEQ_LABELS: [&str; 2] = ["plausible", "implausible"];

const PROB_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProviderError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("backend error: {0}")]
    Backend(String),
    #[error("expected {expected} candidates, backend returned {got}")]
    TooFewCandidates { expected: usize, got: usize },
    #[error("malformed distribution: {0}")]
    MalformedDistribution(String),
    #[error("ragged embedding dimensions: expected {expected}, got {got}")]
    RaggedDimensions { expected: usize, got: usize },
    #[error("expected {expected} vectors, backend returned {got}")]
    VectorCount { expected: usize, got: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("{0}")]
    Unsupported(String),
}

/// Sampling parameters for one generate call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeParams {
    pub n: usize,
    pub top_p: f64,
    pub max_new_tokens: usize,
    pub seed: u64,
}

impl Default for DecodeParams {
    fn default() -> Self {
        DecodeParams {
            n: 10,
            top_p: 0.9,
            max_new_tokens: 60,
            seed: 0,
        }
    }
}

impl DecodeParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.n == 0 {
            return Err("decode.n must be positive".into());
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(format!("decode.top_p must lie in (0, 1], got {}", self.top_p));
        }
        if self.max_new_tokens == 0 {
            return Err("decode.max_new_tokens must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    pub gen_index: usize,
    /// Classifier posterior of the target label, once ranked.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub probs: BTreeMap<String, f64>,
}

impl ClassDistribution {
    pub fn prob(&self, label: &str) -> f64 {
        self.probs.get(label).copied().unwrap_or(0.0)
    }
}

/// Expert roles, one per component model a decoding chain may call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpertRole {
    /// action | context generator
    ActionGenContext,
    /// action + context classifier
    ActionClsContext,
    /// consequence | context + action generator
    ConseqGenContextAction,
    /// consequence + context + action classifier
    ConseqClsContextAction,
    /// action | context + consequence generator
    ActionGenContextConseq,
    /// action + context + consequence classifier
    ActionClsContextConseq,
    /// consequence | context + action + draft + label generator
    ConseqRefiner,
    /// norm | context + actions + consequences generator
    NormGenFull,
    /// classifier used only to score final outputs
    Judge,
}

impl ExpertRole {
    pub const ALL: [ExpertRole; 9] = [
        ExpertRole::ActionGenContext,
        ExpertRole::ActionClsContext,
        ExpertRole::ConseqGenContextAction,
        ExpertRole::ConseqClsContextAction,
        ExpertRole::ActionGenContextConseq,
        ExpertRole::ActionClsContextConseq,
        ExpertRole::ConseqRefiner,
        ExpertRole::NormGenFull,
        ExpertRole::Judge,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ExpertRole::ActionGenContext => "action_gen_context",
            ExpertRole::ActionClsContext => "action_cls_context",
            ExpertRole::ConseqGenContextAction => "conseq_gen_context_action",
            ExpertRole::ConseqClsContextAction => "conseq_cls_context_action",
            ExpertRole::ActionGenContextConseq => "action_gen_context_conseq",
            ExpertRole::ActionClsContextConseq => "action_cls_context_conseq",
            ExpertRole::ConseqRefiner => "conseq_refiner",
            ExpertRole::NormGenFull => "norm_gen_full",
            ExpertRole::Judge => "judge",
        }
    }

    pub fn is_generator(self) -> bool {
        matches!(
            self,
            ExpertRole::ActionGenContext
                | ExpertRole::ConseqGenContextAction
                | ExpertRole::ActionGenContextConseq
                | ExpertRole::ConseqRefiner
                | ExpertRole::NormGenFull
        )
    }

    pub fn is_classifier(self) -> bool {
        !self.is_generator()
    }
}

impl fmt::Display for ExpertRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ExpertRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExpertRole::ALL
            .into_iter()
            .find(|r| r.tag() == s)
            .ok_or_else(|| format!("unknown expert role `{s}`"))
    }
}

/// A backend that samples continuations of a prompt.
pub trait Generator: Send + Sync {
    /// Returns the raw candidate texts. Implementations should honor
    /// `decode.n`; [`generate`] rejects short responses.
    fn generate_texts(&self, prompt: &str, decode: &DecodeParams) -> Result<Vec<String>, ProviderError>;
}

/// A backend that returns a label distribution for one input.
pub trait Classifier: Send + Sync {
    fn classify_raw(&self, text: &str, labels: &[&str]) -> Result<ClassDistribution, ProviderError>;
}

/// A backend that maps texts to vectors.
pub trait Embedder: Send + Sync {
    fn embed_raw(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError>;
}

/// Samples exactly `decode.n` candidates, indexed `0..n`.
pub fn generate(backend: &dyn Generator, prompt: &str, decode: &DecodeParams) -> Result<Vec<Candidate>, ProviderError> {
    let texts = backend.generate_texts(prompt, decode)?;
    if texts.len() < decode.n {
        return Err(ProviderError::TooFewCandidates {
            expected: decode.n,
            got: texts.len(),
        });
    }
    Ok(texts
        .into_iter()
        .take(decode.n)
        .enumerate()
        .map(|(gen_index, text)| Candidate {
            text,
            gen_index,
            score: None,
        })
        .collect())
}

/// Classifies `text` and checks that the result is a distribution over
/// exactly `labels`.
pub fn classify(backend: &dyn Classifier, text: &str, labels: &[&str]) -> Result<ClassDistribution, ProviderError> {
    let dist = backend.classify_raw(text, labels)?;
    check_distribution(&dist, labels)?;
    Ok(dist)
}

pub(crate) fn check_distribution(dist: &ClassDistribution, labels: &[&str]) -> Result<(), ProviderError> {
    for label in dist.probs.keys() {
        if !labels.contains(&label.as_str()) {
            return Err(ProviderError::MalformedDistribution(format!(
                "unexpected label `{label}`"
            )));
        }
    }
    for label in labels {
        if !dist.probs.contains_key(*label) {
            return Err(ProviderError::MalformedDistribution(format!("missing label `{label}`")));
        }
    }
    let mut sum = 0.0;
    for (label, &p) in &dist.probs {
        if !p.is_finite() || !(0.0..=1.0 + PROB_TOLERANCE).contains(&p) {
            return Err(ProviderError::MalformedDistribution(format!(
                "probability of `{label}` out of range: {p}"
            )));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > PROB_TOLERANCE {
        return Err(ProviderError::MalformedDistribution(format!(
            "probabilities sum to {sum}"
        )));
    }
    Ok(())
}

/// Embeds a non-empty list of texts; all vectors share one dimension.
pub fn embed(backend: &dyn Embedder, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
    if texts.is_empty() {
        return Err(ProviderError::EmptyInput);
    }
    let vectors = backend.embed_raw(texts)?;
    if vectors.len() != texts.len() {
        return Err(ProviderError::VectorCount {
            expected: texts.len(),
            got: vectors.len(),
        });
    }
    let dim = vectors[0].len();
    for v in &vectors {
        if v.len() != dim {
            return Err(ProviderError::RaggedDimensions {
                expected: dim,
                got: v.len(),
            });
        }
    }
    Ok(vectors)
}

#[cfg(test)]
mod tests {
    use super::mock::*;
    use super::*;

    struct Fixed(Vec<String>);
    impl Generator for Fixed {
        fn generate_texts(&self, _: &str, _: &DecodeParams) -> Result<Vec<String>, ProviderError> {
            Ok(self.0.clone())
        }
    }

    struct Dist(Vec<(&'static str, f64)>);
    impl Classifier for Dist {
        fn classify_raw(&self, _: &str, _: &[&str]) -> Result<ClassDistribution, ProviderError> {
            Ok(ClassDistribution {
                probs: self.0.iter().map(|(l, p)| (l.to_string(), *p)).collect(),
            })
        }
    }

    struct Ragged;
    impl Embedder for Ragged {
        fn embed_raw(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
            Ok(texts.iter().enumerate().map(|(i, _)| vec![1.0; i + 1]).collect())
        }
    }

    #[test]
    fn echo_generates_indexed_candidates() {
        let d = DecodeParams {
            n: 3,
            ..Default::default()
        };
        let c = generate(&EchoGenerator, "hi", &d).unwrap();
        assert_eq!(c.iter().map(|c| c.gen_index).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(c.iter().all(|c| c.text == "hi" && c.score.is_none()));
    }

    #[test]
    fn short_response_is_an_error() {
        let d = DecodeParams {
            n: 3,
            ..Default::default()
        };
        let err = generate(&Fixed(vec!["a".into()]), "p", &d).unwrap_err();
        assert_eq!(err, ProviderError::TooFewCandidates { expected: 3, got: 1 });
    }

    #[test]
    fn unnormalized_distribution_rejected() {
        let err = classify(&Dist(vec![("moral", 0.5), ("immoral", 0.3)]), "x", &ACTION_LABELS).unwrap_err();
        assert!(matches!(err, ProviderError::MalformedDistribution(_)));
        let err = classify(&Dist(vec![("moral", 1.0)]), "x", &ACTION_LABELS).unwrap_err();
        assert!(matches!(err, ProviderError::MalformedDistribution(_)));
        assert!(classify(&Dist(vec![("moral", 0.25), ("immoral", 0.75)]), "x", &ACTION_LABELS).is_ok());
    }

    #[test]
    fn ragged_vectors_rejected() {
        let texts = vec!["a".to_string(), "b".to_string()];
        assert!(matches!(
            embed(&Ragged, &texts),
            Err(ProviderError::RaggedDimensions { expected: 1, got: 2 })
        ));
        assert_eq!(embed(&Ragged, &[]), Err(ProviderError::EmptyInput));
    }

    #[test]
    fn role_tags_round_trip() {
        for r in ExpertRole::ALL {
            assert_eq!(r.tag().parse::<ExpertRole>().unwrap(), r);
            assert_eq!(serde_json::to_string(&r).unwrap(), format!("\"{}\"", r.tag()));
        }
        assert!("nope".parse::<ExpertRole>().is_err());
    }
}
