//! Deterministic in-process providers.
//!
//! Every mock is a pure function of its input and seed. The oracle pair
//! ([`OracleGenerator`], [`OracleClassifier`]) implements a synthetic world in
//! which constraint satisfaction is marked by sentinel tokens, so decoding
//! chains can be checked exactly without any neural model.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    ClassDistribution, Classifier, DecodeParams, Embedder, Generator, ProviderError, ACTION_LABELS, CONSEQ_LABELS,
};
use crate::seed;
use crate::tasks::tokens;

/// Marks an action that follows the norm.
pub const GOOD: &str = "@GOOD@";
/// Marks an action that violates the norm.
pub const BAD: &str = "@BAD@";
/// Marks a plausible consequence.
pub const PLAUSIBLE: &str = "@PLAUSIBLE@";
/// Marks an implausible consequence.
pub const IMPLAUSIBLE: &str = "@IMPLAUSIBLE@";

/// Returns the prompt verbatim for every requested candidate.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoGenerator;

impl Generator for EchoGenerator {
    fn generate_texts(&self, prompt: &str, decode: &DecodeParams) -> Result<Vec<String>, ProviderError> {
        Ok(vec![prompt.to_string(); decode.n])
    }
}

/// What the oracle generator is being asked for, read from the prompt's
/// trailing special token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptTarget {
    MoralAction,
    ImmoralAction,
    Consequence,
    Norm,
    Other,
}

pub fn prompt_target(prompt: &str) -> PromptTarget {
    let p = prompt.trim_end();
    if p.ends_with(tokens::M_ACT) {
        PromptTarget::MoralAction
    } else if p.ends_with(tokens::I_ACT) {
        PromptTarget::ImmoralAction
    } else if p.ends_with(tokens::CSQ) {
        PromptTarget::Consequence
    } else if p.ends_with(tokens::NRM) {
        PromptTarget::Norm
    } else {
        PromptTarget::Other
    }
}

/// Oracle-world generator.
///
/// Candidate `i` succeeds when the `i`-th uniform draw of a ChaCha8 stream
/// seeded with `seed::mix(decode.seed, prompt)` is below `success_rate`.
/// Successful actions carry the sentinel of the requested orientation,
/// failed ones the opposite sentinel; consequences carry [`PLAUSIBLE`] or
/// [`IMPLAUSIBLE`].
#[derive(Debug, Clone, Copy)]
pub struct OracleGenerator {
    pub success_rate: f64,
}

impl OracleGenerator {
    pub fn new(success_rate: f64) -> Self {
        OracleGenerator { success_rate }
    }
}

impl Generator for OracleGenerator {
    fn generate_texts(&self, prompt: &str, decode: &DecodeParams) -> Result<Vec<String>, ProviderError> {
        let target = prompt_target(prompt);
        let mut rng = ChaCha8Rng::seed_from_u64(seed::mix(decode.seed, prompt));
        Ok((0..decode.n)
            .map(|i| {
                let ok = rng.gen::<f64>() < self.success_rate;
                match target {
                    PromptTarget::MoralAction => {
                        format!("action {i} {}", if ok { GOOD } else { BAD })
                    }
                    PromptTarget::ImmoralAction => {
                        format!("action {i} {}", if ok { BAD } else { GOOD })
                    }
                    PromptTarget::Consequence => {
                        format!("consequence {i} {}", if ok { PLAUSIBLE } else { IMPLAUSIBLE })
                    }
                    PromptTarget::Norm => format!("norm {i}"),
                    PromptTarget::Other => format!("output {i}"),
                }
            })
            .collect())
    }
}

/// The classification target: the span between the first two `<SEP>`
/// markers, or the whole text when it is not in classifier format.
pub fn classification_target(text: &str) -> &str {
    let mut parts = text.splitn(3, tokens::SEP);
    match (parts.next(), parts.next()) {
        (Some(_), Some(target)) => target,
        _ => text,
    }
}

/// Oracle-world classifier reading sentinels from the classification target.
///
/// Decisive inputs get probability 1.0 on the sentinel's label; inputs
/// without a sentinel get a uniform distribution. With `accuracy < 1` the
/// two probabilities are swapped when a uniform draw from a ChaCha8 stream
/// seeded with `seed::mix(seed, text)` is at least `accuracy`.
#[derive(Debug, Clone, Copy)]
pub struct OracleClassifier {
    pub accuracy: f64,
    pub seed: u64,
}

impl OracleClassifier {
    pub fn perfect() -> Self {
        OracleClassifier { accuracy: 1.0, seed: 0 }
    }

    pub fn noisy(accuracy: f64, seed: u64) -> Self {
        OracleClassifier { accuracy, seed }
    }

    /// Whether this classifier flips its verdict on `text`.
    pub fn flips(&self, text: &str) -> bool {
        if self.accuracy >= 1.0 {
            return false;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed::mix(self.seed, text));
        rng.gen::<f64>() >= self.accuracy
    }
}

impl Classifier for OracleClassifier {
    fn classify_raw(&self, text: &str, labels: &[&str]) -> Result<ClassDistribution, ProviderError> {
        if labels.len() != 2 {
            return Err(ProviderError::Unsupported(format!(
                "oracle classifier is binary, got {} labels",
                labels.len()
            )));
        }
        let target = classification_target(text);
        let first = if labels == ACTION_LABELS {
            if target.contains(GOOD) {
                1.0
            } else if target.contains(BAD) {
                0.0
            } else {
                0.5
            }
        } else if labels == CONSEQ_LABELS {
            if target.contains(PLAUSIBLE) {
                1.0
            } else if target.contains(IMPLAUSIBLE) {
                0.0
            } else {
                0.5
            }
        } else {
            0.5
        };
        let first = if self.flips(text) { 1.0 - first } else { first };
        Ok(ClassDistribution {
            probs: [(labels[0].to_string(), first), (labels[1].to_string(), 1.0 - first)]
                .into_iter()
                .collect(),
        })
    }
}

/// Binary classifier whose posterior for the first label is computed by a
/// closure over the classification target.
pub struct FnClassifier<F>(pub F);

impl<F> Classifier for FnClassifier<F>
where
    F: Fn(&str) -> f64 + Send + Sync,
{
    fn classify_raw(&self, text: &str, labels: &[&str]) -> Result<ClassDistribution, ProviderError> {
        let p = (self.0)(classification_target(text));
        let mut probs = std::collections::BTreeMap::new();
        probs.insert(labels[0].to_string(), p);
        if let Some(second) = labels.get(1) {
            probs.insert(second.to_string(), 1.0 - p);
        }
        Ok(ClassDistribution { probs })
    }
}

/// Fails every call with a backend error.
#[derive(Debug, Clone, Default)]
pub struct FailingProvider {
    pub message: String,
}

impl Generator for FailingProvider {
    fn generate_texts(&self, _: &str, _: &DecodeParams) -> Result<Vec<String>, ProviderError> {
        Err(ProviderError::Backend(self.message.clone()))
    }
}

impl Classifier for FailingProvider {
    fn classify_raw(&self, _: &str, _: &[&str]) -> Result<ClassDistribution, ProviderError> {
        Err(ProviderError::Backend(self.message.clone()))
    }
}

impl Embedder for FailingProvider {
    fn embed_raw(&self, _: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        Err(ProviderError::Backend(self.message.clone()))
    }
}

/// Wraps a provider and counts generated candidates and classify calls.
#[derive(Debug, Default)]
pub struct Counting<P> {
    pub inner: P,
    generated: AtomicUsize,
    classified: AtomicUsize,
}

impl<P> Counting<P> {
    pub fn new(inner: P) -> Self {
        Counting {
            inner,
            generated: AtomicUsize::new(0),
            classified: AtomicUsize::new(0),
        }
    }

    pub fn generated(&self) -> usize {
        self.generated.load(Ordering::SeqCst)
    }

    pub fn classified(&self) -> usize {
        self.classified.load(Ordering::SeqCst)
    }
}

impl<P: Generator> Generator for Counting<P> {
    fn generate_texts(&self, prompt: &str, decode: &DecodeParams) -> Result<Vec<String>, ProviderError> {
        let out = self.inner.generate_texts(prompt, decode)?;
        self.generated.fetch_add(out.len(), Ordering::SeqCst);
        Ok(out)
    }
}

impl<P: Classifier> Classifier for Counting<P> {
    fn classify_raw(&self, text: &str, labels: &[&str]) -> Result<ClassDistribution, ProviderError> {
        self.classified.fetch_add(1, Ordering::SeqCst);
        self.inner.classify_raw(text, labels)
    }
}

/// Hashed character n-gram embedder.
///
/// Text is lowercased; each character n-gram adds 1.0 to bucket
/// `seed::mix(seed, gram) % dim`. Texts shorter than `n` characters embed
/// to the zero vector.
#[derive(Debug, Clone, Copy)]
pub struct HashedNgramEmbedder {
    pub dim: usize,
    pub n: usize,
    pub seed: u64,
}

impl HashedNgramEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        HashedNgramEmbedder { dim, n: 3, seed }
    }

    pub fn embed_one(&self, text: &str) -> Vec<f64> {
        let chars: Vec<char> = text.to_lowercase().chars().collect();
        let mut v = vec![0.0; self.dim];
        if self.n == 0 || chars.len() < self.n {
            return v;
        }
        for w in chars.windows(self.n) {
            let gram: String = w.iter().collect();
            v[(seed::mix(self.seed, &gram) % self.dim as u64) as usize] += 1.0;
        }
        v
    }
}

impl Embedder for HashedNgramEmbedder {
    fn embed_raw(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        if self.dim == 0 {
            return Err(ProviderError::Unsupported(
                "embedding dimension must be positive".into(),
            ));
        }
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

/// Looks vectors up in a fixed table; unknown texts are an error.
#[derive(Debug, Clone, Default)]
pub struct TableEmbedder {
    pub table: HashMap<String, Vec<f64>>,
}

impl Embedder for TableEmbedder {
    fn embed_raw(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        texts
            .iter()
            .map(|t| {
                self.table
                    .get(t)
                    .cloned()
                    .ok_or_else(|| ProviderError::Backend(format!("no vector for `{t}`")))
            })
            .collect()
    }
}
