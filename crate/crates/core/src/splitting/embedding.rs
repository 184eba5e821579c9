//! Norm embedding through an [`Embedder`] backend.

use std::collections::HashMap;

use super::{EmbeddingVector, SplitError};
use crate::corpus::Story;
use crate::exec::Exec;
use crate::providers::{embed, Embedder};

/// Texts per embed request.
pub const EMBED_BATCH: usize = 64;

/// One vector per story, in story order. Each distinct norm text is
/// embedded once, so identical norms share a vector.
pub fn embed_norms(
    stories: &[Story],
    embedder: &dyn Embedder,
    exec: Exec,
) -> Result<Vec<(String, EmbeddingVector)>, SplitError> {
    let mut unique: Vec<String> = Vec::new();
    let mut slot: HashMap<&str, usize> = HashMap::new();
    let mut owner: Vec<&str> = Vec::new();
    for s in stories {
        if !slot.contains_key(s.norm.as_str()) {
            slot.insert(&s.norm, unique.len());
            unique.push(s.norm.clone());
            owner.push(&s.id);
        }
    }
    let batches: Vec<(usize, &[String])> = unique
        .chunks(EMBED_BATCH)
        .enumerate()
        .map(|(b, chunk)| (b * EMBED_BATCH, chunk))
        .collect();
    let results = exec.try_map(&batches, |&(offset, chunk)| {
        embed(embedder, chunk).map_err(|source| SplitError::Provider {
            story_id: owner[offset].to_string(),
            source,
        })
    })?;
    let vectors: Vec<EmbeddingVector> = results.into_iter().flatten().collect();
    if let Some(first) = vectors.first() {
        let dim = first.len();
        if let Some(i) = vectors.iter().position(|v| v.len() != dim) {
            return Err(SplitError::DimensionMismatch {
                id: owner[i].to_string(),
                expected: dim,
                got: vectors[i].len(),
            });
        }
    }
    Ok(stories
        .iter()
        .map(|s| (s.id.clone(), vectors[slot[s.norm.as_str()]].clone()))
        .collect())
}
