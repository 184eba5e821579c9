use std::collections::HashSet;

use super::MetricError;
use crate::text::lower_tokens;

/// Distinct over total 1- to 4-grams, pooled across all outputs.
pub fn joint_ngram_diversity<S: AsRef<str>>(outputs: &[S]) -> Result<f64, MetricError> {
    let mut distinct: HashSet<Vec<String>> = HashSet::new();
    let mut total = 0usize;
    for out in outputs {
        let toks = lower_tokens(out.as_ref());
        for n in 1..=4 {
            for w in toks.windows(n) {
                total += 1;
                distinct.insert(w.to_vec());
            }
        }
    }
    if total == 0 {
        return Err(MetricError::AllEmpty);
    }
    Ok(distinct.len() as f64 / total as f64)
}
