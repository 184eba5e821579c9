use std::collections::HashMap;

use super::{EvalPair, MetricError};
use crate::text::ws_tokens;

const MAX_ORDER: usize = 4;

fn ngram_counts<'a, 'b>(tokens: &'b [&'a str], n: usize) -> HashMap<&'b [&'a str], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

#[derive(Default)]
struct Stats {
    matches: [usize; MAX_ORDER],
    totals: [usize; MAX_ORDER],
    hyp_len: usize,
    ref_len: usize,
}

fn pair_stats(pair: &EvalPair) -> Stats {
    let hyp = ws_tokens(&pair.hypothesis);
    let refs: Vec<Vec<&str>> = pair.references.iter().map(|r| ws_tokens(r)).collect();
    let mut st = Stats {
        hyp_len: hyp.len(),
        ..Stats::default()
    };
    // closest reference length, shorter on ties
    st.ref_len = refs
        .iter()
        .map(|r| r.len())
        .min_by_key(|&len| (len.abs_diff(hyp.len()), len))
        .unwrap_or(0);
    for n in 1..=MAX_ORDER {
        let hyp_counts = ngram_counts(&hyp, n);
        let mut max_ref: HashMap<&[&str], usize> = HashMap::new();
        for r in &refs {
            for (g, c) in ngram_counts(r, n) {
                let e = max_ref.entry(g).or_insert(0);
                *e = (*e).max(c);
            }
        }
        st.totals[n - 1] = hyp.len().saturating_sub(n - 1);
        st.matches[n - 1] = hyp_counts
            .iter()
            .map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0)))
            .sum();
    }
    st
}

/// Corpus-level BLEU-4 on a 0..100 scale: clipped n-gram precisions pooled
/// over all pairs, uniform geometric mean, brevity penalty. Tokens are
/// whitespace-separated and case-sensitive. Any order without a match
/// scores 0.
pub fn corpus_bleu(pairs: &[EvalPair]) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::NoHypotheses);
    }
    let mut total = Stats::default();
    for (i, p) in pairs.iter().enumerate() {
        if p.references.is_empty() {
            return Err(MetricError::NoReferences(i));
        }
        let st = pair_stats(p);
        for n in 0..MAX_ORDER {
            total.matches[n] += st.matches[n];
            total.totals[n] += st.totals[n];
        }
        total.hyp_len += st.hyp_len;
        total.ref_len += st.ref_len;
    }
    if total.matches.contains(&0) {
        return Ok(0.0);
    }
    let log_p: f64 = (0..MAX_ORDER)
        .map(|n| (total.matches[n] as f64 / total.totals[n] as f64).ln())
        .sum::<f64>()
        / MAX_ORDER as f64;
    let (c, r) = (total.hyp_len as f64, total.ref_len as f64);
    let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    Ok(100.0 * bp * log_p.exp())
}
