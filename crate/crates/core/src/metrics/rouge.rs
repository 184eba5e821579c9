use super::EvalPair;
use crate::text::lower_tokens;

pub const ROUGE_BETA: f64 = 1.2;

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn f_lcs(hyp: &[String], reference: &[String]) -> f64 {
    let lcs = lcs_len(hyp, reference);
    if lcs == 0 {
        return 0.0;
    }
    let p = lcs as f64 / hyp.len() as f64;
    let r = lcs as f64 / reference.len() as f64;
    let b2 = ROUGE_BETA * ROUGE_BETA;
    (1.0 + b2) * p * r / (r + b2 * p)
}

/// Sentence-level ROUGE-L F-measure over lowercased whitespace tokens, best
/// over the references.
pub fn rouge_l(pair: &EvalPair) -> f64 {
    let hyp = lower_tokens(&pair.hypothesis);
    pair.references
        .iter()
        .map(|r| f_lcs(&hyp, &lower_tokens(r)))
        .fold(0.0, f64::max)
}
