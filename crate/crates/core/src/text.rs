//! Tokenization shared by reports and metrics.

/// Whitespace tokens of `s`, case preserved.
pub(crate) fn ws_tokens(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

/// Whitespace tokens of `s`, lowercased.
pub(crate) fn lower_tokens(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_lowercase).collect()
}
