//! Class-skewed lemmas and per-story bias scores.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::TargetField;
use crate::corpus::Story;

/// Maps a normalized (lowercased, punctuation-stripped) token to its lemma.
pub trait Lemmatizer: Send + Sync {
    fn lemma(&self, token: &str) -> String;
}

/// Leaves tokens unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityLemmatizer;

impl Lemmatizer for IdentityLemmatizer {
    fn lemma(&self, token: &str) -> String {
        token.to_string()
    }
}

/// Rule-based English suffix stripper for inflections
/// (`-ies`, `-es`, `-s`, `-ing`, `-ed`), undoubling a final consonant left
/// by `-ing`/`-ed` (`stopped` -> `stop`).
#[derive(Debug, Clone, Copy, Default)]
pub struct SuffixLemmatizer;

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u')
}

fn undouble(stem: &str) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 3 && b[n - 1] == b[n - 2] && !is_vowel(b[n - 1]) && !matches!(b[n - 1], b'l' | b's' | b'z') {
        stem[..n - 1].to_string()
    } else {
        stem.to_string()
    }
}

impl Lemmatizer for SuffixLemmatizer {
    fn lemma(&self, token: &str) -> String {
        let t = token;
        if !t.is_ascii() {
            return t.to_string();
        }
        let n = t.len();
        if n > 4 && t.ends_with("ies") {
            return format!("{}y", &t[..n - 3]);
        }
        if n >= 6 && t.ends_with("ing") {
            return undouble(&t[..n - 3]);
        }
        if n >= 5 && t.ends_with("ed") && !t.ends_with("eed") {
            return undouble(&t[..n - 2]);
        }
        if n >= 5
            && (t.ends_with("sses")
                || t.ends_with("xes")
                || t.ends_with("zes")
                || t.ends_with("ches")
                || t.ends_with("shes"))
        {
            return t[..n - 2].to_string();
        }
        if n >= 4 && t.ends_with('s') && !t.ends_with("ss") && !t.ends_with("us") && !t.ends_with("is") {
            return t[..n - 1].to_string();
        }
        t.to_string()
    }
}

/// Lemmas of the whitespace tokens of `text`, lowercased with leading and
/// trailing non-alphanumeric characters removed.
pub fn lemmas(text: &str, lemmatizer: &dyn Lemmatizer) -> Vec<String> {
    text.split_whitespace()
        .map(|tok| tok.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|tok| !tok.is_empty())
        .map(|tok| lemmatizer.lemma(&tok))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaEntry {
    pub lemma: String,
    pub moral_count: usize,
    pub immoral_count: usize,
    pub skew: usize,
}

/// Lemmas ordered by skew (descending), then total count (descending), then
/// lexicographically. Only lemmas with positive skew are listed.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LemmaBiasTable {
    pub target_field: Option<TargetField>,
    pub entries: Vec<LemmaEntry>,
}

impl LemmaBiasTable {
    pub fn lemma_set(&self) -> HashSet<&str> {
        self.entries.iter().map(|e| e.lemma.as_str()).collect()
    }
}

/// Counts lemma occurrences in the moral and immoral target texts and keeps
/// the `k` most skewed lemmas.
pub fn build_lemma_bias_table(
    stories: &[Story],
    lemmatizer: &dyn Lemmatizer,
    target: TargetField,
    k: usize,
) -> LemmaBiasTable {
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for s in stories {
        let (moral, immoral) = target.texts(s);
        for l in lemmas(moral, lemmatizer) {
            counts.entry(l).or_default().0 += 1;
        }
        for l in lemmas(immoral, lemmatizer) {
            counts.entry(l).or_default().1 += 1;
        }
    }
    let mut entries: Vec<LemmaEntry> = counts
        .into_iter()
        .map(|(lemma, (m, i))| LemmaEntry {
            lemma,
            moral_count: m,
            immoral_count: i,
            skew: m.abs_diff(i),
        })
        .filter(|e| e.skew > 0)
        .collect();
    entries.sort_by(|a, b| {
        b.skew
            .cmp(&a.skew)
            .then((b.moral_count + b.immoral_count).cmp(&(a.moral_count + a.immoral_count)))
            .then(a.lemma.cmp(&b.lemma))
    });
    entries.truncate(k);
    LemmaBiasTable {
        target_field: Some(target),
        entries,
    }
}

/// Occurrences of table lemmas across both target texts of `story`.
pub fn bias_score(story: &Story, table: &LemmaBiasTable, lemmatizer: &dyn Lemmatizer, target: TargetField) -> usize {
    bias_score_with(story, &table.lemma_set(), lemmatizer, target)
}

pub(crate) fn bias_score_with(
    story: &Story,
    set: &HashSet<&str>,
    lemmatizer: &dyn Lemmatizer,
    target: TargetField,
) -> usize {
    let (moral, immoral) = target.texts(story);
    lemmas(moral, lemmatizer)
        .iter()
        .chain(lemmas(immoral, lemmatizer).iter())
        .filter(|l| set.contains(l.as_str()))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::sample_story;
    use proptest::prelude::*;

    fn story(id: &str, moral: &str, immoral: &str) -> Story {
        let mut s = sample_story(id);
        s.moral_action = moral.into();
        s.immoral_action = immoral.into();
        s
    }

    fn table(lemmas: &[&str]) -> LemmaBiasTable {
        LemmaBiasTable {
            target_field: Some(TargetField::Actions),
            entries: lemmas
                .iter()
                .map(|l| LemmaEntry {
                    lemma: l.to_string(),
                    moral_count: 1,
                    immoral_count: 0,
                    skew: 1,
                })
                .collect(),
        }
    }

    #[test]
    fn suffix_rules() {
        let l = SuffixLemmatizer;
        for (tok, lemma) in [
            ("stealing", "steal"),
            ("steals", "steal"),
            ("stopped", "stop"),
            ("running", "run"),
            ("cries", "cry"),
            ("watches", "watch"),
            ("donates", "donate"),
            ("kiss", "kiss"),
            ("bus", "bus"),
            ("is", "is"),
            ("fed", "fed"),
            ("calling", "call"),
        ] {
            assert_eq!(l.lemma(tok), lemma, "{tok}");
        }
        assert_eq!(lemmas("Stealing, again!", &l), vec!["steal", "again"]);
    }

    #[test]
    fn maximally_skewed_lemma_heads_table() {
        let stories: Vec<Story> = (0..4)
            .map(|i| story(&format!("s{i}"), "He donates food.", "He keeps food."))
            .collect();
        let t = build_lemma_bias_table(&stories, &IdentityLemmatizer, TargetField::Actions, 10);
        // donates: 4/0, keeps: 0/4; tie on skew and total, lexicographic
        assert_eq!(t.entries[0].lemma, "donates");
        assert_eq!(t.entries[0].skew, t.entries[0].moral_count);
        assert_eq!(t.entries.len(), 2);
        assert!(t.entries.iter().all(|e| e.lemma != "he" && e.lemma != "food"));
    }

    #[test]
    fn hand_tabulated_counts() {
        // moral:   help x3 (s1 twice, s2), share x2, the x2
        // immoral: steal x4 (s1, s3 twice, s4), lie x1, the x3, help x1
        // skew ties break on total count: the (5) before lie (1)
        let stories = vec![
            story("s1", "help the help", "steal the"),
            story("s2", "help share", "lie"),
            story("s3", "share", "steal steal the"),
            story("s4", "the", "steal help the"),
            story("s5", "x", "x"),
            story("s6", "y", "y"),
        ];
        let t = build_lemma_bias_table(&stories, &IdentityLemmatizer, TargetField::Actions, 100);
        let got: Vec<(&str, usize, usize, usize)> = t
            .entries
            .iter()
            .map(|e| (e.lemma.as_str(), e.moral_count, e.immoral_count, e.skew))
            .collect();
        assert_eq!(
            got,
            vec![
                ("steal", 0, 4, 4),
                ("help", 3, 1, 2),
                ("share", 2, 0, 2),
                ("the", 2, 3, 1),
                ("lie", 0, 1, 1),
            ]
        );
        let t2 = build_lemma_bias_table(&stories, &IdentityLemmatizer, TargetField::Actions, 2);
        assert_eq!(t2.entries.len(), 2);
    }

    #[test]
    fn scores() {
        let t = table(&["steal", "praise"]);
        let s = story("a", "He will steal.", "steal it now");
        assert_eq!(bias_score(&s, &t, &IdentityLemmatizer, TargetField::Actions), 2);
        let s = story("b", "Nothing here.", "Nor here.");
        assert_eq!(bias_score(&s, &t, &IdentityLemmatizer, TargetField::Actions), 0);
        let s = story("c", "Stealing is wrong.", "He is Stealing.");
        assert_eq!(bias_score(&s, &t, &SuffixLemmatizer, TargetField::Actions), 2);
        assert_eq!(bias_score(&s, &t, &IdentityLemmatizer, TargetField::Actions), 0);
    }

    proptest! {
        #[test]
        fn table_is_order_invariant(
            texts in prop::collection::vec(("[a-c ]{1,12}", "[b-d ]{1,12}"), 1..12),
            rot in 0usize..12,
        ) {
            let stories: Vec<Story> = texts
                .iter()
                .enumerate()
                .map(|(i, (m, im))| story(&format!("s{i}"), m, im))
                .collect();
            let mut permuted = stories.clone();
            permuted.reverse();
            let r = rot % permuted.len();
            permuted.rotate_left(r);
            let a = build_lemma_bias_table(&stories, &IdentityLemmatizer, TargetField::Actions, 3);
            let b = build_lemma_bias_table(&permuted, &IdentityLemmatizer, TargetField::Actions, 3);
            prop_assert_eq!(a, b);
        }
    }
}
