//! Seven-part branching narratives and their line-delimited record format.
//!
//! Each line of a corpus file is one JSON object with the keys `id`, `norm`,
//! `situation`, `intention`, `moral_action`, `moral_consequence`,
//! `immoral_action` and `immoral_consequence`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::ws_tokens;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: missing field `{field}`")]
    MissingField { line: usize, field: &'static str },
    #[error("line {line}: field `{field}` violates rule `{rule}`")]
    Invalid {
        line: usize,
        field: &'static str,
        rule: Rule,
    },
    #[error("line {line}: duplicate story id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("corpus is empty")]
    Empty,
}

/// One narrative: a shared context and two divergent paths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Story {
    pub id: String,
    pub norm: String,
    pub situation: String,
    pub intention: String,
    pub moral_action: String,
    pub moral_consequence: String,
    pub immoral_action: String,
    pub immoral_consequence: String,
}

/// The seven narrative fields (everything except `id`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoryField {
    Norm,
    Situation,
    Intention,
    MoralAction,
    MoralConsequence,
    ImmoralAction,
    ImmoralConsequence,
}

impl StoryField {
    pub const ALL: [StoryField; 7] = [
        StoryField::Norm,
        StoryField::Situation,
        StoryField::Intention,
        StoryField::MoralAction,
        StoryField::MoralConsequence,
        StoryField::ImmoralAction,
        StoryField::ImmoralConsequence,
    ];

    pub fn key(self) -> &'static str {
        match self {
            StoryField::Norm => "norm",
            StoryField::Situation => "situation",
            StoryField::Intention => "intention",
            StoryField::MoralAction => "moral_action",
            StoryField::MoralConsequence => "moral_consequence",
            StoryField::ImmoralAction => "immoral_action",
            StoryField::ImmoralConsequence => "immoral_consequence",
        }
    }
}

impl fmt::Display for StoryField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl Story {
    pub fn field(&self, field: StoryField) -> &str {
        match field {
            StoryField::Norm => &self.norm,
            StoryField::Situation => &self.situation,
            StoryField::Intention => &self.intention,
            StoryField::MoralAction => &self.moral_action,
            StoryField::MoralConsequence => &self.moral_consequence,
            StoryField::ImmoralAction => &self.immoral_action,
            StoryField::ImmoralConsequence => &self.immoral_consequence,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    NonEmpty,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::NonEmpty => f.write_str("non-empty"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: &'static str,
    pub rule: Rule,
}

/// Checks the per-story invariants. An empty result means the story is valid.
pub fn validate_story(story: &Story) -> Vec<Violation> {
    let mut out = Vec::new();
    if story.id.trim().is_empty() {
        out.push(Violation {
            field: "id",
            rule: Rule::NonEmpty,
        });
    }
    for f in StoryField::ALL {
        if story.field(f).trim().is_empty() {
            out.push(Violation {
                field: f.key(),
                rule: Rule::NonEmpty,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Context,
    MoralPath,
    ImmoralPath,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SegmentView<'a> {
    pub kind: SegmentKind,
    pub sentences: Vec<&'a str>,
}

pub fn segment(story: &Story, kind: SegmentKind) -> SegmentView<'_> {
    let sentences = match kind {
        SegmentKind::Context => vec![story.norm.as_str(), story.situation.as_str(), story.intention.as_str()],
        SegmentKind::MoralPath => vec![story.moral_action.as_str(), story.moral_consequence.as_str()],
        SegmentKind::ImmoralPath => vec![story.immoral_action.as_str(), story.immoral_consequence.as_str()],
    };
    SegmentView { kind, sentences }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusReport {
    pub story_count: usize,
    pub mean_tokens_per_category: BTreeMap<StoryField, f64>,
}

/// Mean whitespace-token length of each narrative field.
pub fn corpus_report(stories: &[Story]) -> Result<CorpusReport, CorpusError> {
    if stories.is_empty() {
        return Err(CorpusError::Empty);
    }
    let n = stories.len() as f64;
    let mean_tokens_per_category = StoryField::ALL
        .iter()
        .map(|&f| {
            let total: usize = stories.iter().map(|s| ws_tokens(s.field(f)).len()).sum();
            (f, total as f64 / n)
        })
        .collect();
    Ok(CorpusReport {
        story_count: stories.len(),
        mean_tokens_per_category,
    })
}

const KEYS: [&str; 8] = [
    "id",
    "norm",
    "situation",
    "intention",
    "moral_action",
    "moral_consequence",
    "immoral_action",
    "immoral_consequence",
];

/// Parses and validates one JSONL record; `line_no` only labels errors.
pub fn parse_record(line_no: usize, line: &str) -> Result<Story, CorpusError> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
        line: line_no,
        message: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| CorpusError::Malformed {
        line: line_no,
        message: "record is not an object".into(),
    })?;
    for key in KEYS {
        match obj.get(key) {
            None | Some(serde_json::Value::Null) => {
                return Err(CorpusError::MissingField {
                    line: line_no,
                    field: key,
                })
            }
            Some(serde_json::Value::String(_)) => {}
            Some(_) => {
                return Err(CorpusError::Malformed {
                    line: line_no,
                    message: format!("field `{key}` is not a string"),
                })
            }
        }
    }
    let story: Story = serde_json::from_value(value).map_err(|e| CorpusError::Malformed {
        line: line_no,
        message: e.to_string(),
    })?;
    if let Some(v) = validate_story(&story).into_iter().next() {
        return Err(CorpusError::Invalid {
            line: line_no,
            field: v.field,
            rule: v.rule,
        });
    }
    Ok(story)
}

/// Reads stories from any line-delimited source. Blank lines are skipped;
/// line numbers in errors are 1-based.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<Story>, CorpusError> {
    let mut stories = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| CorpusError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let story = parse_record(line_no, &line)?;
        if !seen.insert(story.id.clone()) {
            return Err(CorpusError::DuplicateId {
                line: line_no,
                id: story.id,
            });
        }
        stories.push(story);
    }
    Ok(stories)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Story>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_corpus(BufReader::new(file))
}

pub fn write_corpus<W: Write>(mut writer: W, stories: &[Story]) -> std::io::Result<()> {
    for s in stories {
        serde_json::to_writer(&mut writer, s)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn save_corpus(path: impl AsRef<Path>, stories: &[Story]) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let io_err = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_corpus(BufWriter::new(file), stories).map_err(io_err)
}

#[cfg(test)]
pub(crate) fn sample_story(id: &str) -> Story {
    Story {
        id: id.into(),
        norm: "Be kind.".into(),
        situation: "Ann sees a stranger drop groceries.".into(),
        intention: "Ann wants to get home fast.".into(),
        moral_action: "Ann helps pick them up.".into(),
        moral_consequence: "The stranger thanks Ann.".into(),
        immoral_action: "Ann walks past laughing.".into(),
        immoral_consequence: "The stranger feels humiliated.".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(s: &Story) -> String {
        serde_json::to_string(s).unwrap()
    }

    #[test]
    fn loads_single_record() {
        let s = sample_story("s1");
        let stories = read_corpus(line(&s).as_bytes()).unwrap();
        assert_eq!(stories, vec![s]);
    }

    #[test]
    fn missing_norm_names_field_and_line() {
        let mut v: serde_json::Value = serde_json::to_value(sample_story("s1")).unwrap();
        v.as_object_mut().unwrap().remove("norm");
        let text = format!("{}\n{}", line(&sample_story("s0")), v);
        match read_corpus(text.as_bytes()) {
            Err(CorpusError::MissingField { line, field }) => {
                assert_eq!(line, 2);
                assert_eq!(field, "norm");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_id_rejected() {
        let text = format!("{}\n{}\n", line(&sample_story("s1")), line(&sample_story("s1")));
        assert!(matches!(
            read_corpus(text.as_bytes()),
            Err(CorpusError::DuplicateId { line: 2, .. })
        ));
    }

    #[test]
    fn malformed_json_reports_line() {
        let text = format!("{}\n{{not json\n", line(&sample_story("s1")));
        assert!(matches!(
            read_corpus(text.as_bytes()),
            Err(CorpusError::Malformed { line: 2, .. })
        ));
    }

    #[test]
    fn validation_cases() {
        assert!(validate_story(&sample_story("s")).is_empty());
        let mut s = sample_story("s");
        s.intention = String::new();
        assert_eq!(
            validate_story(&s),
            vec![Violation {
                field: "intention",
                rule: Rule::NonEmpty
            }]
        );
        let mut s = sample_story("s");
        s.norm = "  \t ".into();
        assert_eq!(validate_story(&s)[0].field, "norm");
    }

    #[test]
    fn segments() {
        let s = sample_story("s");
        assert_eq!(
            segment(&s, SegmentKind::Context).sentences,
            vec![s.norm.as_str(), &s.situation, &s.intention]
        );
        assert_eq!(
            segment(&s, SegmentKind::MoralPath).sentences,
            vec![s.moral_action.as_str(), &s.moral_consequence]
        );
        assert_eq!(
            segment(&s, SegmentKind::ImmoralPath).sentences,
            vec![s.immoral_action.as_str(), &s.immoral_consequence]
        );
    }

    #[test]
    fn report_means() {
        let s = sample_story("a");
        let r = corpus_report(std::slice::from_ref(&s)).unwrap();
        assert_eq!(r.mean_tokens_per_category[&StoryField::Norm], 2.0);

        let mut t = sample_story("b");
        t.norm = "You should be kind.".into();
        let r = corpus_report(&[s, t]).unwrap();
        assert_eq!(r.mean_tokens_per_category[&StoryField::Norm], 3.0);
        assert!(matches!(corpus_report(&[]), Err(CorpusError::Empty)));
    }

    fn arb_text() -> impl Strategy<Value = String> {
        "[a-zA-Z ,.'\"\\\\é]{0,12}"
    }

    fn arb_story() -> impl Strategy<Value = Story> {
        ("[a-z0-9]{1,6}", prop::collection::vec(arb_text(), 7)).prop_map(|(id, f)| Story {
            id,
            norm: f[0].clone(),
            situation: f[1].clone(),
            intention: f[2].clone(),
            moral_action: f[3].clone(),
            moral_consequence: f[4].clone(),
            immoral_action: f[5].clone(),
            immoral_consequence: f[6].clone(),
        })
    }

    proptest! {
        #[test]
        fn validate_agrees_with_loader(s in arb_story()) {
            let accepted = read_corpus(line(&s).as_bytes()).is_ok();
            prop_assert_eq!(accepted, validate_story(&s).is_empty());
        }

        #[test]
        fn save_load_round_trip(stories in prop::collection::vec(arb_story(), 0..8)) {
            let mut seen = HashSet::new();
            let stories: Vec<Story> = stories
                .into_iter()
                .filter(|s| validate_story(s).is_empty() && seen.insert(s.id.clone()))
                .collect();
            let mut buf = Vec::new();
            write_corpus(&mut buf, &stories).unwrap();
            prop_assert_eq!(read_corpus(buf.as_slice()).unwrap(), stories);
        }

        #[test]
        fn segments_cover_each_field_once(s in arb_story()) {
            let all: Vec<&str> = [SegmentKind::Context, SegmentKind::MoralPath, SegmentKind::ImmoralPath]
                .into_iter()
                .flat_map(|k| segment(&s, k).sentences)
                .collect();
            let expected: Vec<&str> = StoryField::ALL.iter().map(|&f| s.field(f)).collect();
            prop_assert_eq!(all, expected);
        }
    }
}
