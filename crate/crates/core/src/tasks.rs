//! Classification and generation samples.
//!
//! Classifier inputs use `<CLS>grounding<SEP>target<SEP>`, grounding pieces
//! joined by single spaces. Generator prompts are space-joined sequences of
//! `<|TOKEN|>` separators and story fields; see the `*_prompt` functions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Story, StoryField};

pub mod tokens {
    pub const CLS: &str = "<CLS>";
    pub const SEP: &str = "<SEP>";
    pub const NRM: &str = "<|NRM|>";
    pub const SIT: &str = "<|SIT|>";
    pub const INT: &str = "<|INT|>";
    pub const ACT: &str = "<|ACT|>";
    pub const CSQ: &str = "<|CSQ|>";
    pub const M_ACT: &str = "<|M_ACT|>";
    pub const I_ACT: &str = "<|I_ACT|>";
    pub const M_CSQ: &str = "<|M_CSQ|>";
    pub const I_CSQ: &str = "<|I_CSQ|>";
    pub const CSQ_PL: &str = "<|CSQ_PL|>";
    pub const CSQ_IMPL: &str = "<|CSQ_IMPL|>";

    /// Every reserved marker; story text may not contain any of them.
    pub const ALL: [&str; 13] = [
        CLS, SEP, NRM, SIT, INT, ACT, CSQ, M_ACT, I_ACT, M_CSQ, I_CSQ, CSQ_PL, CSQ_IMPL,
    ];

    /// Separators that may appear in generator prompts.
    pub const GENERATION: [&str; 11] = [NRM, SIT, INT, ACT, CSQ, M_ACT, I_ACT, M_CSQ, I_CSQ, CSQ_PL, CSQ_IMPL];
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaskError {
    #[error("setting `{setting}` is not defined for task `{task}`")]
    UnknownSetting { task: TaskKind, setting: String },
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("story `{story_id}`: field `{field}` contains reserved marker `{marker}`")]
    ReservedMarker {
        story_id: String,
        field: StoryField,
        marker: &'static str,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    ActionCls,
    ConseqCls,
    ActionGen,
    ConseqGen,
    NormGen,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] = [
        TaskKind::ActionCls,
        TaskKind::ConseqCls,
        TaskKind::ActionGen,
        TaskKind::ConseqGen,
        TaskKind::NormGen,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            TaskKind::ActionCls => "action_cls",
            TaskKind::ConseqCls => "conseq_cls",
            TaskKind::ActionGen => "action_gen",
            TaskKind::ConseqGen => "conseq_gen",
            TaskKind::NormGen => "norm_gen",
        }
    }

    /// The closed setting catalog of this task.
    pub fn settings(self) -> &'static [Setting] {
        use Setting::*;
        match self {
            TaskKind::ActionCls => &[Action, ActionNorm, ActionContext, ActionContextConsequence],
            TaskKind::ConseqCls => &[ConsequenceAction, ConsequenceContextAction],
            TaskKind::ActionGen => &[Context, ContextConsequence],
            TaskKind::ConseqGen => &[Action, ContextAction],
            TaskKind::NormGen => &[Actions, ContextActions, ContextActionsConsequences],
        }
    }

    pub fn is_classification(self) -> bool {
        matches!(self, TaskKind::ActionCls | TaskKind::ConseqCls)
    }

    /// Samples produced per story.
    pub fn samples_per_story(self) -> usize {
        match self {
            TaskKind::ActionCls | TaskKind::ActionGen | TaskKind::ConseqGen => 2,
            TaskKind::ConseqCls => 4,
            TaskKind::NormGen => 1,
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for TaskKind {
    type Err = TaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.replace('-', "_");
        TaskKind::ALL
            .into_iter()
            .find(|t| t.tag() == norm)
            .ok_or_else(|| TaskError::UnknownTask(s.to_string()))
    }
}

/// Grounding composition of a sample. Tags are unique across tasks; a tag
/// may be valid for more than one task (`action`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Setting {
    #[serde(rename = "action")]
    Action,
    #[serde(rename = "action+norm")]
    ActionNorm,
    #[serde(rename = "action+context")]
    ActionContext,
    #[serde(rename = "action+context+consequence")]
    ActionContextConsequence,
    #[serde(rename = "consequence+action")]
    ConsequenceAction,
    #[serde(rename = "consequence+context+action")]
    ConsequenceContextAction,
    #[serde(rename = "context")]
    Context,
    #[serde(rename = "context+consequence")]
    ContextConsequence,
    #[serde(rename = "context+action")]
    ContextAction,
    #[serde(rename = "actions")]
    Actions,
    #[serde(rename = "context+actions")]
    ContextActions,
    #[serde(rename = "context+actions+consequences")]
    ContextActionsConsequences,
}

impl Setting {
    const ALL: [Setting; 12] = [
        Setting::Action,
        Setting::ActionNorm,
        Setting::ActionContext,
        Setting::ActionContextConsequence,
        Setting::ConsequenceAction,
        Setting::ConsequenceContextAction,
        Setting::Context,
        Setting::ContextConsequence,
        Setting::ContextAction,
        Setting::Actions,
        Setting::ContextActions,
        Setting::ContextActionsConsequences,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Setting::Action => "action",
            Setting::ActionNorm => "action+norm",
            Setting::ActionContext => "action+context",
            Setting::ActionContextConsequence => "action+context+consequence",
            Setting::ConsequenceAction => "consequence+action",
            Setting::ConsequenceContextAction => "consequence+context+action",
            Setting::Context => "context",
            Setting::ContextConsequence => "context+consequence",
            Setting::ContextAction => "context+action",
            Setting::Actions => "actions",
            Setting::ContextActions => "context+actions",
            Setting::ContextActionsConsequences => "context+actions+consequences",
        }
    }

    /// Parses a setting tag and checks it against the task's catalog.
    pub fn parse_for(task: TaskKind, tag: &str) -> Result<Setting, TaskError> {
        Setting::ALL
            .into_iter()
            .find(|s| s.tag() == tag && task.settings().contains(s))
            .ok_or_else(|| TaskError::UnknownSetting {
                task,
                setting: tag.to_string(),
            })
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    #[serde(rename = "moral")]
    Moral,
    #[serde(rename = "immoral")]
    Immoral,
    #[serde(rename = "n/a")]
    NotApplicable,
}

impl Orientation {
    pub fn tag(self) -> &'static str {
        match self {
            Orientation::Moral => "moral",
            Orientation::Immoral => "immoral",
            Orientation::NotApplicable => "n/a",
        }
    }

    pub fn opposite(self) -> Orientation {
        match self {
            Orientation::Moral => Orientation::Immoral,
            Orientation::Immoral => Orientation::Moral,
            Orientation::NotApplicable => Orientation::NotApplicable,
        }
    }

    fn id_tag(self) -> &'static str {
        match self {
            Orientation::NotApplicable => "na",
            o => o.tag(),
        }
    }
}

impl FromStr for Orientation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "moral" => Ok(Orientation::Moral),
            "immoral" => Ok(Orientation::Immoral),
            "n/a" | "na" => Ok(Orientation::NotApplicable),
            other => Err(format!("unknown orientation `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "positive")]
    Positive,
    #[serde(rename = "negative")]
    Negative,
    #[serde(rename = "n/a")]
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSample {
    pub sample_id: String,
    pub story_id: String,
    pub task: TaskKind,
    pub setting: Setting,
    pub orientation: Orientation,
    pub input_text: String,
    pub label: Label,
    pub target_text: String,
}

fn action(story: &Story, o: Orientation) -> &str {
    match o {
        Orientation::Immoral => &story.immoral_action,
        _ => &story.moral_action,
    }
}

fn consequence(story: &Story, o: Orientation) -> &str {
    match o {
        Orientation::Immoral => &story.immoral_consequence,
        _ => &story.moral_consequence,
    }
}

fn act_token(o: Orientation) -> &'static str {
    match o {
        Orientation::Immoral => tokens::I_ACT,
        _ => tokens::M_ACT,
    }
}

fn csq_token(o: Orientation) -> &'static str {
    match o {
        Orientation::Immoral => tokens::I_CSQ,
        _ => tokens::M_CSQ,
    }
}

/// `<CLS>grounding<SEP>target<SEP>` with grounding pieces space-joined.
pub fn classification_input(grounding: &[&str], target: &str) -> String {
    format!(
        "{}{}{}{}{}",
        tokens::CLS,
        grounding.join(" "),
        tokens::SEP,
        target,
        tokens::SEP
    )
}

/// Story context used to assemble prompts. `norm` is absent when the norm is
/// the quantity being predicted.
#[derive(Debug, Clone, Copy)]
pub struct PromptContext<'a> {
    pub norm: Option<&'a str>,
    pub situation: &'a str,
    pub intention: &'a str,
}

impl<'a> PromptContext<'a> {
    pub fn of(story: &'a Story) -> Self {
        PromptContext {
            norm: Some(&story.norm),
            situation: &story.situation,
            intention: &story.intention,
        }
    }

    fn push_into(&self, parts: &mut Vec<&'a str>) {
        if let Some(norm) = self.norm {
            parts.extend([tokens::NRM, norm]);
        }
        parts.extend([tokens::SIT, self.situation, tokens::INT, self.intention]);
    }

    /// Grounding pieces (norm, situation, intention) for classifier inputs.
    pub fn grounding(&self) -> Vec<&'a str> {
        self.norm.into_iter().chain([self.situation, self.intention]).collect()
    }
}

/// `<|NRM|> norm <|SIT|> situation <|INT|> intention <|M_ACT|>` (or `<|I_ACT|>`).
pub fn action_prompt(ctx: &PromptContext<'_>, orientation: Orientation) -> String {
    let mut parts = Vec::new();
    ctx.push_into(&mut parts);
    parts.push(act_token(orientation));
    parts.join(" ")
}

/// Context, then `<|M_CSQ|> consequence <|M_ACT|>` (or the immoral markers).
pub fn action_given_consequence_prompt(ctx: &PromptContext<'_>, consequence: &str, orientation: Orientation) -> String {
    let mut parts = Vec::new();
    ctx.push_into(&mut parts);
    parts.extend([csq_token(orientation), consequence, act_token(orientation)]);
    parts.join(" ")
}

/// `<|ACT|> action <|CSQ|>`.
pub fn consequence_prompt(action: &str) -> String {
    [tokens::ACT, action, tokens::CSQ].join(" ")
}

/// Context, then `<|ACT|> action <|CSQ|>`.
pub fn consequence_in_context_prompt(ctx: &PromptContext<'_>, action: &str) -> String {
    let mut parts = Vec::new();
    ctx.push_into(&mut parts);
    parts.extend([tokens::ACT, action, tokens::CSQ]);
    parts.join(" ")
}

/// Inputs for norm generation. Consequences are interleaved when given.
pub fn norm_prompt(
    situation_intention: Option<(&str, &str)>,
    moral_action: &str,
    immoral_action: &str,
    consequences: Option<(&str, &str)>,
) -> String {
    let mut parts = Vec::new();
    if let Some((sit, int)) = situation_intention {
        parts.extend([tokens::SIT, sit, tokens::INT, int]);
    }
    parts.extend([tokens::M_ACT, moral_action]);
    if let Some((mc, _)) = consequences {
        parts.extend([tokens::M_CSQ, mc]);
    }
    parts.extend([tokens::I_ACT, immoral_action]);
    if let Some((_, ic)) = consequences {
        parts.extend([tokens::I_CSQ, ic]);
    }
    parts.push(tokens::NRM);
    parts.join(" ")
}

/// Context, action and draft followed by the plausibility marker and a
/// trailing `<|CSQ|>`.
pub fn refinement_prompt(ctx: &PromptContext<'_>, action: &str, draft: &str, plausible: bool) -> String {
    let mut parts = Vec::new();
    ctx.push_into(&mut parts);
    parts.extend([
        tokens::ACT,
        action,
        tokens::CSQ,
        draft,
        if plausible { tokens::CSQ_PL } else { tokens::CSQ_IMPL },
        tokens::CSQ,
    ]);
    parts.join(" ")
}

fn check_story(story: &Story) -> Result<(), TaskError> {
    for field in StoryField::ALL {
        let text = story.field(field);
        if let Some(marker) = tokens::ALL.into_iter().find(|m| text.contains(m)) {
            return Err(TaskError::ReservedMarker {
                story_id: story.id.clone(),
                field,
                marker,
            });
        }
    }
    Ok(())
}

fn sorted(stories: &[Story]) -> Result<Vec<&Story>, TaskError> {
    let mut out: Vec<&Story> = stories.iter().collect();
    for s in &out {
        check_story(s)?;
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

fn sample_id(story: &Story, task: TaskKind, setting: Setting, o: Orientation, polarity: Option<Label>) -> String {
    let mut id = format!("{}:{}:{}:{}", story.id, task, setting, o.id_tag());
    match polarity {
        Some(Label::Positive) => id.push_str(":positive"),
        Some(Label::Negative) => id.push_str(":negative"),
        _ => {}
    }
    id
}

const PATHS: [Orientation; 2] = [Orientation::Moral, Orientation::Immoral];

/// Two samples per story, positive for the moral action.
pub fn build_action_cls(stories: &[Story], setting: Setting) -> Result<Vec<TaskSample>, TaskError> {
    let task = TaskKind::ActionCls;
    if !task.settings().contains(&setting) {
        return Err(TaskError::UnknownSetting {
            task,
            setting: setting.tag().into(),
        });
    }
    let mut out = Vec::with_capacity(stories.len() * 2);
    for story in sorted(stories)? {
        for o in PATHS {
            let target = action(story, o);
            let grounding: Vec<&str> = match setting {
                Setting::Action => vec![],
                Setting::ActionNorm => vec![&story.norm],
                Setting::ActionContext => vec![&story.norm, &story.situation, &story.intention],
                _ => vec![&story.norm, &story.situation, &story.intention, consequence(story, o)],
            };
            out.push(TaskSample {
                sample_id: sample_id(story, task, setting, o, None),
                story_id: story.id.clone(),
                task,
                setting,
                orientation: o,
                input_text: classification_input(&grounding, target),
                label: if o == Orientation::Moral {
                    Label::Positive
                } else {
                    Label::Negative
                },
                target_text: String::new(),
            });
        }
    }
    Ok(out)
}

/// Four samples per story: each action with its own consequence (positive)
/// and with the other action's consequence (negative).
pub fn build_conseq_cls(stories: &[Story], setting: Setting) -> Result<Vec<TaskSample>, TaskError> {
    let task = TaskKind::ConseqCls;
    if !task.settings().contains(&setting) {
        return Err(TaskError::UnknownSetting {
            task,
            setting: setting.tag().into(),
        });
    }
    let mut out = Vec::with_capacity(stories.len() * 4);
    for story in sorted(stories)? {
        for o in PATHS {
            for label in [Label::Positive, Label::Negative] {
                let act = action(story, o);
                let csq = match label {
                    Label::Positive => consequence(story, o),
                    _ => consequence(story, o.opposite()),
                };
                let grounding: Vec<&str> = match setting {
                    Setting::ConsequenceAction => vec![act],
                    _ => vec![&story.norm, &story.situation, &story.intention, act],
                };
                out.push(TaskSample {
                    sample_id: sample_id(story, task, setting, o, Some(label)),
                    story_id: story.id.clone(),
                    task,
                    setting,
                    orientation: o,
                    input_text: classification_input(&grounding, csq),
                    label,
                    target_text: String::new(),
                });
            }
        }
    }
    Ok(out)
}

/// Generation samples for `action_gen`, `conseq_gen` or `norm_gen`.
pub fn build_gen_samples(stories: &[Story], task: TaskKind, setting: Setting) -> Result<Vec<TaskSample>, TaskError> {
    if task.is_classification() || !task.settings().contains(&setting) {
        return Err(TaskError::UnknownSetting {
            task,
            setting: setting.tag().into(),
        });
    }
    let mut out = Vec::with_capacity(stories.len() * task.samples_per_story());
    for story in sorted(stories)? {
        let ctx = PromptContext::of(story);
        let mut push = |o: Orientation, input_text: String, target: &str| {
            out.push(TaskSample {
                sample_id: sample_id(story, task, setting, o, None),
                story_id: story.id.clone(),
                task,
                setting,
                orientation: o,
                input_text,
                label: Label::NotApplicable,
                target_text: target.to_string(),
            })
        };
        match task {
            TaskKind::ActionGen => {
                for o in PATHS {
                    let input = match setting {
                        Setting::Context => action_prompt(&ctx, o),
                        _ => action_given_consequence_prompt(&ctx, consequence(story, o), o),
                    };
                    push(o, input, action(story, o));
                }
            }
            TaskKind::ConseqGen => {
                for o in PATHS {
                    let input = match setting {
                        Setting::Action => consequence_prompt(action(story, o)),
                        _ => consequence_in_context_prompt(&ctx, action(story, o)),
                    };
                    push(o, input, consequence(story, o));
                }
            }
            _ => {
                let si = (setting != Setting::Actions).then_some((story.situation.as_str(), story.intention.as_str()));
                let cs = (setting == Setting::ContextActionsConsequences)
                    .then_some((story.moral_consequence.as_str(), story.immoral_consequence.as_str()));
                let input = norm_prompt(si, &story.moral_action, &story.immoral_action, cs);
                push(Orientation::NotApplicable, input, &story.norm);
            }
        }
    }
    Ok(out)
}

/// Dispatches to the builder for `task`.
pub fn build_samples(stories: &[Story], task: TaskKind, setting: Setting) -> Result<Vec<TaskSample>, TaskError> {
    match task {
        TaskKind::ActionCls => build_action_cls(stories, setting),
        TaskKind::ConseqCls => build_conseq_cls(stories, setting),
        _ => build_gen_samples(stories, task, setting),
    }
}

/// Splits a generator prompt into `(marker, text)` pairs; text before the
/// first marker is reported with an empty marker.
pub fn split_prompt(prompt: &str) -> Vec<(&'static str, String)> {
    let mut out: Vec<(&'static str, String)> = Vec::new();
    let mut current: (&'static str, String) = ("", String::new());
    let mut rest = prompt;
    loop {
        let next = tokens::GENERATION
            .iter()
            .filter_map(|t| rest.find(t).map(|pos| (pos, *t)))
            .min_by_key(|(pos, t)| (*pos, std::cmp::Reverse(t.len())));
        match next {
            Some((pos, tok)) => {
                current.1.push_str(&rest[..pos]);
                let text = current.1.trim().to_string();
                if !current.0.is_empty() || !text.is_empty() {
                    out.push((current.0, text));
                }
                current = (tok, String::new());
                rest = &rest[pos + tok.len()..];
            }
            None => {
                current.1.push_str(rest);
                let text = current.1.trim().to_string();
                if !current.0.is_empty() || !text.is_empty() {
                    out.push((current.0, text));
                }
                return out;
            }
        }
    }
}

/// Recovers `(grounding, target)` from a classifier input.
pub fn split_classification_input(input: &str) -> Option<(&str, &str)> {
    let body = input.strip_prefix(tokens::CLS)?.strip_suffix(tokens::SEP)?;
    let mut parts = body.split(tokens::SEP);
    let grounding = parts.next()?;
    let target = parts.next()?;
    parts.next().is_none().then_some((grounding, target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::sample_story;
    use proptest::prelude::*;

    fn stories(n: usize) -> Vec<Story> {
        (0..n).map(|i| sample_story(&format!("s{i:05}"))).collect()
    }

    #[test]
    fn per_story_multipliers() {
        let s = stories(7);
        for task in TaskKind::ALL {
            for &setting in task.settings() {
                let n = build_samples(&s, task, setting).unwrap().len();
                assert_eq!(n, 7 * task.samples_per_story(), "{task} {setting}");
            }
        }
    }

    #[test]
    fn action_only_setting_has_empty_grounding() {
        let s = sample_story("a");
        let out = build_action_cls(std::slice::from_ref(&s), Setting::Action).unwrap();
        assert_eq!(out[0].input_text, format!("<CLS><SEP>{}<SEP>", s.moral_action));
        assert_eq!(out[0].label, Label::Positive);
        assert_eq!(out[1].label, Label::Negative);
        assert!(out.iter().all(|x| x.target_text.is_empty()));
    }

    #[test]
    fn norm_grounding_shared_across_paths() {
        let s = sample_story("a");
        let out = build_action_cls(std::slice::from_ref(&s), Setting::ActionNorm).unwrap();
        assert_eq!(out[0].input_text, "<CLS>Be kind.<SEP>Ann helps pick them up.<SEP>");
        assert_eq!(out[1].input_text, "<CLS>Be kind.<SEP>Ann walks past laughing.<SEP>");
        assert_ne!(out[0].label, out[1].label);
    }

    #[test]
    fn full_action_grounding_uses_own_consequence() {
        let s = sample_story("a");
        let out = build_action_cls(std::slice::from_ref(&s), Setting::ActionContextConsequence).unwrap();
        let (g, t) = split_classification_input(&out[1].input_text).unwrap();
        assert_eq!(t, s.immoral_action);
        assert!(g.ends_with(&s.immoral_consequence));
        assert!(g.starts_with("Be kind. Ann sees"));
    }

    #[test]
    fn swapped_consequences_are_negative() {
        let s = sample_story("a");
        let out = build_conseq_cls(std::slice::from_ref(&s), Setting::ConsequenceAction).unwrap();
        assert_eq!(out.iter().filter(|x| x.label == Label::Positive).count(), 2);
        let neg = out
            .iter()
            .find(|x| x.orientation == Orientation::Moral && x.label == Label::Negative)
            .unwrap();
        assert_eq!(
            neg.input_text,
            format!("<CLS>{}<SEP>{}<SEP>", s.moral_action, s.immoral_consequence)
        );
        assert_eq!(neg.sample_id, "a:conseq_cls:consequence+action:moral:negative");
    }

    #[test]
    fn generation_templates_verbatim() {
        let s = sample_story("a");
        let one = std::slice::from_ref(&s);
        let g = build_gen_samples(one, TaskKind::ConseqGen, Setting::Action).unwrap();
        assert_eq!(g[0].input_text, "<|ACT|> Ann helps pick them up. <|CSQ|>");
        assert_eq!(g[0].target_text, s.moral_consequence);
        assert_eq!(g[0].sample_id, "a:conseq_gen:action:moral");

        let g = build_gen_samples(one, TaskKind::ActionGen, Setting::Context).unwrap();
        assert_eq!(
            g[1].input_text,
            "<|NRM|> Be kind. <|SIT|> Ann sees a stranger drop groceries. <|INT|> Ann wants to get home fast. <|I_ACT|>"
        );
        assert_eq!(g[1].target_text, s.immoral_action);

        let g = build_gen_samples(one, TaskKind::ActionGen, Setting::ContextConsequence).unwrap();
        assert!(g[0]
            .input_text
            .ends_with("<|M_CSQ|> The stranger thanks Ann. <|M_ACT|>"));

        let g = build_gen_samples(one, TaskKind::ConseqGen, Setting::ContextAction).unwrap();
        assert_eq!(
            g[0].input_text,
            "<|NRM|> Be kind. <|SIT|> Ann sees a stranger drop groceries. <|INT|> Ann wants to get home fast. <|ACT|> Ann helps pick them up. <|CSQ|>"
        );

        let g = build_gen_samples(one, TaskKind::NormGen, Setting::Actions).unwrap();
        assert_eq!(
            g[0].input_text,
            "<|M_ACT|> Ann helps pick them up. <|I_ACT|> Ann walks past laughing. <|NRM|>"
        );
        assert_eq!(g[0].target_text, "Be kind.");
        assert_eq!(g[0].orientation, Orientation::NotApplicable);
        assert_eq!(g[0].sample_id, "a:norm_gen:actions:na");

        let g = build_gen_samples(one, TaskKind::NormGen, Setting::ContextActionsConsequences).unwrap();
        assert_eq!(
            g[0].input_text,
            "<|SIT|> Ann sees a stranger drop groceries. <|INT|> Ann wants to get home fast. \
             <|M_ACT|> Ann helps pick them up. <|M_CSQ|> The stranger thanks Ann. \
             <|I_ACT|> Ann walks past laughing. <|I_CSQ|> The stranger feels humiliated. <|NRM|>"
        );
    }

    #[test]
    fn refinement_template() {
        let s = sample_story("a");
        let ctx = PromptContext::of(&s);
        let p = refinement_prompt(&ctx, "acts", "draft text", true);
        assert!(p.ends_with("<|ACT|> acts <|CSQ|> draft text <|CSQ_PL|> <|CSQ|>"));
        let p = refinement_prompt(&ctx, "acts", "draft text", false);
        assert!(p.ends_with("<|CSQ_IMPL|> <|CSQ|>"));
    }

    #[test]
    fn unknown_setting_rejected() {
        let s = stories(1);
        assert!(matches!(
            build_action_cls(&s, Setting::Context),
            Err(TaskError::UnknownSetting { .. })
        ));
        assert!(Setting::parse_for(TaskKind::ConseqCls, "action").is_err());
        assert_eq!(
            Setting::parse_for(TaskKind::ConseqGen, "action").unwrap(),
            Setting::Action
        );
        assert!(build_gen_samples(&s, TaskKind::ActionCls, Setting::Action).is_err());
    }

    #[test]
    fn reserved_markers_rejected() {
        let mut s = sample_story("a");
        s.situation = "He typed <|NRM|> by accident.".into();
        assert!(matches!(
            build_action_cls(&[s], Setting::Action),
            Err(TaskError::ReservedMarker {
                field: StoryField::Situation,
                ..
            })
        ));
    }

    #[test]
    fn output_sorted_by_story_id() {
        let s = vec![sample_story("b"), sample_story("a")];
        let out = build_action_cls(&s, Setting::Action).unwrap();
        let ids: Vec<&str> = out.iter().map(|x| x.story_id.as_str()).collect();
        assert_eq!(ids, vec!["a", "a", "b", "b"]);
    }

    fn arb_field() -> impl Strategy<Value = String> {
        "[a-zA-Z][a-zA-Z ,.!?']{0,20}[a-z.]"
    }

    fn arb_story() -> impl Strategy<Value = Story> {
        prop::collection::vec(arb_field(), 7).prop_map(|f| Story {
            id: "x".into(),
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
        fn generation_prompts_parse_back(s in arb_story()) {
            let g = build_gen_samples(std::slice::from_ref(&s), TaskKind::NormGen, Setting::ContextActionsConsequences).unwrap();
            let parts = split_prompt(&g[0].input_text);
            let expected: Vec<(&str, String)> = vec![
                (tokens::SIT, s.situation.trim().into()),
                (tokens::INT, s.intention.trim().into()),
                (tokens::M_ACT, s.moral_action.trim().into()),
                (tokens::M_CSQ, s.moral_consequence.trim().into()),
                (tokens::I_ACT, s.immoral_action.trim().into()),
                (tokens::I_CSQ, s.immoral_consequence.trim().into()),
                (tokens::NRM, String::new()),
            ];
            prop_assert_eq!(parts, expected);

            let g = build_gen_samples(std::slice::from_ref(&s), TaskKind::ActionGen, Setting::ContextConsequence).unwrap();
            let parts = split_prompt(&g[1].input_text);
            prop_assert_eq!(parts[0].clone(), (tokens::NRM, s.norm.trim().to_string()));
            prop_assert_eq!(parts[3].clone(), (tokens::I_CSQ, s.immoral_consequence.trim().to_string()));
            prop_assert_eq!(parts[4].clone(), (tokens::I_ACT, String::new()));
        }

        #[test]
        fn classification_inputs_parse_back(s in arb_story()) {
            let out = build_conseq_cls(std::slice::from_ref(&s), Setting::ConsequenceAction).unwrap();
            for sample in &out {
                let (g, t) = split_classification_input(&sample.input_text).unwrap();
                let act = if sample.orientation == Orientation::Moral { &s.moral_action } else { &s.immoral_action };
                prop_assert_eq!(g, act.as_str());
                let own = if sample.orientation == Orientation::Moral { &s.moral_consequence } else { &s.immoral_consequence };
                prop_assert_eq!(t == own.as_str(), sample.label == Label::Positive || s.moral_consequence == s.immoral_consequence);
            }
            let pos = out.iter().filter(|x| x.label == Label::Positive).count();
            prop_assert_eq!(pos * 2, out.len());
        }
    }
}
