//! Chain-of-experts decoding.
//!
//! Each strategy samples candidates from generator experts and keeps the
//! one a classifier expert scores highest for the target label, possibly
//! feeding the winner into the next stage:
//!
//! | strategy | stages |
//! |---|---|
//! | `action_ranking` | actions |
//! | `abductive_refinement` | actions, consequences of the best action, actions given the best consequence |
//! | `conseq_ranking` | consequences |
//! | `iterative_refinement` | one draft consequence, classified, then one refinement |
//! | `norm_synthetic` | consequences of each action, then one norm |
//!
//! Every run yields a [`PipelineTrace`]. A provider failure ends that
//! sample only; its trace keeps the completed steps.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Story;
use crate::exec::Exec;
use crate::providers::{
    classify, generate, Candidate, Classifier, DecodeParams, ExpertRole, ProviderError, ACTION_LABELS, CONSEQ_LABELS,
};
use crate::seed;
use crate::tasks::{
    action_given_consequence_prompt, action_prompt, classification_input, consequence_in_context_prompt, norm_prompt,
    refinement_prompt, split_prompt, tokens, Orientation, PromptContext, TaskSample,
};

mod config;

pub use config::{ChainConfig, EndpointSpec, Experts, HttpEndpoint, MockEndpoint};

/// Posterior at or above which a draft counts as plausible.
pub const PLAUSIBLE_THRESHOLD: f64 = 0.5;

const PLAUSIBLE: &str = "plausible";

#[derive(Debug, Error)]
pub enum CoeError {
    #[error("strategy `{strategy}` requires an endpoint for role `{role}`")]
    MissingRole { strategy: ChainStrategy, role: ExpertRole },
    #[error("strategy `{strategy}` does not use role `{role}`")]
    UnexpectedRole { strategy: ChainStrategy, role: ExpertRole },
    #[error("role `{role}`: {message}")]
    RoleKind { role: ExpertRole, message: String },
    #[error("no expert registered for role `{0}`")]
    NoExpert(ExpertRole),
    #[error("sample `{sample_id}` has no {what}")]
    MissingInput { sample_id: String, what: &'static str },
    #[error("sample `{0}` needs a moral or immoral target orientation")]
    NoOrientation(String),
    #[error("invalid decode parameters: {0}")]
    Decode(String),
    #[error("{role}: {source}")]
    Expert {
        role: ExpertRole,
        #[source]
        source: ProviderError,
    },
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainStrategy {
    ActionRanking,
    AbductiveRefinement,
    ConseqRanking,
    IterativeRefinement,
    NormSynthetic,
}

impl ChainStrategy {
    pub const ALL: [ChainStrategy; 5] = [
        ChainStrategy::ActionRanking,
        ChainStrategy::AbductiveRefinement,
        ChainStrategy::ConseqRanking,
        ChainStrategy::IterativeRefinement,
        ChainStrategy::NormSynthetic,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ChainStrategy::ActionRanking => "action_ranking",
            ChainStrategy::AbductiveRefinement => "abductive_refinement",
            ChainStrategy::ConseqRanking => "conseq_ranking",
            ChainStrategy::IterativeRefinement => "iterative_refinement",
            ChainStrategy::NormSynthetic => "norm_synthetic",
        }
    }

    pub fn required_roles(self) -> &'static [ExpertRole] {
        use ExpertRole::*;
        match self {
            ChainStrategy::ActionRanking => &[ActionGenContext, ActionClsContext],
            ChainStrategy::AbductiveRefinement => &[
                ActionGenContext,
                ActionClsContext,
                ConseqGenContextAction,
                ConseqClsContextAction,
                ActionGenContextConseq,
                ActionClsContextConseq,
            ],
            ChainStrategy::ConseqRanking => &[ConseqGenContextAction, ConseqClsContextAction],
            ChainStrategy::IterativeRefinement => &[ConseqGenContextAction, ConseqClsContextAction, ConseqRefiner],
            ChainStrategy::NormSynthetic => &[ConseqGenContextAction, ConseqClsContextAction, NormGenFull],
        }
    }

    /// Exact provider calls per successful sample with `n` candidates per
    /// ranked stage.
    pub fn expected_calls(self, n: usize) -> CallCounts {
        let (generated, classified) = match self {
            ChainStrategy::ActionRanking | ChainStrategy::ConseqRanking => (n, n),
            ChainStrategy::AbductiveRefinement => (3 * n, 3 * n),
            ChainStrategy::IterativeRefinement => (2, 1),
            ChainStrategy::NormSynthetic => (2 * n + 1, 2 * n),
        };
        CallCounts { generated, classified }
    }

    fn generates_actions(self) -> bool {
        matches!(self, ChainStrategy::ActionRanking | ChainStrategy::AbductiveRefinement)
    }
}

impl fmt::Display for ChainStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ChainStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.replace('-', "_");
        ChainStrategy::ALL
            .into_iter()
            .find(|c| c.tag() == norm)
            .ok_or_else(|| format!("unknown chain strategy `{s}`"))
    }
}

/// Inputs of one chain run, recovered from a generation sample or built
/// from a story.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoeSample {
    pub sample_id: String,
    pub norm: Option<String>,
    pub situation: String,
    pub intention: String,
    pub orientation: Orientation,
    /// The action whose consequence is generated.
    pub action: Option<String>,
    pub moral_action: Option<String>,
    pub immoral_action: Option<String>,
}

impl CoeSample {
    /// Reads the context and actions back out of a generation prompt.
    pub fn from_task_sample(sample: &TaskSample) -> Self {
        let mut out = CoeSample {
            sample_id: sample.sample_id.clone(),
            norm: None,
            situation: String::new(),
            intention: String::new(),
            orientation: sample.orientation,
            action: None,
            moral_action: None,
            immoral_action: None,
        };
        for (marker, text) in split_prompt(&sample.input_text) {
            if text.is_empty() {
                continue;
            }
            match marker {
                tokens::NRM => out.norm = Some(text),
                tokens::SIT => out.situation = text,
                tokens::INT => out.intention = text,
                tokens::ACT => out.action = Some(text),
                tokens::M_ACT => out.moral_action = Some(text),
                tokens::I_ACT => out.immoral_action = Some(text),
                _ => {}
            }
        }
        out
    }

    fn base(story: &Story, sample_id: String, orientation: Orientation) -> Self {
        CoeSample {
            sample_id,
            norm: Some(story.norm.clone()),
            situation: story.situation.clone(),
            intention: story.intention.clone(),
            orientation,
            action: None,
            moral_action: None,
            immoral_action: None,
        }
    }

    /// Input for the action strategies: context only.
    pub fn for_action(story: &Story, orientation: Orientation) -> Self {
        Self::base(story, format!("{}:{}", story.id, orientation.tag()), orientation)
    }

    /// Input for the consequence strategies: context and the story's action
    /// of `orientation`.
    pub fn for_consequence(story: &Story, orientation: Orientation) -> Self {
        let mut s = Self::base(story, format!("{}:{}", story.id, orientation.tag()), orientation);
        s.action = Some(match orientation {
            Orientation::Immoral => story.immoral_action.clone(),
            _ => story.moral_action.clone(),
        });
        s
    }

    /// Input for norm synthesis: situation, intention and both actions.
    pub fn for_norm(story: &Story) -> Self {
        let mut s = Self::base(story, story.id.clone(), Orientation::NotApplicable);
        s.norm = None;
        s.moral_action = Some(story.moral_action.clone());
        s.immoral_action = Some(story.immoral_action.clone());
        s
    }

    fn require<'a>(&self, v: &'a Option<String>, what: &'static str) -> Result<&'a str, CoeError> {
        v.as_deref().ok_or_else(|| CoeError::MissingInput {
            sample_id: self.sample_id.clone(),
            what,
        })
    }

    fn context(&self) -> Result<PromptContext<'_>, CoeError> {
        Ok(PromptContext {
            norm: Some(self.require(&self.norm, "norm")?),
            situation: &self.situation,
            intention: &self.intention,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallCounts {
    /// Candidates returned by generators.
    pub generated: usize,
    /// Classifier calls.
    pub classified: usize,
}

impl std::ops::AddAssign for CallCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.generated += rhs.generated;
        self.classified += rhs.classified;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub role: ExpertRole,
    /// Generator prompt.
    pub input_text: String,
    pub candidates: Vec<Candidate>,
    /// Label whose posterior ranked the candidates; absent for unranked
    /// single-candidate steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_label: Option<String>,
    pub chosen_index: usize,
}

impl TraceStep {
    pub fn chosen(&self) -> &Candidate {
        &self.candidates[self.chosen_index]
    }
}

/// Verdict of the judge classifier on a finished sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Judgement {
    pub satisfied: bool,
    /// Verdict on the first candidate of the first stage, i.e. plain
    /// sampling without a chain.
    pub baseline_satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineTrace {
    pub sample_id: String,
    pub strategy: ChainStrategy,
    pub steps: Vec<TraceStep>,
    pub final_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub calls: CallCounts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judgement: Option<Judgement>,
}

impl PipelineTrace {
    fn new(sample_id: &str, strategy: ChainStrategy) -> Self {
        PipelineTrace {
            sample_id: sample_id.to_string(),
            strategy,
            steps: Vec::new(),
            final_text: None,
            error: None,
            calls: CallCounts::default(),
            judgement: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none() && self.final_text.is_some()
    }

    /// No ranked step chose a candidate scored strictly below another one,
    /// and ties went to the lowest index.
    pub fn argmax_sound(&self) -> bool {
        self.steps.iter().filter(|s| s.target_label.is_some()).all(|s| {
            let Some(best) = s.chosen().score else { return false };
            s.candidates.iter().enumerate().all(|(i, c)| match c.score {
                Some(v) => v < best || (v == best && i >= s.chosen_index),
                None => false,
            })
        })
    }

    pub fn generated_candidates(&self) -> usize {
        self.steps.iter().map(|s| s.candidates.len()).sum()
    }
}

fn argmax(cands: &[Candidate]) -> usize {
    let mut best = 0;
    for (i, c) in cands.iter().enumerate().skip(1) {
        let (v, b) = (
            c.score.unwrap_or(f64::NEG_INFINITY),
            cands[best].score.unwrap_or(f64::NEG_INFINITY),
        );
        if v.total_cmp(&b) == Ordering::Greater || (v == b && c.gen_index < cands[best].gen_index) {
            best = i;
        }
    }
    best
}

fn score_into(
    cands: &mut [Candidate],
    classifier: &dyn Classifier,
    grounding: &[&str],
    labels: &[&str],
    target_label: &str,
    calls: &mut usize,
) -> Result<(), ProviderError> {
    for c in cands.iter_mut() {
        *calls += 1;
        let dist = classify(classifier, &classification_input(grounding, &c.text), labels)?;
        c.score = Some(dist.prob(target_label));
    }
    Ok(())
}

/// Scores each candidate with the classifier posterior of `target_label`
/// for `<CLS>grounding<SEP>candidate<SEP>` and returns the best index
/// (highest score, lowest `gen_index` on ties).
pub fn rank_candidates(
    mut cands: Vec<Candidate>,
    classifier: &dyn Classifier,
    grounding: &[&str],
    labels: &[&str],
    target_label: &str,
) -> Result<(Vec<Candidate>, usize), ProviderError> {
    if cands.is_empty() {
        return Err(ProviderError::EmptyInput);
    }
    let mut calls = 0;
    score_into(&mut cands, classifier, grounding, labels, target_label, &mut calls)?;
    let best = argmax(&cands);
    Ok((cands, best))
}

/// Decode parameters of one stage: the endpoint's or chain's parameters
/// with a seed derived from the sample and stage name.
fn stage_decode(base: DecodeParams, sample_id: &str, stage: &str, n: usize) -> DecodeParams {
    DecodeParams {
        n,
        seed: seed::mix(base.seed, &format!("{sample_id}#{stage}")),
        ..base
    }
}

struct Run<'a> {
    sample: &'a CoeSample,
    experts: &'a Experts,
    cfg: &'a ChainConfig,
    trace: PipelineTrace,
}

impl<'a> Run<'a> {
    fn generate(
        &mut self,
        role: ExpertRole,
        prompt: &str,
        stage: &str,
        n: Option<usize>,
    ) -> Result<Vec<Candidate>, CoeError> {
        let (backend, decode) = self.experts.generator(role)?;
        let base = decode.unwrap_or(self.cfg.decode);
        let decode = stage_decode(base, &self.sample.sample_id, stage, n.unwrap_or(base.n));
        let cands = generate(backend, prompt, &decode).map_err(|source| CoeError::Expert { role, source })?;
        self.trace.calls.generated += cands.len();
        Ok(cands)
    }

    /// Generates with `gen`, ranks with `cls`, records the step and returns
    /// the winning text.
    #[allow(clippy::too_many_arguments)]
    fn rank(
        &mut self,
        gen: ExpertRole,
        cls: ExpertRole,
        prompt: String,
        stage: &str,
        grounding: &[&str],
        labels: &[&str],
        target_label: &str,
    ) -> Result<String, CoeError> {
        let mut cands = self.generate(gen, &prompt, stage, None)?;
        let classifier = self.experts.classifier(cls)?;
        let scored = score_into(
            &mut cands,
            classifier,
            grounding,
            labels,
            target_label,
            &mut self.trace.calls.classified,
        );
        let chosen_index = argmax(&cands);
        self.trace.steps.push(TraceStep {
            role: gen,
            input_text: prompt,
            candidates: cands,
            target_label: Some(target_label.to_string()),
            chosen_index,
        });
        if let Err(source) = scored {
            // keep the partial step but not as a ranked one
            let step = self.trace.steps.last_mut().expect("just pushed");
            step.target_label = None;
            return Err(CoeError::Expert { role: cls, source });
        }
        Ok(self.trace.steps.last().expect("just pushed").chosen().text.clone())
    }

    fn single(&mut self, role: ExpertRole, prompt: String, stage: &str) -> Result<String, CoeError> {
        let cands = self.generate(role, &prompt, stage, Some(1))?;
        let text = cands[0].text.clone();
        self.trace.steps.push(TraceStep {
            role,
            input_text: prompt,
            candidates: cands,
            target_label: None,
            chosen_index: 0,
        });
        Ok(text)
    }

    fn orientation(&self) -> Result<Orientation, CoeError> {
        match (self.cfg.target_orientation, self.sample.orientation) {
            (Orientation::NotApplicable, Orientation::NotApplicable) => {
                Err(CoeError::NoOrientation(self.sample.sample_id.clone()))
            }
            (Orientation::NotApplicable, o) | (o, _) => Ok(o),
        }
    }

    fn action_ranking(&mut self) -> Result<String, CoeError> {
        let o = self.orientation()?;
        let ctx = self.sample.context()?;
        self.rank(
            ExpertRole::ActionGenContext,
            ExpertRole::ActionClsContext,
            action_prompt(&ctx, o),
            "actions",
            &ctx.grounding(),
            &ACTION_LABELS,
            o.tag(),
        )
    }

    fn abductive_refinement(&mut self) -> Result<String, CoeError> {
        let o = self.orientation()?;
        let ctx = self.sample.context()?;
        let action = self.action_ranking()?;
        let mut grounding = ctx.grounding();
        grounding.push(&action);
        let consequence = self.rank(
            ExpertRole::ConseqGenContextAction,
            ExpertRole::ConseqClsContextAction,
            consequence_in_context_prompt(&ctx, &action),
            "consequences",
            &grounding,
            &CONSEQ_LABELS,
            PLAUSIBLE,
        )?;
        let mut grounding = ctx.grounding();
        grounding.push(&consequence);
        self.rank(
            ExpertRole::ActionGenContextConseq,
            ExpertRole::ActionClsContextConseq,
            action_given_consequence_prompt(&ctx, &consequence, o),
            "refined_actions",
            &grounding,
            &ACTION_LABELS,
            o.tag(),
        )
    }

    fn conseq_ranking(&mut self) -> Result<String, CoeError> {
        let ctx = self.sample.context()?;
        let action = self.sample.require(&self.sample.action, "action")?;
        let mut grounding = ctx.grounding();
        grounding.push(action);
        self.rank(
            ExpertRole::ConseqGenContextAction,
            ExpertRole::ConseqClsContextAction,
            consequence_in_context_prompt(&ctx, action),
            "consequences",
            &grounding,
            &CONSEQ_LABELS,
            PLAUSIBLE,
        )
    }

    fn iterative_refinement(&mut self) -> Result<String, CoeError> {
        let ctx = self.sample.context()?;
        let action = self.sample.require(&self.sample.action, "action")?;
        let prompt = consequence_in_context_prompt(&ctx, action);
        let mut cands = self.generate(ExpertRole::ConseqGenContextAction, &prompt, "draft", Some(1))?;
        let mut grounding = ctx.grounding();
        grounding.push(action);
        let classifier = self.experts.classifier(ExpertRole::ConseqClsContextAction)?;
        let scored = score_into(
            &mut cands,
            classifier,
            &grounding,
            &CONSEQ_LABELS,
            PLAUSIBLE,
            &mut self.trace.calls.classified,
        );
        let ranked = scored.is_ok();
        self.trace.steps.push(TraceStep {
            role: ExpertRole::ConseqGenContextAction,
            input_text: prompt,
            candidates: cands,
            target_label: ranked.then(|| PLAUSIBLE.to_string()),
            chosen_index: 0,
        });
        scored.map_err(|source| CoeError::Expert {
            role: ExpertRole::ConseqClsContextAction,
            source,
        })?;
        let draft = self.trace.steps[0].chosen();
        let plausible = draft.score.unwrap_or(0.0) >= PLAUSIBLE_THRESHOLD;
        let refine = refinement_prompt(&ctx, action, &draft.text.clone(), plausible);
        self.single(ExpertRole::ConseqRefiner, refine, "refine")
    }

    fn norm_synthetic(&mut self) -> Result<String, CoeError> {
        let s = self.sample;
        let ctx = PromptContext {
            norm: None,
            situation: &s.situation,
            intention: &s.intention,
        };
        let moral = s.require(&s.moral_action, "moral action")?;
        let immoral = s.require(&s.immoral_action, "immoral action")?;
        let mut best = Vec::with_capacity(2);
        for (o, action) in [(Orientation::Moral, moral), (Orientation::Immoral, immoral)] {
            let mut grounding = ctx.grounding();
            grounding.push(action);
            best.push(self.rank(
                ExpertRole::ConseqGenContextAction,
                ExpertRole::ConseqClsContextAction,
                consequence_in_context_prompt(&ctx, action),
                &format!("consequences_{}", o.tag()),
                &grounding,
                &CONSEQ_LABELS,
                PLAUSIBLE,
            )?);
        }
        let prompt = norm_prompt(
            Some((&s.situation, &s.intention)),
            moral,
            immoral,
            Some((&best[0], &best[1])),
        );
        self.single(ExpertRole::NormGenFull, prompt, "norm")
    }

    fn judge(&self, judge: &dyn Classifier, final_text: &str) -> Result<Option<Judgement>, CoeError> {
        let strategy = self.cfg.strategy;
        if strategy == ChainStrategy::NormSynthetic {
            return Ok(None);
        }
        let ctx = self.sample.context()?;
        let mut grounding = ctx.grounding();
        let (labels, target): (&[&str], &str) = if strategy.generates_actions() {
            (&ACTION_LABELS, self.orientation()?.tag())
        } else {
            grounding.push(self.sample.require(&self.sample.action, "action")?);
            (&CONSEQ_LABELS, PLAUSIBLE)
        };
        let verdict = |text: &str| -> Result<bool, CoeError> {
            let dist = classify(judge, &classification_input(&grounding, text), labels).map_err(|source| {
                CoeError::Expert {
                    role: ExpertRole::Judge,
                    source,
                }
            })?;
            Ok(dist.prob(target) > 0.5)
        };
        let baseline = &self.trace.steps[0].candidates[0].text;
        Ok(Some(Judgement {
            satisfied: verdict(final_text)?,
            baseline_satisfied: verdict(baseline)?,
        }))
    }
}

fn run_strategy(sample: &CoeSample, experts: &Experts, cfg: &ChainConfig, strategy: ChainStrategy) -> PipelineTrace {
    let mut run = Run {
        sample,
        experts,
        cfg,
        trace: PipelineTrace::new(&sample.sample_id, strategy),
    };
    let result = match strategy {
        ChainStrategy::ActionRanking => run.action_ranking(),
        ChainStrategy::AbductiveRefinement => run.abductive_refinement(),
        ChainStrategy::ConseqRanking => run.conseq_ranking(),
        ChainStrategy::IterativeRefinement => run.iterative_refinement(),
        ChainStrategy::NormSynthetic => run.norm_synthetic(),
    };
    match result {
        Ok(text) => {
            if let Some(judge) = experts.judge() {
                match run.judge(judge, &text) {
                    Ok(j) => run.trace.judgement = j,
                    Err(e) => run.trace.error = Some(e.to_string()),
                }
            }
            run.trace.final_text = Some(text);
        }
        Err(e) => run.trace.error = Some(e.to_string()),
    }
    run.trace
}

/// Ranks `n` actions sampled from the context for the target orientation.
pub fn run_action_ranking(sample: &CoeSample, experts: &Experts, cfg: &ChainConfig) -> PipelineTrace {
    run_strategy(sample, experts, cfg, ChainStrategy::ActionRanking)
}

/// Action ranking, then ranked consequences of the winning action, then
/// ranked actions conditioned on the winning consequence.
pub fn run_abductive_refinement(sample: &CoeSample, experts: &Experts, cfg: &ChainConfig) -> PipelineTrace {
    run_strategy(sample, experts, cfg, ChainStrategy::AbductiveRefinement)
}

/// Ranks `n` consequences of the sample's action by plausibility.
pub fn run_conseq_ranking(sample: &CoeSample, experts: &Experts, cfg: &ChainConfig) -> PipelineTrace {
    run_strategy(sample, experts, cfg, ChainStrategy::ConseqRanking)
}

/// One draft consequence, labelled by the classifier, rewritten by the
/// refiner.
pub fn run_iterative_refinement(sample: &CoeSample, experts: &Experts, cfg: &ChainConfig) -> PipelineTrace {
    run_strategy(sample, experts, cfg, ChainStrategy::IterativeRefinement)
}

/// Ranked consequences for both actions, then one norm from the full
/// story without its norm.
pub fn run_norm_synthetic(sample: &CoeSample, experts: &Experts, cfg: &ChainConfig) -> PipelineTrace {
    run_strategy(sample, experts, cfg, ChainStrategy::NormSynthetic)
}

/// Runs `cfg.strategy` on one sample.
pub fn run_sample(sample: &CoeSample, experts: &Experts, cfg: &ChainConfig) -> PipelineTrace {
    run_strategy(sample, experts, cfg, cfg.strategy)
}

/// Runs every sample; output is ordered by sample id whatever the worker
/// count.
pub fn run_batch(samples: &[CoeSample], experts: &Experts, cfg: &ChainConfig, exec: Exec) -> Vec<PipelineTrace> {
    let mut traces = exec.map(samples, |s| run_sample(s, experts, cfg));
    traces.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    traces
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeSummary {
    pub strategy: ChainStrategy,
    pub n: usize,
    pub samples: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub calls: CallCounts,
    pub expected_calls_per_sample: CallCounts,
    /// Every successful trace used exactly the expected calls.
    pub budget_ok: bool,
    pub argmax_ok: bool,
    pub judged: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub satisfaction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_satisfaction: Option<f64>,
}

pub fn summarize(traces: &[PipelineTrace], cfg: &ChainConfig) -> CoeSummary {
    let expected = cfg.strategy.expected_calls(cfg.decode.n);
    let mut calls = CallCounts::default();
    let (mut ok, mut judged, mut sat, mut base) = (0, 0, 0, 0);
    let mut budget_ok = true;
    let mut argmax_ok = true;
    for t in traces {
        calls += t.calls;
        argmax_ok &= t.argmax_sound();
        if t.is_ok() {
            ok += 1;
            budget_ok &= t.calls == expected;
        }
        if let Some(j) = t.judgement {
            judged += 1;
            sat += j.satisfied as usize;
            base += j.baseline_satisfied as usize;
        }
    }
    let rate = |k: usize| (judged > 0).then(|| k as f64 / judged as f64);
    CoeSummary {
        strategy: cfg.strategy,
        n: cfg.decode.n,
        samples: traces.len(),
        succeeded: ok,
        failed: traces.len() - ok,
        calls,
        expected_calls_per_sample: expected,
        budget_ok,
        argmax_ok,
        judged,
        satisfaction: rate(sat),
        baseline_satisfaction: rate(base),
    }
}
