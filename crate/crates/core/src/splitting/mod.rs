//! Adversarial train/dev/test splits.
//!
//! * Norm distance (ND): norms are clustered; stories from the most isolated
//!   clusters fill test, then dev, the rest go to train.
//! * Lexical bias (LB): stories with the fewest class-skewed lemmas in their
//!   target pair fill test, then dev.
//! * Minimal pairs (MP): stories whose moral and immoral targets are closest
//!   in normalized edit distance fill test, then dev.
//!
//! Every story lands in exactly one partition, so both of its paths always
//! share a partition.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Story;
use crate::exec::Exec;
use crate::providers::{Embedder, ProviderError};

mod cluster;
mod edit;
mod embedding;
mod lexical;

pub use cluster::{agglomerative_cluster, cosine_distance, degree_of_isolation, Cluster, EmbeddingVector};
pub use edit::{damerau_levenshtein, normalized_dl};
pub use embedding::{embed_norms, EMBED_BATCH};
pub use lexical::{
    bias_score, build_lemma_bias_table, lemmas, IdentityLemmatizer, LemmaBiasTable, LemmaEntry, Lemmatizer,
    SuffixLemmatizer,
};

/// Default number of norm clusters.
pub const DEFAULT_CLUSTERS: usize = 1000;
/// Default number of biased lemmas.
pub const DEFAULT_LEMMAS: usize = 100;

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("embedding provider failed for story `{story_id}`: {source}")]
    Provider {
        story_id: String,
        #[source]
        source: ProviderError,
    },
    #[error("story `{id}`: embedding has dimension {got}, expected {expected}")]
    DimensionMismatch { id: String, expected: usize, got: usize },
    #[error("story `{0}`: zero embedding, cosine distance undefined")]
    ZeroVector(String),
    #[error("story `{0}`: embedding has non-finite entries")]
    NonFinite(String),
    #[error("cannot form {k} clusters from {n} items")]
    ClusterCount { k: usize, n: usize },
    #[error("degree of isolation needs at least 2 clusters, got {0}")]
    TooFewClusters(usize),
    #[error("partition `{0}` is empty")]
    EmptyPartition(Partition),
    #[error("no score for story `{0}`")]
    MissingScore(String),
    #[error("invalid ratios `{0}`: expected train:dev:test with a positive sum")]
    Ratios(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Dev,
    Test,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::Train, Partition::Dev, Partition::Test];

    pub fn name(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Dev => "dev",
            Partition::Test => "test",
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "ND")]
    NormDistance,
    #[serde(rename = "LB")]
    LexicalBias,
    #[serde(rename = "MP")]
    MinimalPairs,
}

impl Strategy {
    pub fn metric_name(self) -> &'static str {
        match self {
            Strategy::NormDistance => "DoI",
            Strategy::LexicalBias => "BS",
            Strategy::MinimalPairs => "DL",
        }
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nd" => Ok(Strategy::NormDistance),
            "lb" => Ok(Strategy::LexicalBias),
            "mp" => Ok(Strategy::MinimalPairs),
            other => Err(format!("unknown split strategy `{other}` (nd|lb|mp)")),
        }
    }
}

/// Which pair of texts the LB and MP strategies compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetField {
    Actions,
    Consequences,
}

impl TargetField {
    /// (moral, immoral) texts of `story`.
    pub fn texts(self, story: &Story) -> (&str, &str) {
        match self {
            TargetField::Actions => (&story.moral_action, &story.immoral_action),
            TargetField::Consequences => (&story.moral_consequence, &story.immoral_consequence),
        }
    }
}

impl FromStr for TargetField {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "actions" => Ok(TargetField::Actions),
            "consequences" => Ok(TargetField::Consequences),
            other => Err(format!("unknown target `{other}` (actions|consequences)")),
        }
    }
}

/// Relative partition sizes, written `train:dev:test`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratios {
    pub train: u32,
    pub dev: u32,
    pub test: u32,
}

impl Default for Ratios {
    fn default() -> Self {
        Ratios {
            train: 10,
            dev: 1,
            test: 1,
        }
    }
}

impl Ratios {
    pub fn new(train: u32, dev: u32, test: u32) -> Result<Self, SplitError> {
        if train as u64 + dev as u64 + test as u64 == 0 {
            return Err(SplitError::Ratios(format!("{train}:{dev}:{test}")));
        }
        Ok(Ratios { train, dev, test })
    }

    /// Target (test, dev) story counts for a corpus of `n` stories, rounded
    /// down; train takes the remainder.
    pub fn quotas(&self, n: usize) -> (usize, usize) {
        let sum = self.train as u64 + self.dev as u64 + self.test as u64;
        let q = |r: u32| ((n as u64 * r as u64) / sum) as usize;
        (q(self.test), q(self.dev))
    }
}

impl fmt::Display for Ratios {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.train, self.dev, self.test)
    }
}

impl FromStr for Ratios {
    type Err = SplitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || SplitError::Ratios(s.to_string());
        if parts.len() != 3 {
            return Err(bad());
        }
        let nums: Vec<u32> = parts
            .iter()
            .map(|p| p.trim().parse::<u32>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        Ratios::new(nums[0], nums[1], nums[2]).map_err(|_| bad())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub strategy: Strategy,
    /// `None` for ND, which only looks at norms.
    pub target_field: Option<TargetField>,
    pub ratios: Ratios,
    pub partition: BTreeMap<String, Partition>,
}

impl SplitAssignment {
    pub fn size(&self, p: Partition) -> usize {
        self.partition.values().filter(|&&q| q == p).count()
    }

    /// Stories of `p`, in corpus order.
    pub fn select<'a>(&self, stories: &'a [Story], p: Partition) -> Vec<&'a Story> {
        stories
            .iter()
            .filter(|s| self.partition.get(&s.id) == Some(&p))
            .collect()
    }
}

/// Per-story metric values (DoI of the story's cluster, bias score, or
/// normalized edit distance).
pub type StoryScores = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub assignment: SplitAssignment,
    pub scores: StoryScores,
    /// ND only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clusters: Option<Vec<Cluster>>,
    /// LB only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma_table: Option<LemmaBiasTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub strategy: Strategy,
    pub metric: String,
    pub sizes: BTreeMap<Partition, usize>,
    pub per_partition_mean: BTreeMap<Partition, f64>,
}

impl SplitReport {
    /// Whether the means follow the strategy's expected direction: DoI
    /// non-increasing from test to train, BS and DL non-decreasing.
    pub fn is_monotone(&self) -> bool {
        let m = |p| self.per_partition_mean[&p];
        let (test, dev, train) = (m(Partition::Test), m(Partition::Dev), m(Partition::Train));
        match self.strategy {
            Strategy::NormDistance => test >= dev && dev >= train,
            _ => test <= dev && dev <= train,
        }
    }
}

/// Mean score per partition.
pub fn split_report(assignment: &SplitAssignment, scores: &StoryScores) -> Result<SplitReport, SplitError> {
    let mut sums: BTreeMap<Partition, (f64, usize)> = BTreeMap::new();
    for (id, &p) in &assignment.partition {
        let v = *scores.get(id).ok_or_else(|| SplitError::MissingScore(id.clone()))?;
        let e = sums.entry(p).or_default();
        e.0 += v;
        e.1 += 1;
    }
    let mut sizes = BTreeMap::new();
    let mut means = BTreeMap::new();
    for p in Partition::ALL {
        let (sum, count) = sums.get(&p).copied().unwrap_or_default();
        if count == 0 {
            return Err(SplitError::EmptyPartition(p));
        }
        sizes.insert(p, count);
        means.insert(p, sum / count as f64);
    }
    Ok(SplitReport {
        strategy: assignment.strategy,
        metric: assignment.strategy.metric_name().to_string(),
        sizes,
        per_partition_mean: means,
    })
}

/// Fills test then dev story by story from `order`, rest to train.
fn fill_by_story(order: &[&str], ratios: &Ratios) -> BTreeMap<String, Partition> {
    let (test_q, dev_q) = ratios.quotas(order.len());
    order
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let p = if i < test_q {
                Partition::Test
            } else if i < test_q + dev_q {
                Partition::Dev
            } else {
                Partition::Train
            };
            (id.to_string(), p)
        })
        .collect()
}

/// Orders stories by ascending score, ties by id.
fn ascending<'a>(stories: &'a [Story], scores: &StoryScores) -> Vec<&'a str> {
    let mut order: Vec<&str> = stories.iter().map(|s| s.id.as_str()).collect();
    order.sort_by(|a, b| scores[*a].total_cmp(&scores[*b]).then(a.cmp(b)));
    order
}

/// Norm-distance split with `k` clusters. Whole clusters are assigned, most
/// isolated first (ties by cluster id): test until its quota is met or
/// exceeded, then dev likewise, the rest to train.
pub fn split_by_norm_distance(
    stories: &[Story],
    embedder: &dyn Embedder,
    k: usize,
    ratios: Ratios,
    exec: Exec,
) -> Result<SplitResult, SplitError> {
    if k == 0 || k > stories.len() {
        return Err(SplitError::ClusterCount { k, n: stories.len() });
    }
    let vectors = embed_norms(stories, embedder, exec)?;
    let clusters = agglomerative_cluster(&vectors, k, exec)?;
    Ok(assign_clusters(stories, clusters, ratios))
}

/// Assignment step of the ND split, for precomputed clusters.
pub fn assign_clusters(stories: &[Story], clusters: Vec<Cluster>, ratios: Ratios) -> SplitResult {
    let mut order: Vec<&Cluster> = clusters.iter().collect();
    order.sort_by(|a, b| b.doi.total_cmp(&a.doi).then(a.id.cmp(&b.id)));
    let (test_q, dev_q) = ratios.quotas(stories.len());
    let (mut test_n, mut dev_n) = (0usize, 0usize);
    let mut partition = BTreeMap::new();
    let mut scores = StoryScores::new();
    for c in order {
        let p = if test_n < test_q {
            test_n += c.member_ids.len();
            Partition::Test
        } else if dev_n < dev_q {
            dev_n += c.member_ids.len();
            Partition::Dev
        } else {
            Partition::Train
        };
        for id in &c.member_ids {
            partition.insert(id.clone(), p);
            scores.insert(id.clone(), c.doi);
        }
    }
    SplitResult {
        assignment: SplitAssignment {
            strategy: Strategy::NormDistance,
            target_field: None,
            ratios,
            partition,
        },
        scores,
        clusters: Some(clusters),
        lemma_table: None,
    }
}

/// Lexical-bias split over the `k` most skewed lemmas of `target`.
pub fn split_by_lexical_bias(
    stories: &[Story],
    lemmatizer: &dyn Lemmatizer,
    target: TargetField,
    k: usize,
    ratios: Ratios,
    exec: Exec,
) -> SplitResult {
    let table = build_lemma_bias_table(stories, lemmatizer, target, k);
    let set = table.lemma_set();
    let values = exec.map(stories, |s| {
        lexical::bias_score_with(s, &set, lemmatizer, target) as f64
    });
    let scores: StoryScores = stories.iter().map(|s| s.id.clone()).zip(values).collect();
    let order = ascending(stories, &scores);
    let partition = fill_by_story(&order, &ratios);
    SplitResult {
        assignment: SplitAssignment {
            strategy: Strategy::LexicalBias,
            target_field: Some(target),
            ratios,
            partition,
        },
        scores,
        clusters: None,
        lemma_table: Some(table),
    }
}

/// Minimal-pairs split on the normalized edit distance between the moral and
/// immoral `target` texts.
pub fn split_by_minimal_pairs(stories: &[Story], target: TargetField, ratios: Ratios, exec: Exec) -> SplitResult {
    let values = exec.map(stories, |s| {
        let (m, i) = target.texts(s);
        normalized_dl(m, i)
    });
    let scores: StoryScores = stories.iter().map(|s| s.id.clone()).zip(values).collect();
    let order = ascending(stories, &scores);
    let partition = fill_by_story(&order, &ratios);
    SplitResult {
        assignment: SplitAssignment {
            strategy: Strategy::MinimalPairs,
            target_field: Some(target),
            ratios,
            partition,
        },
        scores,
        clusters: None,
        lemma_table: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::sample_story;
    use crate::providers::mock::TableEmbedder;
    use approx::assert_abs_diff_eq;

    fn with_actions(id: &str, m: &str, i: &str) -> Story {
        let mut s = sample_story(id);
        s.moral_action = m.into();
        s.immoral_action = i.into();
        s
    }

    #[test]
    fn ratios_parse_and_quotas() {
        let r: Ratios = "10:1:1".parse().unwrap();
        assert_eq!(r, Ratios::default());
        assert_eq!(r.quotas(1200), (100, 100));
        assert_eq!("2:1:1".parse::<Ratios>().unwrap().quotas(4), (1, 1));
        assert!("0:0:0".parse::<Ratios>().is_err());
        assert!("1:2".parse::<Ratios>().is_err());
        assert!("a:1:1".parse::<Ratios>().is_err());
    }

    #[test]
    fn minimal_pairs_identical_first() {
        let stories = vec![
            with_actions("a", "He runs home.", "He walks to the shop."),
            with_actions("b", "Same text.", "Same text."),
            with_actions("c", "abcdef", "abcdeg"),
            with_actions("d", "xyz", "uvw"),
        ];
        let r = split_by_minimal_pairs(
            &stories,
            TargetField::Actions,
            Ratios::new(2, 1, 1).unwrap(),
            Exec::Sequential,
        );
        assert_eq!(r.scores["b"], 0.0);
        assert_eq!(r.assignment.partition["b"], Partition::Test);
        assert_eq!(r.assignment.partition["c"], Partition::Dev);
    }

    #[test]
    fn report_on_planted_distances() {
        let planted = [("w", 0.1), ("x", 0.2), ("y", 0.8), ("z", 0.9)];
        let stories: Vec<Story> = planted.iter().map(|(id, _)| sample_story(id)).collect();
        let scores: StoryScores = planted.iter().map(|(id, d)| (id.to_string(), *d)).collect();
        let order = ascending(&stories, &scores);
        // quotas for 4 stories at 2:1:1 are one test and one dev story
        let partition = fill_by_story(&order, &Ratios::new(2, 1, 1).unwrap());
        let a = SplitAssignment {
            strategy: Strategy::MinimalPairs,
            target_field: Some(TargetField::Actions),
            ratios: Ratios::new(2, 1, 1).unwrap(),
            partition,
        };
        assert_eq!(a.partition["w"], Partition::Test);
        assert_eq!(a.partition["x"], Partition::Dev);
        let rep = split_report(&a, &scores).unwrap();
        assert_abs_diff_eq!(rep.per_partition_mean[&Partition::Test], 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.per_partition_mean[&Partition::Dev], 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.per_partition_mean[&Partition::Train], 0.85, epsilon = 1e-12);
        assert!(rep.is_monotone());

        // 1:1:2 quotas put two stories in test
        let partition = fill_by_story(&order, &Ratios::new(1, 1, 2).unwrap());
        let a = SplitAssignment { partition, ..a };
        let rep = split_report(&a, &scores).unwrap();
        assert_abs_diff_eq!(rep.per_partition_mean[&Partition::Test], 0.15, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.per_partition_mean[&Partition::Dev], 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.per_partition_mean[&Partition::Train], 0.9, epsilon = 1e-12);
    }

    #[test]
    fn lexical_bias_zero_scores_to_test() {
        // bias scores 0, 0, 3, 5 under a table of {steal, lie}
        let stories = vec![
            with_actions("a", "be kind", "be rude"),
            with_actions("b", "steal steal lie", "we will not"),
            with_actions("c", "she helps", "she stays"),
            with_actions("d", "steal lie steal", "lie steal"),
        ];
        let r = split_by_lexical_bias(
            &stories,
            &IdentityLemmatizer,
            TargetField::Actions,
            2,
            Ratios::new(2, 1, 1).unwrap(),
            Exec::Sequential,
        );
        let table: Vec<&str> = r
            .lemma_table
            .as_ref()
            .unwrap()
            .entries
            .iter()
            .map(|e| e.lemma.as_str())
            .collect();
        assert_eq!(table, vec!["steal", "lie"]);
        assert_eq!(
            [r.scores["a"], r.scores["b"], r.scores["c"], r.scores["d"]],
            [0.0, 3.0, 0.0, 5.0]
        );
        assert_eq!(r.assignment.partition["a"], Partition::Test);
        assert_eq!(r.assignment.partition["c"], Partition::Dev);
        let rep = split_report(&r.assignment, &r.scores).unwrap();
        assert_eq!(rep.per_partition_mean[&Partition::Test], 0.0);
    }

    #[test]
    fn equal_scores_assign_by_id() {
        let stories: Vec<Story> = ["d", "b", "a", "c"].iter().map(|id| sample_story(id)).collect();
        let r = split_by_minimal_pairs(
            &stories,
            TargetField::Actions,
            Ratios::new(2, 1, 1).unwrap(),
            Exec::Sequential,
        );
        assert_eq!(r.assignment.partition["a"], Partition::Test);
        assert_eq!(r.assignment.partition["b"], Partition::Dev);
        assert_eq!(r.assignment.size(Partition::Train), 2);
    }

    #[test]
    fn degenerate_ratios_leave_dev_empty() {
        let stories: Vec<Story> = (0..4).map(|i| sample_story(&format!("s{i}"))).collect();
        let r = split_by_minimal_pairs(
            &stories,
            TargetField::Actions,
            Ratios::new(1, 0, 0).unwrap(),
            Exec::Sequential,
        );
        assert!(matches!(
            split_report(&r.assignment, &r.scores),
            Err(SplitError::EmptyPartition(Partition::Dev))
        ));
    }

    fn planted_geometry() -> (Vec<Story>, TableEmbedder) {
        // four groups of three; group directions chosen so that isolation
        // is ordered g0 > g1 > g2 = g3 (g2 and g3 are each other's nearest)
        let dirs: [[f64; 3]; 4] = [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.2], [0.4, 1.0, 0.0]];
        let mut table = TableEmbedder::default();
        let mut stories = Vec::new();
        for (g, d) in dirs.iter().enumerate() {
            for m in 0..3 {
                let mut s = sample_story(&format!("g{g}m{m}"));
                s.norm = format!("norm {g} {m}");
                let jitter = 0.01 * m as f64;
                table
                    .table
                    .insert(s.norm.clone(), vec![d[0] + jitter, d[1], d[2] + jitter]);
                stories.push(s);
            }
        }
        (stories, table)
    }

    #[test]
    fn norm_distance_most_isolated_to_test() {
        let (stories, emb) = planted_geometry();
        let r = split_by_norm_distance(&stories, &emb, 4, Ratios::new(2, 1, 1).unwrap(), Exec::Sequential).unwrap();
        let clusters = r.clusters.as_ref().unwrap();
        assert_eq!(clusters.len(), 4);
        let doi = |g: usize| r.scores[&format!("g{g}m0")];
        assert!(doi(0) > doi(1) && doi(1) > doi(2));
        assert_abs_diff_eq!(doi(2), doi(3), epsilon = 1e-12);
        // quotas 3 test, 3 dev
        for m in 0..3 {
            assert_eq!(r.assignment.partition[&format!("g0m{m}")], Partition::Test);
            assert_eq!(r.assignment.partition[&format!("g1m{m}")], Partition::Dev);
            assert_eq!(r.assignment.partition[&format!("g2m{m}")], Partition::Train);
            assert_eq!(r.assignment.partition[&format!("g3m{m}")], Partition::Train);
        }
        let rep = split_report(&r.assignment, &r.scores).unwrap();
        assert!(rep.is_monotone());
    }

    #[test]
    fn identical_norms_still_total() {
        let stories: Vec<Story> = (0..6).map(|i| sample_story(&format!("s{i}"))).collect();
        let mut emb = TableEmbedder::default();
        emb.table.insert(stories[0].norm.clone(), vec![1.0, 2.0]);
        let r = split_by_norm_distance(&stories, &emb, 3, Ratios::new(1, 1, 1).unwrap(), Exec::Sequential).unwrap();
        assert_eq!(r.assignment.partition.len(), 6);
        assert!(r.scores.values().all(|&d| d == 0.0));
        // equal DoI: cluster ids decide, so the lowest-id cluster goes to test
        let first = &r.clusters.as_ref().unwrap()[0];
        assert_eq!(r.assignment.partition[&first.member_ids[0]], Partition::Test);
    }

    #[test]
    fn too_many_clusters_rejected() {
        let stories = vec![sample_story("a")];
        let emb = TableEmbedder::default();
        assert!(matches!(
            split_by_norm_distance(&stories, &emb, 2, Ratios::default(), Exec::Sequential),
            Err(SplitError::ClusterCount { k: 2, n: 1 })
        ));
    }
}
