//! Seeded synthetic corpora for audits, benches and the oracle world.
//!
//! Stories fall into norm groups. Every group shares a norm template and an
//! embedding centre; odd groups sit close to their even neighbour, so
//! isolation varies across groups. Moral and immoral actions draw from
//! class-skewed verb lists with neutral filler, and a share of stories are
//! near minimal pairs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Story;
use crate::providers::mock::TableEmbedder;

const DIM: usize = 24;

const NAMES: [&str; 12] = [
    "Ann", "Ben", "Cara", "Dev", "Eli", "Fay", "Gus", "Hana", "Ivo", "Jun", "Kim", "Lea",
];
const ADJECTIVES: [&str; 10] = [
    "good", "wrong", "kind", "rude", "fair", "unfair", "polite", "selfish", "expected", "cruel",
];
const NORM_VERBS: [&str; 10] = [
    "help", "ignore", "share", "hoard", "thank", "mock", "visit", "abandon", "repay", "cheat",
];
const NORM_OBJECTS: [&str; 8] = [
    "neighbors",
    "friends",
    "coworkers",
    "strangers",
    "family",
    "classmates",
    "pets",
    "elders",
];
const MORAL_VERBS: [&str; 8] = [
    "helps",
    "thanks",
    "shares",
    "returns",
    "apologizes to",
    "comforts",
    "invites",
    "repays",
];
const IMMORAL_VERBS: [&str; 8] = [
    "steals from",
    "lies to",
    "ignores",
    "mocks",
    "cheats",
    "insults",
    "abandons",
    "blames",
];
const NEUTRAL_VERBS: [&str; 6] = ["meets", "calls", "sees", "visits", "texts", "follows"];
const OBJECTS: [&str; 8] = [
    "the neighbor",
    "a friend",
    "the teacher",
    "a coworker",
    "the cashier",
    "a stranger",
    "the coach",
    "a cousin",
];
const TAILS: [&str; 8] = [
    "after lunch",
    "at the park",
    "before school",
    "on the bus",
    "at work",
    "in the evening",
    "during the game",
    "at the store",
];

pub struct SyntheticCorpus {
    pub stories: Vec<Story>,
    /// Planted norm vectors, one per distinct norm.
    pub embedder: TableEmbedder,
    pub groups: usize,
}

fn unit_noise(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..DIM).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// `n` stories in `groups` norm groups (round-robin), deterministic in
/// `seed`. Ids are `syn00000`, `syn00001`, ...
pub fn synthetic_corpus(n: usize, groups: usize, seed: u64) -> SyntheticCorpus {
    let groups = groups.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut centres: Vec<Vec<f64>> = Vec::with_capacity(groups);
    for g in 0..groups {
        let c = if g % 2 == 1 {
            // odd groups shadow their even neighbour at a group-dependent gap
            let gap = 0.1 + 0.9 * (g as f64 / groups as f64);
            let noise = unit_noise(&mut rng);
            centres[g - 1].iter().zip(noise).map(|(a, b)| a + gap * b).collect()
        } else {
            let mut c = unit_noise(&mut rng);
            c[g % DIM] += 2.0;
            c
        };
        centres.push(c);
    }

    let mut embedder = TableEmbedder::default();
    let mut stories = Vec::with_capacity(n);
    for i in 0..n {
        let g = i % groups;
        let norm = format!(
            "It is {} to {} your {} ({} {}).",
            ADJECTIVES[g % ADJECTIVES.len()],
            NORM_VERBS[(g / ADJECTIVES.len()) % NORM_VERBS.len()],
            NORM_OBJECTS[(g / 3) % NORM_OBJECTS.len()],
            g,
            i / groups
        );
        let jitter = unit_noise(&mut rng);
        let v: Vec<f64> = centres[g].iter().zip(jitter).map(|(c, j)| c + 0.05 * j).collect();
        embedder.table.insert(norm.clone(), v);

        let name = *NAMES.choose(&mut rng).expect("non-empty");
        let object = *OBJECTS.choose(&mut rng).expect("non-empty");
        let tail = *TAILS.choose(&mut rng).expect("non-empty");
        let r: f64 = rng.gen();
        let (moral_action, immoral_action) = if r < 0.25 {
            // near minimal pair with only neutral words
            let v1 = *NEUTRAL_VERBS.choose(&mut rng).expect("non-empty");
            let v2 = *NEUTRAL_VERBS.choose(&mut rng).expect("non-empty");
            (
                format!("{name} {v1} {object} {tail}."),
                format!("{name} {v2} {object} {tail}."),
            )
        } else {
            let mv = *MORAL_VERBS.choose(&mut rng).expect("non-empty");
            let iv = *IMMORAL_VERBS.choose(&mut rng).expect("non-empty");
            let other_tail = *TAILS.choose(&mut rng).expect("non-empty");
            if r < 0.6 {
                (
                    format!("{name} {mv} {object} {tail}."),
                    format!("{name} {iv} {object} {tail}."),
                )
            } else {
                let other = *OBJECTS.choose(&mut rng).expect("non-empty");
                (
                    format!("{name} {mv} {object} {tail}."),
                    format!("{name} quickly {iv} {other} and leaves {other_tail}."),
                )
            }
        };
        stories.push(Story {
            id: format!("syn{i:05}"),
            norm,
            situation: format!("{name} is with {object} {tail}."),
            intention: format!("{name} wants to get something done."),
            moral_action,
            moral_consequence: format!("{object} is grateful to {name}."),
            immoral_action,
            immoral_consequence: format!("{object} is upset with {name}."),
        });
    }
    SyntheticCorpus {
        stories,
        embedder,
        groups,
    }
}
