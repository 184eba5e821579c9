use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::Args;
use normchain::corpus::{load_corpus, save_corpus};
use normchain::providers::mock::HashedNgramEmbedder;
use normchain::providers::{Embedder, HttpProvider};
use normchain::splitting::{
    split_by_lexical_bias, split_by_minimal_pairs, split_by_norm_distance, split_report, Partition, Ratios, Strategy,
    SuffixLemmatizer, TargetField, DEFAULT_CLUSTERS, DEFAULT_LEMMAS,
};
use serde::Serialize;

use crate::io::{create_dir, write_json, write_run_config, Workers};
use crate::Status;

#[derive(Args, Serialize)]
pub struct SplitArgs {
    /// JSONL corpus, one story per line.
    pub corpus: PathBuf,
    /// nd (norm distance), lb (lexical bias) or mp (minimal pairs).
    #[arg(long)]
    pub strategy: Strategy,
    /// Field pair scored by lb and mp.
    #[arg(long, default_value = "actions")]
    pub target: TargetField,
    /// train:dev:test
    #[arg(long, default_value = "10:1:1")]
    pub ratios: Ratios,
    /// Number of norm clusters (nd).
    #[arg(long, default_value_t = DEFAULT_CLUSTERS)]
    pub k: usize,
    /// Size of the lemma skew table (lb).
    #[arg(long, default_value_t = DEFAULT_LEMMAS)]
    pub lemmas: usize,
    /// `mock` or the base URL of an embedding service (nd).
    #[arg(long)]
    pub embedder: Option<String>,
    /// Seed of the mock embedder.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dimension of the mock embedder.
    #[arg(long, default_value_t = 256)]
    pub mock_dim: usize,
    #[arg(long, default_value_t = 120)]
    pub timeout_secs: u64,
    #[arg(long, default_value_t = 8)]
    pub max_in_flight: usize,
    /// Exit with status 1 if partition means are not monotone.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub workers: Workers,
}

fn embedder(args: &SplitArgs) -> Result<Box<dyn Embedder>> {
    match args.embedder.as_deref() {
        None => bail!("--embedder is required for the nd strategy"),
        Some("mock") => {
            let Some(seed) = args.seed else {
                bail!("--seed is required with the mock embedder");
            };
            Ok(Box::new(HashedNgramEmbedder::new(args.mock_dim, seed)))
        }
        Some(url) => {
            let client = HttpProvider::new(url, Duration::from_secs(args.timeout_secs), args.max_in_flight)
                .map_err(|e| anyhow::anyhow!("invalid embedder endpoint `{url}`: {e}"))?;
            Ok(Box::new(client))
        }
    }
}

pub fn run(mut args: SplitArgs) -> Result<Status> {
    let exec = args.workers.resolve();
    let stories = load_corpus(&args.corpus)?;
    let result = match args.strategy {
        Strategy::NormDistance => {
            let emb = embedder(&args)?;
            split_by_norm_distance(&stories, emb.as_ref(), args.k, args.ratios, exec).context("norm-distance split")?
        }
        Strategy::LexicalBias => {
            split_by_lexical_bias(&stories, &SuffixLemmatizer, args.target, args.lemmas, args.ratios, exec)
        }
        Strategy::MinimalPairs => split_by_minimal_pairs(&stories, args.target, args.ratios, exec),
    };
    let report = split_report(&result.assignment, &result.scores)?;

    create_dir(&args.out)?;
    for p in Partition::ALL {
        let part: Vec<_> = result.assignment.select(&stories, p).into_iter().cloned().collect();
        save_corpus(args.out.join(format!("{p}.jsonl")), &part)?;
    }
    write_json(&args.out.join("split_report.json"), &report)?;
    write_json(&args.out.join("split.json"), &result)?;
    write_run_config(&args.out, "split", &args)?;
    println!("{}", serde_json::to_string(&report)?);

    if args.strict && !report.is_monotone() {
        eprintln!("partition means are not monotone");
        return Ok(Status::Invalid);
    }
    Ok(Status::Ok)
}
