use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand};
use normchain::coe::{run_batch, summarize, ChainConfig, ChainStrategy, CoeSample, Experts};
use normchain::corpus::load_corpus;
use normchain::tasks::{Orientation, TaskSample};
use serde::Serialize;

use crate::io::{create_dir, read_lines, write_json, write_jsonl, write_run_config, Workers};
use crate::Status;

#[derive(Subcommand)]
pub enum CoeCommand {
    /// Run one strategy over a batch of samples.
    Run(CoeArgs),
}

#[derive(Args, Serialize)]
pub struct CoeArgs {
    /// JSON chain config: strategy, endpoints per role, decode parameters.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the strategy named in the config.
    #[arg(long)]
    pub strategy: Option<ChainStrategy>,
    /// JSONL of chain samples or task samples.
    #[arg(long, conflicts_with = "stories", required_unless_present = "stories")]
    pub samples: Option<PathBuf>,
    /// JSONL corpus; every story yields one sample per orientation (one for norm synthesis).
    #[arg(long)]
    pub stories: Option<PathBuf>,
    /// Base decoding seed; replaces the seed in the config.
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub workers: Workers,
}

#[derive(Serialize)]
struct Resolved<'a> {
    #[serde(flatten)]
    args: &'a CoeArgs,
    chain: &'a ChainConfig,
}

fn parse_sample(line: &str) -> Result<CoeSample> {
    if let Ok(t) = serde_json::from_str::<TaskSample>(line) {
        return Ok(CoeSample::from_task_sample(&t));
    }
    Ok(serde_json::from_str::<CoeSample>(line)?)
}

fn load_samples(args: &CoeArgs, strategy: ChainStrategy) -> Result<Vec<CoeSample>> {
    if let Some(path) = &args.samples {
        return read_lines(path)?
            .iter()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| parse_sample(l).with_context(|| format!("{}: line {}", path.display(), i + 1)))
            .collect();
    }
    let Some(path) = &args.stories else {
        bail!("one of --samples or --stories is required");
    };
    let stories = load_corpus(path)?;
    let both = [Orientation::Moral, Orientation::Immoral];
    Ok(stories
        .iter()
        .flat_map(|s| -> Vec<CoeSample> {
            match strategy {
                ChainStrategy::NormSynthetic => vec![CoeSample::for_norm(s)],
                ChainStrategy::ActionRanking | ChainStrategy::AbductiveRefinement => {
                    both.iter().map(|&o| CoeSample::for_action(s, o)).collect()
                }
                ChainStrategy::ConseqRanking | ChainStrategy::IterativeRefinement => {
                    both.iter().map(|&o| CoeSample::for_consequence(s, o)).collect()
                }
            }
        })
        .collect())
}

pub fn run(cmd: CoeCommand) -> Result<Status> {
    let CoeCommand::Run(mut args) = cmd;
    let exec = args.workers.resolve();
    let text = std::fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let mut cfg: ChainConfig =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.config.display()))?;
    if let Some(s) = args.strategy {
        cfg.strategy = s;
    }
    cfg.decode.seed = args.seed;
    cfg.validate()
        .map_err(|e| anyhow::anyhow!("invalid chain config: {e}"))?;
    let experts = Experts::from_config(&cfg).map_err(|e| anyhow::anyhow!("building experts: {e}"))?;
    let samples = load_samples(&args, cfg.strategy)?;

    let traces = run_batch(&samples, &experts, &cfg, exec);
    let summary = summarize(&traces, &cfg);

    create_dir(&args.out)?;
    write_jsonl(&args.out.join("traces.jsonl"), &traces)?;
    write_json(&args.out.join("summary.json"), &summary)?;
    write_run_config(
        &args.out,
        "coe run",
        &Resolved {
            args: &args,
            chain: &cfg,
        },
    )?;
    println!("{}", serde_json::to_string(&summary)?);

    if summary.failed > 0 {
        eprintln!("{} of {} samples failed", summary.failed, summary.samples);
        return Ok(Status::ProviderFailure);
    }
    if !summary.budget_ok || !summary.argmax_ok {
        eprintln!("call budget or argmax check failed");
        return Ok(Status::Invalid);
    }
    Ok(Status::Ok)
}
