use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use normchain::metrics::{
    cls_eval, corpus_bleu, joint_ngram_diversity, krippendorff_alpha, rouge_l, EvalPair, RatingMatrix,
};
use serde::Serialize;

use crate::io::{create_dir, read_lines, write_json, write_run_config};
use crate::Status;

#[derive(Subcommand)]
pub enum EvalCommand {
    /// BLEU, ROUGE-L and n-gram diversity of generated lines.
    Gen(GenArgs),
    /// Accuracy, precision, recall and F1 of predicted labels.
    Cls(ClsArgs),
    /// Krippendorff's alpha of a rating matrix.
    Ratings(RatingsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GenMetric {
    Bleu,
    Rouge,
    Diversity,
}

#[derive(Args, Serialize)]
pub struct GenArgs {
    /// One hypothesis per line.
    #[arg(long)]
    pub hyp: PathBuf,
    /// One reference per line, aligned with the hypotheses; repeat for multiple references.
    #[arg(long = "ref", required = true)]
    pub refs: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "bleu,rouge,diversity")]
    pub metrics: Vec<GenMetric>,
    /// Also write `metrics.json` and `run_config.json` here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct ClsArgs {
    /// One predicted label per line.
    #[arg(long)]
    pub pred: PathBuf,
    /// One gold label per line.
    #[arg(long)]
    pub gold: PathBuf,
    /// Label treated as the positive class.
    #[arg(long)]
    pub positive: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct RatingsArgs {
    /// Items as rows, raters as columns; blank cells are missing ratings.
    #[arg(long)]
    pub csv: PathBuf,
    /// Skip the first row.
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn emit<A: Serialize>(metrics: &BTreeMap<&str, f64>, out: Option<&PathBuf>, command: &str, args: &A) -> Result<Status> {
    println!("{}", serde_json::to_string(metrics)?);
    if let Some(out) = out {
        create_dir(out)?;
        write_json(&out.join("metrics.json"), metrics)?;
        write_run_config(out, command, args)?;
    }
    Ok(Status::Ok)
}

fn non_blank(path: &Path) -> Result<Vec<String>> {
    let mut lines = read_lines(path)?;
    while lines.last().is_some_and(|l| l.trim().is_empty()) {
        lines.pop();
    }
    Ok(lines)
}

fn gen(args: GenArgs) -> Result<Status> {
    let hyps = non_blank(&args.hyp)?;
    let refs: Vec<Vec<String>> = args.refs.iter().map(|p| non_blank(p)).collect::<Result<_>>()?;
    for (path, r) in args.refs.iter().zip(&refs) {
        if r.len() != hyps.len() {
            bail!(
                "{} has {} lines, hypotheses have {}",
                path.display(),
                r.len(),
                hyps.len()
            );
        }
    }
    let pairs: Vec<EvalPair> = hyps
        .iter()
        .enumerate()
        .map(|(i, h)| EvalPair::new(h.clone(), refs.iter().map(|r| r[i].clone()).collect()))
        .collect();
    let mut metrics = BTreeMap::new();
    metrics.insert("count", pairs.len() as f64);
    for m in &args.metrics {
        match m {
            GenMetric::Bleu => {
                metrics.insert("bleu", corpus_bleu(&pairs)?);
            }
            GenMetric::Rouge => {
                if pairs.is_empty() {
                    bail!("no hypotheses");
                }
                let total: f64 = pairs.iter().map(rouge_l).sum();
                metrics.insert("rouge_l", total / pairs.len() as f64);
            }
            GenMetric::Diversity => {
                metrics.insert("diversity", joint_ngram_diversity(&hyps)?);
            }
        }
    }
    emit(&metrics, args.out.as_ref(), "eval gen", &args)
}

fn cls(args: ClsArgs) -> Result<Status> {
    let pred = non_blank(&args.pred)?;
    let gold = non_blank(&args.gold)?;
    let s = cls_eval(&pred, &gold, &args.positive)?;
    let metrics = BTreeMap::from([
        ("accuracy", s.accuracy),
        ("precision", s.precision),
        ("recall", s.recall),
        ("f1", s.f1),
        ("count", pred.len() as f64),
    ]);
    emit(&metrics, args.out.as_ref(), "eval cls", &args)
}

fn ratings(args: RatingsArgs) -> Result<Status> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(args.header)
        .flexible(true)
        .from_path(&args.csv)
        .with_context(|| format!("reading {}", args.csv.display()))?;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.with_context(|| format!("reading {}", args.csv.display()))?;
        rows.push(
            rec.iter()
                .map(|c| {
                    let c = c.trim();
                    (!c.is_empty()).then(|| c.to_string())
                })
                .collect::<Vec<_>>(),
        );
    }
    let raters = rows.iter().map(Vec::len).max().unwrap_or(0);
    for r in &mut rows {
        r.resize(raters, None);
    }
    let alpha = krippendorff_alpha(&RatingMatrix::from_rows(&rows))?;
    let metrics = BTreeMap::from([
        ("alpha", alpha),
        ("items", rows.len() as f64),
        ("raters", raters as f64),
    ]);
    emit(&metrics, args.out.as_ref(), "eval ratings", &args)
}

pub fn run(cmd: EvalCommand) -> Result<Status> {
    match cmd {
        EvalCommand::Gen(a) => gen(a),
        EvalCommand::Cls(a) => cls(a),
        EvalCommand::Ratings(a) => ratings(a),
    }
}
