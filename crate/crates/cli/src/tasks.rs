use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use normchain::corpus::load_corpus;
use normchain::splitting::Partition;
use normchain::tasks::{build_samples, Setting, TaskKind};
use serde::Serialize;

use crate::io::{create_dir, write_json, write_jsonl, write_run_config};
use crate::Status;

#[derive(Args, Serialize)]
pub struct TasksArgs {
    /// A corpus file, or a directory holding train/dev/test.jsonl.
    pub input: PathBuf,
    /// action_cls, conseq_cls, action_gen, conseq_gen or norm_gen.
    #[arg(long)]
    pub task: TaskKind,
    /// Grounding setting; defaults to the first one the task defines.
    #[arg(long)]
    pub setting: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(mut args: TasksArgs) -> Result<Status> {
    let setting = match &args.setting {
        Some(tag) => Setting::parse_for(args.task, tag)?,
        None => args.task.settings()[0],
    };
    args.setting = Some(setting.tag().to_string());

    let parts: Vec<(String, PathBuf)> = if args.input.is_dir() {
        let found: Vec<_> = Partition::ALL
            .iter()
            .map(|p| (p.to_string(), args.input.join(format!("{p}.jsonl"))))
            .filter(|(_, path)| path.is_file())
            .collect();
        if found.is_empty() {
            bail!("{} holds no train/dev/test.jsonl", args.input.display());
        }
        found
    } else {
        vec![("all".to_string(), args.input.clone())]
    };

    create_dir(&args.out)?;
    let mut counts = BTreeMap::new();
    for (name, path) in parts {
        let stories = load_corpus(&path)?;
        let samples = build_samples(&stories, args.task, setting)?;
        write_jsonl(&args.out.join(format!("{name}.jsonl")), &samples)?;
        counts.insert(name, samples.len());
    }
    write_json(&args.out.join("counts.json"), &counts)?;
    write_run_config(&args.out, "tasks", &args)?;
    println!("{}", serde_json::to_string(&counts)?);
    Ok(Status::Ok)
}
