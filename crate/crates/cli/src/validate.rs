use std::collections::HashSet;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use normchain::corpus::parse_record;
use serde::Serialize;

use crate::io::{create_dir, read_lines, write_jsonl, write_run_config};
use crate::Status;

#[derive(Args, Serialize)]
pub struct ValidateArgs {
    /// JSONL corpus, one story per line.
    pub corpus: PathBuf,
    /// Also write `violations.jsonl` and `run_config.json` here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Violation {
    line: usize,
    message: String,
}

pub fn run(args: ValidateArgs) -> Result<Status> {
    let lines = read_lines(&args.corpus)?;
    let mut seen = HashSet::new();
    let mut violations = Vec::new();
    let mut stories = 0;
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(i + 1, line) {
            Ok(story) => {
                stories += 1;
                if !seen.insert(story.id.clone()) {
                    violations.push(Violation {
                        line: i + 1,
                        message: format!("line {}: duplicate story id `{}`", i + 1, story.id),
                    });
                }
            }
            Err(e) => violations.push(Violation {
                line: i + 1,
                message: e.to_string(),
            }),
        }
    }
    for v in &violations {
        println!("{}", serde_json::to_string(v)?);
    }
    eprintln!("{stories} valid stories, {} violations", violations.len());
    if let Some(out) = &args.out {
        create_dir(out)?;
        write_jsonl(&out.join("violations.jsonl"), &violations)?;
        write_run_config(out, "validate", &args)?;
    }
    Ok(if violations.is_empty() {
        Status::Ok
    } else {
        Status::Invalid
    })
}
