use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;

#[derive(Args, Serialize, Clone, Copy)]
#[serde(transparent)]
pub struct Workers {
    /// Worker threads; defaults to the available parallelism. Outputs do not
    /// depend on this.
    #[arg(long)]
    pub workers: Option<usize>,
}

impl Workers {
    /// Fills in the default so it is recorded in the run config.
    pub fn resolve(&mut self) -> normchain::Exec {
        let n = *self
            .workers
            .get_or_insert_with(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        normchain::Exec::with_workers(n)
    }
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("writing {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))
}

pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(str::to_string).collect())
}

#[derive(Serialize)]
struct RunConfig<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    #[serde(flatten)]
    params: &'a T,
}

/// Writes the fully resolved parameters of a run next to its outputs.
pub fn write_run_config<T: Serialize>(dir: &Path, command: &str, params: &T) -> Result<()> {
    write_json(
        &dir.join("run_config.json"),
        &RunConfig {
            command,
            version: env!("CARGO_PKG_VERSION"),
            params,
        },
    )
}
