//! `fscil run`: the (method × seed × K) grid.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::thread;

use anyhow::anyhow;
use fscil_core::distributions::{save_store, STORE_VERSION};
use fscil_core::encoders::FEATURE_VERSION;
use fscil_core::prompt::{save_prompt, PROMPT_VERSION};
use fscil_core::protocol::{median, metric_avg, metric_pd, run_benchmark_with, Method};
use fscil_core::vae::VAE_VERSION;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult, Context};
use crate::results::ResultRow;
use crate::Progress;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Job {
    pub method: Method,
    pub seed: u64,
    pub shots: usize,
}

impl Job {
    fn label(&self) -> String {
        format!("{} seed {} K {}", self.method, self.seed, self.shots)
    }

    fn checkpoint_dir(&self, out: &Path) -> PathBuf {
        out.join("checkpoints")
            .join(self.method.tag())
            .join(format!("seed_{}", self.seed))
            .join(format!("k_{}", self.shots))
    }
}

/// Jobs in output order: method as listed, then seed, then `K`.
pub fn jobs(config: &RunConfig) -> CliResult<Vec<Job>> {
    let mut out = Vec::new();
    for method in config.methods()? {
        for &seed in &config.run.seeds {
            for shots in config.shots() {
                out.push(Job { method, seed, shots });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
struct RunSummary {
    method: String,
    seed: u64,
    #[serde(rename = "K")]
    k: usize,
    accuracies: Vec<f64>,
    avg: f64,
    pd: f64,
}

struct JobOutput {
    rows: Vec<ResultRow>,
    summary: RunSummary,
}

fn run_job(config: &RunConfig, job: Job, out: &Path, progress: Progress) -> CliResult<JobOutput> {
    let bench = config
        .benchmark(job.seed)?
        .with_shots(job.shots)
        .ctx(format!("run.shots: K = {}", job.shots))?;
    let method = config.method_config(job.method, job.seed);
    let ckpt = config.run.checkpoints.then(|| job.checkpoint_dir(out));
    if let Some(dir) = &ckpt {
        fs::create_dir_all(dir)?;
    }
    let label = job.label();
    let output = run_benchmark_with(&bench, &method, |snap| {
        progress.line(format!("[{label}] session {} accuracy {:.2}", snap.session, snap.result.accuracy));
        if let Some(dir) = &ckpt {
            let t = snap.session;
            save_prompt(snap.context, &dir.join(format!("session_{t}.fspc")))?;
            if let Some(store) = snap.store {
                save_store(store, &dir.join(format!("store_{t}.fsds")))?;
            }
        }
        Ok(())
    })
    .map_err(|e| CliError::from(e).context(label.clone()))?;
    let accuracies = output.accuracies();
    let rows = output
        .results
        .iter()
        .map(|r| ResultRow {
            method: job.method.tag().to_string(),
            seed: job.seed,
            k: job.shots,
            session: r.session,
            accuracy: r.accuracy,
            base_acc: r.base_accuracy,
            inc_acc: r.incremental_accuracy,
            hm: r.harmonic_mean,
            replay_bytes: r.replay_bytes,
            seconds: if config.run.timing { r.seconds } else { 0.0 },
        })
        .collect();
    Ok(JobOutput {
        rows,
        summary: RunSummary {
            method: job.method.tag().to_string(),
            seed: job.seed,
            k: job.shots,
            avg: metric_avg(&accuracies)?,
            pd: metric_pd(&accuracies)?,
            accuracies,
        },
    })
}

fn write_manifest(out: &Path, config: &RunConfig, jobs: &[Job], error: Option<&str>) -> CliResult<()> {
    let manifest = json!({
        "status": if error.is_none() { "complete" } else { "incomplete" },
        "error": error,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "benchmark": config.benchmark.name,
        "feature_dim": config.benchmark.encoder.feature_dim,
        "methods": config.method.methods,
        "seeds": config.run.seeds,
        "shots": config.shots(),
        "jobs": jobs.len(),
        "formats": {
            "feature_file": FEATURE_VERSION,
            "store": STORE_VERSION,
            "prompt": PROMPT_VERSION,
            "vae": VAE_VERSION,
        },
        "files": {
            "config": "resolved_config.toml",
            "results": "results.csv",
            "summary": "summary.json",
            "checkpoints": config.run.checkpoints.then_some("checkpoints"),
        },
    });
    let text = serde_json::to_string_pretty(&manifest).map_err(CliError::data)?;
    fs::write(out.join("manifest.json"), text + "\n")?;
    Ok(())
}

/// Medians over seeds per (method, K), in job order.
fn medians(runs: &[RunSummary]) -> CliResult<Vec<serde_json::Value>> {
    let mut groups: Vec<((String, usize), Vec<&RunSummary>)> = Vec::new();
    for r in runs {
        let key = (r.method.clone(), r.k);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|((method, k), rs)| {
            let col = |f: fn(&RunSummary) -> f64| rs.iter().map(|r| f(r)).collect::<Vec<_>>();
            let sessions = rs[0].accuracies.len();
            let per_session = (0..sessions)
                .map(|t| median(&rs.iter().map(|r| r.accuracies[t]).collect::<Vec<_>>()))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(json!({
                "method": method,
                "K": k,
                "seeds": rs.len(),
                "median_avg": median(&col(|r| r.avg))?,
                "median_pd": median(&col(|r| r.pd))?,
                "median_accuracies": per_session,
            }))
        })
        .collect()
}

/// Runs every job and writes the results, summary, resolved configuration
/// and manifest under `out`.
pub fn cmd_run(config: &RunConfig, out: &Path, progress: Progress) -> CliResult<()> {
    fs::create_dir_all(out).ctx(format!("cannot create {}", out.display()))?;
    let jobs = jobs(config)?;
    fs::write(out.join("resolved_config.toml"), config.to_toml())?;
    write_manifest(out, config, &jobs, Some("run in progress"))?;

    let result = execute(config, &jobs, out, progress);
    match &result {
        Ok(runs) => {
            let summary = json!({ "runs": runs, "medians": medians(runs)? });
            let text = serde_json::to_string_pretty(&summary).map_err(CliError::data)?;
            fs::write(out.join("summary.json"), text + "\n")?;
            write_manifest(out, config, &jobs, None)?;
        }
        Err(e) => write_manifest(out, config, &jobs, Some(&e.to_string()))?,
    }
    result.map(|_| ())
}

fn execute(config: &RunConfig, jobs: &[Job], out: &Path, progress: Progress) -> CliResult<Vec<RunSummary>> {
    let file = File::create(out.join("results.csv"))?;
    let (tx, rx) = mpsc::channel::<(usize, CliResult<JobOutput>)>();
    let total = jobs.len();

    let writer = thread::spawn(move || -> CliResult<Vec<RunSummary>> {
        let mut csv = csv::Writer::from_writer(file);
        let mut pending = BTreeMap::new();
        let mut summaries = Vec::with_capacity(total);
        let mut first_error = None;
        for (i, outcome) in rx {
            match outcome {
                Ok(o) => {
                    pending.insert(i, o);
                }
                Err(e) => {
                    first_error.get_or_insert((i, e));
                }
            }
            while let Some(o) = pending.remove(&summaries.len()) {
                for row in &o.rows {
                    csv.serialize(row).map_err(CliError::data)?;
                }
                csv.flush()?;
                summaries.push(o.summary);
            }
        }
        if let Some((_, e)) = first_error {
            return Err(e);
        }
        if summaries.len() != total {
            return Err(CliError::data(anyhow!("{} of {total} jobs produced no results", total - summaries.len())));
        }
        Ok(summaries)
    });

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.run.jobs)
        .build()
        .map_err(CliError::config)?;
    let failed = AtomicBool::new(false);
    pool.install(|| {
        jobs.par_iter().enumerate().for_each_with(tx, |tx, (i, &job)| {
            if failed.load(Ordering::SeqCst) {
                return;
            }
            let outcome = run_job(config, job, out, progress);
            if outcome.is_err() {
                failed.store(true, Ordering::SeqCst);
            }
            let _ = tx.send((i, outcome));
        });
    });
    writer.join().map_err(|_| CliError::data(anyhow!("results writer panicked")))?
}
