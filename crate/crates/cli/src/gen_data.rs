//! `fscil gen-data`: writes synthetic benchmarks as feature files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use fscil_core::encoders::{write_class_names, write_feature_file, FEATURE_VERSION};
use serde_json::json;

use crate::config::{FileSession, FilesBlock, RunConfig};
use crate::error::{CliError, CliResult, Context};
use crate::Progress;

/// For every seed, writes `seed_<s>/` holding one train and one test file
/// per session, the class names, a manifest, and a `run.toml` that runs
/// the same experiment from the written files. The full per-class pool is
/// written for incremental classes; `K` selects a prefix at run time.
pub fn cmd_gen_data(config: &RunConfig, out: &Path, progress: Progress) -> CliResult<()> {
    if config.layout().is_none() {
        return Err(CliError::config(anyhow!("gen-data needs a [benchmark.synthetic] layout")));
    }
    fs::create_dir_all(out).ctx(format!("cannot create {}", out.display()))?;
    let mut per_seed = Vec::new();
    for &seed in &config.run.seeds {
        let dir = out.join(format!("seed_{seed}"));
        fs::create_dir_all(&dir).ctx(format!("cannot create {}", dir.display()))?;
        let bench = config.benchmark(seed)?;
        let dim = bench.dim();
        write_class_names(&dir.join("names.txt"), bench.class_names())?;
        let mut sessions = Vec::new();
        for (t, s) in bench.sessions().iter().enumerate() {
            let train = PathBuf::from(format!("session_{t}_train.fscf"));
            let test = PathBuf::from(format!("session_{t}_test.fscf"));
            write_feature_file(&dir.join(&train), dim, &s.train)?;
            write_feature_file(&dir.join(&test), dim, &s.test)?;
            sessions.push(FileSession { train, test });
        }
        let mut from_files = config.clone();
        from_files.benchmark.synthetic = None;
        from_files.benchmark.files = Some(FilesBlock {
            names: "names.txt".into(),
            sessions: sessions.clone(),
            base_session: bench.has_base_session(),
            embedding_seed: bench.embedding_seed(),
            encoder_seed: bench.encoder_spec().seed,
        });
        from_files.run.seeds = vec![seed];
        from_files.run.out = None;
        fs::write(dir.join("run.toml"), from_files.to_toml())?;

        let manifest = json!({
            "seed": seed,
            "feature_dim": dim,
            "classes": bench.class_names().len(),
            "embedding_seed": bench.embedding_seed(),
            "encoder_seed": bench.encoder_spec().seed,
            "sessions": bench.sessions().iter().zip(&sessions).map(|(s, f)| json!({
                "classes": s.classes.iter().map(|c| c.0).collect::<Vec<_>>(),
                "base": s.is_base,
                "train": f.train,
                "train_records": s.train.len(),
                "test": f.test,
                "test_records": s.test.len(),
            })).collect::<Vec<_>>(),
        });
        write_json(&dir.join("manifest.json"), &manifest)?;
        progress.line(format!("seed {seed}: {} sessions written to {}", sessions.len(), dir.display()));
        per_seed.push(format!("seed_{seed}"));
    }
    let manifest = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "benchmark": config.benchmark,
        "feature_dim": config.benchmark.encoder.feature_dim,
        "seeds": config.run.seeds,
        "directories": per_seed,
        "formats": { "feature_file": FEATURE_VERSION, "names": "utf-8, one class name per line" },
    });
    write_json(&out.join("manifest.json"), &manifest)
}

fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(CliError::data)?;
    fs::write(path, text + "\n").ctx(format!("cannot write {}", path.display()))
}
