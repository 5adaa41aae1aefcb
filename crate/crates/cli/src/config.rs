//! Experiment configuration files.
//!
//! A configuration is a TOML document with three tables, `benchmark`,
//! `method` and `run`. Every key has a default except the paths of a
//! file-backed benchmark, and unknown keys are rejected. Dotted keys such as
//! `benchmark.shots = 5` are plain TOML.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use fscil_core::encoders::{load_class_names, load_feature_file, EncoderInit, TextEncoderDims, WorldParams};
use fscil_core::protocol::{
    build_synthetic_benchmark, BenchmarkSpec, EncoderSpec, FirstSessionSchedule, Method, MethodConfig, Schedule,
    SessionSpec, SyntheticLayout,
};
use fscil_core::vae::VaeTrainConfig;
use fscil_core::ClassId;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, Context};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub benchmark: BenchmarkBlock,
    pub method: MethodBlock,
    pub run: RunBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkBlock {
    pub name: String,
    /// Default `K`, used when `run.shots` is not given.
    pub shots: usize,
    pub encoder: EncoderBlock,
    /// Exactly one of `synthetic` and `files` is used; a configuration with
    /// neither gets the default synthetic layout.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub files: Option<FilesBlock>,
}

impl Default for BenchmarkBlock {
    fn default() -> Self {
        let layout = SyntheticLayout::default();
        Self {
            name: layout.name,
            shots: layout.shots,
            encoder: EncoderBlock::default(),
            synthetic: None,
            files: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderBlock {
    pub feature_dim: usize,
    pub context_len: usize,
    pub ctx_dim: usize,
    pub cls_dim: usize,
    /// Defaults to `4 · feature_dim`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden: Option<usize>,
    pub context_gain: f64,
    pub class_gain: f64,
    pub hidden_bias_std: f64,
}

impl Default for EncoderBlock {
    fn default() -> Self {
        let dims = TextEncoderDims::default();
        let init = EncoderInit::default();
        Self {
            feature_dim: dims.feature_dim,
            context_len: dims.context_len,
            ctx_dim: dims.ctx_dim,
            cls_dim: dims.cls_dim,
            hidden: None,
            context_gain: init.context_gain,
            class_gain: init.class_gain,
            hidden_bias_std: init.hidden_bias_std,
        }
    }
}

impl EncoderBlock {
    pub fn dims(&self) -> TextEncoderDims {
        let mut dims = TextEncoderDims::new(self.context_len, self.ctx_dim, self.cls_dim, self.feature_dim);
        if let Some(h) = self.hidden {
            dims.hidden = h;
        }
        dims
    }

    pub fn init(&self) -> EncoderInit {
        EncoderInit {
            context_gain: self.context_gain,
            class_gain: self.class_gain,
            hidden_bias_std: self.hidden_bias_std,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticBlock {
    pub base_classes: usize,
    pub base_train: usize,
    pub ways: usize,
    pub sessions: usize,
    pub pool: usize,
    pub test_per_class: usize,
    pub alignment: f64,
    pub hidden_prompt_std: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub session_classes: Option<Vec<Vec<u32>>>,
    pub world: WorldBlock,
}

impl Default for SyntheticBlock {
    fn default() -> Self {
        let l = SyntheticLayout::default();
        Self {
            base_classes: l.base_classes,
            base_train: l.base_train,
            ways: l.ways,
            sessions: l.incremental_sessions,
            pool: l.pool,
            test_per_class: l.test_per_class,
            alignment: l.alignment,
            hidden_prompt_std: l.hidden_prompt_std,
            session_classes: None,
            world: WorldBlock::from(l.world),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldBlock {
    pub mean_norm: f64,
    pub noise: f64,
    pub noise_spread: f64,
}

impl From<WorldParams> for WorldBlock {
    fn from(w: WorldParams) -> Self {
        Self {
            mean_norm: w.mean_norm,
            noise: w.noise,
            noise_spread: w.noise_spread,
        }
    }
}

impl Default for WorldBlock {
    fn default() -> Self {
        SyntheticBlock::default().world
    }
}

/// A benchmark read from feature files. Relative paths are resolved
/// against the configuration file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilesBlock {
    pub names: PathBuf,
    pub sessions: Vec<FileSession>,
    /// Whether session 0 is a data-rich base session.
    #[serde(default = "yes")]
    pub base_session: bool,
    #[serde(default)]
    pub embedding_seed: u64,
    #[serde(default)]
    pub encoder_seed: u64,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSession {
    pub train: PathBuf,
    pub test: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstSession {
    Base,
    Incremental,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodBlock {
    pub methods: Vec<String>,
    pub synth_count: usize,
    pub replay_count: usize,
    pub lambda_o: f64,
    pub temperature: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub prompt_init_std: f64,
    pub exemplars_per_class: usize,
    /// Required when the benchmark has no base session.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_session: Option<FirstSession>,
    pub base: ScheduleBlock,
    pub incremental: ScheduleBlock,
    pub joint: ScheduleBlock,
    pub vae: VaeBlock,
}

impl Default for MethodBlock {
    fn default() -> Self {
        let m = MethodConfig::new(Method::LpDif, 0);
        Self {
            methods: vec![Method::LpDif.tag().to_string()],
            synth_count: m.synth_count,
            replay_count: m.replay_count,
            lambda_o: m.lambda_o,
            temperature: m.temperature,
            learning_rate: m.learning_rate,
            momentum: m.momentum,
            prompt_init_std: m.prompt_init_std,
            exemplars_per_class: m.exemplars_per_class,
            first_session: None,
            base: m.base.into(),
            incremental: m.incremental.into(),
            joint: m.joint.into(),
            vae: m.vae.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleBlock {
    pub epochs: usize,
    pub batch_size: usize,
}

impl From<Schedule> for ScheduleBlock {
    fn from(s: Schedule) -> Self {
        Self {
            epochs: s.epochs,
            batch_size: s.batch_size,
        }
    }
}

impl From<ScheduleBlock> for Schedule {
    fn from(s: ScheduleBlock) -> Self {
        Self {
            epochs: s.epochs,
            batch_size: s.batch_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VaeBlock {
    pub latent_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// `0` trains on the full batch.
    pub batch_size: usize,
    pub lambda_r: f64,
    pub warm_start: bool,
}

impl From<VaeTrainConfig> for VaeBlock {
    fn from(v: VaeTrainConfig) -> Self {
        Self {
            latent_dim: v.latent_dim,
            epochs: v.epochs,
            learning_rate: v.learning_rate,
            momentum: v.momentum,
            batch_size: if v.batch_size == usize::MAX { 0 } else { v.batch_size },
            lambda_r: v.lambda_r,
            warm_start: v.warm_start,
        }
    }
}

impl Default for VaeBlock {
    fn default() -> Self {
        VaeTrainConfig::default().into()
    }
}

impl VaeBlock {
    pub fn train_config(&self) -> VaeTrainConfig {
        VaeTrainConfig {
            latent_dim: self.latent_dim,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            batch_size: if self.batch_size == 0 { usize::MAX } else { self.batch_size },
            lambda_r: self.lambda_r,
            warm_start: self.warm_start,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunBlock {
    pub seeds: Vec<u64>,
    /// The `K` values to sweep; defaults to `[benchmark.shots]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub jobs: usize,
    /// Write prompt checkpoints and store snapshots after every session.
    pub checkpoints: bool,
    /// Record wall-clock seconds per session; off keeps result files
    /// byte-reproducible.
    pub timing: bool,
}

impl Default for RunBlock {
    fn default() -> Self {
        Self {
            seeds: vec![0],
            shots: None,
            out: None,
            jobs: 1,
            checkpoints: true,
            timing: false,
        }
    }
}

impl RunConfig {
    /// Parses, resolves defaults and relative paths, and validates.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(CliError::config)
            .map_err(|e| e.context(format!("cannot read config {}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| e.context(format!("in config {}", path.display())))
    }

    /// Parses a configuration document with paths relative to `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> CliResult<Self> {
        let mut config: RunConfig = toml::from_str(text).map_err(|e| CliError::config(anyhow!("{}", e.message())))?;
        config.resolve(base_dir);
        config.validate()?;
        Ok(config)
    }

    /// Fills in every defaulted value so the document is self-contained.
    pub fn resolve(&mut self, base_dir: &Path) {
        let b = &mut self.benchmark;
        if b.files.is_none() && b.synthetic.is_none() {
            b.synthetic = Some(SyntheticBlock::default());
        }
        if b.encoder.hidden.is_none() {
            b.encoder.hidden = Some(b.encoder.dims().hidden);
        }
        if self.run.shots.is_none() {
            self.run.shots = Some(vec![b.shots]);
        }
        if let Some(files) = &mut b.files {
            let join = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base_dir.join(p) };
            files.names = join(&files.names);
            for s in &mut files.sessions {
                s.train = join(&s.train);
                s.test = join(&s.test);
            }
        }
        if let Some(out) = &self.run.out {
            if out.is_relative() {
                self.run.out = Some(base_dir.join(out));
            }
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let b = &self.benchmark;
        if b.files.is_some() && b.synthetic.is_some() {
            return Err(CliError::config(anyhow!(
                "benchmark: give either a `synthetic` or a `files` table, not both"
            )));
        }
        if let Some(files) = &b.files {
            if files.sessions.is_empty() {
                return Err(CliError::config(anyhow!("benchmark.files.sessions is empty")));
            }
        }
        if let Some(layout) = self.layout() {
            layout.validate().ctx("benchmark.synthetic")?;
        }
        if self.run.seeds.is_empty() {
            return Err(CliError::config(anyhow!("run.seeds is empty")));
        }
        let shots = self.shots();
        if shots.is_empty() || shots.contains(&0) {
            return Err(CliError::config(anyhow!("run.shots must be a non-empty list of K >= 1")));
        }
        if self.run.jobs == 0 {
            return Err(CliError::config(anyhow!("run.jobs must be >= 1")));
        }
        let methods = self.methods()?;
        if methods.is_empty() {
            return Err(CliError::config(anyhow!("method.methods is empty")));
        }
        let no_base = b.files.as_ref().is_some_and(|f| !f.base_session)
            || b.synthetic.as_ref().is_some_and(|s| s.base_classes == 0);
        if no_base && self.method.first_session.is_none() {
            return Err(CliError::config(anyhow!(
                "method.first_session must be \"base\" or \"incremental\" for a benchmark without a base session"
            )));
        }
        for m in methods {
            self.method_config(m, self.run.seeds[0]).validate().ctx("method")?;
        }
        Ok(())
    }

    pub fn methods(&self) -> CliResult<Vec<Method>> {
        let mut seen = BTreeSet::new();
        self.method
            .methods
            .iter()
            .map(|s| {
                let m: Method = s.parse().ctx("method.methods")?;
                if !seen.insert(m) {
                    return Err(CliError::config(anyhow!("method.methods lists `{s}` twice")));
                }
                Ok(m)
            })
            .collect()
    }

    pub fn shots(&self) -> Vec<usize> {
        self.run.shots.clone().unwrap_or_else(|| vec![self.benchmark.shots])
    }

    pub fn method_config(&self, method: Method, seed: u64) -> MethodConfig {
        let m = &self.method;
        MethodConfig {
            method,
            synth_count: m.synth_count,
            replay_count: m.replay_count,
            lambda_o: m.lambda_o,
            temperature: m.temperature,
            learning_rate: m.learning_rate,
            momentum: m.momentum,
            prompt_init_std: m.prompt_init_std,
            base: m.base.into(),
            incremental: m.incremental.into(),
            joint: m.joint.into(),
            first_session: m.first_session.map(|f| match f {
                FirstSession::Base => FirstSessionSchedule::Base,
                FirstSession::Incremental => FirstSessionSchedule::Incremental,
            }),
            exemplars_per_class: m.exemplars_per_class,
            vae: m.vae.train_config(),
            seed,
        }
    }

    /// The synthetic layout, when the benchmark is synthetic.
    pub fn layout(&self) -> Option<SyntheticLayout> {
        let b = &self.benchmark;
        let s = b.synthetic.as_ref()?;
        Some(SyntheticLayout {
            name: b.name.clone(),
            base_classes: s.base_classes,
            base_train: s.base_train,
            ways: s.ways,
            incremental_sessions: s.sessions,
            shots: b.shots,
            pool: s.pool,
            test_per_class: s.test_per_class,
            encoder: b.encoder.dims(),
            encoder_init: b.encoder.init(),
            world: WorldParams {
                mean_norm: s.world.mean_norm,
                noise: s.world.noise,
                noise_spread: s.world.noise_spread,
            },
            alignment: s.alignment,
            hidden_prompt_std: s.hidden_prompt_std,
            session_classes: s.session_classes.clone(),
        })
    }

    /// Builds the benchmark for one seed. Synthetic benchmarks draw a new
    /// world per seed; file-backed ones ignore the seed.
    pub fn benchmark(&self, seed: u64) -> CliResult<BenchmarkSpec> {
        if let Some(layout) = self.layout() {
            return Ok(build_synthetic_benchmark(&layout, seed).ctx("building the synthetic benchmark")?.0);
        }
        let files = self.benchmark.files.as_ref().expect("resolved config has a benchmark source");
        load_file_benchmark(&self.benchmark, files)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

fn load_file_benchmark(block: &BenchmarkBlock, files: &FilesBlock) -> CliResult<BenchmarkSpec> {
    let names = load_class_names(&files.names).ctx(format!("reading {}", files.names.display()))?;
    let dims = block.encoder.dims();
    let load = |path: &Path| -> CliResult<Vec<_>> {
        let (dim, records) = load_feature_file(path).ctx(format!("reading {}", path.display()))?;
        if dim != dims.feature_dim {
            return Err(CliError::data(anyhow!(
                "{}: feature dimension {dim} does not match benchmark.encoder.feature_dim = {}",
                path.display(),
                dims.feature_dim
            )));
        }
        Ok(records)
    };
    let mut sessions = Vec::with_capacity(files.sessions.len());
    for (t, s) in files.sessions.iter().enumerate() {
        let train = load(&s.train)?;
        let test = load(&s.test)?;
        let classes: BTreeSet<ClassId> = train.iter().map(|r| r.class_id).collect();
        sessions.push(SessionSpec {
            classes: classes.into_iter().collect(),
            is_base: t == 0 && files.base_session,
            train,
            test,
        });
    }
    let encoder = EncoderSpec {
        dims,
        init: block.encoder.init(),
        seed: files.encoder_seed,
    };
    Ok(BenchmarkSpec::new(
        block.name.clone(),
        names,
        files.embedding_seed,
        encoder,
        sessions,
        block.shots,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_resolves_to_defaults() {
        let c = RunConfig::parse("", Path::new(".")).unwrap();
        assert_eq!(c.layout().unwrap(), SyntheticLayout::default());
        assert_eq!(c.shots(), vec![5]);
        assert_eq!(c.method_config(Method::LpDif, 3), MethodConfig::new(Method::LpDif, 3));
    }

    #[test]
    fn echo_round_trips() {
        let c = RunConfig::parse("method.methods = [\"lp_only\", \"joint_lp\"]\nrun.seeds = [1, 2]", Path::new("."))
            .unwrap();
        let again = RunConfig::parse(&c.to_toml(), Path::new(".")).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in ["benchmark.shot = 5", "[method]\nlambda = 1.0", "[method.vae]\nepoch = 3", "typo = 1"] {
            let e = RunConfig::parse(text, Path::new(".")).unwrap_err();
            assert_eq!(e.status, crate::error::ExitStatus::Config, "{text}");
            assert!(e.to_string().contains("unknown field"), "{e}");
        }
    }

    #[test]
    fn rejects_bad_methods_and_missing_first_session() {
        assert!(RunConfig::parse("method.methods = [\"lp-dif\"]", Path::new(".")).is_err());
        assert!(RunConfig::parse("method.methods = [\"lp_dif\", \"lp_dif\"]", Path::new(".")).is_err());
        let no_base = "[benchmark.synthetic]\nbase_classes = 0\nsessions = 3";
        assert!(RunConfig::parse(no_base, Path::new(".")).is_err());
        let fixed = format!("{no_base}\n[method]\nfirst_session = \"base\"");
        assert!(RunConfig::parse(&fixed, Path::new(".")).is_ok());
    }
}
