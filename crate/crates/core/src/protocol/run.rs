use std::collections::BTreeMap;
use std::time::Instant;

use crate::distributions::{estimate_distribution, DistributionStore};
use crate::encoders::{ClassEmbeddingTable, FeatureRecord, ToyTextEncoder};
use crate::error::{Error, Result};
use crate::numerics::{RealVec, Rng};
use crate::prompt::{train_session, ClassifierHead, ContextInit, PromptContext, PromptTrainLog};
use crate::protocol::{
    metric_decomposition, pooled_accuracy, AccessEvent, BenchmarkSpec, ClassTally, ExemplarMemory, ExemplarPolicy,
    FirstSessionSchedule, Method, MethodConfig, Schedule, SessionGuard,
};
use crate::vae::{synthesize_features, train_vae, VaeExample, VaeTrainLog};
use crate::ClassId;

/// Outcome of one session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionResult {
    pub session: usize,
    /// Percent correct on the cumulative test set.
    pub accuracy: f64,
    pub per_class: BTreeMap<ClassId, ClassTally>,
    /// Accuracy on the first session's classes.
    pub base_accuracy: Option<f64>,
    /// Accuracy on classes added after the first session.
    pub incremental_accuracy: Option<f64>,
    pub harmonic_mean: Option<f64>,
    /// Replay memory held at the end of the session.
    pub replay_bytes: u64,
    pub seconds: f64,
}

/// Training diagnostics for one session.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SessionLog {
    pub prompt: Option<PromptTrainLog>,
    pub vae: Option<VaeTrainLog>,
}

/// State visible to an observer after each session.
#[derive(Debug)]
pub struct SessionSnapshot<'a> {
    pub session: usize,
    pub context: &'a PromptContext<f64>,
    pub store: Option<&'a DistributionStore<f64>>,
    pub result: &'a SessionResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub results: Vec<SessionResult>,
    pub logs: Vec<SessionLog>,
    pub access: Vec<AccessEvent>,
}

impl RunOutput {
    pub fn accuracies(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.accuracy).collect()
    }
}

/// Runs every session of `bench` under `config`.
pub fn run_benchmark(bench: &BenchmarkSpec, config: &MethodConfig) -> Result<RunOutput> {
    run_benchmark_with(bench, config, |_| Ok(()))
}

/// Like [`run_benchmark`], calling `observer` after each session.
pub fn run_benchmark_with(
    bench: &BenchmarkSpec,
    config: &MethodConfig,
    mut observer: impl FnMut(&SessionSnapshot<'_>) -> Result<()>,
) -> Result<RunOutput> {
    config.validate()?;
    let table = bench.embeddings()?;
    let probe: Vec<RealVec<f64>> = bench
        .classes_up_to(bench.num_sessions() - 1)?
        .into_iter()
        .map(|c| table.embedding(c).cloned())
        .collect::<Result<_>>()?;
    let encoder = bench.encoder_spec().build(&probe)?;
    let dims = encoder.dims();
    let root = method_stream(config, bench.shots());

    let mut guard = if config.method == Method::JointLp {
        SessionGuard::oracle(bench)
    } else {
        SessionGuard::new(bench)
    };
    let mut head = ClassifierHead::new(config.temperature)?;
    let mut context = PromptContext::random(
        dims.context_len,
        dims.ctx_dim,
        config.prompt_init_std,
        &mut root.substream("prompt-init", 0),
    );
    let mut store = DistributionStore::new(bench.dim());
    store.provenance.seed = Some(config.seed);
    let mut memory = ExemplarMemory::new(bench.dim());
    let base_classes = bench.sessions()[0].classes.clone();

    let mut results = Vec::with_capacity(bench.num_sessions());
    let mut logs = Vec::with_capacity(bench.num_sessions());
    for t in 0..bench.num_sessions() {
        let started = Instant::now();
        guard.begin(t)?;
        let rng = root.substream("session", t as u64);
        let session = bench.session(t)?;
        head.extend(
            session
                .classes
                .iter()
                .map(|&c| table.embedding(c).map(|e| (c, e.clone())))
                .collect::<Result<Vec<_>>>()?,
        )?;
        let schedule = schedule_for(bench, config, t)?;
        let mut log = SessionLog::default();

        let step = |e: Error| with_session(e, config.method, t);
        match config.method {
            Method::FixedPrompt => {}
            Method::LpDif | Method::LpOnly => {
                let train = guard.train(t)?;
                let replay = if config.method == Method::LpDif && !store.is_empty() {
                    guard.record(crate::protocol::Access::Store { classes: store.len() })?;
                    Some(&store)
                } else {
                    None
                };
                let (ctx, plog) = train_session(
                    &encoder,
                    context,
                    &head,
                    &train,
                    replay,
                    t,
                    &config.prompt_config(schedule),
                    &rng.substream("prompt", 0),
                )
                .map_err(step)?;
                context = ctx.with_init(ContextInit::CarriedFrom { session: t });
                log.prompt = Some(plog);
                if config.method == Method::LpDif {
                    log.vae = extend_store(&mut store, &train, session, config, &encoder, &context, &table, &rng)
                        .map_err(step)?;
                    store.provenance.session = Some(t);
                }
            }
            Method::ExemplarRandom | Method::ExemplarHerding => {
                let new = guard.train(t)?;
                let mut train = new.clone();
                train.extend(memory.read(&mut guard)?);
                let (ctx, plog) = train_session(
                    &encoder,
                    context,
                    &head,
                    &train,
                    None,
                    t,
                    &config.prompt_config(schedule),
                    &rng.substream("prompt", 0),
                )
                .map_err(step)?;
                context = ctx.with_init(ContextInit::CarriedFrom { session: t });
                log.prompt = Some(plog);
                let policy = if config.method == Method::ExemplarHerding {
                    ExemplarPolicy::Herding
                } else {
                    ExemplarPolicy::Random
                };
                let mut pick = rng.substream("exemplars", 0);
                for &c in &session.classes {
                    let of_class: Vec<FeatureRecord<f64>> = new.iter().filter(|r| r.class_id == c).cloned().collect();
                    memory.retain(c, &of_class, config.exemplars_per_class, policy, &mut pick)?;
                }
            }
            Method::JointLp => {
                let mut train = Vec::new();
                for s in 0..=t {
                    train.extend(guard.oracle_train(s)?);
                }
                let train = balance_classes(&train);
                let fresh = PromptContext::random(
                    dims.context_len,
                    dims.ctx_dim,
                    config.prompt_init_std,
                    &mut rng.substream("prompt-init", 0),
                );
                let (ctx, plog) = train_session(
                    &encoder,
                    fresh,
                    &head,
                    &train,
                    None,
                    t,
                    &config.prompt_config(config.joint),
                    &rng.substream("prompt", 0),
                )
                .map_err(step)?;
                context = ctx;
                log.prompt = Some(plog);
            }
        }

        let per_class = evaluate(&encoder, &head, &context, &bench.test_set(t)?)?;
        let accuracy = pooled_accuracy(&per_class, per_class.keys()).unwrap_or(0.0);
        let incremental: Vec<ClassId> = head
            .classes()
            .iter()
            .copied()
            .filter(|c| !base_classes.contains(c))
            .collect();
        let (base_accuracy, incremental_accuracy, harmonic_mean) = if incremental.is_empty() {
            (pooled_accuracy(&per_class, &base_classes), None, None)
        } else {
            let d = metric_decomposition(&per_class, &base_classes, &incremental)?;
            (Some(d.base), Some(d.incremental), Some(d.harmonic_mean))
        };
        let replay_bytes = match config.method {
            Method::LpDif => store.storage_bytes(),
            Method::ExemplarRandom | Method::ExemplarHerding => memory.storage_bytes(),
            _ => 0,
        };
        let result = SessionResult {
            session: t,
            accuracy,
            per_class,
            base_accuracy,
            incremental_accuracy,
            harmonic_mean,
            replay_bytes,
            seconds: started.elapsed().as_secs_f64(),
        };
        observer(&SessionSnapshot {
            session: t,
            context: &context,
            store: (config.method == Method::LpDif).then_some(&store),
            result: &result,
        })?;
        results.push(result);
        logs.push(log);
    }
    Ok(RunOutput {
        results,
        logs,
        access: guard.into_log(),
    })
}

/// Root random stream of a run, keyed by seed, method and shots.
pub fn method_stream(config: &MethodConfig, shots: usize) -> Rng {
    Rng::new(config.seed)
        .substream(config.method.tag(), 0)
        .substream("shots", shots as u64)
}

fn schedule_for(bench: &BenchmarkSpec, config: &MethodConfig, t: usize) -> Result<Schedule> {
    if bench.sessions()[t].is_base {
        return Ok(config.base);
    }
    if t > 0 {
        return Ok(config.incremental);
    }
    match config.first_session {
        Some(FirstSessionSchedule::Base) => Ok(config.base),
        Some(FirstSessionSchedule::Incremental) => Ok(config.incremental),
        None => Err(Error::invalid(
            "benchmark has no base session; set the first-session schedule to `base` or `incremental`",
        )),
    }
}

fn with_session(e: Error, method: Method, t: usize) -> Error {
    match e {
        Error::NonFinite(m) => Error::NonFinite(format!("{method}, session {t}: {m}")),
        other => other,
    }
}

/// Trains a fresh VAE on the session's examples when `M > 0` and the
/// session is not a base session, then stores one distribution per new
/// class from its real and synthesized features.
fn extend_store(
    store: &mut DistributionStore<f64>,
    train: &[FeatureRecord<f64>],
    session: &crate::protocol::SessionSpec,
    config: &MethodConfig,
    encoder: &ToyTextEncoder<f64>,
    context: &PromptContext<f64>,
    table: &ClassEmbeddingTable<f64>,
    rng: &Rng,
) -> Result<Option<VaeTrainLog>> {
    let use_vae = !session.is_base && config.synth_count > 0;
    let mut vae = None;
    if use_vae {
        let examples = train
            .iter()
            .map(|r| {
                Ok(VaeExample {
                    feature: r.feature.as_slice(),
                    class_embedding: table.embedding(r.class_id)?.as_slice(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        vae = Some(train_vae(&examples, &config.vae, encoder, Some(context), &rng.substream("vae", 0))?);
    }
    for &c in &session.classes {
        let real: Vec<&[f64]> = train
            .iter()
            .filter(|r| r.class_id == c)
            .map(|r| r.feature.as_slice())
            .collect();
        let synth = match &vae {
            Some((params, _)) => synthesize_features(
                params,
                table.embedding(c)?,
                config.synth_count,
                encoder,
                &mut rng.substream("synthesize", c.0 as u64),
            )?,
            None => Vec::new(),
        };
        let synth: Vec<&[f64]> = synth.iter().map(|f| f.as_slice()).collect();
        store.insert(estimate_distribution(c, &real, &synth)?)?;
    }
    Ok(vae.map(|(_, log)| log))
}

/// Repeats each class's examples cyclically until every class has as
/// many as the largest one.
pub fn balance_classes(records: &[FeatureRecord<f64>]) -> Vec<FeatureRecord<f64>> {
    let mut by_class: BTreeMap<ClassId, Vec<&FeatureRecord<f64>>> = BTreeMap::new();
    for r in records {
        by_class.entry(r.class_id).or_default().push(r);
    }
    let target = by_class.values().map(Vec::len).max().unwrap_or(0);
    by_class
        .values()
        .flat_map(|recs| recs.iter().cycle().take(target).map(|&r| r.clone()))
        .collect()
}

/// Per-class tallies of `predict` over `tests`, for every class in the
/// head.
pub fn evaluate(
    encoder: &ToyTextEncoder<f64>,
    head: &ClassifierHead<f64>,
    context: &PromptContext<f64>,
    tests: &[&FeatureRecord<f64>],
) -> Result<BTreeMap<ClassId, ClassTally>> {
    let text = head.text_features(encoder, context)?;
    let mut tallies: BTreeMap<ClassId, ClassTally> =
        head.classes().iter().map(|&c| (c, ClassTally::default())).collect();
    for rec in tests {
        let (_, predicted) = head.predict_with(&text, &rec.feature)?;
        let tally = tallies.get_mut(&rec.class_id).ok_or(Error::UnknownClass(rec.class_id))?;
        tally.total += 1;
        if predicted == rec.class_id {
            tally.correct += 1;
        }
    }
    Ok(tallies)
}

/// Full runs at each `K` in `shots`, in order.
pub fn shot_sweep(template: &BenchmarkSpec, shots: &[usize], config: &MethodConfig) -> Result<Vec<(usize, RunOutput)>> {
    if shots.is_empty() {
        return Err(Error::Empty("shot list"));
    }
    let benches = shots
        .iter()
        .map(|&k| template.clone().with_shots(k))
        .collect::<Result<Vec<_>>>()?;
    shots
        .iter()
        .zip(&benches)
        .map(|(&k, b)| Ok((k, run_benchmark(b, config)?)))
        .collect()
}
