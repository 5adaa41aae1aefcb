use std::collections::BTreeMap;

use crate::encoders::{
    ClassEmbeddingTable, FeatureRecord, SyntheticWorld, TextEncoderDims, ToyTextEncoder, WorldParams,
    EncoderInit,
};
use crate::error::{Error, Result};
use crate::numerics::{derive_key, RealVec, Rng};
use crate::prompt::PromptContext;
use crate::ClassId;

/// How to build the frozen text encoder shared by every method on a
/// benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderSpec {
    pub dims: TextEncoderDims,
    pub init: EncoderInit,
    pub seed: u64,
}

impl EncoderSpec {
    /// Builds the encoder, re-seeding until the probe embeddings map to
    /// distinct text features.
    pub fn build(&self, probe: &[RealVec<f64>]) -> Result<ToyTextEncoder<f64>> {
        ToyTextEncoder::new_checked(self.dims, self.init, self.seed, probe)
    }
}

/// One session: its new classes, a training pool, and test examples for
/// the new classes only.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionSpec {
    pub classes: Vec<ClassId>,
    /// A base session trains on its whole pool; other sessions take the
    /// first `K` examples of each class.
    pub is_base: bool,
    pub train: Vec<FeatureRecord<f64>>,
    pub test: Vec<FeatureRecord<f64>>,
}

/// Ordered sessions with disjoint class spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSpec {
    name: String,
    dim: usize,
    shots: usize,
    class_names: Vec<String>,
    embedding_seed: u64,
    encoder: EncoderSpec,
    sessions: Vec<SessionSpec>,
}

impl BenchmarkSpec {
    /// Validates disjointness, labels, dimensions, and that every
    /// incremental class has at least `shots` training examples.
    pub fn new(
        name: impl Into<String>,
        class_names: Vec<String>,
        embedding_seed: u64,
        encoder: EncoderSpec,
        sessions: Vec<SessionSpec>,
        shots: usize,
    ) -> Result<Self> {
        if sessions.is_empty() {
            return Err(Error::invalid("benchmark has no sessions"));
        }
        if shots == 0 {
            return Err(Error::invalid("shots K must be >= 1"));
        }
        let dim = encoder.dims.feature_dim;
        let mut owner: BTreeMap<ClassId, usize> = BTreeMap::new();
        let mut overlaps = Vec::new();
        for (t, s) in sessions.iter().enumerate() {
            if s.classes.is_empty() {
                return Err(Error::invalid(format!("session {t} has no classes")));
            }
            if s.is_base && t != 0 {
                return Err(Error::invalid(format!("session {t} cannot be a base session")));
            }
            for &c in &s.classes {
                if c.index() >= class_names.len() {
                    return Err(Error::invalid(format!("class {c} has no name")));
                }
                if let Some(&prev) = owner.get(&c) {
                    overlaps.push(format!("{c} (sessions {prev} and {t})"));
                } else {
                    owner.insert(c, t);
                }
            }
        }
        if !overlaps.is_empty() {
            return Err(Error::ProtocolViolation(format!(
                "class spaces overlap: {}",
                overlaps.join(", ")
            )));
        }
        for (t, s) in sessions.iter().enumerate() {
            for rec in s.train.iter().chain(&s.test) {
                if owner.get(&rec.class_id) != Some(&t) {
                    return Err(Error::invalid(format!(
                        "session {t} holds an example of class {} outside its class list",
                        rec.class_id
                    )));
                }
                crate::error::check_dim("benchmark feature", dim, rec.feature.dim())?;
            }
            for &c in &s.classes {
                let n = s.train.iter().filter(|r| r.class_id == c).count();
                if n == 0 {
                    return Err(Error::invalid(format!("class {c} has no training examples")));
                }
            }
        }
        let spec = Self {
            name: name.into(),
            dim,
            shots,
            class_names,
            embedding_seed,
            encoder,
            sessions,
        };
        spec.with_shots(shots)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Shots `K` per incremental class.
    pub fn shots(&self) -> usize {
        self.shots
    }

    pub fn encoder_spec(&self) -> EncoderSpec {
        self.encoder
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn embedding_seed(&self) -> u64 {
        self.embedding_seed
    }

    pub fn sessions(&self) -> &[SessionSpec] {
        &self.sessions
    }

    pub fn num_sessions(&self) -> usize {
        self.sessions.len()
    }

    pub fn has_base_session(&self) -> bool {
        self.sessions[0].is_base
    }

    /// Fewest training examples held by any incremental class.
    pub fn available_shots(&self) -> usize {
        self.sessions
            .iter()
            .filter(|s| !s.is_base)
            .flat_map(|s| s.classes.iter().map(move |&c| s.train.iter().filter(|r| r.class_id == c).count()))
            .min()
            .unwrap_or(usize::MAX)
    }

    /// The same benchmark with `K = shots`.
    pub fn with_shots(mut self, shots: usize) -> Result<Self> {
        if shots == 0 {
            return Err(Error::invalid("shots K must be >= 1"));
        }
        let available = self.available_shots();
        if shots > available {
            return Err(Error::invalid(format!(
                "K = {shots} exceeds the {available} examples available per incremental class"
            )));
        }
        self.shots = shots;
        Ok(self)
    }

    /// Training examples of session `t` under the current `K`, in pool
    /// order.
    pub fn session_train(&self, t: usize) -> Result<Vec<FeatureRecord<f64>>> {
        let s = self.session(t)?;
        if s.is_base {
            return Ok(s.train.clone());
        }
        let mut taken: BTreeMap<ClassId, usize> = BTreeMap::new();
        Ok(s.train
            .iter()
            .filter(|r| {
                let n = taken.entry(r.class_id).or_insert(0);
                *n += 1;
                *n <= self.shots
            })
            .cloned()
            .collect())
    }

    /// Test examples of every class seen up to and including session `t`.
    pub fn test_set(&self, t: usize) -> Result<Vec<&FeatureRecord<f64>>> {
        self.session(t)?;
        Ok(self.sessions[..=t].iter().flat_map(|s| s.test.iter()).collect())
    }

    /// `∪_{s ≤ t} C^(s)` in session order.
    pub fn classes_up_to(&self, t: usize) -> Result<Vec<ClassId>> {
        self.session(t)?;
        Ok(self.sessions[..=t].iter().flat_map(|s| s.classes.iter().copied()).collect())
    }

    pub fn session(&self, t: usize) -> Result<&SessionSpec> {
        self.sessions
            .get(t)
            .ok_or_else(|| Error::invalid(format!("session {t} out of range ({} sessions)", self.sessions.len())))
    }

    /// Frozen class-name embeddings for every named class.
    pub fn embeddings(&self) -> Result<ClassEmbeddingTable<f64>> {
        ClassEmbeddingTable::new(self.class_names.clone(), self.encoder.dims.cls_dim, self.embedding_seed)
    }
}

/// Desk-scale synthetic layout. Defaults: 20 classes, D = 32, a base
/// session of 8 classes × 100 examples, then 4 sessions of 3 classes × 5
/// shots, 20 test examples per class.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticLayout {
    pub name: String,
    pub base_classes: usize,
    pub base_train: usize,
    pub ways: usize,
    pub incremental_sessions: usize,
    pub shots: usize,
    /// Training examples generated per incremental class; `K` takes a
    /// prefix of them.
    pub pool: usize,
    pub test_per_class: usize,
    pub encoder: TextEncoderDims,
    pub encoder_init: EncoderInit,
    pub world: WorldParams,
    /// Fraction of each class mean that lies along the class's text feature
    /// under a hidden prompt; the rest is a random direction.
    pub alignment: f64,
    /// Standard deviation of the hidden prompt entries.
    pub hidden_prompt_std: f64,
    /// Explicit class ids per session, overriding sequential assignment.
    pub session_classes: Option<Vec<Vec<u32>>>,
}

impl Default for SyntheticLayout {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            base_classes: 8,
            base_train: 100,
            ways: 3,
            incremental_sessions: 4,
            shots: 5,
            pool: 20,
            test_per_class: 20,
            encoder: TextEncoderDims::default(),
            encoder_init: EncoderInit::default(),
            world: WorldParams {
                noise: 0.9,
                ..WorldParams::default()
            },
            alignment: 0.0,
            hidden_prompt_std: 1.0,
            session_classes: None,
        }
    }
}

impl SyntheticLayout {
    pub fn num_classes(&self) -> usize {
        self.base_classes + self.ways * self.incremental_sessions
    }

    /// Class ids per session, checked against the counts.
    pub fn session_class_ids(&self) -> Result<Vec<Vec<ClassId>>> {
        let has_base = self.base_classes > 0;
        if !has_base && self.incremental_sessions == 0 {
            return Err(Error::invalid("layout has no sessions"));
        }
        if self.incremental_sessions > 0 && self.ways == 0 {
            return Err(Error::invalid("incremental sessions need ways >= 1"));
        }
        let expected: Vec<usize> = has_base
            .then_some(self.base_classes)
            .into_iter()
            .chain(std::iter::repeat(self.ways).take(self.incremental_sessions))
            .collect();
        let lists: Vec<Vec<ClassId>> = match &self.session_classes {
            None => {
                let mut next = 0u32;
                expected
                    .iter()
                    .map(|&n| {
                        let ids = (next..next + n as u32).map(ClassId).collect();
                        next += n as u32;
                        ids
                    })
                    .collect()
            }
            Some(lists) => lists.iter().map(|l| l.iter().copied().map(ClassId).collect()).collect(),
        };
        let counts: Vec<usize> = lists.iter().map(Vec::len).collect();
        if counts != expected {
            return Err(Error::invalid(format!(
                "session class counts {counts:?} do not match the layout {expected:?}"
            )));
        }
        let mut seen: BTreeMap<ClassId, usize> = BTreeMap::new();
        let mut overlaps = Vec::new();
        for (t, list) in lists.iter().enumerate() {
            for &c in list {
                match seen.get(&c) {
                    Some(&prev) => overlaps.push(format!("{c} (sessions {prev} and {t})")),
                    None => {
                        seen.insert(c, t);
                    }
                }
            }
        }
        if !overlaps.is_empty() {
            return Err(Error::ProtocolViolation(format!(
                "class spaces overlap: {}",
                overlaps.join(", ")
            )));
        }
        let max = seen.keys().next_back().map_or(0, |c| c.index());
        if max >= self.num_classes() {
            return Err(Error::invalid(format!(
                "class id {max} outside the layout's {} classes",
                self.num_classes()
            )));
        }
        Ok(lists)
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 || self.shots > self.pool {
            return Err(Error::invalid(format!(
                "shots K = {} must be in 1..={} (the per-class pool)",
                self.shots, self.pool
            )));
        }
        if self.base_classes > 0 && self.base_train == 0 {
            return Err(Error::invalid("base classes need base_train >= 1"));
        }
        if self.test_per_class == 0 {
            return Err(Error::invalid("test_per_class must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.alignment) || !(self.hidden_prompt_std >= 0.0) {
            return Err(Error::invalid("alignment must be in [0, 1] and the hidden prompt std >= 0"));
        }
        self.session_class_ids().map(|_| ())
    }
}

/// Standard class name for synthetic class `c`.
pub fn synthetic_class_name(c: ClassId) -> String {
    format!("class_{:03}", c.0)
}

/// Generates the world and its session splits. Everything is a function of
/// `(layout, seed)`.
pub fn build_synthetic_benchmark(layout: &SyntheticLayout, seed: u64) -> Result<(BenchmarkSpec, SyntheticWorld<f64>)> {
    layout.validate()?;
    let sessions_ids = layout.session_class_ids()?;
    let num_classes = layout.num_classes();
    let dim = layout.encoder.feature_dim;
    let class_names: Vec<String> = (0..num_classes as u32).map(|c| synthetic_class_name(ClassId(c))).collect();
    let embedding_seed = derive_key(seed, "class-names", 0);
    let encoder_spec = EncoderSpec {
        dims: layout.encoder,
        init: layout.encoder_init,
        seed: derive_key(seed, "text-encoder", 0),
    };
    let table = ClassEmbeddingTable::<f64>::new(class_names.clone(), layout.encoder.cls_dim, embedding_seed)?;
    let probe: Vec<RealVec<f64>> = (0..num_classes as u32)
        .map(|c| table.embedding(ClassId(c)).cloned())
        .collect::<Result<_>>()?;
    let encoder = encoder_spec.build(&probe)?;
    let encoder_spec = EncoderSpec {
        seed: encoder.seed(),
        ..encoder_spec
    };

    let root = Rng::new(seed);
    let hidden = PromptContext::random(
        layout.encoder.context_len,
        layout.encoder.ctx_dim,
        layout.hidden_prompt_std,
        &mut root.substream("hidden-prompt", 0),
    );
    let base_world = SyntheticWorld::<f64>::generate(num_classes, dim, layout.world, seed)?;
    let a = layout.alignment;
    let b = (1.0 - a * a).max(0.0).sqrt();
    let classes: Vec<ClassId> = (0..num_classes as u32).map(ClassId).collect();
    let mut means = Vec::with_capacity(num_classes);
    let mut variances = Vec::with_capacity(num_classes);
    for &c in &classes {
        let g = encoder.encode(&hidden, &probe[c.index()])?;
        let random = base_world.mean(c)?;
        means.push(
            g.iter()
                .zip(random.iter())
                .map(|(&gi, &ri)| layout.world.mean_norm * a * gi + b * ri)
                .collect(),
        );
        variances.push(base_world.variance(c)?.clone());
    }
    let world = SyntheticWorld::from_moments(classes, means, variances, seed)?;

    let data_rng = root.substream("benchmark-data", 0);
    let mut sessions = Vec::with_capacity(sessions_ids.len());
    for (t, ids) in sessions_ids.into_iter().enumerate() {
        let is_base = t == 0 && layout.base_classes > 0;
        let per_class = if is_base { layout.base_train } else { layout.pool };
        let mut train = Vec::new();
        let mut test = Vec::new();
        for &c in &ids {
            let mut r = data_rng.substream("train", c.0 as u64);
            train.extend(crate::encoders::synthetic_sample(&world, c, per_class, &mut r)?);
            let mut r = data_rng.substream("test", c.0 as u64);
            test.extend(crate::encoders::synthetic_sample(&world, c, layout.test_per_class, &mut r)?);
        }
        sessions.push(SessionSpec {
            classes: ids,
            is_base,
            train,
            test,
        });
    }
    let spec = BenchmarkSpec::new(
        layout.name.clone(),
        class_names,
        embedding_seed,
        encoder_spec,
        sessions,
        layout.shots,
    )?;
    Ok((spec, world))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout_counts() {
        let (spec, world) = build_synthetic_benchmark(&SyntheticLayout::default(), 3).unwrap();
        assert_eq!(world.classes().len(), 20);
        assert_eq!(spec.num_sessions(), 5);
        for t in 0..5 {
            let classes = spec.classes_up_to(t).unwrap();
            assert_eq!(classes.len(), 8 + 3 * t);
            assert_eq!(spec.test_set(t).unwrap().len(), 20 * classes.len());
        }
        assert_eq!(spec.session_train(0).unwrap().len(), 800);
        assert_eq!(spec.session_train(1).unwrap().len(), 15);
        assert_eq!(spec.available_shots(), 20);
    }

    #[test]
    fn shots_take_a_prefix_of_the_pool() {
        let (spec, _) = build_synthetic_benchmark(&SyntheticLayout::default(), 1).unwrap();
        let k2 = spec.clone().with_shots(2).unwrap().session_train(2).unwrap();
        let k5 = spec.session_train(2).unwrap();
        for c in &spec.sessions()[2].classes {
            let a: Vec<_> = k2.iter().filter(|r| r.class_id == *c).collect();
            let b: Vec<_> = k5.iter().filter(|r| r.class_id == *c).take(2).collect();
            assert_eq!(a, b);
        }
        assert!(spec.with_shots(21).is_err());
    }

    #[test]
    fn overlapping_explicit_sessions_are_rejected() {
        let layout = SyntheticLayout {
            base_classes: 2,
            ways: 2,
            incremental_sessions: 1,
            session_classes: Some(vec![vec![0, 1], vec![1, 3]]),
            ..SyntheticLayout::default()
        };
        let err = build_synthetic_benchmark(&layout, 0).unwrap_err();
        assert!(matches!(err, Error::ProtocolViolation(ref m) if m.contains("1 (sessions 0 and 1)")));
    }

    #[test]
    fn inconsistent_counts_are_rejected() {
        let layout = SyntheticLayout {
            session_classes: Some(vec![vec![0, 1]]),
            ..SyntheticLayout::default()
        };
        assert!(build_synthetic_benchmark(&layout, 0).is_err());
    }
}
