//! Structural enforcement of what a session may read, with an access log.

use std::collections::BTreeMap;

use crate::encoders::FeatureRecord;
use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::protocol::BenchmarkSpec;
use crate::ClassId;

/// One kind of read made while training a session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Access {
    /// Raw training examples of `session`.
    Train { session: usize, records: usize },
    /// Raw training examples of an earlier `session`, read by the joint
    /// upper bound only.
    OracleTrain { session: usize, records: usize },
    /// The distribution store, holding `classes` distributions.
    Store { classes: usize },
    /// Retained exemplars of one old class.
    Exemplars { class: ClassId, records: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessEvent {
    /// Session being trained when the read happened.
    pub during: usize,
    pub access: Access,
}

/// Hands out training data one session at a time. Reading any other
/// session's examples is a [`Error::ProtocolViolation`], unless the guard
/// was opened in oracle mode, which may read earlier sessions through
/// [`oracle_train`](Self::oracle_train).
#[derive(Debug)]
pub struct SessionGuard<'a> {
    bench: &'a BenchmarkSpec,
    current: Option<usize>,
    oracle: bool,
    log: Vec<AccessEvent>,
}

impl<'a> SessionGuard<'a> {
    pub fn new(bench: &'a BenchmarkSpec) -> Self {
        Self {
            bench,
            current: None,
            oracle: false,
            log: Vec::new(),
        }
    }

    pub fn oracle(bench: &'a BenchmarkSpec) -> Self {
        Self {
            oracle: true,
            ..Self::new(bench)
        }
    }

    /// Moves to session `t`, which must directly follow the previous one.
    pub fn begin(&mut self, t: usize) -> Result<()> {
        let expected = self.current.map_or(0, |c| c + 1);
        if t != expected {
            return Err(Error::ProtocolViolation(format!(
                "session {t} opened out of order (expected {expected})"
            )));
        }
        self.bench.session(t)?;
        self.current = Some(t);
        Ok(())
    }

    pub fn current(&self) -> Result<usize> {
        self.current
            .ok_or_else(|| Error::ProtocolViolation("no session is open".into()))
    }

    /// Training examples of `session`, which must be the open one.
    pub fn train(&mut self, session: usize) -> Result<Vec<FeatureRecord<f64>>> {
        let during = self.current()?;
        if session != during {
            return Err(Error::ProtocolViolation(format!(
                "session {during} tried to read the training data of session {session}"
            )));
        }
        let data = self.bench.session_train(session)?;
        self.record(Access::Train {
            session,
            records: data.len(),
        })?;
        Ok(data)
    }

    /// Training examples of any session up to the open one, oracle mode
    /// only.
    pub fn oracle_train(&mut self, session: usize) -> Result<Vec<FeatureRecord<f64>>> {
        let during = self.current()?;
        if !self.oracle {
            return Err(Error::ProtocolViolation(format!(
                "session {during} requested oracle access to session {session}"
            )));
        }
        if session > during {
            return Err(Error::ProtocolViolation(format!(
                "session {during} tried to read future session {session}"
            )));
        }
        let data = self.bench.session_train(session)?;
        self.record(Access::OracleTrain {
            session,
            records: data.len(),
        })?;
        Ok(data)
    }

    /// Logs a read of replay memory.
    pub fn record(&mut self, access: Access) -> Result<()> {
        let during = self.current()?;
        self.log.push(AccessEvent { during, access });
        Ok(())
    }

    pub fn log(&self) -> &[AccessEvent] {
        &self.log
    }

    pub fn into_log(self) -> Vec<AccessEvent> {
        self.log
    }
}

/// How exemplars are picked from a class's training examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExemplarPolicy {
    Random,
    /// Nearest to the class mean feature in Euclidean distance.
    Herding,
}

/// Retained real features per old class.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExemplarMemory {
    dim: usize,
    per_class: BTreeMap<ClassId, Vec<FeatureRecord<f64>>>,
}

impl ExemplarMemory {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            per_class: BTreeMap::new(),
        }
    }

    /// Keeps up to `n` of `examples` (all of class `class`).
    pub fn retain(
        &mut self,
        class: ClassId,
        examples: &[FeatureRecord<f64>],
        n: usize,
        policy: ExemplarPolicy,
        rng: &mut Rng,
    ) -> Result<()> {
        if examples.is_empty() {
            return Err(Error::Empty("exemplar candidates"));
        }
        if self.per_class.contains_key(&class) {
            return Err(Error::invalid(format!("exemplars of class {class} already retained")));
        }
        if let Some(bad) = examples.iter().find(|r| r.class_id != class) {
            return Err(Error::invalid(format!(
                "candidate of class {} offered as an exemplar of class {class}",
                bad.class_id
            )));
        }
        let n = n.min(examples.len());
        let picks: Vec<usize> = match policy {
            ExemplarPolicy::Random => {
                let mut p = rng.sample_without_replacement(examples.len(), n);
                p.sort_unstable();
                p
            }
            ExemplarPolicy::Herding => {
                let mut mean = vec![0.0; self.dim];
                for r in examples {
                    crate::error::check_dim("exemplar feature", self.dim, r.feature.dim())?;
                    for (m, &x) in mean.iter_mut().zip(r.feature.iter()) {
                        *m += x;
                    }
                }
                let inv = 1.0 / examples.len() as f64;
                mean.iter_mut().for_each(|m| *m *= inv);
                let dist: Vec<f64> = examples
                    .iter()
                    .map(|r| r.feature.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum())
                    .collect();
                let mut order: Vec<usize> = (0..examples.len()).collect();
                order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
                order.truncate(n);
                order.sort_unstable();
                order
            }
        };
        self.per_class
            .insert(class, picks.into_iter().map(|i| examples[i].clone()).collect());
        Ok(())
    }

    /// Every retained exemplar, logging one read per class.
    pub fn read(&self, guard: &mut SessionGuard<'_>) -> Result<Vec<FeatureRecord<f64>>> {
        let mut out = Vec::new();
        for (&class, recs) in &self.per_class {
            guard.record(Access::Exemplars {
                class,
                records: recs.len(),
            })?;
            out.extend(recs.iter().cloned());
        }
        Ok(out)
    }

    pub fn classes(&self) -> usize {
        self.per_class.len()
    }

    pub fn records(&self) -> usize {
        self.per_class.values().map(Vec::len).sum()
    }

    pub fn exemplars(&self, class: ClassId) -> Option<&[FeatureRecord<f64>]> {
        self.per_class.get(&class).map(Vec::as_slice)
    }

    /// Payload bytes at 4 bytes per stored scalar.
    pub fn storage_bytes(&self) -> u64 {
        (self.records() * self.dim * 4) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RealVec;
    use crate::protocol::{build_synthetic_benchmark, SyntheticLayout};

    #[test]
    fn guard_rejects_other_sessions() {
        let (bench, _) = build_synthetic_benchmark(&SyntheticLayout::default(), 0).unwrap();
        let mut g = SessionGuard::new(&bench);
        assert!(g.train(0).is_err());
        g.begin(0).unwrap();
        assert_eq!(g.train(0).unwrap().len(), 800);
        g.begin(1).unwrap();
        assert!(matches!(g.train(0), Err(Error::ProtocolViolation(_))));
        assert!(g.oracle_train(0).is_err());
        assert!(g.begin(3).is_err());
        assert_eq!(g.log().len(), 1);

        let mut o = SessionGuard::oracle(&bench);
        o.begin(0).unwrap();
        assert!(o.oracle_train(1).is_err());
        o.begin(1).unwrap();
        assert_eq!(o.oracle_train(0).unwrap().len(), 800);
    }

    #[test]
    fn herding_keeps_the_nearest_to_the_mean() {
        let mk = |x: f64, y: f64| FeatureRecord {
            class_id: ClassId(4),
            feature: RealVec::from_vec(vec![x, y]),
        };
        let ex = vec![mk(1.0, 0.0), mk(0.0, 1.0), mk(0.6, 0.8), mk(0.8, 0.6)];
        let mut m = ExemplarMemory::new(2);
        m.retain(ClassId(4), &ex, 2, ExemplarPolicy::Herding, &mut Rng::new(0))
            .unwrap();
        let kept = m.exemplars(ClassId(4)).unwrap();
        assert_eq!(kept, &[ex[2].clone(), ex[3].clone()]);
        assert_eq!(m.storage_bytes(), 2 * 2 * 4);
    }
}
