//! The replay memory: one Gaussian per old class, plus its file format.
//!
//! Layout (little-endian): magic `FSDS`, version u16 = 1, D u16, class count
//! u32; per class: class_id u32, n_real u32, n_synth u32, D × f32 mean,
//! D × f32 variance.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::binio::{dim_u16, ByteReader, ByteWriter};
use crate::distributions::GaussianClassDistribution;
use crate::error::{check_dim, Error, Result};
use crate::numerics::RealVec;
use crate::{ClassId, Scalar};

pub const STORE_MAGIC: &[u8; 4] = b"FSDS";
pub const STORE_VERSION: u16 = 1;

/// Bytes per stored scalar in the payload.
const PAYLOAD_SCALAR_BYTES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StoreProvenance {
    /// Session after which the store was last extended.
    pub session: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionStore<S> {
    dim: usize,
    classes: BTreeMap<ClassId, GaussianClassDistribution<S>>,
    pub provenance: StoreProvenance,
}

impl<S: Scalar> DistributionStore<S> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            classes: BTreeMap::new(),
            provenance: StoreProvenance::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Adds a class. Each class id may be stored once.
    pub fn insert(&mut self, dist: GaussianClassDistribution<S>) -> Result<()> {
        check_dim("stored distribution", self.dim, dist.dim())?;
        dist.validate()?;
        if self.classes.contains_key(&dist.class_id) {
            return Err(Error::invalid(format!("class {} already stored", dist.class_id)));
        }
        self.classes.insert(dist.class_id, dist);
        Ok(())
    }

    pub fn get(&self, class_id: ClassId) -> Result<&GaussianClassDistribution<S>> {
        self.classes.get(&class_id).ok_or(Error::UnknownClass(class_id))
    }

    /// Stored class ids in ascending order.
    pub fn class_ids(&self) -> Vec<ClassId> {
        self.classes.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &GaussianClassDistribution<S>> {
        self.classes.values()
    }

    /// Payload bytes: `|classes| · 2 · D · 4`, header excluded.
    pub fn storage_bytes(&self) -> u64 {
        storage_bytes(self.len(), self.dim)
    }
}

/// Payload bytes for `classes` diagonal Gaussians of dimension `dim`.
pub fn storage_bytes(classes: usize, dim: usize) -> u64 {
    (classes * 2 * dim * PAYLOAD_SCALAR_BYTES) as u64
}

/// Bytes rendered as binary megabytes with two decimals, e.g. `0.78 MB`.
pub fn format_megabytes(bytes: u64) -> String {
    format!("{:.2} MB", bytes as f64 / (1024.0 * 1024.0))
}

pub fn encode_store<S: Scalar>(store: &DistributionStore<S>) -> Result<Vec<u8>> {
    let mut w = ByteWriter::new();
    w.bytes(STORE_MAGIC);
    w.u16(STORE_VERSION);
    w.u16(dim_u16("store dimension", store.dim)?);
    w.u32(store.len() as u32);
    for d in store.iter() {
        w.u32(d.class_id.0);
        w.u32(d.n_real);
        w.u32(d.n_synth);
        w.f32s(d.mean.iter().map(|x| x.to_f64_lossy() as f32));
        w.f32s(d.variance.iter().map(|x| x.to_f64_lossy() as f32));
    }
    Ok(w.finish())
}

pub fn decode_store(bytes: &[u8]) -> Result<DistributionStore<f64>> {
    let mut r = ByteReader::new(bytes);
    r.magic(STORE_MAGIC)?;
    r.version(STORE_VERSION)?;
    let dim = r.u16("store dimension")? as usize;
    let count = r.u32("class count")?;
    let per_class = 12 + 8 * dim as u64;
    if count as u64 * per_class > r.remaining() as u64 {
        return Err(Error::format(
            r.offset(),
            format!("truncated: header promises {count} classes, payload holds {} bytes", r.remaining()),
        ));
    }
    let mut store = DistributionStore::new(dim);
    for _ in 0..count {
        let at = r.offset();
        let class_id = ClassId(r.u32("class id")?);
        let n_real = r.u32("n_real")?;
        let n_synth = r.u32("n_synth")?;
        let mean = r.f32s(dim, "mean")?;
        let variance = r.f32s(dim, "variance")?;
        let dist = GaussianClassDistribution {
            class_id,
            mean: RealVec::from_vec(mean.into_iter().map(f64::from).collect()),
            variance: RealVec::from_vec(variance.into_iter().map(f64::from).collect()),
            n_real,
            n_synth,
        };
        store
            .insert(dist)
            .map_err(|e| Error::format(at, format!("invalid class record: {e}")))?;
    }
    r.expect_end()?;
    Ok(store)
}

pub fn save_store<S: Scalar>(store: &DistributionStore<S>, path: &Path) -> Result<()> {
    fs::write(path, encode_store(store)?)?;
    Ok(())
}

pub fn load_store(path: &Path) -> Result<DistributionStore<f64>> {
    decode_store(&fs::read(path)?)
}
