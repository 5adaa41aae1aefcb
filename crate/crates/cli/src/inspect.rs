//! `fscil inspect-dist`: per-dimension moments of a stored class or of a
//! class's records in a feature file.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::anyhow;
use fscil_core::distributions::{decode_store, dimension_histogram, STORE_MAGIC};
use fscil_core::encoders::{decode_feature_file, FEATURE_MAGIC};
use fscil_core::ClassId;

use crate::error::{CliError, CliResult, Context};

fn check_dims(dims: &[usize], d: usize) -> CliResult<Vec<usize>> {
    if dims.is_empty() {
        return Ok((0..d).collect());
    }
    if let Some(bad) = dims.iter().find(|&&j| j >= d) {
        return Err(CliError::config(anyhow!("dimension {bad} out of range for D = {d}")));
    }
    Ok(dims.to_vec())
}

/// Renders the inspection of `path`; an empty `dims` means every
/// dimension.
pub fn cmd_inspect_dist(path: &Path, class: u32, dims: &[usize], bins: usize) -> CliResult<String> {
    let bytes = fs::read(path).ctx(format!("cannot read {}", path.display()))?;
    let class_id = ClassId(class);
    let mut out = String::new();
    if bytes.starts_with(STORE_MAGIC) {
        let store = decode_store(&bytes).ctx(path.display().to_string())?;
        let dist = store
            .get(class_id)
            .map_err(|_| CliError::config(anyhow!("class {class} is not in store {}", path.display())))?;
        let _ = writeln!(
            out,
            "store {} class {class}: n_real {} n_synth {} D {}",
            path.display(),
            dist.n_real,
            dist.n_synth,
            store.dim()
        );
        let _ = writeln!(out, "dim\tmean\tvariance");
        for j in check_dims(dims, store.dim())? {
            // Payloads are f32, so the f32 rendering is exact and shortest.
            let _ = writeln!(out, "{j}\t{}\t{}", dist.mean[j] as f32, dist.variance[j] as f32);
        }
    } else if bytes.starts_with(FEATURE_MAGIC) {
        let (d, records) = decode_feature_file(&bytes).ctx(path.display().to_string())?;
        let feats: Vec<&[f64]> = records
            .iter()
            .filter(|r| r.class_id == class_id)
            .map(|r| r.feature.as_slice())
            .collect();
        if feats.is_empty() {
            return Err(CliError::config(anyhow!("class {class} has no records in {}", path.display())));
        }
        let _ = writeln!(out, "feature file {} class {class}: {} records, D {d}", path.display(), feats.len());
        for j in check_dims(dims, d)? {
            let h = dimension_histogram(&feats, j, bins)?;
            let _ = writeln!(out, "dim {j}: mean {} variance {}", h.mean, h.variance);
            let single = h.edges.first() == h.edges.last();
            for (b, count) in h.counts.iter().enumerate() {
                if single && *count == 0 {
                    continue;
                }
                let _ = writeln!(out, "  [{:.6}, {:.6}]\t{count}", h.edges[b], h.edges[b + 1]);
            }
        }
    } else {
        return Err(CliError::data(anyhow!(
            "{}: not a distribution store or feature file (unrecognized magic)",
            path.display()
        )));
    }
    Ok(out)
}
