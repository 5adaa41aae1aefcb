//! Binary feature files.
//!
//! Layout (little-endian): magic `FSCF`, version u16 = 1, D u16, record count
//! u64, then per record: class_id u32 followed by D × f32.

use std::fs;
use std::path::Path;

use crate::binio::{dim_u16, ByteReader, ByteWriter};
use crate::encoders::FeatureRecord;
use crate::error::{check_dim, Error, Result};
use crate::numerics::RealVec;
use crate::{ClassId, Scalar};

pub const FEATURE_MAGIC: &[u8; 4] = b"FSCF";
pub const FEATURE_VERSION: u16 = 1;

/// Features further than this from unit norm are rejected on load.
pub const NORM_TOLERANCE: f64 = 1e-3;

/// Norms within this of 1 are already unit at f32 precision and are kept
/// verbatim; anything else inside [`NORM_TOLERANCE`] is re-normalized.
const VERBATIM_TOLERANCE: f64 = 1e-6;

pub fn encode_feature_file<S: Scalar>(dim: usize, records: &[FeatureRecord<S>]) -> Result<Vec<u8>> {
    let mut w = ByteWriter::new();
    w.bytes(FEATURE_MAGIC);
    w.u16(FEATURE_VERSION);
    w.u16(dim_u16("feature dimension", dim)?);
    w.u64(records.len() as u64);
    for rec in records {
        check_dim("feature record", dim, rec.feature.dim())?;
        w.u32(rec.class_id.0);
        w.f32s(rec.feature.iter().map(|x| x.to_f64_lossy() as f32));
    }
    Ok(w.finish())
}

pub fn decode_feature_file(bytes: &[u8]) -> Result<(usize, Vec<FeatureRecord<f64>>)> {
    let mut r = ByteReader::new(bytes);
    r.magic(FEATURE_MAGIC)?;
    r.version(FEATURE_VERSION)?;
    let dim = r.u16("feature dimension")? as usize;
    let count = r.u64("record count")?;
    if dim == 0 && count > 0 {
        return Err(Error::format(6, "zero feature dimension"));
    }
    let record_bytes = 4 + 4 * dim as u64;
    if count.saturating_mul(record_bytes) > r.remaining() as u64 {
        return Err(Error::format(
            r.offset(),
            format!("truncated: header promises {count} records, payload holds {} bytes", r.remaining()),
        ));
    }
    let mut records = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let at = r.offset();
        let class_id = ClassId(r.u32("class id")?);
        let raw = r.f32s(dim, "feature values")?;
        let values: Vec<f64> = raw.iter().map(|&x| x as f64).collect();
        let norm = values.iter().map(|x| x * x).sum::<f64>().sqrt();
        let deviation = (norm - 1.0).abs();
        if deviation > NORM_TOLERANCE {
            return Err(Error::format(
                at,
                format!("record norm {norm:.6} deviates from 1 by more than {NORM_TOLERANCE}"),
            ));
        }
        let feature = if deviation <= VERBATIM_TOLERANCE {
            RealVec::from_vec(values)
        } else {
            RealVec::from_vec(values.iter().map(|x| x / norm).collect())
        };
        records.push(FeatureRecord { class_id, feature });
    }
    r.expect_end()?;
    Ok((dim, records))
}

pub fn write_feature_file<S: Scalar>(path: &Path, dim: usize, records: &[FeatureRecord<S>]) -> Result<()> {
    fs::write(path, encode_feature_file(dim, records)?)?;
    Ok(())
}

/// Loads a feature file, returning the header dimension and the records.
pub fn load_feature_file(path: &Path) -> Result<(usize, Vec<FeatureRecord<f64>>)> {
    decode_feature_file(&fs::read(path)?)
}

/// Reads a class-name list: UTF-8, one name per line, line index = class id.
pub fn load_class_names(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path)?;
    Ok(text.lines().map(|l| l.trim_end_matches('\r').to_string()).collect())
}

pub fn write_class_names(path: &Path, names: &[String]) -> Result<()> {
    let mut text = names.join("\n");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(c: u32, v: &[f64]) -> FeatureRecord<f64> {
        FeatureRecord {
            class_id: ClassId(c),
            feature: RealVec::from_slice(v),
        }
    }

    #[test]
    fn empty_file_keeps_dimension() {
        let bytes = encode_feature_file::<f64>(7, &[]).unwrap();
        assert_eq!(bytes.len(), 16);
        let (dim, recs) = decode_feature_file(&bytes).unwrap();
        assert_eq!(dim, 7);
        assert!(recs.is_empty());
    }

    #[test]
    fn corrupted_magic_names_offset_zero() {
        let mut bytes = encode_feature_file(2, &[rec(0, &[1.0, 0.0])]).unwrap();
        bytes[0] = b'X';
        match decode_feature_file(&bytes) {
            Err(Error::Format { offset: 0, message }) => assert!(message.contains("magic")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let bytes = encode_feature_file(2, &[rec(0, &[1.0, 0.0]), rec(1, &[0.0, 1.0])]).unwrap();
        assert!(matches!(decode_feature_file(&bytes[..bytes.len() - 3]), Err(Error::Format { .. })));
    }

    #[test]
    fn off_norm_record_is_rejected_and_near_norm_is_fixed() {
        let bytes = encode_feature_file(2, &[rec(0, &[0.9, 0.0])]).unwrap();
        assert!(matches!(decode_feature_file(&bytes), Err(Error::Format { offset: 16, .. })));
        let bytes = encode_feature_file(2, &[rec(0, &[1.0005, 0.0])]).unwrap();
        let (_, recs) = decode_feature_file(&bytes).unwrap();
        assert!((recs[0].feature.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_is_rejected() {
        let mut bytes = encode_feature_file(2, &[rec(0, &[1.0, 0.0])]).unwrap();
        bytes[20..24].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(decode_feature_file(&bytes), Err(Error::Format { offset: 20, .. })));
    }
}
