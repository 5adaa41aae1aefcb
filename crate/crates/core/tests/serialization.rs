//! Round trips of every on-disk format at 32-bit payload precision.

use fscil_core::distributions::{decode_store, encode_store, load_store, save_store, DistributionStore, GaussianClassDistribution};
use fscil_core::encoders::{decode_feature_file, encode_feature_file, load_feature_file, write_feature_file, FeatureRecord};
use fscil_core::numerics::{RealVec, Rng};
use fscil_core::prompt::{decode_prompt, encode_prompt, load_prompt, save_prompt, PromptContext};
use fscil_core::vae::{decode_vae, encode_vae, VaeDims, VaeParams};
use fscil_core::{ClassId, Error};
use proptest::prelude::*;

fn f32_exact(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x as f32 as f64).collect()
}

fn unit_records(seed: u64, n: usize, dim: usize) -> Vec<FeatureRecord<f64>> {
    let mut rng = Rng::new(seed);
    (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
            FeatureRecord {
                class_id: ClassId(rng.below(50) as u32),
                feature: RealVec::from_vec(v).normalized().unwrap(),
            }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn feature_files_round_trip(seed in any::<u64>(), n in 0usize..40, dim in 1usize..48) {
        let recs = unit_records(seed, n, dim);
        let bytes = encode_feature_file(dim, &recs).unwrap();
        let (d, back) = decode_feature_file(&bytes).unwrap();
        prop_assert_eq!(d, dim);
        prop_assert_eq!(back.len(), n);
        for (a, b) in recs.iter().zip(&back) {
            prop_assert_eq!(a.class_id, b.class_id);
            prop_assert_eq!(b.feature.to_vec(), f32_exact(&a.feature));
        }
        prop_assert_eq!(encode_feature_file(dim, &back).unwrap(), bytes);
    }

    #[test]
    fn stores_round_trip(seed in any::<u64>(), classes in 0usize..12, dim in 1usize..40) {
        let mut rng = Rng::new(seed);
        let mut store = DistributionStore::new(dim);
        for c in 0..classes {
            store.insert(GaussianClassDistribution {
                class_id: ClassId(3 * c as u32 + 1),
                mean: (0..dim).map(|_| rng.standard_normal()).collect(),
                variance: (0..dim).map(|_| 1e-6 + rng.uniform()).collect(),
                n_real: 1 + rng.below(20) as u32,
                n_synth: rng.below(20) as u32,
            }).unwrap();
        }
        let bytes = encode_store(&store).unwrap();
        let back = decode_store(&bytes).unwrap();
        prop_assert_eq!(back.class_ids(), store.class_ids());
        for (a, b) in store.iter().zip(back.iter()) {
            prop_assert_eq!(b.mean.to_vec(), f32_exact(&a.mean));
            prop_assert_eq!(b.variance.to_vec(), f32_exact(&a.variance));
            prop_assert_eq!((a.n_real, a.n_synth), (b.n_real, b.n_synth));
        }
        prop_assert_eq!(encode_store(&back).unwrap(), bytes);
    }

    #[test]
    fn prompts_round_trip(seed in any::<u64>(), len in 1usize..20, dim in 1usize..20) {
        let ctx = PromptContext::<f64>::random(len, dim, 1.0, &mut Rng::new(seed));
        let bytes = encode_prompt(&ctx).unwrap();
        let back = decode_prompt(&bytes).unwrap();
        prop_assert_eq!((back.len(), back.dim()), (len, dim));
        prop_assert_eq!(back.as_slice().to_vec(), f32_exact(ctx.as_slice()));
        prop_assert_eq!(encode_prompt(&back).unwrap(), bytes);
    }
}

#[test]
fn vae_checkpoints_round_trip() {
    let params = VaeParams::<f64>::init(VaeDims::new(16, 4, 3, 5), &mut Rng::new(3)).unwrap();
    let bytes = encode_vae(&params).unwrap();
    let back = decode_vae(&bytes).unwrap();
    assert_eq!(back.dims(), params.dims());
    assert_eq!(back.to_flat(), f32_exact(&params.to_flat()));
    assert_eq!(encode_vae(&back).unwrap(), bytes);
}

#[test]
fn files_on_disk_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let recs = unit_records(5, 30, 12);
    let path = dir.path().join("train.fscf");
    write_feature_file(&path, 12, &recs).unwrap();
    let (_, back) = load_feature_file(&path).unwrap();
    write_feature_file(&dir.path().join("again.fscf"), 12, &back).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(dir.path().join("again.fscf")).unwrap());

    let ctx = PromptContext::<f32>::random(4, 6, 0.3, &mut Rng::new(1));
    save_prompt(&ctx, &dir.path().join("p.fspc")).unwrap();
    let back = load_prompt(&dir.path().join("p.fspc")).unwrap();
    assert_eq!(back.cast::<f32>().as_slice(), ctx.as_slice());

    let mut store = DistributionStore::<f32>::new(3);
    store
        .insert(GaussianClassDistribution {
            class_id: ClassId(9),
            mean: RealVec::from_vec(vec![0.1, 0.2, 0.3]),
            variance: RealVec::from_vec(vec![1e-6, 0.5, 2.0]),
            n_real: 2,
            n_synth: 10,
        })
        .unwrap();
    save_store(&store, &dir.path().join("s.fsds")).unwrap();
    let back = load_store(&dir.path().join("s.fsds")).unwrap();
    assert_eq!(back.get(ClassId(9)).unwrap().variance.cast::<f32>(), store.get(ClassId(9)).unwrap().variance);
}

#[test]
fn corrupted_files_report_offsets() {
    let recs = unit_records(8, 3, 4);
    let mut bytes = encode_feature_file(4, &recs).unwrap();
    assert!(matches!(decode_feature_file(&bytes[..bytes.len() - 2]), Err(Error::Format { .. })));
    bytes[0] = b'X';
    assert!(matches!(decode_feature_file(&bytes), Err(Error::Format { offset: 0, .. })));

    let mut bytes = encode_feature_file(4, &recs).unwrap();
    // First value of the second record: header 16 bytes, record 20 bytes, id 4 bytes.
    let at = 16 + 20 + 4;
    bytes[at..at + 4].copy_from_slice(&3.0f32.to_le_bytes());
    match decode_feature_file(&bytes) {
        Err(Error::Format { offset, message }) => {
            assert_eq!(offset, 36);
            assert!(message.contains("norm"));
        }
        other => panic!("unexpected {other:?}"),
    }
}
