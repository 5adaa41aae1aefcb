//! Prompt tuning end to end: prediction properties, session training and
//! the effect of replay on forgetting.

use fscil_core::distributions::{estimate_distribution, DistributionStore};
use fscil_core::encoders::{
    class_name_embedding, synthetic_sample, EncoderInit, FeatureRecord, SyntheticWorld, TextEncoderDims,
    ToyTextEncoder, WorldParams,
};
use fscil_core::numerics::{RealVec, Rng};
use fscil_core::prompt::{predict, train_session, ClassifierHead, PromptContext, PromptTrainConfig};
use fscil_core::protocol::{build_synthetic_benchmark, evaluate, median, pooled_accuracy, BenchmarkSpec, SyntheticLayout};
use fscil_core::ClassId;
use proptest::prelude::*;

fn small_encoder(seed: u64) -> ToyTextEncoder<f64> {
    ToyTextEncoder::new(TextEncoderDims::new(4, 6, 6, 12), EncoderInit::default(), seed).unwrap()
}

fn head_for(classes: &[u32], dim: usize) -> ClassifierHead<f64> {
    let mut head = ClassifierHead::new(0.01).unwrap();
    head.extend(
        classes
            .iter()
            .map(|&c| (ClassId(c), class_name_embedding(&format!("class_{c:03}"), dim, 17))),
    )
    .unwrap();
    head
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn probabilities_sum_to_one_and_ignore_scale(
        seed in any::<u64>(),
        classes in 1u32..9,
        kappa in 0.01f64..100.0,
    ) {
        let enc = small_encoder(seed);
        let ids: Vec<u32> = (0..classes).collect();
        let head = head_for(&ids, 6);
        let mut rng = Rng::new(seed ^ 0x5a5a);
        let ctx = PromptContext::random(4, 6, 0.3, &mut rng);
        let f: Vec<f64> = (0..12).map(|_| rng.standard_normal()).collect();
        let scaled: Vec<f64> = f.iter().map(|x| kappa * x).collect();
        let (p, c) = predict(&head, &enc, &ctx, &f).unwrap();
        let (q, d) = predict(&head, &enc, &ctx, &scaled).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert_eq!(c, d);
        for (a, b) in p.iter().zip(q.iter()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn empty_head_cannot_predict() {
    let enc = small_encoder(0);
    let head = ClassifierHead::<f64>::new(0.01).unwrap();
    assert!(predict(&head, &enc, &PromptContext::zeros(4, 6), &[1.0; 12]).is_err());
}

#[test]
fn head_grows_without_reordering() {
    let mut head = head_for(&[4, 2, 9], 6);
    head.extend([(ClassId(1), RealVec::zeros(6))]).unwrap();
    assert_eq!(head.classes(), &[ClassId(4), ClassId(2), ClassId(9), ClassId(1)]);
    assert!(head.extend([(ClassId(2), RealVec::zeros(6))]).is_err());
}

fn two_class_toy(seed: u64) -> (ToyTextEncoder<f64>, ClassifierHead<f64>, Vec<FeatureRecord<f64>>) {
    let dims = TextEncoderDims::new(16, 16, 16, 32);
    let enc = ToyTextEncoder::new(dims, EncoderInit::default(), seed).unwrap();
    let params = WorldParams {
        noise: 0.3,
        ..WorldParams::default()
    };
    let world = SyntheticWorld::<f64>::generate(2, 32, params, seed).unwrap();
    let mut rng = Rng::new(seed);
    let mut data = synthetic_sample(&world, ClassId(0), 50, &mut rng).unwrap();
    data.extend(synthetic_sample(&world, ClassId(1), 50, &mut rng).unwrap());
    (enc, head_for(&[0, 1], 16), data)
}

#[test]
fn separable_two_class_session_is_fit_exactly() {
    let (enc, head, data) = two_class_toy(3);
    let ctx = PromptContext::random(16, 16, 0.02, &mut Rng::new(1));
    let config = PromptTrainConfig::base_session();
    let (trained, log) = train_session(&enc, ctx, &head, &data, None, 0, &config, &Rng::new(2)).unwrap();
    assert_eq!(log.epoch_loss.len(), 200);
    assert!(log.epoch_loss.last().unwrap() < &log.epoch_loss[0]);
    let correct = data
        .iter()
        .filter(|r| predict(&head, &enc, &trained, &r.feature).unwrap().1 == r.class_id)
        .count();
    assert_eq!(correct, data.len());
}

#[test]
fn training_is_bitwise_reproducible() {
    let (enc, head, data) = two_class_toy(5);
    let config = PromptTrainConfig {
        epochs: 20,
        ..PromptTrainConfig::base_session()
    };
    let run = || {
        let ctx = PromptContext::random(16, 16, 0.02, &mut Rng::new(9));
        train_session(&enc, ctx, &head, &data, None, 0, &config, &Rng::new(4)).unwrap()
    };
    let (a, la) = run();
    let (b, lb) = run();
    let bits = |c: &PromptContext<f64>| c.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(la, lb);
}

/// Base-class accuracy after session 1, trained with replay weight `lambda_o`.
fn base_accuracy_after_session_one(bench: &BenchmarkSpec, seed: u64, lambda_o: f64) -> f64 {
    let table = bench.embeddings().unwrap();
    let all = bench.classes_up_to(bench.num_sessions() - 1).unwrap();
    let probe: Vec<RealVec<f64>> = all.iter().map(|&c| table.embedding(c).unwrap().clone()).collect();
    let enc = bench.encoder_spec().build(&probe).unwrap();
    let mut head = ClassifierHead::new(0.01).unwrap();
    let base = &bench.sessions()[0];
    head.extend(base.classes.iter().map(|&c| (c, table.embedding(c).unwrap().clone())))
        .unwrap();
    let ctx = PromptContext::random(16, 16, 0.02, &mut Rng::new(seed));
    let train0 = bench.session_train(0).unwrap();
    let (ctx, _) = train_session(&enc, ctx, &head, &train0, None, 0, &PromptTrainConfig::base_session(), &Rng::new(seed + 1))
        .unwrap();

    let mut store = DistributionStore::new(bench.dim());
    for &c in &base.classes {
        let real: Vec<&[f64]> = train0
            .iter()
            .filter(|r| r.class_id == c)
            .map(|r| r.feature.as_slice())
            .collect();
        store.insert(estimate_distribution(c, &real, &[]).unwrap()).unwrap();
    }
    let s1 = &bench.sessions()[1];
    head.extend(s1.classes.iter().map(|&c| (c, table.embedding(c).unwrap().clone())))
        .unwrap();
    let config = PromptTrainConfig {
        lambda_o,
        ..PromptTrainConfig::incremental_session()
    };
    let (ctx, _) = train_session(&enc, ctx, &head, &bench.session_train(1).unwrap(), Some(&store), 1, &config, &Rng::new(seed + 2))
        .unwrap();
    let tests = bench.test_set(0).unwrap();
    let tallies = evaluate(&enc, &head, &ctx, &tests).unwrap();
    pooled_accuracy(&tallies, base.classes.iter()).unwrap()
}

#[test]
fn replay_reduces_forgetting_of_base_classes() {
    let (mut with, mut without) = (Vec::new(), Vec::new());
    for seed in 0..5 {
        let (bench, _) = build_synthetic_benchmark(&SyntheticLayout::default(), seed).unwrap();
        with.push(base_accuracy_after_session_one(&bench, seed, 2.0));
        without.push(base_accuracy_after_session_one(&bench, seed, 0.0));
    }
    let (with, without) = (median(&with).unwrap(), median(&without).unwrap());
    assert!(without < with, "base accuracy without replay {without:.2}, with replay {with:.2}");
}
