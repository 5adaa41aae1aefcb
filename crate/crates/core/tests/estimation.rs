//! Distribution estimation against an independent two-pass routine, and
//! sampling statistics.

use fscil_core::distributions::{
    estimate_distribution, format_megabytes, sample_pseudo_feature, storage_bytes, DistributionStore,
    GaussianClassDistribution, VARIANCE_FLOOR,
};
use fscil_core::numerics::{RealVec, Rng};
use fscil_core::ClassId;

/// Pooled mean and Bessel variance, written column by column.
fn oracle(features: &[Vec<f64>], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = features.len() as f64;
    let mut mean = Vec::with_capacity(dim);
    let mut var = Vec::with_capacity(dim);
    for j in 0..dim {
        let col: Vec<f64> = features.iter().map(|f| f[j]).collect();
        let m = col.iter().sum::<f64>() / n;
        let v = if features.len() < 2 {
            VARIANCE_FLOOR
        } else {
            (col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).max(VARIANCE_FLOOR)
        };
        mean.push(m);
        var.push(v);
    }
    (mean, var)
}

fn random_features(rng: &mut Rng, count: usize, dim: usize) -> Vec<Vec<f64>> {
    let offset: Vec<f64> = (0..dim).map(|_| rng.normal(0.0, 2.0)).collect();
    let scale = 10f64.powf(rng.uniform() * 4.0 - 3.0);
    (0..count)
        .map(|_| offset.iter().map(|o| o + scale * rng.standard_normal()).collect())
        .collect()
}

#[test]
fn matches_the_two_pass_oracle() {
    let mut rng = Rng::new(2024);
    let mut edges = (false, false);
    for case in 0..1000 {
        let (n_c, m) = match case {
            0 => (1, 0),
            1 => (1, 1),
            2 => (2, 0),
            3 => (5, 0),
            _ => (1 + rng.below(12), rng.below(15)),
        };
        edges.0 |= m == 0;
        edges.1 |= n_c + m == 2;
        let dim = 1 + rng.below(16);
        let real = random_features(&mut rng, n_c, dim);
        let synth = random_features(&mut rng, m, dim);
        let dist: GaussianClassDistribution<f64> =
            estimate_distribution(ClassId(case as u32), &real, &synth).unwrap();
        let all: Vec<Vec<f64>> = real.iter().chain(&synth).cloned().collect();
        let (mean, var) = oracle(&all, dim);
        for j in 0..dim {
            assert!((dist.mean[j] - mean[j]).abs() <= 1e-12, "case {case} mean[{j}]");
            assert!((dist.variance[j] - var[j]).abs() <= 1e-12, "case {case} variance[{j}]");
        }
        assert_eq!(dist.n_real as usize, n_c);
        assert_eq!(dist.n_synth as usize, m);
    }
    assert!(edges.0 && edges.1);
}

#[test]
fn two_point_example_is_exact() {
    let real = [vec![1.0, 0.0]];
    let synth = [vec![0.0, 1.0]];
    let d: GaussianClassDistribution<f64> = estimate_distribution(ClassId(0), &real, &synth).unwrap();
    assert_eq!(d.mean.as_slice(), &[0.5, 0.5]);
    assert_eq!(d.variance.as_slice(), &[0.5, 0.5]);
}

#[test]
fn single_feature_gets_the_floor() {
    let d: GaussianClassDistribution<f64> = estimate_distribution(ClassId(3), &[vec![0.6, 0.8]], &[]).unwrap();
    assert_eq!(d.variance.as_slice(), &[VARIANCE_FLOOR, VARIANCE_FLOOR]);
    let d: GaussianClassDistribution<f64> =
        estimate_distribution(ClassId(3), &[vec![0.6, 0.8], vec![0.6, 0.8]], &[]).unwrap();
    assert_eq!(d.variance.as_slice(), &[VARIANCE_FLOOR, VARIANCE_FLOOR]);
}

#[test]
fn rejects_empty_and_ragged_input() {
    let none: [Vec<f64>; 0] = [];
    assert!(estimate_distribution::<f64, _>(ClassId(0), &none, &[]).is_err());
    assert!(estimate_distribution::<f64, _>(ClassId(0), &[vec![1.0, 0.0]], &[vec![1.0]]).is_err());
}

#[test]
fn single_precision_estimate_tracks_double() {
    let mut rng = Rng::new(7);
    let real = random_features(&mut rng, 6, 8);
    let real32: Vec<Vec<f32>> = real.iter().map(|f| f.iter().map(|&x| x as f32).collect()).collect();
    let d64: GaussianClassDistribution<f64> = estimate_distribution(ClassId(0), &real, &[]).unwrap();
    let d32: GaussianClassDistribution<f32> = estimate_distribution(ClassId(0), &real32, &[]).unwrap();
    for j in 0..8 {
        assert!((d64.mean[j] - d32.mean[j] as f64).abs() <= 1e-4 * (1.0 + d64.mean[j].abs()));
    }
}

#[test]
fn pseudo_features_have_the_stored_moments() {
    let mean = vec![0.3, -0.2, 0.0, 1.5];
    let variance = vec![0.01, 0.25, 1.0, 4.0];
    let dist = GaussianClassDistribution {
        class_id: ClassId(1),
        mean: RealVec::from_vec(mean.clone()),
        variance: RealVec::from_vec(variance.clone()),
        n_real: 5,
        n_synth: 10,
    };
    let mut rng = Rng::new(11);
    let n = 40_000;
    let draws: Vec<RealVec<f64>> = (0..n).map(|_| sample_pseudo_feature(&dist, &mut rng)).collect();
    for j in 0..4 {
        let m = draws.iter().map(|f| f[j]).sum::<f64>() / n as f64;
        let v = draws.iter().map(|f| (f[j] - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (variance[j] / n as f64).sqrt();
        assert!((m - mean[j]).abs() < 5.0 * se, "dim {j}: sample mean {m}");
        assert!((v / variance[j] - 1.0).abs() < 0.05, "dim {j}: sample variance {v}");
    }
}

#[test]
fn storage_accounting() {
    assert_eq!(storage_bytes(200, 512), 819_200);
    assert_eq!(format_megabytes(819_200), "0.78 MB");
    let mut store = DistributionStore::<f64>::new(4);
    assert_eq!(store.storage_bytes(), 0);
    for c in 0..3 {
        store
            .insert(estimate_distribution(ClassId(c), &[vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]], &[]).unwrap())
            .unwrap();
    }
    assert_eq!(store.storage_bytes(), 3 * 2 * 4 * 4);
    let dup = estimate_distribution(ClassId(1), &[vec![1.0, 0.0, 0.0, 0.0]], &[]).unwrap();
    assert!(store.insert(dup).is_err());
}
