//! Synthetic stand-in for encoded image features: every class is a diagonal
//! Gaussian in feature space, and samples are L2-normalized like CLIP image
//! features.

use crate::error::{Error, Result};
use crate::numerics::{RealVec, Rng};
use crate::{ClassId, Scalar};

/// Variance floor used when drawing from the ground-truth world.
pub const WORLD_VARIANCE_FLOOR: f64 = 1e-12;

/// One encoded example: a unit-norm feature and its label.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord<S> {
    pub class_id: ClassId,
    pub feature: RealVec<S>,
}

/// Shape of the ground-truth class distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldParams {
    /// Expected norm of a class mean.
    pub mean_norm: f64,
    /// Per-dimension standard deviation relative to `mean_norm / sqrt(D)`.
    pub noise: f64,
    /// Per-class, per-dimension std multiplier is drawn from
    /// `[1 - spread, 1 + spread]`.
    pub noise_spread: f64,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self {
            mean_norm: 1.0,
            noise: 0.8,
            noise_spread: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWorld<S> {
    dim: usize,
    seed: u64,
    classes: Vec<ClassId>,
    means: Vec<RealVec<S>>,
    variances: Vec<RealVec<S>>,
}

impl<S: Scalar> SyntheticWorld<S> {
    /// Builds a world from explicit per-class moments.
    pub fn from_moments(
        classes: Vec<ClassId>,
        means: Vec<RealVec<S>>,
        variances: Vec<RealVec<S>>,
        seed: u64,
    ) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::Empty("world classes"));
        }
        if means.len() != classes.len() || variances.len() != classes.len() {
            return Err(Error::invalid("world moments must cover every class"));
        }
        let dim = means[0].dim();
        for (m, v) in means.iter().zip(&variances) {
            crate::error::check_dim("world mean", dim, m.dim())?;
            crate::error::check_dim("world variance", dim, v.dim())?;
            if v.iter().any(|&x| x.is_nan() || x < S::zero()) {
                return Err(Error::invalid("world variances must be non-negative"));
            }
        }
        for i in 0..classes.len() {
            for j in 0..i {
                if classes[i] == classes[j] {
                    return Err(Error::invalid(format!("duplicate world class {}", classes[i])));
                }
                if means[i] == means[j] {
                    return Err(Error::invalid(format!(
                        "classes {} and {} share a mean",
                        classes[i], classes[j]
                    )));
                }
            }
        }
        Ok(Self {
            dim,
            seed,
            classes,
            means,
            variances,
        })
    }

    /// Random world: means ~ N(0, mean_norm²/D · I), per-dimension std
    /// `noise · mean_norm/√D · U(1 − spread, 1 + spread)`.
    pub fn generate(num_classes: usize, dim: usize, params: WorldParams, seed: u64) -> Result<Self> {
        if num_classes == 0 || dim == 0 {
            return Err(Error::invalid("world needs at least one class and dimension"));
        }
        if !(params.noise_spread >= 0.0 && params.noise_spread < 1.0) || params.noise <= 0.0 {
            return Err(Error::invalid("world noise must be positive with spread in [0, 1)"));
        }
        let root = Rng::new(seed).substream("world", 0);
        let unit = params.mean_norm / (dim as f64).sqrt();
        let mut means = Vec::with_capacity(num_classes);
        let mut variances = Vec::with_capacity(num_classes);
        for c in 0..num_classes {
            let mut rng = root.substream("class-moments", c as u64);
            means.push((0..dim).map(|_| S::of(rng.normal(0.0, unit))).collect());
            variances.push(
                (0..dim)
                    .map(|_| {
                        let k = 1.0 + params.noise_spread * (2.0 * rng.uniform() - 1.0);
                        S::of((params.noise * unit * k).powi(2))
                    })
                    .collect(),
            );
        }
        let classes = (0..num_classes as u32).map(ClassId).collect();
        Self::from_moments(classes, means, variances, seed)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn classes(&self) -> &[ClassId] {
        &self.classes
    }

    fn index(&self, class_id: ClassId) -> Result<usize> {
        self.classes
            .iter()
            .position(|&c| c == class_id)
            .ok_or(Error::UnknownClass(class_id))
    }

    pub fn mean(&self, class_id: ClassId) -> Result<&RealVec<S>> {
        Ok(&self.means[self.index(class_id)?])
    }

    pub fn variance(&self, class_id: ClassId) -> Result<&RealVec<S>> {
        Ok(&self.variances[self.index(class_id)?])
    }

    /// Unnormalized draws from N(μ*, diag σ*²).
    pub fn sample_raw(&self, class_id: ClassId, count: usize, rng: &mut Rng) -> Result<Vec<RealVec<S>>> {
        let idx = self.index(class_id)?;
        if count == 0 {
            return Err(Error::Empty("sample count"));
        }
        let (mean, var) = (&self.means[idx], &self.variances[idx]);
        let floor = S::of(WORLD_VARIANCE_FLOOR);
        Ok((0..count)
            .map(|_| {
                mean.iter()
                    .zip(var.iter())
                    .map(|(&m, &v)| m + v.max(floor).sqrt() * S::of(rng.standard_normal()))
                    .collect()
            })
            .collect())
    }
}

/// Draws `count` labeled, unit-norm features of `class_id`.
pub fn synthetic_sample<S: Scalar>(
    world: &SyntheticWorld<S>,
    class_id: ClassId,
    count: usize,
    rng: &mut Rng,
) -> Result<Vec<FeatureRecord<S>>> {
    world
        .sample_raw(class_id, count, rng)?
        .into_iter()
        .map(|raw| {
            Ok(FeatureRecord {
                class_id,
                feature: raw.normalized()?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_variance_reproduces_normalized_mean() {
        let mean = RealVec::from_vec(vec![3.0f64, 4.0]);
        let world = SyntheticWorld::from_moments(
            vec![ClassId(0)],
            vec![mean.clone()],
            vec![RealVec::zeros(2)],
            0,
        )
        .unwrap();
        let mut rng = Rng::new(1);
        for rec in synthetic_sample(&world, ClassId(0), 5, &mut rng).unwrap() {
            assert!((rec.feature[0] - 0.6).abs() < 1e-5);
            assert!((rec.feature[1] - 0.8).abs() < 1e-5);
        }
    }

    #[test]
    fn samples_are_unit_norm() {
        let world = SyntheticWorld::<f64>::generate(3, 16, WorldParams::default(), 4).unwrap();
        let mut rng = Rng::new(2);
        for rec in synthetic_sample(&world, ClassId(2), 200, &mut rng).unwrap() {
            assert!((rec.feature.norm() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn raw_draws_match_ground_truth_mean() {
        let world = SyntheticWorld::<f64>::generate(2, 8, WorldParams::default(), 5).unwrap();
        let n = 10_000;
        let draws = world.sample_raw(ClassId(1), n, &mut Rng::new(6)).unwrap();
        let (mu, var) = (world.mean(ClassId(1)).unwrap(), world.variance(ClassId(1)).unwrap());
        for d in 0..8 {
            let m = draws.iter().map(|x| x[d]).sum::<f64>() / n as f64;
            assert!((m - mu[d]).abs() <= 3.0 * var[d].sqrt() / (n as f64).sqrt(), "dim {d}");
        }
    }

    #[test]
    fn unknown_class_is_an_error() {
        let world = SyntheticWorld::<f64>::generate(2, 4, WorldParams::default(), 5).unwrap();
        assert!(matches!(
            synthetic_sample(&world, ClassId(9), 1, &mut Rng::new(0)),
            Err(Error::UnknownClass(ClassId(9)))
        ));
    }

    #[test]
    fn generation_is_deterministic_with_distinct_means() {
        let a = SyntheticWorld::<f64>::generate(20, 32, WorldParams::default(), 17).unwrap();
        let b = SyntheticWorld::<f64>::generate(20, 32, WorldParams::default(), 17).unwrap();
        assert_eq!(a, b);
    }
}
