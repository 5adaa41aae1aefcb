use crate::error::{check_dim, Error, Result};
use crate::numerics::{RealVec, Rng};
use crate::{ClassId, Scalar};

/// Lower bound applied to every estimated variance entry.
pub const VARIANCE_FLOOR: f64 = 1e-6;

/// Per-class feature distribution `N(μ_c, diag σ²_c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianClassDistribution<S> {
    pub class_id: ClassId,
    pub mean: RealVec<S>,
    pub variance: RealVec<S>,
    /// Real features used in the estimate.
    pub n_real: u32,
    /// Synthesized features used in the estimate.
    pub n_synth: u32,
}

impl<S: Scalar> GaussianClassDistribution<S> {
    pub fn dim(&self) -> usize {
        self.mean.dim()
    }

    pub fn validate(&self) -> Result<()> {
        check_dim("distribution variance", self.mean.dim(), self.variance.dim())?;
        if self.n_real as u64 + self.n_synth as u64 == 0 {
            return Err(Error::invalid(format!("class {} estimated from no features", self.class_id)));
        }
        if !self.mean.is_finite() || !self.variance.is_finite() {
            return Err(Error::NonFinite(format!("distribution of class {}", self.class_id)));
        }
        if self.variance.iter().any(|&v| v <= S::zero()) {
            return Err(Error::invalid(format!("class {} has non-positive variance", self.class_id)));
        }
        Ok(())
    }
}

/// Pooled mean over real and synthesized features, and the Bessel-corrected
/// pooled variance, floored at [`VARIANCE_FLOOR`]. With fewer than two
/// features in total every variance entry is the floor.
pub fn estimate_distribution<S: Scalar, F: AsRef<[S]>>(
    class_id: ClassId,
    real_feats: &[F],
    synth_feats: &[F],
) -> Result<GaussianClassDistribution<S>> {
    if real_feats.is_empty() {
        return Err(Error::Empty("real features"));
    }
    let dim = real_feats[0].as_ref().len();
    if dim == 0 {
        return Err(Error::Empty("feature dimension"));
    }
    for f in real_feats.iter().chain(synth_feats) {
        check_dim("feature", dim, f.as_ref().len())?;
    }
    let n = real_feats.len() + synth_feats.len();
    let all = || real_feats.iter().chain(synth_feats).map(AsRef::as_ref);

    let mut mean = vec![S::zero(); dim];
    for f in all() {
        for (m, &x) in mean.iter_mut().zip(f) {
            *m += x;
        }
    }
    let inv_n = S::one() / S::of_usize(n);
    mean.iter_mut().for_each(|m| *m *= inv_n);

    let floor = S::of(VARIANCE_FLOOR);
    let variance = if n < 2 {
        vec![floor; dim]
    } else {
        let mut ss = vec![S::zero(); dim];
        for f in all() {
            for ((s, &x), &m) in ss.iter_mut().zip(f).zip(&mean) {
                *s += (x - m) * (x - m);
            }
        }
        let inv = S::one() / S::of_usize(n - 1);
        ss.into_iter().map(|s| (s * inv).max(floor)).collect()
    };

    let dist = GaussianClassDistribution {
        class_id,
        mean: RealVec::from_vec(mean),
        variance: RealVec::from_vec(variance),
        n_real: real_feats.len() as u32,
        n_synth: synth_feats.len() as u32,
    };
    if !dist.mean.is_finite() || !dist.variance.is_finite() {
        return Err(Error::NonFinite(format!("distribution estimate for class {class_id}")));
    }
    Ok(dist)
}

/// `f̂ = μ + σ ⊙ ε`, `ε ~ N(0, I)`. Not re-normalized.
pub fn sample_pseudo_feature<S: Scalar>(dist: &GaussianClassDistribution<S>, rng: &mut Rng) -> RealVec<S> {
    dist.mean
        .iter()
        .zip(dist.variance.iter())
        .map(|(&m, &v)| m + v.sqrt() * S::of(rng.standard_normal()))
        .collect()
}

/// Histogram and moments of one feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionHistogram {
    /// `bins + 1` edges spanning `[min, max]`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub mean: f64,
    /// Bessel-corrected; zero for a single sample.
    pub variance: f64,
}

pub fn dimension_histogram<S: Scalar, F: AsRef<[S]>>(feats: &[F], dim: usize, bins: usize) -> Result<DimensionHistogram> {
    if feats.is_empty() {
        return Err(Error::Empty("histogram input"));
    }
    if bins == 0 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    let d = feats[0].as_ref().len();
    if dim >= d {
        return Err(Error::invalid(format!("dimension {dim} out of range for D = {d}")));
    }
    let mut values = Vec::with_capacity(feats.len());
    for f in feats {
        check_dim("histogram feature", d, f.as_ref().len())?;
        values.push(f.as_ref()[dim].to_f64_lossy());
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * i as f64 })
        .collect();
    let mut counts = vec![0usize; bins];
    for &x in &values {
        let b = if width > 0.0 {
            (((x - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[b] += 1;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = if values.len() < 2 {
        0.0
    } else {
        values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    };
    Ok(DimensionHistogram {
        edges,
        counts,
        mean,
        variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_closed_form() {
        let real = [vec![1.0f64, 0.0], vec![0.0, 1.0]];
        let d = estimate_distribution(ClassId(3), &real, &[]).unwrap();
        assert_eq!(d.mean.as_slice(), &[0.5, 0.5]);
        assert_eq!(d.variance.as_slice(), &[0.5, 0.5]);
        assert_eq!((d.n_real, d.n_synth), (2, 0));
    }

    #[test]
    fn single_feature_gets_floor_variance() {
        let real = [vec![0.6f64, 0.8]];
        let d = estimate_distribution(ClassId(0), &real, &[]).unwrap();
        assert_eq!(d.mean.as_slice(), &[0.6, 0.8]);
        assert_eq!(d.variance.as_slice(), &[VARIANCE_FLOOR; 2]);
    }

    #[test]
    fn duplicates_are_floored() {
        let real = [vec![0.6f64, 0.8], vec![0.6, 0.8]];
        let d = estimate_distribution(ClassId(0), &real, &real).unwrap();
        assert!(d.variance.iter().all(|&v| v == VARIANCE_FLOOR));
        d.validate().unwrap();
    }

    #[test]
    fn errors_on_empty_or_mismatched() {
        let none: [Vec<f64>; 0] = [];
        assert!(estimate_distribution(ClassId(0), &none, &none).is_err());
        let real = [vec![1.0f64, 0.0]];
        let synth = [vec![1.0f64]];
        assert!(estimate_distribution(ClassId(0), &real, &synth).is_err());
    }

    #[test]
    fn near_degenerate_samples_stay_close() {
        let d = GaussianClassDistribution {
            class_id: ClassId(0),
            mean: RealVec::from_vec(vec![0.3f64, -0.1, 0.7]),
            variance: RealVec::from_vec(vec![VARIANCE_FLOOR; 3]),
            n_real: 1,
            n_synth: 0,
        };
        let mut rng = Rng::new(3);
        for _ in 0..10 {
            let f = sample_pseudo_feature(&d, &mut rng);
            for (x, m) in f.iter().zip(d.mean.iter()) {
                assert!((x - m).abs() <= 3.0 * VARIANCE_FLOOR.sqrt());
            }
        }
        let a = sample_pseudo_feature(&d, &mut Rng::new(4).substream("s", 0));
        let b = sample_pseudo_feature(&d, &mut Rng::new(4).substream("s", 0));
        assert_eq!(a, b);
    }

    #[test]
    fn histogram_constant_dimension_uses_one_bin() {
        let feats = vec![vec![1.0f64, 0.25]; 9];
        let h = dimension_histogram(&feats, 1, 5).unwrap();
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(h.counts.iter().sum::<usize>(), 9);
        assert_eq!(h.mean, 0.25);
        assert_eq!(h.variance, 0.0);
        assert!(dimension_histogram::<f64, Vec<f64>>(&[], 0, 3).is_err());
        assert!(dimension_histogram(&feats, 2, 3).is_err());
    }
}
