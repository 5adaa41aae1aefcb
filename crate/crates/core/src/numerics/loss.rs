//! Softmax cross-entropy, cosine similarity and L2 normalization, each with
//! its analytic gradient.

use crate::error::{check_dim, Error, Result};
use crate::numerics::{dot, norm, RealVec};
use crate::Scalar;

/// Numerically stable softmax (max-subtracted).
pub fn softmax<S: Scalar>(logits: &[S]) -> RealVec<S> {
    let max = logits.iter().copied().fold(S::neg_infinity(), S::max);
    let exps: Vec<S> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: S = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `-log softmax(logits)[target]` and its gradient `softmax − one_hot`.
pub fn softmax_cross_entropy<S: Scalar>(logits: &[S], target: usize) -> Result<(S, RealVec<S>)> {
    if target >= logits.len() {
        return Err(Error::TargetOutOfRange {
            index: target,
            len: logits.len(),
        });
    }
    let max = logits.iter().copied().fold(S::neg_infinity(), S::max);
    let shifted_total: S = logits.iter().map(|&z| (z - max).exp()).sum();
    let log_z = max + shifted_total.ln();
    let loss = (log_z - logits[target]).max(S::zero());
    let mut grad: RealVec<S> = logits.iter().map(|&z| (z - log_z).exp()).collect();
    grad[target] -= S::one();
    if !loss.is_finite() {
        return Err(Error::NonFinite("softmax cross-entropy".into()));
    }
    Ok((loss, grad))
}

/// Cosine of the angle between `a` and `b`, clamped to [-1, 1].
pub fn cosine_similarity<S: Scalar>(a: &[S], b: &[S]) -> Result<S> {
    check_dim("cosine operands", a.len(), b.len())?;
    let (na, nb) = (norm(a), norm(b));
    if na <= S::zero() || nb <= S::zero() {
        return Err(Error::ZeroNorm("cosine similarity"));
    }
    Ok((dot(a, b) / (na * nb)).max(-S::one()).min(S::one()))
}

/// Cosine similarity together with its gradients in both arguments.
#[derive(Debug, Clone)]
pub struct CosineGrad<S> {
    pub value: S,
    pub grad_a: RealVec<S>,
    pub grad_b: RealVec<S>,
}

pub fn cosine_with_grad<S: Scalar>(a: &[S], b: &[S]) -> Result<CosineGrad<S>> {
    check_dim("cosine operands", a.len(), b.len())?;
    let (na, nb) = (norm(a), norm(b));
    if na <= S::zero() || nb <= S::zero() {
        return Err(Error::ZeroNorm("cosine similarity"));
    }
    let value = dot(a, b) / (na * nb);
    let inv = S::one() / (na * nb);
    let ca = value / (na * na);
    let cb = value / (nb * nb);
    let grad_a = a.iter().zip(b).map(|(&x, &y)| y * inv - x * ca).collect();
    let grad_b = a.iter().zip(b).map(|(&x, &y)| x * inv - y * cb).collect();
    Ok(CosineGrad {
        value,
        grad_a,
        grad_b,
    })
}

/// `x / ‖x‖` together with `‖x‖`.
pub fn l2_normalize<S: Scalar>(x: &[S]) -> Result<(RealVec<S>, S)> {
    let n = norm(x);
    if n <= S::zero() || !n.is_finite() {
        return Err(Error::ZeroNorm("l2 normalize"));
    }
    Ok((x.iter().map(|&v| v / n).collect(), n))
}

/// Pulls `grad_y` back through `y = x / ‖x‖`: `(I − y yᵀ) grad_y / ‖x‖`.
pub fn l2_normalize_backward<S: Scalar>(y: &[S], x_norm: S, grad_y: &[S]) -> RealVec<S> {
    let proj = dot(y, grad_y);
    y.iter()
        .zip(grad_y)
        .map(|(&yi, &gi)| (gi - yi * proj) / x_norm)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-6;

    #[test]
    fn uniform_logits_give_log_c() {
        let (loss, _) = softmax_cross_entropy(&[0.3f64; 4], 2).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-12);
        assert!((loss - 1.386294).abs() < EPS);
    }

    #[test]
    fn two_class_closed_form() {
        let (loss, grad) = softmax_cross_entropy(&[1.0f64, 0.0], 0).unwrap();
        assert!((loss - (1.0 + (-1.0f64).exp()).ln()).abs() < 1e-12);
        assert!((loss - 0.313262).abs() < EPS);
        assert!((grad[0] + grad[1]).abs() < 1e-12);
    }

    #[test]
    fn target_out_of_range() {
        assert!(matches!(
            softmax_cross_entropy(&[1.0f64, 2.0], 2),
            Err(Error::TargetOutOfRange { index: 2, len: 2 })
        ));
    }

    #[test]
    fn large_logits_stay_finite() {
        let (loss, grad) = softmax_cross_entropy(&[1000.0f64, -1000.0, 999.0], 1).unwrap();
        assert!(loss.is_finite() && grad.is_finite());
        assert!((loss - 2000.0 - (1.0 + (-1.0f64).exp()).ln()).abs() < 1e-9);
    }

    #[test]
    fn cosine_closed_forms() {
        assert_eq!(cosine_similarity(&[1.0f64, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(cosine_similarity(&[2.0f64, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        let c = cosine_similarity(&[1.0f64, 1.0], &[1.0, 0.0]).unwrap();
        assert!((c - 0.707107).abs() < EPS);
    }

    #[test]
    fn cosine_rejects_zero_norm() {
        assert!(matches!(
            cosine_similarity(&[0.0f64, 0.0], &[1.0, 0.0]),
            Err(Error::ZeroNorm(_))
        ));
    }
}
