//! Prompt-learning objectives and their gradients w.r.t. the shared context.

use crate::distributions::{sample_pseudo_feature, DistributionStore};
use crate::encoders::ToyTextEncoder;
use crate::error::{Error, Result};
use crate::numerics::{cosine_with_grad, softmax_cross_entropy, RealVec, Rng};
use crate::prompt::{ClassifierHead, PromptContext, TextFeatures};
use crate::{ClassId, Scalar};

/// Gradients w.r.t. each class's text feature `g_c`, in head order.
#[derive(Debug, Clone, PartialEq)]
pub struct TextFeatureGrads<S>(pub Vec<RealVec<S>>);

impl<S: Scalar> TextFeatureGrads<S> {
    pub fn zeros(classes: usize, dim: usize) -> Self {
        Self(vec![RealVec::zeros(dim); classes])
    }

    pub fn add_scaled(&mut self, k: S, other: &Self) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for (x, &y) in a.iter_mut().zip(b.iter()) {
                *x += k * y;
            }
        }
    }

    /// Backpropagates through the frozen encoder into the shared context.
    pub fn to_context_grad(&self, encoder: &ToyTextEncoder<S>, text: &TextFeatures<S>) -> Result<PromptContext<S>> {
        let dims = encoder.dims();
        let mut grad = PromptContext::zeros(dims.context_len, dims.ctx_dim);
        for (g, tape) in self.0.iter().zip(&text.tapes) {
            if g.iter().all(|&x| x == S::zero()) {
                continue;
            }
            grad.add_scaled(S::one(), &encoder.encode_text_grad(tape, g)?);
        }
        Ok(grad)
    }
}

/// Adds `weight · ∂CE(f, target)/∂g_c` for every class and returns the CE.
fn accumulate_cross_entropy<S: Scalar>(
    head: &ClassifierHead<S>,
    text: &TextFeatures<S>,
    f: &[S],
    target: usize,
    weight: S,
    grads: &mut TextFeatureGrads<S>,
) -> Result<S> {
    let inv_tau = S::one() / head.temperature();
    let cos = text
        .features
        .iter()
        .map(|g| cosine_with_grad(f, g))
        .collect::<Result<Vec<_>>>()?;
    let logits: Vec<S> = cos.iter().map(|c| c.value * inv_tau).collect();
    let (loss, dlogits) = softmax_cross_entropy(&logits, target)?;
    for ((acc, c), &dl) in grads.0.iter_mut().zip(&cos).zip(dlogits.iter()) {
        let k = weight * dl * inv_tau;
        for (a, &gb) in acc.iter_mut().zip(c.grad_b.iter()) {
            *a += k * gb;
        }
    }
    Ok(loss)
}

/// `L_n`: mean over the batch of `−log p(y_i | f_i)`, normalized over every
/// class in the head. Returns the loss and `∂L_n/∂g_c`.
pub fn loss_new_with<S: Scalar, F: AsRef<[S]>>(
    head: &ClassifierHead<S>,
    text: &TextFeatures<S>,
    batch: &[(F, ClassId)],
) -> Result<(S, TextFeatureGrads<S>)> {
    if batch.is_empty() {
        return Err(Error::Empty("loss batch"));
    }
    let dim = text.features[0].dim();
    let mut grads = TextFeatureGrads::zeros(head.len(), dim);
    let w = S::one() / S::of_usize(batch.len());
    let mut total = S::zero();
    for (f, y) in batch {
        let target = head.index_of(*y)?;
        total += accumulate_cross_entropy(head, text, f.as_ref(), target, w, &mut grads)?;
    }
    Ok((total * w, grads))
}

/// `L_n` and its gradient w.r.t. the context.
pub fn loss_new<S: Scalar, F: AsRef<[S]>>(
    encoder: &ToyTextEncoder<S>,
    head: &ClassifierHead<S>,
    context: &PromptContext<S>,
    batch: &[(F, ClassId)],
) -> Result<(S, PromptContext<S>)> {
    let text = head.text_features(encoder, context)?;
    let (loss, grads) = loss_new_with(head, &text, batch)?;
    Ok((loss, grads.to_context_grad(encoder, &text)?))
}

/// Pseudo-features drawn for one real example: `B` (class, f̂) pairs.
pub type ReplayDraw<S> = Vec<(ClassId, RealVec<S>)>;

/// For each of `examples` real examples, picks `b` old classes (uniformly
/// without replacement when `b ≤ |old|`, otherwise with replacement) and
/// samples one pseudo-feature per pick.
pub fn draw_replay<S: Scalar>(
    store: &DistributionStore<S>,
    b: usize,
    examples: usize,
    rng: &mut Rng,
) -> Result<Vec<ReplayDraw<S>>> {
    if store.is_empty() {
        return Err(Error::Empty("distribution store"));
    }
    if b == 0 {
        return Err(Error::invalid("replay count B must be >= 1"));
    }
    let old = store.class_ids();
    (0..examples)
        .map(|_| {
            let picks: Vec<usize> = if b <= old.len() {
                rng.sample_without_replacement(old.len(), b)
            } else {
                (0..b).map(|_| rng.below(old.len())).collect()
            };
            picks
                .into_iter()
                .map(|i| {
                    let dist = store.get(old[i])?;
                    Ok((old[i], sample_pseudo_feature(dist, rng)))
                })
                .collect()
        })
        .collect()
}

/// `L_o` for fixed draws: per real example, the sum of the `B`
/// cross-entropies, averaged over real examples.
pub fn loss_old_with<S: Scalar>(
    head: &ClassifierHead<S>,
    text: &TextFeatures<S>,
    draws: &[ReplayDraw<S>],
) -> Result<(S, TextFeatureGrads<S>)> {
    if draws.is_empty() {
        return Err(Error::Empty("replay draws"));
    }
    let dim = text.features[0].dim();
    let mut grads = TextFeatureGrads::zeros(head.len(), dim);
    let w = S::one() / S::of_usize(draws.len());
    let mut total = S::zero();
    for draw in draws {
        for (c, f_hat) in draw {
            let target = head.index_of(*c)?;
            total += accumulate_cross_entropy(head, text, f_hat, target, w, &mut grads)?;
        }
    }
    Ok((total * w, grads))
}

/// `L_o` with fresh draws for a batch of `examples` real examples.
pub fn loss_old<S: Scalar>(
    encoder: &ToyTextEncoder<S>,
    head: &ClassifierHead<S>,
    context: &PromptContext<S>,
    store: &DistributionStore<S>,
    b: usize,
    examples: usize,
    rng: &mut Rng,
) -> Result<(S, PromptContext<S>)> {
    let draws = draw_replay(store, b, examples, rng)?;
    let text = head.text_features(encoder, context)?;
    let (loss, grads) = loss_old_with(head, &text, &draws)?;
    Ok((loss, grads.to_context_grad(encoder, &text)?))
}

/// `L_LP`: `L_n` in the first session, `L_n + λ_o·L_o` afterwards.
pub fn loss_total<S: Scalar>(loss_new: S, loss_old: S, lambda_o: S, session: usize) -> S {
    if session == 0 {
        loss_new
    } else {
        loss_new + lambda_o * loss_old
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::GaussianClassDistribution;
    use crate::encoders::{TextEncoderDims, EncoderInit};

    fn fixed_head(features: Vec<Vec<f64>>, tau: f64) -> (ClassifierHead<f64>, TextFeatures<f64>) {
        // Text features are injected directly; tapes are irrelevant here.
        let enc = ToyTextEncoder::new(TextEncoderDims::new(1, 1, 1, features[0].len()), EncoderInit::default(), 0).unwrap();
        let ctx = PromptContext::zeros(1, 1);
        let mut head = ClassifierHead::new(tau).unwrap();
        head.extend((0..features.len() as u32).map(|c| (ClassId(c), RealVec::from_vec(vec![c as f64 + 1.0]))))
            .unwrap();
        let mut text = head.text_features(&enc, &ctx).unwrap();
        text.features = features.into_iter().map(RealVec::from_vec).collect();
        (head, text)
    }

    #[test]
    fn two_class_prediction_closed_form() {
        let (head, text) = fixed_head(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1.0);
        let (p, c) = head.predict_with(&text, &[1.0, 0.0]).unwrap();
        let e = std::f64::consts::E;
        assert!((p[0] - e / (e + 1.0)).abs() < 1e-12);
        assert!((p[0] - 0.731059).abs() < 1e-6);
        assert_eq!(c, ClassId(0));
        let (p3, c3) = head.predict_with(&text, &[3.0, 0.0]).unwrap();
        assert!((p3[0] - p[0]).abs() < 1e-12);
        assert_eq!(c3, c);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let (head, text) = fixed_head(vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], 1.0);
        let (p, c) = head.predict_with(&text, &[1.0, 0.0]).unwrap();
        assert_eq!(c, ClassId(0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loss_new_closed_forms() {
        let (head, text) = fixed_head(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1.0);
        let (l, _) = loss_new_with(&head, &text, &[(vec![1.0, 0.0], ClassId(0))]).unwrap();
        assert!((l - 0.313262).abs() < 1e-6);

        let g = vec![1.0, 0.0];
        let (head, text) = fixed_head(vec![g; 60], 0.01);
        let (l, _) = loss_new_with(&head, &text, &[(vec![0.3, 0.9], ClassId(17))]).unwrap();
        assert!((l - 60f64.ln()).abs() < 1e-9);
        assert!((l - 4.094345).abs() < 1e-6);
        assert!(loss_new_with(&head, &text, &[(vec![0.3, 0.9], ClassId(60))]).is_err());
    }

    #[test]
    fn loss_old_closed_forms() {
        let (head, text) = fixed_head(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1.0);
        let draws = vec![vec![(ClassId(0), RealVec::from_vec(vec![1.0, 0.0]))]];
        let (l, _) = loss_old_with(&head, &text, &draws).unwrap();
        assert!((l - 0.313262).abs() < 1e-6);

        let (head, text) = fixed_head(vec![vec![1.0, 0.0]; 5], 0.01);
        let draw: ReplayDraw<f64> = (0..3).map(|c| (ClassId(c), RealVec::from_vec(vec![0.2, 0.7]))).collect();
        let (l, _) = loss_old_with(&head, &text, &[draw.clone(), draw]).unwrap();
        assert!((l - 3.0 * 5f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn loss_total_case_split() {
        assert_eq!(loss_total(1.3f64, 7.0, 2.0, 0), 1.3);
        assert_eq!(loss_total(1.0f64, 0.5, 2.0, 2), 2.0);
        assert_eq!(loss_total(1.0f64, 0.5, 0.0, 3), 1.0);
    }

    #[test]
    fn replay_draw_policy() {
        let mut store = DistributionStore::new(2);
        for c in 0..3 {
            store
                .insert(GaussianClassDistribution {
                    class_id: ClassId(c),
                    mean: RealVec::from_vec(vec![1.0, c as f64]),
                    variance: RealVec::from_vec(vec![0.01, 0.01]),
                    n_real: 5,
                    n_synth: 0,
                })
                .unwrap();
        }
        let mut rng = Rng::new(1);
        for draw in draw_replay(&store, 3, 20, &mut rng).unwrap() {
            let mut ids: Vec<_> = draw.iter().map(|(c, _)| *c).collect();
            ids.sort();
            assert_eq!(ids, vec![ClassId(0), ClassId(1), ClassId(2)]);
        }
        let draws = draw_replay(&store, 8, 4, &mut rng).unwrap();
        assert!(draws.iter().all(|d| d.len() == 8));
        assert!(draw_replay(&DistributionStore::<f64>::new(2), 1, 1, &mut rng).is_err());
    }
}
