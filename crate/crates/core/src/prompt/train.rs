use crate::distributions::DistributionStore;
use crate::encoders::{FeatureRecord, ToyTextEncoder};
use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::prompt::{draw_replay, loss_new_with, loss_old_with, loss_total, ClassifierHead, PromptContext, SgdMomentum};
use crate::{ClassId, Scalar};

/// Default learning rate for prompt tuning.
pub const PROMPT_LEARNING_RATE: f64 = 0.002;
/// Default momentum for every optimizer.
pub const MOMENTUM: f64 = 0.9;
/// Standard deviation of a freshly initialized prompt.
pub const PROMPT_INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PromptTrainConfig {
    pub epochs: usize,
    /// Examples per step. Smaller sessions train as one full batch.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Weight `λ_o` of the replay loss.
    pub lambda_o: f64,
    /// Old classes `B` drawn per real example.
    pub replay_count: usize,
}

impl PromptTrainConfig {
    /// 200 epochs, batch 64.
    pub fn base_session() -> Self {
        Self {
            epochs: 200,
            batch_size: 64,
            learning_rate: PROMPT_LEARNING_RATE,
            momentum: MOMENTUM,
            lambda_o: 2.0,
            replay_count: 8,
        }
    }

    /// 100 epochs, batch 25.
    pub fn incremental_session() -> Self {
        Self {
            epochs: 100,
            batch_size: 25,
            ..Self::base_session()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.replay_count == 0 {
            return Err(Error::invalid("epochs, batch size and B must be >= 1"));
        }
        if !(self.learning_rate > 0.0) || !(self.lambda_o >= 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid("prompt training needs lr > 0, lambda_o >= 0, momentum in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PromptTrainLog {
    /// Mean `L_LP` per epoch.
    pub epoch_loss: Vec<f64>,
    pub epoch_loss_new: Vec<f64>,
    pub epoch_loss_old: Vec<f64>,
    pub steps: usize,
}

/// Tunes `context` on one session's examples.
///
/// Each step recomputes every `g_c`, takes `L_n` on the real batch and, from
/// the second session on, `L_o` over `B` pseudo-features per real example
/// sampled from `replay`. The returned context seeds the next session.
#[allow(clippy::too_many_arguments)]
pub fn train_session<S: Scalar>(
    encoder: &ToyTextEncoder<S>,
    mut context: PromptContext<S>,
    head: &ClassifierHead<S>,
    data: &[FeatureRecord<S>],
    replay: Option<&DistributionStore<S>>,
    session: usize,
    config: &PromptTrainConfig,
    rng: &Rng,
) -> Result<(PromptContext<S>, PromptTrainLog)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("session training data"));
    }
    for rec in data {
        head.index_of(rec.class_id)?;
    }
    let replay = match replay {
        Some(store) if session > 0 && !store.is_empty() && config.lambda_o > 0.0 => Some(store),
        _ => None,
    };
    let lambda_o = S::of(config.lambda_o);
    let mut opt = SgdMomentum::new(
        S::of(config.learning_rate),
        S::of(config.momentum),
        context.as_slice().len(),
    );
    let batch_size = config.batch_size.min(data.len());
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = PromptTrainLog::default();

    for epoch in 0..config.epochs {
        rng.substream("prompt-shuffle", epoch as u64).shuffle(&mut order);
        let mut replay_rng = rng.substream("replay", epoch as u64);
        let (mut sum_total, mut sum_new, mut sum_old, mut batches) = (0.0, 0.0, 0.0, 0usize);
        for (b, chunk) in order.chunks(batch_size).enumerate() {
            let batch: Vec<(&[S], ClassId)> = chunk
                .iter()
                .map(|&i| (data[i].feature.as_slice(), data[i].class_id))
                .collect();
            let text = head.text_features(encoder, &context)?;
            let (l_new, mut grads) = loss_new_with(head, &text, &batch)?;
            let mut l_old = S::zero();
            if let Some(store) = replay {
                let draws = draw_replay(store, config.replay_count, batch.len(), &mut replay_rng)?;
                let (lo, g_old) = loss_old_with(head, &text, &draws)?;
                grads.add_scaled(lambda_o, &g_old);
                l_old = lo;
            }
            let total = loss_total(l_new, l_old, lambda_o, session);
            if !total.is_finite() {
                return Err(Error::NonFinite(format!(
                    "prompt loss at session {session}, epoch {epoch}, batch {b}"
                )));
            }
            let ctx_grad = grads.to_context_grad(encoder, &text)?;
            opt.step(context.as_mut_slice(), ctx_grad.as_slice()).map_err(|e| {
                Error::NonFinite(format!("session {session}, epoch {epoch}, batch {b}: {e}"))
            })?;
            sum_total += total.to_f64_lossy();
            sum_new += l_new.to_f64_lossy();
            sum_old += l_old.to_f64_lossy();
            batches += 1;
        }
        let n = batches as f64;
        log.epoch_loss.push(sum_total / n);
        log.epoch_loss_new.push(sum_new / n);
        log.epoch_loss_old.push(sum_old / n);
        log.steps += batches;
    }
    Ok((context, log))
}
