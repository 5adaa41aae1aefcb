use crate::encoders::{TextTape, ToyTextEncoder};
use crate::error::{Error, Result};
use crate::numerics::{cosine_similarity, softmax, RealVec};
use crate::prompt::PromptContext;
use crate::{ClassId, Scalar};

/// Default temperature τ (logit scale 1/τ = 100).
pub const DEFAULT_TEMPERATURE: f64 = 0.01;

/// Every class encountered so far, in first-seen order, with its frozen
/// class-name embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierHead<S> {
    classes: Vec<ClassId>,
    embeddings: Vec<RealVec<S>>,
    temperature: S,
}

/// Text features `g_c` (and their tapes) for one prompt value. Must be
/// recomputed after every prompt update.
#[derive(Debug, Clone)]
pub struct TextFeatures<S> {
    pub features: Vec<RealVec<S>>,
    pub tapes: Vec<TextTape<S>>,
}

impl<S: Scalar> ClassifierHead<S> {
    pub fn new(temperature: S) -> Result<Self> {
        if !(temperature > S::zero()) {
            return Err(Error::invalid("temperature must be positive"));
        }
        Ok(Self {
            classes: Vec::new(),
            embeddings: Vec::new(),
            temperature,
        })
    }

    /// Appends new classes. Existing entries never move; re-adding one is an
    /// error.
    pub fn extend(&mut self, classes: impl IntoIterator<Item = (ClassId, RealVec<S>)>) -> Result<()> {
        for (c, emb) in classes {
            if self.classes.contains(&c) {
                return Err(Error::invalid(format!("class {c} already in the head")));
            }
            if let Some(first) = self.embeddings.first() {
                crate::error::check_dim("class embedding", first.dim(), emb.dim())?;
            }
            self.classes.push(c);
            self.embeddings.push(emb);
        }
        Ok(())
    }

    pub fn classes(&self) -> &[ClassId] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn temperature(&self) -> S {
        self.temperature
    }

    pub fn index_of(&self, class_id: ClassId) -> Result<usize> {
        self.classes
            .iter()
            .position(|&c| c == class_id)
            .ok_or(Error::UnknownClass(class_id))
    }

    pub fn embedding(&self, index: usize) -> &RealVec<S> {
        &self.embeddings[index]
    }

    /// Encodes every class prompt with tapes for backprop.
    pub fn text_features(&self, encoder: &ToyTextEncoder<S>, context: &PromptContext<S>) -> Result<TextFeatures<S>> {
        if self.is_empty() {
            return Err(Error::Empty("classifier head"));
        }
        let (features, tapes) = self
            .embeddings
            .iter()
            .map(|e| encoder.encode_text(context, e))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        Ok(TextFeatures { features, tapes })
    }

    /// Logits `⟨f, g_c⟩ / τ`.
    pub fn logits(&self, text: &TextFeatures<S>, f: &[S]) -> Result<RealVec<S>> {
        let inv_tau = S::one() / self.temperature;
        text.features
            .iter()
            .map(|g| cosine_similarity(f, g).map(|c| c * inv_tau))
            .collect()
    }

    /// Class probabilities and the arg-max class (ties go to the lowest index).
    pub fn predict_with(&self, text: &TextFeatures<S>, f: &[S]) -> Result<(RealVec<S>, ClassId)> {
        let probs = softmax(&self.logits(text, f)?);
        let mut best = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = i;
            }
        }
        Ok((probs, self.classes[best]))
    }
}

/// One-off prediction for a single feature.
pub fn predict<S: Scalar>(
    head: &ClassifierHead<S>,
    encoder: &ToyTextEncoder<S>,
    context: &PromptContext<S>,
    f: &[S],
) -> Result<(RealVec<S>, ClassId)> {
    let text = head.text_features(encoder, context)?;
    head.predict_with(&text, f)
}
