//! Frozen text-side stand-ins: a hashed class-name embedding table and a
//! small differentiable text encoder that maps `[V]_1 … [V]_L [CLS]` to a
//! unit-norm feature.

use crate::error::{check_dim, Error, Result};
use crate::numerics::{fnv1a, l2_normalize, l2_normalize_backward, Activation, MlpParams, MlpTape, RealVec, Rng};
use crate::prompt::PromptContext;
use crate::{ClassId, Scalar};

/// Embedding of a class name: a deterministic function of `(name, seed)`.
pub fn class_name_embedding<S: Scalar>(name: &str, dim: usize, seed: u64) -> RealVec<S> {
    let mut rng = Rng::new(seed).substream("class-name", fnv1a(name.as_bytes()));
    let scale = 1.0 / (dim as f64).sqrt();
    (0..dim).map(|_| S::of(scale * rng.standard_normal())).collect()
}

/// Frozen `[CLS]` embeddings, indexed by class id (line index of the name list).
#[derive(Debug, Clone, PartialEq)]
pub struct ClassEmbeddingTable<S> {
    seed: u64,
    dim: usize,
    names: Vec<String>,
    embeddings: Vec<RealVec<S>>,
}

impl<S: Scalar> ClassEmbeddingTable<S> {
    pub fn new(names: Vec<String>, dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("class embedding dimension must be positive"));
        }
        let embeddings = names.iter().map(|n| class_name_embedding(n, dim, seed)).collect();
        Ok(Self {
            seed,
            dim,
            names,
            embeddings,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, class_id: ClassId) -> Result<&str> {
        self.names
            .get(class_id.index())
            .map(String::as_str)
            .ok_or(Error::UnknownClass(class_id))
    }

    pub fn embedding(&self, class_id: ClassId) -> Result<&RealVec<S>> {
        self.embeddings.get(class_id.index()).ok_or(Error::UnknownClass(class_id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextEncoderDims {
    /// Number of context vectors `L`.
    pub context_len: usize,
    /// Width of each context vector.
    pub ctx_dim: usize,
    /// Width of the class-name embedding.
    pub cls_dim: usize,
    /// Output feature dimension `D`.
    pub feature_dim: usize,
    /// Hidden width of the encoder body.
    pub hidden: usize,
}

impl TextEncoderDims {
    /// Hidden width defaults to `4 · D`.
    pub fn new(context_len: usize, ctx_dim: usize, cls_dim: usize, feature_dim: usize) -> Self {
        Self {
            context_len,
            ctx_dim,
            cls_dim,
            feature_dim,
            hidden: 4 * feature_dim,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.context_len * self.ctx_dim + self.cls_dim
    }
}

impl Default for TextEncoderDims {
    fn default() -> Self {
        Self::new(16, 16, 16, 32)
    }
}

/// Initialization scales of the frozen body's first layer.
///
/// Context columns are drawn from N(0, context_gain² / (L·d_ctx)) and
/// class-name columns from N(0, class_gain²), so with unit-norm class
/// embeddings the class part of each hidden pre-activation has standard
/// deviation `class_gain`. Hidden biases are N(0, hidden_bias_std²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderInit {
    pub context_gain: f64,
    pub class_gain: f64,
    pub hidden_bias_std: f64,
}

impl Default for EncoderInit {
    fn default() -> Self {
        Self {
            context_gain: 3.0,
            class_gain: 1.5,
            hidden_bias_std: 0.0,
        }
    }
}

/// Tape from one [`ToyTextEncoder::encode_text`] call.
#[derive(Debug, Clone)]
pub struct TextTape<S> {
    mlp: MlpTape<S>,
    g: RealVec<S>,
    pre_norm: S,
}

impl<S> TextTape<S> {
    pub fn output(&self) -> &RealVec<S> {
        &self.g
    }
}

/// flatten(L·d_ctx + d_cls) → tanh(H) → D → L2-normalize. Weights never change.
#[derive(Debug, Clone)]
pub struct ToyTextEncoder<S: Scalar> {
    dims: TextEncoderDims,
    body: MlpParams<S>,
    seed: u64,
}

impl<S: Scalar> ToyTextEncoder<S> {
    pub fn new(dims: TextEncoderDims, init: EncoderInit, seed: u64) -> Result<Self> {
        if [dims.context_len, dims.ctx_dim, dims.cls_dim, dims.feature_dim, dims.hidden].contains(&0) {
            return Err(Error::invalid("text encoder dimensions must be positive"));
        }
        if ![init.context_gain, init.class_gain, init.hidden_bias_std]
            .iter()
            .all(|g| g.is_finite() && *g >= 0.0)
        {
            return Err(Error::invalid("encoder init scales must be finite and non-negative"));
        }
        let mut rng = Rng::new(seed).substream("text-encoder", 0);
        let mut body = MlpParams::random(
            &[dims.input_dim(), dims.hidden, dims.feature_dim],
            &[Activation::Tanh, Activation::Identity],
            1.0,
            &mut rng,
        )?;
        let n_ctx = dims.context_len * dims.ctx_dim;
        let fan_in = dims.input_dim() as f64;
        let ctx_scale = init.context_gain * (fan_in / n_ctx as f64).sqrt();
        let cls_scale = init.class_gain * fan_in.sqrt();
        let first = &mut body.layers_mut()[0];
        let cols = first.weight.cols();
        for (i, w) in first.weight.data_mut().iter_mut().enumerate() {
            *w *= S::of(if i % cols < n_ctx { ctx_scale } else { cls_scale });
        }
        let mut bias_rng = rng.substream("hidden-bias", 0);
        first
            .bias
            .iter_mut()
            .for_each(|b| *b = S::of(bias_rng.normal(0.0, init.hidden_bias_std)));
        Ok(Self { dims, body, seed })
    }

    /// Like [`new`](Self::new), but re-seeds until every pair of `probe`
    /// embeddings maps to outputs differing by more than 1e-9 somewhere.
    pub fn new_checked(dims: TextEncoderDims, init: EncoderInit, seed: u64, probe: &[RealVec<S>]) -> Result<Self> {
        let zero = PromptContext::zeros(dims.context_len, dims.ctx_dim);
        for attempt in 0..16u64 {
            let s = if attempt == 0 {
                seed
            } else {
                Rng::new(seed).substream("reseed", attempt).key()
            };
            let enc = Self::new(dims, init, s)?;
            let outs = probe
                .iter()
                .map(|e| enc.encode(&zero, e))
                .collect::<Result<Vec<_>>>()?;
            let distinct = (0..outs.len()).all(|i| {
                (0..i).all(|j| {
                    outs[i]
                        .iter()
                        .zip(outs[j].iter())
                        .any(|(a, b)| (*a - *b).abs() > S::of(1e-9))
                })
            });
            if distinct {
                return Ok(enc);
            }
        }
        Err(Error::invalid("could not find an encoder separating the probe classes"))
    }

    pub fn dims(&self) -> TextEncoderDims {
        self.dims
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn body(&self) -> &MlpParams<S> {
        &self.body
    }

    fn input(&self, context: &PromptContext<S>, class_embedding: &[S]) -> Result<Vec<S>> {
        check_dim("prompt context length", self.dims.context_len, context.len())?;
        check_dim("prompt context width", self.dims.ctx_dim, context.dim())?;
        check_dim("class embedding", self.dims.cls_dim, class_embedding.len())?;
        let mut x = Vec::with_capacity(self.dims.input_dim());
        x.extend_from_slice(context.as_slice());
        x.extend_from_slice(class_embedding);
        Ok(x)
    }

    /// `g = E_Txt([V]_1 … [V]_L [CLS])`, unit norm.
    pub fn encode_text(&self, context: &PromptContext<S>, class_embedding: &[S]) -> Result<(RealVec<S>, TextTape<S>)> {
        let x = self.input(context, class_embedding)?;
        let (h, mlp) = self.body.forward(&x)?;
        let (g, pre_norm) = l2_normalize(&h)?;
        let tape = TextTape {
            mlp,
            g: g.clone(),
            pre_norm,
        };
        Ok((g, tape))
    }

    /// Forward only.
    pub fn encode(&self, context: &PromptContext<S>, class_embedding: &[S]) -> Result<RealVec<S>> {
        let x = self.input(context, class_embedding)?;
        let h = self.body.eval(&x)?;
        Ok(l2_normalize(&h)?.0)
    }

    /// Gradient w.r.t. the context entries. The frozen weights get nothing.
    pub fn encode_text_grad(&self, tape: &TextTape<S>, g_grad: &[S]) -> Result<PromptContext<S>> {
        check_dim("text feature gradient", self.dims.feature_dim, g_grad.len())?;
        let dh = l2_normalize_backward(&tape.g, tape.pre_norm, g_grad);
        let dx = self.body.backward_acc(&tape.mlp, &dh, None)?;
        let n = self.dims.context_len * self.dims.ctx_dim;
        PromptContext::from_vec(self.dims.context_len, self.dims.ctx_dim, dx[..n].to_vec())
    }

    /// Byte image of the frozen weights (f64 little-endian), for
    /// verifying that nothing ever writes to them.
    pub fn weight_bytes(&self) -> Vec<u8> {
        self.body
            .to_flat()
            .iter()
            .flat_map(|w| w.to_f64_lossy().to_le_bytes())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (ToyTextEncoder<f64>, PromptContext<f64>, RealVec<f64>) {
        let dims = TextEncoderDims::new(2, 3, 3, 8);
        let enc = ToyTextEncoder::new(dims, EncoderInit::default(), 12).unwrap();
        let ctx = PromptContext::random(2, 3, 0.5, &mut Rng::new(1));
        let emb = class_name_embedding("sparrow", 3, 0);
        (enc, ctx, emb)
    }

    #[test]
    fn output_is_unit_norm_and_deterministic() {
        let (enc, ctx, emb) = small();
        let (g1, _) = enc.encode_text(&ctx, &emb).unwrap();
        let (g2, _) = enc.encode_text(&ctx, &emb).unwrap();
        assert_eq!(g1, g2);
        assert!((g1.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_feature_grad_gives_zero_context_grad() {
        let (enc, ctx, emb) = small();
        let (_, tape) = enc.encode_text(&ctx, &emb).unwrap();
        let grad = enc.encode_text_grad(&tape, &[0.0; 8]).unwrap();
        assert!(grad.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn class_embeddings_are_stable_per_name() {
        let a: RealVec<f64> = class_name_embedding("heron", 16, 3);
        let b: RealVec<f64> = class_name_embedding("heron", 16, 3);
        let c: RealVec<f64> = class_name_embedding("egret", 16, 3);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let table = ClassEmbeddingTable::<f64>::new(vec!["egret".into(), "heron".into()], 16, 3).unwrap();
        assert_eq!(table.embedding(ClassId(1)).unwrap(), &a);
        assert!(table.embedding(ClassId(2)).is_err());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let (enc, ctx, _) = small();
        assert!(enc.encode_text(&ctx, &[0.1, 0.2]).is_err());
        let wrong = PromptContext::<f64>::zeros(3, 3);
        assert!(enc.encode_text(&wrong, &[0.1, 0.2, 0.3]).is_err());
    }

    #[test]
    fn distinct_classes_give_distinct_features() {
        let table = ClassEmbeddingTable::<f64>::new((0..10).map(|i| format!("c{i}")).collect(), 16, 0).unwrap();
        let probe: Vec<_> = (0..10).map(|i| table.embedding(ClassId(i)).unwrap().clone()).collect();
        let enc = ToyTextEncoder::new_checked(TextEncoderDims::default(), EncoderInit::default(), 5, &probe).unwrap();
        let ctx = PromptContext::zeros(16, 16);
        let a = enc.encode(&ctx, &probe[0]).unwrap();
        let b = enc.encode(&ctx, &probe[1]).unwrap();
        assert!(a.iter().zip(b.iter()).any(|(x, y)| (x - y).abs() > 1e-9));
    }
}
