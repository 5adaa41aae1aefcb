//! Feature-synthesis VAE.
//!
//! The encoder maps a real feature to a diagonal latent Gaussian. The decoder
//! maps a latent code to a bias `r` that is added to every vector of a
//! private prompt; the biased prompt and the class-name embedding go through
//! the frozen text encoder to produce the reconstructed feature. Training
//! minimizes `KL + λ_r · ‖f − f̃‖₂`.

use std::fs;
use std::path::Path;

use crate::binio::{dim_u16, ByteReader, ByteWriter};
use crate::encoders::{TextTape, ToyTextEncoder};
use crate::error::{check_dim, Error, Result};
use crate::numerics::{norm, Activation, MlpGrads, MlpParams, MlpTape, RealVec, Rng};
use crate::prompt::{PromptContext, SgdMomentum};
use crate::Scalar;

pub const VAE_MAGIC: &[u8; 4] = b"FSVA";
pub const VAE_VERSION: u16 = 1;

/// Below this the reconstruction loss and its gradient are treated as zero.
pub const RECONSTRUCTION_CUSP: f64 = 1e-12;

/// Standard deviation of the private prompt's initial entries.
pub const VAE_PROMPT_INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VaeDims {
    pub feature_dim: usize,
    pub latent_dim: usize,
    pub context_len: usize,
    pub ctx_dim: usize,
    pub encoder_hidden: usize,
    pub decoder_hidden: usize,
}

impl VaeDims {
    /// Hidden widths default to `2·D` (encoder) and `2·d_ctx` (decoder).
    pub fn new(feature_dim: usize, latent_dim: usize, context_len: usize, ctx_dim: usize) -> Self {
        Self {
            feature_dim,
            latent_dim,
            context_len,
            ctx_dim,
            encoder_hidden: 2 * feature_dim,
            decoder_hidden: 2 * ctx_dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VaeParams<S: Scalar> {
    dims: VaeDims,
    /// D → tanh(2D) → [μ̃ ; log σ̃²] (2·d_z).
    pub encoder: MlpParams<S>,
    /// d_z → tanh(2·d_ctx) → r (d_ctx).
    pub decoder: MlpParams<S>,
    /// The VAE-private prompt `V_VAE`.
    pub prompt: PromptContext<S>,
}

#[derive(Debug, Clone)]
pub struct EncodeTape<S> {
    mlp: MlpTape<S>,
    variance: RealVec<S>,
}

#[derive(Debug, Clone)]
pub struct DecodeTape<S> {
    mlp: MlpTape<S>,
    text: TextTape<S>,
}

/// Gradients for every learnable group.
#[derive(Debug, Clone, PartialEq)]
pub struct VaeGrads<S> {
    pub encoder: MlpGrads<S>,
    pub decoder: MlpGrads<S>,
    pub prompt: PromptContext<S>,
}

impl<S: Scalar> VaeGrads<S> {
    pub fn to_flat(&self) -> Vec<S> {
        let mut out = self.encoder.to_flat();
        out.extend(self.decoder.to_flat());
        out.extend_from_slice(self.prompt.as_slice());
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VaeLoss<S> {
    pub kl: S,
    pub reconstruction: S,
    pub total: S,
}

impl<S: Scalar> VaeParams<S> {
    pub fn init(dims: VaeDims, rng: &mut Rng) -> Result<Self> {
        let encoder = MlpParams::random(
            &[dims.feature_dim, dims.encoder_hidden, 2 * dims.latent_dim],
            &[Activation::Tanh, Activation::Identity],
            1.0,
            &mut rng.substream("encoder", 0),
        )?;
        let decoder = MlpParams::random(
            &[dims.latent_dim, dims.decoder_hidden, dims.ctx_dim],
            &[Activation::Tanh, Activation::Identity],
            1.0,
            &mut rng.substream("decoder", 0),
        )?;
        let prompt = PromptContext::random(
            dims.context_len,
            dims.ctx_dim,
            VAE_PROMPT_INIT_STD,
            &mut rng.substream("vae-prompt", 0),
        );
        Ok(Self {
            dims,
            encoder,
            decoder,
            prompt,
        })
    }

    pub fn dims(&self) -> VaeDims {
        self.dims
    }

    pub fn zero_grads(&self) -> VaeGrads<S> {
        VaeGrads {
            encoder: self.encoder.zero_grads(),
            decoder: self.decoder.zero_grads(),
            prompt: PromptContext::zeros(self.prompt.len(), self.prompt.dim()),
        }
    }

    pub fn param_count(&self) -> usize {
        self.encoder.param_count() + self.decoder.param_count() + self.prompt.as_slice().len()
    }

    pub fn to_flat(&self) -> Vec<S> {
        let mut out = self.encoder.to_flat();
        out.extend(self.decoder.to_flat());
        out.extend_from_slice(self.prompt.as_slice());
        out
    }

    pub fn set_flat(&mut self, flat: &[S]) -> Result<()> {
        check_dim("vae flat parameters", self.param_count(), flat.len())?;
        let (e, rest) = flat.split_at(self.encoder.param_count());
        let (d, p) = rest.split_at(self.decoder.param_count());
        self.encoder.set_flat(e)?;
        self.decoder.set_flat(d)?;
        self.prompt.as_mut_slice().copy_from_slice(p);
        Ok(())
    }

    /// `f ↦ (μ̃, σ̃²)` with `σ̃² = exp(log-variance head)`.
    pub fn vae_encode(&self, f: &[S]) -> Result<(RealVec<S>, RealVec<S>, EncodeTape<S>)> {
        check_dim("vae input feature", self.dims.feature_dim, f.len())?;
        let (out, mlp) = self.encoder.forward(f)?;
        let dz = self.dims.latent_dim;
        let mean = RealVec::from_slice(&out[..dz]);
        let variance: RealVec<S> = out[dz..].iter().map(|lv| lv.exp()).collect();
        if !variance.is_finite() || variance.iter().any(|&v| v <= S::zero()) {
            return Err(Error::NonFinite("vae encoder variance".into()));
        }
        Ok((
            mean,
            variance.clone(),
            EncodeTape { mlp, variance },
        ))
    }

    /// Pulls `(∂/∂μ̃, ∂/∂σ̃²)` back into encoder gradients.
    pub fn encode_backward(
        &self,
        tape: &EncodeTape<S>,
        mean_grad: &[S],
        variance_grad: &[S],
        grads: &mut MlpGrads<S>,
    ) -> Result<()> {
        check_dim("mean gradient", self.dims.latent_dim, mean_grad.len())?;
        check_dim("variance gradient", self.dims.latent_dim, variance_grad.len())?;
        let mut out_grad = mean_grad.to_vec();
        out_grad.extend(variance_grad.iter().zip(tape.variance.iter()).map(|(&g, &v)| g * v));
        self.encoder.backward_acc(&tape.mlp, &out_grad, Some(grads))?;
        Ok(())
    }

    /// `z ↦ f̃ = E_Txt({[V_VAE]_l + r(z)}, [CLS])`.
    pub fn vae_decode(
        &self,
        z: &[S],
        class_embedding: &[S],
        text_encoder: &ToyTextEncoder<S>,
    ) -> Result<(RealVec<S>, DecodeTape<S>)> {
        check_dim("latent code", self.dims.latent_dim, z.len())?;
        let (r, mlp) = self.decoder.forward(z)?;
        let context = self.prompt.with_bias(&r)?;
        let (f, text) = text_encoder.encode_text(&context, class_embedding)?;
        Ok((f, DecodeTape { mlp, text }))
    }

    /// Accumulates decoder and prompt gradients; returns `∂/∂z`.
    pub fn decode_backward(
        &self,
        tape: &DecodeTape<S>,
        feature_grad: &[S],
        text_encoder: &ToyTextEncoder<S>,
        grads: &mut VaeGrads<S>,
    ) -> Result<RealVec<S>> {
        let ctx_grad = text_encoder.encode_text_grad(&tape.text, feature_grad)?;
        grads.prompt.add_scaled(S::one(), &ctx_grad);
        let r_grad = ctx_grad.sum_vectors();
        self.decoder.backward_acc(&tape.mlp, &r_grad, Some(&mut grads.decoder))
    }

    /// `L_VAE` for one feature with fixed noise `eps`, with gradients
    /// accumulated into `grads`.
    pub fn loss_and_grads(
        &self,
        f: &[S],
        class_embedding: &[S],
        eps: &[S],
        lambda_r: S,
        text_encoder: &ToyTextEncoder<S>,
        grads: &mut VaeGrads<S>,
    ) -> Result<VaeLoss<S>> {
        let (mean, variance, etape) = self.vae_encode(f)?;
        let z = reparameterize_with(&mean, &variance, eps)?;
        let (f_rec, dtape) = self.vae_decode(&z, class_embedding, text_encoder)?;
        let (kl, kl_dmean, kl_dvar) = kl_to_standard_normal(&mean, &variance)?;
        let (rec, rec_grad) = reconstruction_loss(f, &f_rec)?;
        let feature_grad: Vec<S> = rec_grad.iter().map(|&g| g * lambda_r).collect();
        let z_grad = self.decode_backward(&dtape, &feature_grad, text_encoder, grads)?;
        let half = S::of(0.5);
        let mean_grad: Vec<S> = kl_dmean.iter().zip(z_grad.iter()).map(|(&a, &b)| a + b).collect();
        let var_grad: Vec<S> = kl_dvar
            .iter()
            .zip(z_grad.iter())
            .zip(eps)
            .zip(variance.iter())
            .map(|(((&a, &gz), &e), &v)| a + gz * e * half / v.sqrt())
            .collect();
        self.encode_backward(&etape, &mean_grad, &var_grad, &mut grads.encoder)?;
        Ok(VaeLoss {
            kl,
            reconstruction: rec,
            total: kl + lambda_r * rec,
        })
    }

    pub fn cast<T: Scalar>(&self) -> VaeParams<T> {
        VaeParams {
            dims: self.dims,
            encoder: self.encoder.cast(),
            decoder: self.decoder.cast(),
            prompt: self.prompt.cast(),
        }
    }
}

/// `z = μ̃ + σ̃ ⊙ ε` with `ε ~ N(0, I)` drawn from `rng`.
pub fn reparameterize<S: Scalar>(mean: &[S], variance: &[S], rng: &mut Rng) -> Result<RealVec<S>> {
    let eps: Vec<S> = (0..mean.len()).map(|_| S::of(rng.standard_normal())).collect();
    reparameterize_with(mean, variance, &eps)
}

/// `z = μ̃ + σ̃ ⊙ ε` for a given `ε`. Negative variances are floored at zero.
pub fn reparameterize_with<S: Scalar>(mean: &[S], variance: &[S], eps: &[S]) -> Result<RealVec<S>> {
    check_dim("reparameterize variance", mean.len(), variance.len())?;
    check_dim("reparameterize noise", mean.len(), eps.len())?;
    Ok(mean
        .iter()
        .zip(variance)
        .zip(eps)
        .map(|((&m, &v), &e)| m + v.max(S::zero()).sqrt() * e)
        .collect())
}

/// `KL(N(μ̃, σ̃²) ‖ N(0, I)) = ½ Σ (μ̃² + σ̃² − ln σ̃² − 1)` with gradients
/// in `μ̃` and `σ̃²`.
pub fn kl_to_standard_normal<S: Scalar>(mean: &[S], variance: &[S]) -> Result<(S, RealVec<S>, RealVec<S>)> {
    check_dim("kl variance", mean.len(), variance.len())?;
    if variance.iter().any(|&v| !(v > S::zero()) || !v.is_finite()) {
        return Err(Error::invalid("kl requires strictly positive, finite variances"));
    }
    let half = S::of(0.5);
    let mut loss = S::zero();
    for (&m, &v) in mean.iter().zip(variance) {
        let var_term = ((v - S::one()) - v.ln()).max(S::zero());
        loss += half * (m * m + var_term);
    }
    let dmean = mean.iter().copied().collect();
    let dvar = variance.iter().map(|&v| half * (S::one() - S::one() / v)).collect();
    Ok((loss, dmean, dvar))
}

/// `‖f − f̃‖₂` (not squared) and its gradient in `f̃`.
pub fn reconstruction_loss<S: Scalar>(f: &[S], f_rec: &[S]) -> Result<(S, RealVec<S>)> {
    check_dim("reconstruction target", f.len(), f_rec.len())?;
    let diff: Vec<S> = f_rec.iter().zip(f).map(|(&a, &b)| a - b).collect();
    let n = norm(&diff);
    if n < S::of(RECONSTRUCTION_CUSP) {
        return Ok((S::zero(), RealVec::zeros(f.len())));
    }
    Ok((n, diff.into_iter().map(|d| d / n).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VaeTrainConfig {
    pub latent_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Examples per step; a batch at least as large as the data is full-batch.
    pub batch_size: usize,
    /// Weight of the reconstruction term.
    pub lambda_r: f64,
    /// Start `V_VAE` from the session's trained classification prompt
    /// instead of a fresh random draw.
    pub warm_start: bool,
}

impl Default for VaeTrainConfig {
    fn default() -> Self {
        Self {
            latent_dim: 8,
            epochs: 1000,
            learning_rate: 0.1,
            momentum: 0.9,
            batch_size: usize::MAX,
            lambda_r: 1.0,
            warm_start: false,
        }
    }
}

impl VaeTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.latent_dim == 0 {
            return Err(Error::invalid("vae epochs, batch size and latent dim must be >= 1"));
        }
        if !(self.learning_rate > 0.0) || !(self.lambda_r >= 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid("vae needs lr > 0, lambda_r >= 0, momentum in [0, 1)"));
        }
        Ok(())
    }
}

/// One training example: a real feature and its class-name embedding.
#[derive(Debug, Clone, Copy)]
pub struct VaeExample<'a, S> {
    pub feature: &'a [S],
    pub class_embedding: &'a [S],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VaeTrainLog {
    pub epoch_loss: Vec<f64>,
    pub epoch_kl: Vec<f64>,
    pub epoch_reconstruction: Vec<f64>,
}

/// Trains a freshly initialized VAE on `data`. Latent noise is redrawn per
/// example per epoch. The text encoder is only read. With
/// `config.warm_start`, `V_VAE` starts as a copy of `prompt`, which is then
/// required.
pub fn train_vae<S: Scalar>(
    data: &[VaeExample<'_, S>],
    config: &VaeTrainConfig,
    text_encoder: &ToyTextEncoder<S>,
    prompt: Option<&PromptContext<S>>,
    rng: &Rng,
) -> Result<(VaeParams<S>, VaeTrainLog)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("vae training features"));
    }
    let td = text_encoder.dims();
    let dims = VaeDims::new(td.feature_dim, config.latent_dim, td.context_len, td.ctx_dim);
    let mut params = VaeParams::init(dims, &mut rng.substream("vae-init", 0))?;
    if config.warm_start {
        let p = prompt.ok_or_else(|| Error::invalid("warm-started vae needs the classification prompt"))?;
        if !p.same_shape(&params.prompt) {
            return Err(Error::invalid("classification prompt shape differs from the vae prompt"));
        }
        params.prompt.as_mut_slice().copy_from_slice(p.as_slice());
    }
    let mut opt = SgdMomentum::new(S::of(config.learning_rate), S::of(config.momentum), params.param_count());
    let lambda_r = S::of(config.lambda_r);
    let batch = config.batch_size.min(data.len());
    let mut log = VaeTrainLog::default();
    let mut order: Vec<usize> = (0..data.len()).collect();

    for epoch in 0..config.epochs {
        rng.substream("vae-shuffle", epoch as u64).shuffle(&mut order);
        let mut noise = rng.substream("vae-noise", epoch as u64);
        let (mut sum_total, mut sum_kl, mut sum_rec) = (0.0, 0.0, 0.0);
        for (b, chunk) in order.chunks(batch).enumerate() {
            let mut grads = params.zero_grads();
            for &i in chunk {
                let ex = &data[i];
                let eps: Vec<S> = (0..dims.latent_dim).map(|_| S::of(noise.standard_normal())).collect();
                let loss = params.loss_and_grads(ex.feature, ex.class_embedding, &eps, lambda_r, text_encoder, &mut grads)?;
                if !loss.total.is_finite() {
                    return Err(Error::NonFinite(format!("vae loss at epoch {epoch}, batch {b}")));
                }
                sum_total += loss.total.to_f64_lossy();
                sum_kl += loss.kl.to_f64_lossy();
                sum_rec += loss.reconstruction.to_f64_lossy();
            }
            let inv = S::one() / S::of_usize(chunk.len());
            let mut flat_grads = grads.to_flat();
            flat_grads.iter_mut().for_each(|g| *g *= inv);
            let mut flat = params.to_flat();
            opt.step(&mut flat, &flat_grads)
                .map_err(|e| Error::NonFinite(format!("vae epoch {epoch}, batch {b}: {e}")))?;
            params.set_flat(&flat)?;
        }
        let n = data.len() as f64;
        log.epoch_loss.push(sum_total / n);
        log.epoch_kl.push(sum_kl / n);
        log.epoch_reconstruction.push(sum_rec / n);
    }
    Ok((params, log))
}

/// `M` features decoded from `z ~ N(0, I)` with the given class name.
pub fn synthesize_features<S: Scalar>(
    params: &VaeParams<S>,
    class_embedding: &[S],
    count: usize,
    text_encoder: &ToyTextEncoder<S>,
    rng: &mut Rng,
) -> Result<Vec<RealVec<S>>> {
    (0..count)
        .map(|_| {
            let z: Vec<S> = (0..params.dims.latent_dim).map(|_| S::of(rng.standard_normal())).collect();
            params.vae_decode(&z, class_embedding, text_encoder).map(|(f, _)| f)
        })
        .collect()
}

/// Checkpoint layout (little-endian): magic `FSVA`, version u16 = 1, then
/// u16 dims D, d_z, L, d_ctx, encoder hidden, decoder hidden, then the f32
/// parameter payload (encoder, decoder, private prompt).
pub fn encode_vae<S: Scalar>(params: &VaeParams<S>) -> Result<Vec<u8>> {
    let d = params.dims;
    let mut w = ByteWriter::new();
    w.bytes(VAE_MAGIC);
    w.u16(VAE_VERSION);
    for (what, v) in [
        ("feature dim", d.feature_dim),
        ("latent dim", d.latent_dim),
        ("context length", d.context_len),
        ("context width", d.ctx_dim),
        ("encoder hidden", d.encoder_hidden),
        ("decoder hidden", d.decoder_hidden),
    ] {
        w.u16(dim_u16(what, v)?);
    }
    w.f32s(params.to_flat().iter().map(|x| x.to_f64_lossy() as f32));
    Ok(w.finish())
}

pub fn decode_vae(bytes: &[u8]) -> Result<VaeParams<f64>> {
    let mut r = ByteReader::new(bytes);
    r.magic(VAE_MAGIC)?;
    r.version(VAE_VERSION)?;
    let mut next = |what| r.u16(what).map(usize::from);
    let dims = VaeDims {
        feature_dim: next("feature dim")?,
        latent_dim: next("latent dim")?,
        context_len: next("context length")?,
        ctx_dim: next("context width")?,
        encoder_hidden: next("encoder hidden")?,
        decoder_hidden: next("decoder hidden")?,
    };
    if [dims.feature_dim, dims.latent_dim, dims.context_len, dims.ctx_dim, dims.encoder_hidden, dims.decoder_hidden]
        .contains(&0)
    {
        return Err(Error::format(6, "zero dimension in vae header"));
    }
    let mut params = VaeParams::<f64>::init(dims, &mut Rng::new(0))?;
    let payload = r.f32s(params.param_count(), "vae parameters")?;
    r.expect_end()?;
    params.set_flat(&payload.into_iter().map(f64::from).collect::<Vec<_>>())?;
    Ok(params)
}

pub fn save_vae<S: Scalar>(params: &VaeParams<S>, path: &Path) -> Result<()> {
    fs::write(path, encode_vae(params)?)?;
    Ok(())
}

pub fn load_vae(path: &Path) -> Result<VaeParams<f64>> {
    decode_vae(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::{class_name_embedding, TextEncoderDims, EncoderInit};

    fn setup() -> (ToyTextEncoder<f64>, VaeParams<f64>) {
        let enc = ToyTextEncoder::new(TextEncoderDims::new(2, 3, 3, 8), EncoderInit::default(), 3).unwrap();
        let vae = VaeParams::init(VaeDims::new(8, 4, 2, 3), &mut Rng::new(4)).unwrap();
        (enc, vae)
    }

    #[test]
    fn kl_closed_forms() {
        let (kl, dm, dv) = kl_to_standard_normal(&[0.0f64, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(kl, 0.0);
        assert!(dm.iter().chain(dv.iter()).all(|&g| g == 0.0));
        let (kl, _, _) = kl_to_standard_normal(&[1.0f64, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(kl, 0.5);
        assert!(kl_to_standard_normal(&[0.0f64], &[0.0]).is_err());
    }

    #[test]
    fn reconstruction_closed_forms() {
        let (l, g) = reconstruction_loss(&[1.0f64, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|&x| x == 0.0));
        let (l, _) = reconstruction_loss(&[1.0f64, 0.0], &[0.0, 1.0]).unwrap();
        assert!((l - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn reparameterize_limits() {
        let z = reparameterize_with(&[0.5f64, -1.0], &[0.0, 0.0], &[3.0, -2.0]).unwrap();
        assert_eq!(z.as_slice(), &[0.5, -1.0]);
        let z = reparameterize_with(&[0.5f64, -1.0], &[4.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(z.as_slice(), &[2.5, 0.0]);
    }

    #[test]
    fn encode_is_deterministic_with_positive_variance() {
        let (_, vae) = setup();
        let f: RealVec<f64> = (0..8).map(|i| (i as f64 - 3.5) / 8.0).collect();
        let (m1, v1, _) = vae.vae_encode(&f).unwrap();
        let (m2, v2, _) = vae.vae_encode(&f).unwrap();
        assert_eq!((m1, v1.clone()), (m2, v2));
        assert!(v1.iter().all(|&v| v > 0.0));
        assert!(vae.vae_encode(&f[..4]).is_err());
    }

    #[test]
    fn zero_bias_decode_matches_plain_prompt() {
        let (enc, mut vae) = setup();
        // Zero the decoder's last layer so r = 0.
        let last = vae.decoder.layers().len() - 1;
        let layer = &mut vae.decoder.layers_mut()[last];
        layer.weight.data_mut().iter_mut().for_each(|w| *w = 0.0);
        layer.bias.iter_mut().for_each(|b| *b = 0.0);
        let emb: RealVec<f64> = class_name_embedding("owl", 3, 0);
        let (f, _) = vae.vae_decode(&[0.3, -0.2, 0.1, 0.9], &emb, &enc).unwrap();
        let direct = enc.encode(&vae.prompt, &emb).unwrap();
        assert_eq!(f, direct);
        assert!((f.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn synthesize_count_and_norm() {
        let (enc, vae) = setup();
        let emb: RealVec<f64> = class_name_embedding("owl", 3, 0);
        assert!(synthesize_features(&vae, &emb, 0, &enc, &mut Rng::new(1)).unwrap().is_empty());
        let feats = synthesize_features(&vae, &emb, 10, &enc, &mut Rng::new(1)).unwrap();
        assert_eq!(feats.len(), 10);
        assert!(feats.iter().all(|f| (f.norm() - 1.0).abs() < 1e-9));
        assert!(feats.iter().any(|f| f != &feats[0]));
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact_at_f32() {
        let (_, vae) = setup();
        let bytes = encode_vae(&vae).unwrap();
        let back = decode_vae(&bytes).unwrap();
        assert_eq!(encode_vae(&back).unwrap(), bytes);
        let mut bad = bytes.clone();
        bad[1] = b'x';
        assert!(decode_vae(&bad).is_err());
    }
}
