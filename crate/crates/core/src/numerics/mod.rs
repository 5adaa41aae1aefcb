//! Dense kernels, a small MLP with manual backprop, losses, and the random
//! source everything else builds on.

mod linalg;
mod loss;
mod mlp;
mod rng;

pub use linalg::{axpy, dot, norm, RealMat, RealVec};
pub use loss::{
    cosine_similarity, cosine_with_grad, l2_normalize, l2_normalize_backward, softmax,
    softmax_cross_entropy, CosineGrad,
};
pub use mlp::{Activation, Layer, MlpGrads, MlpParams, MlpTape};
pub use rng::{derive_key, fnv1a, rng_standard_normal, Rng};
