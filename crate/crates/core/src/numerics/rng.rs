//! Counter-based, seedable random source with labeled sub-streams.
//!
//! Every stream is a ChaCha8 keystream keyed by a 64-bit stream key. Child
//! streams are derived from the parent's *key* (never its position), so the
//! draws one component makes cannot shift another component's stream.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numerics::RealVec;
use crate::Scalar;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a. Stable across platforms and compiler versions.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child key from `(key, label, index)`.
pub fn derive_key(key: u64, label: &str, index: u64) -> u64 {
    let a = mix64(key ^ 0x9e37_79b9_7f4a_7c15);
    let b = mix64(a ^ fnv1a(label.as_bytes()));
    mix64(b ^ mix64(index.wrapping_add(0x632b_e59b_d9b4_e019)))
}

#[derive(Debug, Clone)]
pub struct Rng {
    key: u64,
    stream: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            key: seed,
            stream: ChaCha8Rng::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    /// The key this stream was created from.
    pub fn key(&self) -> u64 {
        self.key
    }

    /// Independent child stream keyed by `(label, index)`.
    pub fn substream(&self, label: &str, index: u64) -> Rng {
        Rng::new(derive_key(self.key, label, index))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.stream.next_u64()
    }

    /// Uniform in the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        // Lemire's nearly-divisionless method with rejection.
        let n = n as u64;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            let lo = m as u64;
            if lo >= n.wrapping_neg() % n {
                return (m >> 64) as usize;
            }
        }
    }

    /// One standard normal draw (Box–Muller, pairs cached).
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        mean + std * self.standard_normal()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct indices from `0..n`, in draw order. Requires `k <= n`.
    pub fn sample_without_replacement(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}

/// `n` i.i.d. standard normal draws.
pub fn rng_standard_normal<S: Scalar>(rng: &mut Rng, n: usize) -> RealVec<S> {
    (0..n).map(|_| S::of(rng.standard_normal())).collect()
}
