use crate::error::{check_dim, Error, Result};
use crate::numerics::Rng;
use crate::Scalar;

/// Where a context's values came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContextInit {
    Zeros,
    Random { key: u64 },
    CarriedFrom { session: usize },
    Loaded,
}

/// `L` learnable context vectors of width `d_ctx`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptContext<S> {
    len: usize,
    dim: usize,
    data: Vec<S>,
    init: ContextInit,
}

impl<S: Scalar> PromptContext<S> {
    pub fn zeros(len: usize, dim: usize) -> Self {
        Self {
            len,
            dim,
            data: vec![S::zero(); len * dim],
            init: ContextInit::Zeros,
        }
    }

    /// Entries i.i.d. N(0, std²).
    pub fn random(len: usize, dim: usize, std: f64, rng: &mut Rng) -> Self {
        let key = rng.key();
        Self {
            len,
            dim,
            data: (0..len * dim).map(|_| S::of(rng.normal(0.0, std))).collect(),
            init: ContextInit::Random { key },
        }
    }

    pub fn from_vec(len: usize, dim: usize, data: Vec<S>) -> Result<Self> {
        if len == 0 || dim == 0 {
            return Err(Error::invalid("prompt context needs positive length and width"));
        }
        check_dim("prompt context data", len * dim, data.len())?;
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("prompt context".into()));
        }
        Ok(Self {
            len,
            dim,
            data,
            init: ContextInit::Loaded,
        })
    }

    /// Number of context vectors `L`.
    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Width `d_ctx` of each context vector.
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn init(&self) -> ContextInit {
        self.init
    }

    pub fn with_init(mut self, init: ContextInit) -> Self {
        self.init = init;
        self
    }

    pub fn vector(&self, l: usize) -> &[S] {
        &self.data[l * self.dim..(l + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.len == other.len && self.dim == other.dim
    }

    /// `{[V]_l + r}`: adds one shared bias to every context vector.
    pub fn with_bias(&self, r: &[S]) -> Result<Self> {
        check_dim("context bias", self.dim, r.len())?;
        let mut out = self.clone();
        for row in out.data.chunks_exact_mut(self.dim) {
            for (x, &b) in row.iter_mut().zip(r) {
                *x += b;
            }
        }
        Ok(out)
    }

    /// Sum over the `L` vectors; the gradient of a broadcast bias.
    pub fn sum_vectors(&self) -> Vec<S> {
        let mut out = vec![S::zero(); self.dim];
        for row in self.data.chunks_exact(self.dim) {
            for (o, &x) in out.iter_mut().zip(row) {
                *o += x;
            }
        }
        out
    }

    pub fn add_scaled(&mut self, k: S, other: &Self) {
        debug_assert!(self.same_shape(other));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += k * b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn cast<T: Scalar>(&self) -> PromptContext<T> {
        PromptContext {
            len: self.len,
            dim: self.dim,
            data: self.data.iter().map(|&x| T::of(x.to_f64_lossy())).collect(),
            init: self.init,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bias_broadcasts_over_every_vector() {
        let ctx = PromptContext::from_vec(2, 2, vec![1.0f64, 2.0, 3.0, 4.0]).unwrap();
        let biased = ctx.with_bias(&[10.0, 20.0]).unwrap();
        assert_eq!(biased.as_slice(), &[11.0, 22.0, 13.0, 24.0]);
        assert_eq!(ctx.sum_vectors(), vec![4.0, 6.0]);
    }
}
