use crate::error::{check_dim, Error, Result};
use crate::Scalar;

/// SGD with momentum: `v ← μ·v + g; θ ← θ − lr·v`. Constant learning rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdMomentum<S> {
    pub learning_rate: S,
    pub momentum: S,
    velocity: Vec<S>,
}

impl<S: Scalar> SgdMomentum<S> {
    pub fn new(learning_rate: S, momentum: S, param_count: usize) -> Self {
        Self {
            learning_rate,
            momentum,
            velocity: vec![S::zero(); param_count],
        }
    }

    pub fn velocity(&self) -> &[S] {
        &self.velocity
    }

    /// One update in place. A non-finite gradient aborts before anything is
    /// written.
    pub fn step(&mut self, params: &mut [S], grads: &[S]) -> Result<()> {
        check_dim("optimizer parameters", self.velocity.len(), params.len())?;
        check_dim("optimizer gradients", self.velocity.len(), grads.len())?;
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient entry {i}")));
        }
        for ((v, p), &g) in self.velocity.iter_mut().zip(params.iter_mut()).zip(grads) {
            *v = self.momentum * *v + g;
            *p -= self.learning_rate * *v;
        }
        Ok(())
    }
}

/// Free-function form of [`SgdMomentum::step`].
pub fn sgd_momentum_step<S: Scalar>(state: &mut SgdMomentum<S>, params: &mut [S], grads: &[S]) -> Result<()> {
    state.step(params, grads)
}
