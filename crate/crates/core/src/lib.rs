//! Few-shot class-incremental learning by prompt tuning over a frozen text
//! encoder, with per-class Gaussian pseudo-feature replay.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); training and
//! the benchmark protocol run in `f64`. Aliases for the common concrete types
//! live at the crate root.

mod binio;
mod error;
mod scalar;

pub mod distributions;
pub mod encoders;
pub mod numerics;
pub mod prompt;
pub mod protocol;
pub mod vae;

use std::fmt;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Identifier of a class, also its line index in a class-name file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ClassId(pub u32);

impl ClassId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for ClassId {
    fn from(v: u32) -> Self {
        ClassId(v)
    }
}

pub type Vector = numerics::RealVec<f64>;
pub type Vector32 = numerics::RealVec<f32>;
pub type Matrix = numerics::RealMat<f64>;
pub type Mlp = numerics::MlpParams<f64>;
pub type TextEncoder = encoders::ToyTextEncoder<f64>;
pub type World = encoders::SyntheticWorld<f64>;
pub type Feature = encoders::FeatureRecord<f64>;
pub type Context = prompt::PromptContext<f64>;
pub type Head = prompt::ClassifierHead<f64>;
pub type Distribution = distributions::GaussianClassDistribution<f64>;
pub type Store = distributions::DistributionStore<f64>;
pub type Vae = vae::VaeParams<f64>;
