//! Small fully-connected network with hand-derived backpropagation.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{check_dim, Error, Result};
use crate::numerics::{RealMat, RealVec, Rng};
use crate::Scalar;

static NEXT_PARAMS_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_PARAMS_ID.fetch_add(1, Ordering::Relaxed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    fn apply<S: Scalar>(self, x: S) -> S {
        match self {
            Activation::Identity => x,
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(S::zero()),
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output<S: Scalar>(self, y: S) -> S {
        match self {
            Activation::Identity => S::one(),
            Activation::Tanh => S::one() - y * y,
            Activation::Relu => {
                if y > S::zero() {
                    S::one()
                } else {
                    S::zero()
                }
            }
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Tanh => 1,
            Activation::Relu => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Tanh),
            2 => Some(Activation::Relu),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer<S> {
    pub weight: RealMat<S>,
    pub bias: RealVec<S>,
    pub activation: Activation,
}

impl<S: Scalar> Layer<S> {
    pub fn new(weight: RealMat<S>, bias: RealVec<S>, activation: Activation) -> Result<Self> {
        check_dim("layer bias", weight.rows(), bias.dim())?;
        Ok(Self {
            weight,
            bias,
            activation,
        })
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }
}

/// Layer stack. Each instance carries an identity and a mutation counter so
/// a tape can be matched to the exact parameters that produced it.
#[derive(Debug)]
pub struct MlpParams<S> {
    layers: Vec<Layer<S>>,
    id: u64,
    version: u64,
}

impl<S: Scalar> Clone for MlpParams<S> {
    fn clone(&self) -> Self {
        Self {
            layers: self.layers.clone(),
            id: fresh_id(),
            version: 0,
        }
    }
}

impl<S: Scalar> PartialEq for MlpParams<S> {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

/// Everything `backward` needs from one forward evaluation.
#[derive(Debug, Clone)]
pub struct MlpTape<S> {
    owner: (u64, u64),
    /// Input to each layer.
    inputs: Vec<Vec<S>>,
    /// Post-activation output of each layer.
    outputs: Vec<Vec<S>>,
}

/// Gradients shaped exactly like [`MlpParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads<S> {
    pub weights: Vec<RealMat<S>>,
    pub biases: Vec<RealVec<S>>,
}

impl<S: Scalar> MlpParams<S> {
    pub fn new(layers: Vec<Layer<S>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("mlp layers"));
        }
        for pair in layers.windows(2) {
            check_dim("mlp layer chain", pair[0].out_dim(), pair[1].in_dim())?;
        }
        Ok(Self {
            layers,
            id: fresh_id(),
            version: 0,
        })
    }

    /// Random init: weights ~ N(0, gain² / fan_in), zero biases.
    pub fn random(dims: &[usize], activations: &[Activation], gain: f64, rng: &mut Rng) -> Result<Self> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(Error::invalid(format!(
                "mlp needs dims.len() = activations.len() + 1 >= 2, got {} dims and {} activations",
                dims.len(),
                activations.len()
            )));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::invalid("mlp dimensions must be positive"));
        }
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &act)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let std = gain / (fan_in as f64).sqrt();
                let data = (0..fan_in * fan_out).map(|_| S::of(rng.normal(0.0, std))).collect();
                Layer::new(
                    RealMat::from_vec(fan_out, fan_in, data)?,
                    RealVec::zeros(fan_out),
                    act,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer<S>] {
        &self.layers
    }

    /// Mutable access. Invalidates every tape produced so far.
    pub fn layers_mut(&mut self) -> &mut [Layer<S>] {
        self.version += 1;
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.data().len() + l.bias.dim())
            .sum()
    }

    /// Parameters flattened layer by layer: weight (row-major) then bias.
    pub fn to_flat(&self) -> Vec<S> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.weight.data());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[S]) -> Result<()> {
        check_dim("mlp flat parameters", self.param_count(), flat.len())?;
        let mut offset = 0;
        for l in self.layers_mut() {
            let n = l.weight.data().len();
            l.weight.data_mut().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
            let b = l.bias.dim();
            l.bias.copy_from_slice(&flat[offset..offset + b]);
            offset += b;
        }
        Ok(())
    }

    pub fn forward(&self, input: &[S]) -> Result<(RealVec<S>, MlpTape<S>)> {
        check_dim("mlp input", self.input_dim(), input.len())?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut x = input.to_vec();
        for layer in &self.layers {
            let mut y = vec![S::zero(); layer.out_dim()];
            layer.weight.matvec_into(&x, &mut y);
            for (yi, &bi) in y.iter_mut().zip(layer.bias.iter()) {
                *yi = layer.activation.apply(*yi + bi);
            }
            inputs.push(std::mem::replace(&mut x, y.clone()));
            outputs.push(y);
        }
        let tape = MlpTape {
            owner: (self.id, self.version),
            inputs,
            outputs,
        };
        Ok((RealVec::from_vec(x), tape))
    }

    /// Output only, no tape.
    pub fn eval(&self, input: &[S]) -> Result<RealVec<S>> {
        self.forward(input).map(|(y, _)| y)
    }

    pub fn zero_grads(&self) -> MlpGrads<S> {
        MlpGrads {
            weights: self
                .layers
                .iter()
                .map(|l| RealMat::zeros(l.out_dim(), l.in_dim()))
                .collect(),
            biases: self.layers.iter().map(|l| RealVec::zeros(l.out_dim())).collect(),
        }
    }

    /// Backpropagates `output_grad`, returning parameter and input gradients.
    pub fn backward(&self, tape: &MlpTape<S>, output_grad: &[S]) -> Result<(MlpGrads<S>, RealVec<S>)> {
        let mut grads = self.zero_grads();
        let input_grad = self.backward_acc(tape, output_grad, Some(&mut grads))?;
        Ok((grads, input_grad))
    }

    /// Like [`backward`](Self::backward) but accumulates into `grads`
    /// (skipped when `None`, for frozen networks).
    pub fn backward_acc(
        &self,
        tape: &MlpTape<S>,
        output_grad: &[S],
        mut grads: Option<&mut MlpGrads<S>>,
    ) -> Result<RealVec<S>> {
        if tape.owner != (self.id, self.version) || tape.outputs.len() != self.layers.len() {
            return Err(Error::StaleTape);
        }
        check_dim("mlp output gradient", self.output_dim(), output_grad.len())?;
        let mut delta = output_grad.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            for (d, &y) in delta.iter_mut().zip(&tape.outputs[i]) {
                *d *= layer.activation.derivative_from_output(y);
            }
            if let Some(g) = grads.as_deref_mut() {
                g.weights[i].add_outer(&delta, &tape.inputs[i]);
                for (gb, &d) in g.biases[i].iter_mut().zip(&delta) {
                    *gb += d;
                }
            }
            let mut prev = vec![S::zero(); layer.in_dim()];
            layer.weight.matvec_t_acc(&delta, &mut prev);
            delta = prev;
        }
        Ok(RealVec::from_vec(delta))
    }

    pub fn cast<T: Scalar>(&self) -> MlpParams<T> {
        MlpParams {
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    weight: l.weight.cast(),
                    bias: l.bias.cast(),
                    activation: l.activation,
                })
                .collect(),
            id: fresh_id(),
            version: 0,
        }
    }
}

impl<S: Scalar> MlpGrads<S> {
    pub fn to_flat(&self) -> Vec<S> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.data());
            out.extend_from_slice(b);
        }
        out
    }

    pub fn scale(&mut self, k: S) {
        for w in &mut self.weights {
            w.data_mut().iter_mut().for_each(|x| *x *= k);
        }
        for b in &mut self.biases {
            b.iter_mut().for_each(|x| *x *= k);
        }
    }

    pub fn add_assign(&mut self, other: &MlpGrads<S>) {
        for (w, o) in self.weights.iter_mut().zip(&other.weights) {
            w.data_mut().iter_mut().zip(o.data()).for_each(|(a, &b)| *a += b);
        }
        for (b, o) in self.biases.iter_mut().zip(&other.biases) {
            b.iter_mut().zip(o.iter()).for_each(|(a, &c)| *a += c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_net(n: usize, act: Activation) -> MlpParams<f64> {
        MlpParams::new(vec![Layer::new(RealMat::identity(n), RealVec::zeros(n), act).unwrap()]).unwrap()
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let net = identity_net(2, Activation::Identity);
        let (y, tape) = net.forward(&[1.0, 2.0]).unwrap();
        assert_eq!(y.as_slice(), &[1.0, 2.0]);
        let (_, gx) = net.backward(&tape, &[0.3, -0.7]).unwrap();
        assert_eq!(gx.as_slice(), &[0.3, -0.7]);
    }

    #[test]
    fn relu_clamps_negative() {
        let net = identity_net(2, Activation::Relu);
        assert_eq!(net.eval(&[-1.0, 3.0]).unwrap().as_slice(), &[0.0, 3.0]);
    }

    #[test]
    fn zero_output_grad_gives_zero_gradients() {
        let mut rng = Rng::new(3);
        let net = MlpParams::<f64>::random(&[4, 5, 3], &[Activation::Tanh, Activation::Identity], 1.0, &mut rng).unwrap();
        let (_, tape) = net.forward(&[0.1, -0.2, 0.3, 0.4]).unwrap();
        let (g, gx) = net.backward(&tape, &[0.0; 3]).unwrap();
        assert!(g.to_flat().iter().all(|&x| x == 0.0));
        assert!(gx.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn dimension_mismatch_names_dims() {
        let net = identity_net(3, Activation::Identity);
        match net.forward(&[1.0, 2.0]) {
            Err(Error::DimensionMismatch { expected: 3, actual: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stale_tape_is_rejected() {
        let mut rng = Rng::new(4);
        let mut net = MlpParams::<f64>::random(&[2, 2], &[Activation::Tanh], 1.0, &mut rng).unwrap();
        let (_, tape) = net.forward(&[0.5, 0.5]).unwrap();
        net.layers_mut()[0].bias[0] = 0.1;
        assert!(matches!(net.backward(&tape, &[1.0, 1.0]), Err(Error::StaleTape)));
        let other = net.clone();
        let (_, tape) = net.forward(&[0.5, 0.5]).unwrap();
        assert!(matches!(other.backward(&tape, &[1.0, 1.0]), Err(Error::StaleTape)));
    }

    #[test]
    fn layer_chain_is_validated() {
        let a = Layer::new(RealMat::<f64>::zeros(3, 2), RealVec::zeros(3), Activation::Tanh).unwrap();
        let b = Layer::new(RealMat::<f64>::zeros(1, 4), RealVec::zeros(1), Activation::Tanh).unwrap();
        assert!(MlpParams::new(vec![a, b]).is_err());
    }

    #[test]
    fn flat_round_trip() {
        let mut rng = Rng::new(8);
        let mut net = MlpParams::<f64>::random(&[3, 4, 2], &[Activation::Relu, Activation::Identity], 1.0, &mut rng).unwrap();
        let flat = net.to_flat();
        let doubled: Vec<f64> = flat.iter().map(|x| 2.0 * x).collect();
        net.set_flat(&doubled).unwrap();
        assert_eq!(net.to_flat(), doubled);
    }
}
