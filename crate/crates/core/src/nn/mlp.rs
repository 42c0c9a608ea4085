//! Dense layers, multilayer perceptrons, and their reverse-mode gradients.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    #[inline]
    fn apply<T: Scalar>(self, v: T) -> T {
        match self {
            Activation::Relu => v.max(T::zero()),
            Activation::Linear => v,
        }
    }

    /// Derivative expressed through the layer output.
    #[inline]
    fn derivative_from_output<T: Scalar>(self, out: T) -> T {
        match self {
            Activation::Relu => {
                if out > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Linear => T::one(),
        }
    }
}

/// `y = activation(x W + b)` with `W` stored as `in x out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DenseLayer<T> {
    pub(crate) weights: Matrix<T>,
    pub(crate) bias: Vec<T>,
    pub(crate) activation: Activation,
}

impl<T: Scalar> DenseLayer<T> {
    pub fn new(weights: Matrix<T>, bias: Vec<T>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.cols() {
            return Err(Error::dims("DenseLayer bias", weights.cols(), bias.len()));
        }
        if bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("layer bias".into()));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng + ?Sized>(
        fan_in: usize,
        fan_out: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = T::of((6.0 / (fan_in + fan_out) as f64).sqrt());
        let two = T::of(2.0);
        let data = (0..fan_in * fan_out)
            .map(|_| (two * T::unit(rng) - T::one()) * limit)
            .collect();
        Self {
            weights: Matrix::from_vec_unchecked(fan_in, fan_out, data),
            bias: vec![T::zero(); fan_out],
            activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn weights(&self) -> &Matrix<T> {
        &self.weights
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn forward(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        let mut out = x.matmul(&self.weights)?;
        let act = self.activation;
        for r in 0..out.rows() {
            for (v, &b) in out.row_mut(r).iter_mut().zip(&self.bias) {
                *v = act.apply(*v + b);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Mlp<T> {
    layers: Vec<DenseLayer<T>>,
}

/// Every layer's output from a forward pass; entry 0 is the input batch.
#[derive(Debug, Clone)]
pub struct Activations<T> {
    outputs: Vec<Matrix<T>>,
}

impl<T: Scalar> Activations<T> {
    pub fn output(&self) -> &Matrix<T> {
        self.outputs.last().expect("at least the input is stored")
    }

    pub fn input(&self) -> &Matrix<T> {
        &self.outputs[0]
    }

    pub fn layer_outputs(&self) -> &[Matrix<T>] {
        &self.outputs[1..]
    }

    pub fn into_output(mut self) -> Matrix<T> {
        self.outputs.pop().expect("at least the input is stored")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads<T> {
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
}

/// Gradient of a scalar loss with respect to every parameter of an [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads<T> {
    pub layers: Vec<LayerGrads<T>>,
}

impl<T: Scalar> MlpGrads<T> {
    pub fn zeros_like(mlp: &Mlp<T>) -> Self {
        Self {
            layers: mlp
                .layers
                .iter()
                .map(|l| LayerGrads {
                    weights: Matrix::zeros(l.input_dim(), l.output_dim()),
                    bias: vec![T::zero(); l.output_dim()],
                })
                .collect(),
        }
    }

    pub fn values(&self) -> impl Iterator<Item = T> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.data().iter().chain(l.bias.iter()).copied())
    }

    pub fn is_all_zero(&self) -> bool {
        self.values().all(|v| v == T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(|v| v.is_finite())
    }
}

impl<T: Scalar> Mlp<T> {
    /// Checks that consecutive layers chain.
    pub fn from_layers(layers: Vec<DenseLayer<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig("an MLP needs at least one layer".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::dims(
                    "Mlp layer chain",
                    pair[0].output_dim(),
                    format!("{} (layer {})", pair[1].input_dim(), i + 1),
                ));
            }
        }
        Ok(Self { layers })
    }

    /// `dims = [in, h1, ..., out]`. Hidden layers use `hidden`, the last layer
    /// uses `output`.
    pub fn glorot<R: Rng + ?Sized>(
        dims: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidConfig(format!("bad layer dims {dims:?}")));
        }
        let n = dims.len() - 1;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i + 1 == n { output } else { hidden };
                DenseLayer::glorot(w[0], w[1], act, rng)
            })
            .collect();
        Self::from_layers(layers)
    }

    pub fn layers(&self) -> &[DenseLayer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer<T>] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.data().len() + l.bias.len())
            .sum()
    }

    pub fn forward(&self, batch: &Matrix<T>) -> Result<Activations<T>> {
        if batch.cols() != self.input_dim() {
            return Err(Error::dims("Mlp::forward input", self.input_dim(), batch.cols()));
        }
        let mut outputs = Vec::with_capacity(self.layers.len() + 1);
        outputs.push(batch.clone());
        for layer in &self.layers {
            let next = layer.forward(outputs.last().expect("non-empty"))?;
            outputs.push(next);
        }
        Ok(Activations { outputs })
    }

    /// Output only.
    pub fn predict(&self, batch: &Matrix<T>) -> Result<Matrix<T>> {
        Ok(self.forward(batch)?.into_output())
    }

    /// Back-propagates `output_grad` (dL/d output) through the stored
    /// activations. Returns parameter gradients and dL/d input.
    pub fn backward(
        &self,
        acts: &Activations<T>,
        output_grad: &Matrix<T>,
    ) -> Result<(MlpGrads<T>, Matrix<T>)> {
        if acts.outputs.len() != self.layers.len() + 1 {
            return Err(Error::dims(
                "Mlp::backward activations",
                self.layers.len() + 1,
                acts.outputs.len(),
            ));
        }
        if output_grad.shape() != acts.output().shape() {
            return Err(Error::dims(
                "Mlp::backward output grad",
                format!("{:?}", acts.output().shape()),
                format!("{:?}", output_grad.shape()),
            ));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = output_grad.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let out = &acts.outputs[i + 1];
            let inp = &acts.outputs[i];
            if out.cols() != layer.output_dim() || inp.cols() != layer.input_dim() {
                return Err(Error::dims(
                    "Mlp::backward stored activation",
                    layer.output_dim(),
                    out.cols(),
                ));
            }
            let mut delta = upstream;
            if layer.activation != Activation::Linear {
                for (d, &o) in delta.data_mut().iter_mut().zip(out.data()) {
                    *d *= layer.activation.derivative_from_output(o);
                }
            }
            let dw = inp.t_matmul(&delta)?;
            let db = delta.column_sums();
            upstream = delta.matmul_t(&layer.weights)?;
            grads.push(LayerGrads {
                weights: dw,
                bias: db,
            });
        }
        grads.reverse();
        Ok((MlpGrads { layers: grads }, upstream))
    }

    /// Flat parameter view used by finite-difference checks.
    pub(crate) fn param_mut(&mut self, mut index: usize) -> &mut T {
        for layer in &mut self.layers {
            let nw = layer.weights.data().len();
            if index < nw {
                return &mut layer.weights.data_mut()[index];
            }
            index -= nw;
            if index < layer.bias.len() {
                return &mut layer.bias[index];
            }
            index -= layer.bias.len();
        }
        panic!("parameter index out of range");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngHandle;

    fn linear_identity(n: usize) -> Mlp<f64> {
        Mlp::from_layers(vec![DenseLayer::new(
            Matrix::identity(n),
            vec![0.0; n],
            Activation::Linear,
        )
        .unwrap()])
        .unwrap()
    }

    #[test]
    fn identity_linear_layer_is_identity() {
        let net = linear_identity(3);
        let x = Matrix::from_rows(&[[1.5, -2.0, 0.25], [0.0, 7.0, -1.0]]).unwrap();
        assert_eq!(net.predict(&x).unwrap(), x);
    }

    #[test]
    fn relu_clamps_negatives() {
        let net = Mlp::from_layers(vec![DenseLayer::new(
            Matrix::identity(2),
            vec![0.0; 2],
            Activation::Relu,
        )
        .unwrap()])
        .unwrap();
        let out = net.predict(&Matrix::from_rows(&[[-1.0, 2.0]]).unwrap()).unwrap();
        assert_eq!(out.data(), &[0.0, 2.0]);
    }

    #[test]
    fn two_layer_hand_evaluation() {
        // W1 = [[1, -1], [2, 0.5]], b1 = [0, -1], relu
        // W2 = [[0.5, 1], [-1, 2]], b2 = [1, 0], linear
        // x = [1, 1]: h_pre = [3, -1.5] -> h = [3, 0]; y = [1.5 + 1, 3] = [2.5, 3]
        let l1 = DenseLayer::new(
            Matrix::from_rows(&[[1.0, -1.0], [2.0, 0.5]]).unwrap(),
            vec![0.0, -1.0],
            Activation::Relu,
        )
        .unwrap();
        let l2 = DenseLayer::new(
            Matrix::from_rows(&[[0.5, 1.0], [-1.0, 2.0]]).unwrap(),
            vec![1.0, 0.0],
            Activation::Linear,
        )
        .unwrap();
        let net = Mlp::from_layers(vec![l1, l2]).unwrap();
        let y = net.predict(&Matrix::from_rows(&[[1.0, 1.0]]).unwrap()).unwrap();
        assert_eq!(y.data(), &[2.5, 3.0]);
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let net = linear_identity(2);
        assert!(matches!(
            net.forward(&Matrix::zeros(1, 3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn layer_chain_is_checked() {
        let mut rng = RngHandle::new(0).rng();
        let a = DenseLayer::<f64>::glorot(2, 3, Activation::Relu, &mut rng);
        let b = DenseLayer::<f64>::glorot(4, 1, Activation::Linear, &mut rng);
        assert!(Mlp::from_layers(vec![a, b]).is_err());
        assert!(DenseLayer::new(Matrix::<f64>::zeros(2, 2), vec![0.0], Activation::Linear).is_err());
    }

    #[test]
    fn linear_weight_grad_is_column_input_sums() {
        let net = linear_identity(2);
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, -4.0], [0.5, 0.5]]).unwrap();
        let acts = net.forward(&x).unwrap();
        // loss = sum of outputs
        let ones = Matrix::new(3, 2, vec![1.0; 6]).unwrap();
        let (g, gin) = net.backward(&acts, &ones).unwrap();
        let sums = x.column_sums();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(g.layers[0].weights.get(i, j), sums[i]);
            }
        }
        assert_eq!(g.layers[0].bias, vec![3.0, 3.0]);
        assert_eq!(gin.data(), &[1.0; 6]);
    }

    #[test]
    fn dead_relu_passes_no_gradient() {
        let net = Mlp::from_layers(vec![DenseLayer::new(
            Matrix::identity(2),
            vec![-10.0, -10.0],
            Activation::Relu,
        )
        .unwrap()])
        .unwrap();
        let x = Matrix::from_rows(&[[1.0, 2.0], [-3.0, 4.0]]).unwrap();
        let acts = net.forward(&x).unwrap();
        let (g, gin) = net.backward(&acts, &Matrix::new(2, 2, vec![1.0; 4]).unwrap()).unwrap();
        assert!(g.is_all_zero());
        assert!(gin.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_rejects_mismatched_grad() {
        let net = linear_identity(2);
        let acts = net.forward(&Matrix::zeros(3, 2)).unwrap();
        assert!(net.backward(&acts, &Matrix::zeros(2, 2)).is_err());
    }
}
