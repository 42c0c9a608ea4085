use super::mlp::{Mlp, MlpGrads};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// ADAM moments and hyperparameters for one [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    m: MlpGrads<T>,
    v: MlpGrads<T>,
    t: u64,
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Scalar> AdamState<T> {
    /// Zero moments with `beta1 = 0.9`, `beta2 = 0.999`, `eps = 1e-8`.
    pub fn new(mlp: &Mlp<T>, lr: T) -> Result<Self> {
        Self::with_params(mlp, lr, T::of(0.9), T::of(0.999), T::of(1e-8))
    }

    pub fn with_params(mlp: &Mlp<T>, lr: T, beta1: T, beta2: T, eps: T) -> Result<Self> {
        let unit = |b: T| b >= T::zero() && b < T::one();
        if !(lr > T::zero() && unit(beta1) && unit(beta2) && eps > T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "adam: lr={lr} beta1={beta1} beta2={beta2} eps={eps}"
            )));
        }
        Ok(Self {
            m: MlpGrads::zeros_like(mlp),
            v: MlpGrads::zeros_like(mlp),
            t: 0,
            lr,
            beta1,
            beta2,
            eps,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> &MlpGrads<T> {
        &self.m
    }

    pub fn second_moment(&self) -> &MlpGrads<T> {
        &self.v
    }
}

/// One bias-corrected ADAM update of `mlp` in place.
///
/// A gradient that is zero everywhere carries no information and leaves the
/// parameters, the moments and the step counter untouched.
pub fn adam_step<T: Scalar>(mlp: &mut Mlp<T>, grads: &MlpGrads<T>, state: &mut AdamState<T>) -> Result<()> {
    if grads.layers.len() != mlp.layers().len() || state.m.layers.len() != mlp.layers().len() {
        return Err(Error::dims("adam_step layers", mlp.layers().len(), grads.layers.len()));
    }
    for (l, g) in mlp.layers().iter().zip(&grads.layers) {
        if g.weights.shape() != l.weights().shape() || g.bias.len() != l.bias().len() {
            return Err(Error::dims(
                "adam_step grad shape",
                format!("{:?}", l.weights().shape()),
                format!("{:?}", g.weights.shape()),
            ));
        }
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite("adam_step gradient".into()));
    }
    if grads.is_all_zero() {
        return Ok(());
    }

    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = T::one() - b1.powi(t);
    let c2 = T::one() - b2.powi(t);
    let (lr, eps) = (state.lr, state.eps);

    let update = |p: &mut T, g: T, m: &mut T, v: &mut T| {
        *m = b1 * *m + (T::one() - b1) * g;
        *v = b2 * *v + (T::one() - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    };

    for (((layer, g), m), v) in mlp
        .layers_mut()
        .iter_mut()
        .zip(&grads.layers)
        .zip(state.m.layers.iter_mut())
        .zip(state.v.layers.iter_mut())
    {
        for (((p, &gi), mi), vi) in layer
            .weights
            .data_mut()
            .iter_mut()
            .zip(g.weights.data())
            .zip(m.weights.data_mut().iter_mut())
            .zip(v.weights.data_mut().iter_mut())
        {
            update(p, gi, mi, vi);
        }
        for (((p, &gi), mi), vi) in layer
            .bias
            .iter_mut()
            .zip(&g.bias)
            .zip(m.bias.iter_mut())
            .zip(v.bias.iter_mut())
        {
            update(p, gi, mi, vi);
        }
    }
    Ok(())
}
