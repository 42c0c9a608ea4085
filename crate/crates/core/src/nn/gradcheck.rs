use super::loss::LossKind;
use super::matrix::Matrix;
use super::mlp::Mlp;
use crate::error::Result;
use crate::scalar::Scalar;

/// Central differences at `h = 1e-5` carry about `1e-11` of absolute
/// roundoff, so gradients smaller than this are compared absolutely.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    /// `max |analytic - numeric| / max(|analytic|, |numeric|, 1e-6)` over all
    /// parameters.
    pub max_rel_error: f64,
    /// Flat parameter index where the maximum occurred.
    pub worst_param: usize,
    pub params_checked: usize,
}

/// Compares back-propagated gradients against central differences of step
/// `h`, one parameter at a time.
pub fn grad_check<T: Scalar>(
    mlp: &Mlp<T>,
    batch: &Matrix<T>,
    target: &Matrix<T>,
    loss: LossKind,
    h: T,
) -> Result<GradCheckReport> {
    let acts = mlp.forward(batch)?;
    let (_, out_grad) = loss.eval(acts.output(), target)?;
    let (grads, _) = mlp.backward(&acts, &out_grad)?;
    let analytic: Vec<T> = grads.values().collect();

    let mut probe = mlp.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: 0,
        params_checked: analytic.len(),
    };
    let two_h = h + h;
    for (i, &a) in analytic.iter().enumerate() {
        let original = *probe.param_mut(i);
        *probe.param_mut(i) = original + h;
        let (plus, _) = loss.eval(&probe.predict(batch)?, target)?;
        *probe.param_mut(i) = original - h;
        let (minus, _) = loss.eval(&probe.predict(batch)?, target)?;
        *probe.param_mut(i) = original;

        let numeric = (plus - minus) / two_h;
        let (a, numeric) = (a.as_f64(), numeric.as_f64());
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
        if rel > report.max_rel_error {
            report.max_rel_error = rel;
            report.worst_param = i;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, DenseLayer};
    use crate::rng::RngHandle;
    use crate::scalar::Scalar;

    #[test]
    fn identity_net_is_exact() {
        let net = Mlp::from_layers(vec![DenseLayer::new(
            Matrix::<f64>::identity(2),
            vec![0.0; 2],
            Activation::Linear,
        )
        .unwrap()])
        .unwrap();
        let x = Matrix::from_rows(&[[0.5, -1.0], [2.0, 0.25]]).unwrap();
        let y = Matrix::from_rows(&[[0.0, 1.0], [1.0, 1.0]]).unwrap();
        let r = grad_check(&net, &x, &y, LossKind::Mse, 1e-5).unwrap();
        assert!(r.max_rel_error < 1e-9, "{r:?}");
        assert_eq!(r.params_checked, 6);
    }

    #[test]
    fn frozen_zero_layer_has_zero_grads_both_ways() {
        let mut rng = RngHandle::new(5).rng();
        let first = DenseLayer::<f64>::glorot(3, 4, Activation::Relu, &mut rng);
        let zero = DenseLayer::new(Matrix::zeros(4, 2), vec![0.0; 2], Activation::Linear).unwrap();
        let net = Mlp::from_layers(vec![first, zero]).unwrap();
        let x = Matrix::new(5, 3, (0..15).map(|i| f64::of(i as f64 * 0.1 - 0.7)).collect()).unwrap();
        let y = Matrix::new(5, 2, vec![1.0; 10]).unwrap();

        let acts = net.forward(&x).unwrap();
        let (_, g) = crate::nn::mse_loss(acts.output(), &y).unwrap();
        let (grads, _) = net.backward(&acts, &g).unwrap();
        assert!(grads.layers[0].weights.data().iter().all(|&v| v == 0.0));

        let r = grad_check(&net, &x, &y, LossKind::Mse, 1e-5).unwrap();
        // analytic zeros upstream force |numeric| < 1e-14 there
        assert!(r.max_rel_error < 1e-6, "{r:?}");
    }
}
