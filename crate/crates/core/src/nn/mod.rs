//! Differentiable building blocks: dense networks, an LSTM cell,
//! diagonal-Gaussian helpers and Adam.
//!
//! Gradients come from the batched reverse-mode [`tape`]. The contract the
//! rest of the crate relies on is that analytic gradients agree with central
//! finite differences; [`gradcheck`] verifies it.

pub mod adam;
pub mod dense;
pub mod gaussian;
pub mod gradcheck;
pub mod lstm;
pub mod tape;

use ndarray::Array2;

pub use adam::{adam_step, AdamState};
pub use dense::{mlp_forward, DenseLayer, Mlp};
pub use gaussian::{gaussian_log_prob, tanh_squash_correction, LOG_STD_MAX, LOG_STD_MIN};
pub use lstm::{lstm_step, LstmCellParams};
pub use tape::{Gradients, Tape, Var};

use crate::error::{Error, Result};

/// Anything that owns an ordered list of trainable tensors.
pub trait Parameterized {
    fn params(&self) -> Vec<&Array2<f64>>;
    fn params_mut(&mut self) -> Vec<&mut Array2<f64>>;

    fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}

/// Per-parameter derivatives, shaped like the parameters they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub tensors: Vec<Array2<f64>>,
}

impl GradientSet {
    pub fn zeros_like<P: Parameterized + ?Sized>(p: &P) -> Self {
        Self {
            tensors: p.params().iter().map(|t| Array2::zeros(t.dim())).collect(),
        }
    }

    pub fn from_tape(grads: &Gradients, bound: &[Var<'_>]) -> Self {
        Self {
            tensors: bound
                .iter()
                .map(|v| grads.wrt(*v).as_standard_layout().into_owned())
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn is_zero(&self) -> bool {
        self.tensors.iter().all(|t| t.iter().all(|&v| v == 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors
            .iter()
            .flat_map(|t| t.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Evaluates a scalar loss over `params` and returns its value together with
/// the exact reverse-mode gradient for every parameter.
///
/// The closure receives the parameters as trainable tape leaves in the
/// order given. A non-finite intermediate aborts with the name of the
/// primitive that produced it.
pub fn grad_scalar<F>(params: &[&Array2<f64>], loss: F) -> Result<(f64, GradientSet)>
where
    F: for<'t> FnOnce(&'t Tape, &[Var<'t>]) -> Result<Var<'t>>,
{
    let tape = Tape::new();
    let bound: Vec<Var<'_>> = params.iter().map(|p| tape.param((*p).clone())).collect();
    let out = loss(&tape, &bound)?;
    if out.shape() != (1, 1) {
        return Err(Error::dims("loss output", 1, out.shape().0 * out.shape().1));
    }
    let grads = tape.backward(out)?;
    Ok((out.item(), GradientSet::from_tape(&grads, &bound)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn grad_of_square() {
        let w = array![[3.0]];
        let (v, g) = grad_scalar(&[&w], |_, p| Ok(p[0].square().mean())).unwrap();
        assert_eq!(v, 9.0);
        assert_eq!(g.tensors[0][[0, 0]], 6.0);
    }

    #[test]
    fn grad_of_constant_is_zero() {
        let w = array![[3.0, -1.0], [0.5, 2.0]];
        let (v, g) = grad_scalar(&[&w], |tape, _| Ok(tape.scalar(1.25))).unwrap();
        assert_eq!(v, 1.25);
        assert!(g.is_zero());
        assert_eq!(g.tensors[0].dim(), (2, 2));
    }

    #[test]
    fn non_finite_exp_is_reported() {
        let w = array![[1000.0]];
        let err = grad_scalar(&[&w], |_, p| Ok(p[0].exp().mean())).unwrap_err();
        assert!(matches!(err, Error::NonFinite { primitive: "exp" }), "{err}");
    }
}
