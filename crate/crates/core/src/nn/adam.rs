use ndarray::{Array2, Zip};

use super::{GradientSet, Parameterized};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    first: Vec<Array2<f64>>,
    second: Vec<Array2<f64>>,
}

impl AdamState {
    pub fn new<P: Parameterized + ?Sized>(params: &P, lr: f64) -> Self {
        let zeros: Vec<_> = params
            .params()
            .iter()
            .map(|p| Array2::zeros(p.dim()))
            .collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moments(&self) -> &[Array2<f64>] {
        &self.first
    }

    pub fn second_moments(&self) -> &[Array2<f64>] {
        &self.second
    }
}

/// Bias-corrected Adam update in place.
///
/// An all-zero gradient set still advances the moment estimates and the
/// step counter but leaves the parameters untouched.
pub fn adam_step<P: Parameterized + ?Sized>(
    state: &mut AdamState,
    params: &mut P,
    grads: &GradientSet,
) -> Result<()> {
    let mut tensors = params.params_mut();
    if tensors.len() != grads.tensors.len() || tensors.len() != state.first.len() {
        return Err(Error::dims(
            "adam parameter list",
            state.first.len(),
            grads.tensors.len(),
        ));
    }
    for (k, (p, g)) in tensors.iter().zip(&grads.tensors).enumerate() {
        if p.dim() != g.dim() || p.dim() != state.first[k].dim() {
            return Err(Error::dims(
                format!("adam tensor {k}"),
                p.len(),
                g.len(),
            ));
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, lr, eps) = (state.beta1, state.beta2, state.lr, state.eps);
    let bc1 = 1.0 - b1.powi(t);
    let bc2 = 1.0 - b2.powi(t);
    let frozen = grads.is_zero();

    for (k, p) in tensors.iter_mut().enumerate() {
        let (m, v) = (&mut state.first[k], &mut state.second[k]);
        Zip::from(&mut **p)
            .and(m)
            .and(v)
            .and(&grads.tensors[k])
            .for_each(|p, m, v, &g| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                if !frozen {
                    let m_hat = *m / bc1;
                    let v_hat = *v / bc2;
                    *p -= lr * m_hat / (v_hat.sqrt() + eps);
                }
            });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    struct Scalar(Array2<f64>);

    impl Parameterized for Scalar {
        fn params(&self) -> Vec<&Array2<f64>> {
            vec![&self.0]
        }
        fn params_mut(&mut self) -> Vec<&mut Array2<f64>> {
            vec![&mut self.0]
        }
    }

    fn grads(v: f64) -> GradientSet {
        GradientSet {
            tensors: vec![array![[v]]],
        }
    }

    #[test]
    fn first_step_moves_by_lr() {
        for g in [1e-3, 0.5, -7.0, 1e4] {
            let mut p = Scalar(array![[1.0]]);
            let mut s = AdamState::new(&p, 1e-3);
            adam_step(&mut s, &mut p, &grads(g)).unwrap();
            let delta = p.0[[0, 0]] - 1.0;
            assert!((delta.abs() - 1e-3).abs() < 1e-8, "g={g} delta={delta}");
            assert_eq!(delta.signum(), -g.signum());
            assert_eq!(s.step_count(), 1);
        }
    }

    #[test]
    fn zero_gradient_is_identity() {
        let mut p = Scalar(array![[0.25]]);
        let mut s = AdamState::new(&p, 1e-2);
        adam_step(&mut s, &mut p, &grads(2.0)).unwrap();
        let before = p.0.clone();
        adam_step(&mut s, &mut p, &grads(0.0)).unwrap();
        assert_eq!(p.0, before);
        assert_eq!(s.step_count(), 2);
        assert!(s.first_moments()[0][[0, 0]] < 0.2 + 1e-12);
    }

    #[test]
    fn three_steps_match_recurrence() {
        let gs = [0.3, -1.2, 0.05];
        let (lr, b1, b2, eps) = (1e-2, 0.9f64, 0.999f64, 1e-8);
        let (mut x, mut m, mut v) = (0.7f64, 0.0f64, 0.0f64);
        for (i, g) in gs.iter().enumerate() {
            let t = (i + 1) as i32;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            x -= lr * (m / (1.0 - b1.powi(t))) / ((v / (1.0 - b2.powi(t))).sqrt() + eps);
        }

        let mut p = Scalar(array![[0.7]]);
        let mut s = AdamState::new(&p, lr);
        for g in gs {
            adam_step(&mut s, &mut p, &grads(g)).unwrap();
        }
        assert!((p.0[[0, 0]] - x).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch() {
        let mut p = Scalar(array![[0.0]]);
        let mut s = AdamState::new(&p, 1e-3);
        let bad = GradientSet {
            tensors: vec![array![[1.0, 2.0]]],
        };
        assert!(adam_step(&mut s, &mut p, &bad).is_err());
        assert_eq!(s.step_count(), 0);
    }
}
