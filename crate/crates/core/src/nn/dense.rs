use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::tape::{Tape, Var};
use super::{GradientSet, Parameterized};
use crate::error::{Error, Result};

/// Affine map `y = W x + b` with `W` shaped (out × in).
///
/// The bias is held as a (1 × out) row so every trainable tensor in the
/// crate is two-dimensional.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    weights: Array2<f64>,
    biases: Array2<f64>,
}

impl DenseLayer {
    /// Uniform in ±1/√fan_in for weights and biases alike.
    pub fn init<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        assert!(in_dim > 0 && out_dim > 0, "layer dims must be positive");
        let limit = 1.0 / (in_dim as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
        let weights = Array2::from_shape_simple_fn((out_dim, in_dim), || dist.sample(rng));
        let biases = Array2::from_shape_simple_fn((1, out_dim), || dist.sample(rng));
        Self { weights, biases }
    }

    pub fn from_parts(weights: Array2<f64>, biases: Array1<f64>) -> Result<Self> {
        if biases.len() != weights.nrows() {
            return Err(Error::dims("dense bias", weights.nrows(), biases.len()));
        }
        if !weights.iter().chain(biases.iter()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                primitive: "dense init",
            });
        }
        let out = biases.len();
        Ok(Self {
            weights,
            biases: biases.into_shape_with_order((1, out)).expect("row"),
        })
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            weights: Array2::zeros((out_dim, in_dim)),
            biases: Array2::zeros((1, out_dim)),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn biases(&self) -> ArrayView1<'_, f64> {
        self.biases.row(0)
    }

    pub fn weights_mut(&mut self) -> &mut Array2<f64> {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut Array2<f64> {
        &mut self.biases
    }
}

/// Dense network: rectifier on hidden layers, identity on the output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<DenseLayer>,
}

impl Mlp {
    /// `sizes` lists every layer width including input and output,
    /// e.g. `[13, 256, 256, 1]`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs at least input and output sizes");
        let layers = sizes
            .windows(2)
            .map(|w| DenseLayer::init(w[0], w[1], rng))
            .collect();
        Self { layers }
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("an MLP needs at least one layer".into()));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::dims(
                    format!("layer {} input", k + 1),
                    pair[0].out_dim(),
                    pair[1].in_dim(),
                ));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().expect("non-empty").out_dim()
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.in_dim())
            .chain(self.layers.iter().map(DenseLayer::out_dim))
            .collect()
    }

    /// Puts every parameter on the tape, trainable or constant.
    pub fn bind<'t>(&self, tape: &'t Tape, trainable: bool) -> Vec<Var<'t>> {
        self.params()
            .into_iter()
            .map(|p| {
                if trainable {
                    tape.param(p.clone())
                } else {
                    tape.constant(p.clone())
                }
            })
            .collect()
    }

    /// Forward pass on the tape with previously bound parameters.
    pub fn forward_on<'t>(&self, x: Var<'t>, bound: &[Var<'t>]) -> Result<Var<'t>> {
        debug_assert_eq!(bound.len(), 2 * self.layers.len());
        if x.shape().1 != self.in_dim() {
            return Err(Error::dims("layer 0 input", self.in_dim(), x.shape().1));
        }
        let last = self.layers.len() - 1;
        let mut h = x;
        for (k, wb) in bound.chunks(2).enumerate() {
            h = h.dense(wb[0], Some(wb[1]));
            if k < last {
                h = h.relu();
            }
        }
        Ok(h)
    }

    /// Batched forward pass without gradient tracking; rows are samples.
    pub fn forward_batch(&self, input: &Array2<f64>) -> Result<Array2<f64>> {
        if input.ncols() != self.in_dim() {
            return Err(Error::dims("layer 0 input", self.in_dim(), input.ncols()));
        }
        let mut h = input.dot(&self.layers[0].weights.t()) + &self.layers[0].biases;
        for layer in &self.layers[1..] {
            h.mapv_inplace(|v| v.max(0.0));
            h = h.dot(&layer.weights.t()) + &layer.biases;
        }
        Ok(h)
    }

    /// Sign pattern of every hidden pre-activation for a batch, used to
    /// detect finite-difference probes that straddle a rectifier kink.
    pub fn relu_pattern(&self, input: &Array2<f64>) -> Vec<bool> {
        let mut pattern = Vec::new();
        let mut h = input.clone();
        for layer in &self.layers[..self.layers.len() - 1] {
            h = h.dot(&layer.weights.t()) + &layer.biases;
            pattern.extend(h.iter().map(|&v| v > 0.0));
            h.mapv_inplace(|v| v.max(0.0));
        }
        pattern
    }

    pub fn zero_grads(&self) -> GradientSet {
        GradientSet::zeros_like(self)
    }
}

impl Parameterized for Mlp {
    fn params(&self) -> Vec<&Array2<f64>> {
        self.layers
            .iter()
            .flat_map(|l| [&l.weights, &l.biases])
            .collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Array2<f64>> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weights, &mut l.biases])
            .collect()
    }
}

/// Single-sample forward pass.
pub fn mlp_forward(net: &Mlp, input: &[f64]) -> Result<Vec<f64>> {
    let x = Array2::from_shape_vec((1, input.len()), input.to_vec()).expect("row vector");
    Ok(net.forward_batch(&x)?.into_raw_vec_and_offset().0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn naive_forward(net: &Mlp, input: &[f64]) -> Vec<f64> {
        let mut h = input.to_vec();
        let n = net.layers().len();
        for (k, layer) in net.layers().iter().enumerate() {
            let mut out = vec![0.0; layer.out_dim()];
            for (i, o) in out.iter_mut().enumerate() {
                let mut acc = layer.biases()[i];
                for (j, x) in h.iter().enumerate() {
                    acc += layer.weights()[[i, j]] * x;
                }
                *o = if k + 1 < n { acc.max(0.0) } else { acc };
            }
            h = out;
        }
        h
    }

    #[test]
    fn identity_layer() {
        let net = Mlp::from_layers(vec![
            DenseLayer::from_parts(array![[1.0]], array![0.0]).unwrap()
        ])
        .unwrap();
        assert_eq!(mlp_forward(&net, &[3.5]).unwrap(), vec![3.5]);
    }

    #[test]
    fn zero_weights_emit_bias() {
        let net = Mlp::from_layers(vec![DenseLayer::from_parts(
            Array2::zeros((3, 4)),
            array![0.25, -1.0, 7.0],
        )
        .unwrap()])
        .unwrap();
        assert_eq!(
            mlp_forward(&net, &[9.0, -2.0, 1.0, 4.0]).unwrap(),
            vec![0.25, -1.0, 7.0]
        );
    }

    #[test]
    fn matches_nested_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = Mlp::new(&[8, 256, 256, 1], &mut rng);
        let input: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
        let got = mlp_forward(&net, &input).unwrap();
        let want = naive_forward(&net, &input);
        assert!((got[0] - want[0]).abs() < 1e-10, "{got:?} vs {want:?}");
    }

    #[test]
    fn tape_forward_equals_batch_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Mlp::new(&[5, 16, 16, 3], &mut rng);
        let x = Array2::from_shape_fn((4, 5), |(i, j)| (i as f64 - j as f64) * 0.3);
        let tape = Tape::new();
        let bound = net.bind(&tape, false);
        let y = net.forward_on(tape.constant(x.clone()), &bound).unwrap();
        let direct = net.forward_batch(&x).unwrap();
        assert!(y
            .value()
            .iter()
            .zip(direct.iter())
            .all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn wrong_input_width_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = Mlp::new(&[4, 8, 1], &mut rng);
        let err = mlp_forward(&net, &[1.0, 2.0]).unwrap_err();
        assert!(err.to_string().contains("layer 0"), "{err}");
    }

    #[test]
    fn mismatched_layers_rejected() {
        let err = Mlp::from_layers(vec![DenseLayer::zeros(3, 4), DenseLayer::zeros(5, 1)])
            .unwrap_err();
        assert!(err.to_string().contains("layer 1"));
    }

    #[test]
    fn forward_is_bitwise_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Mlp::new(&[13, 64, 64, 1], &mut rng);
        let x: Vec<f64> = (0..13).map(|i| (i as f64).sin()).collect();
        let a = mlp_forward(&net, &x).unwrap();
        let b = mlp_forward(&net, &x).unwrap();
        assert_eq!(a[0].to_bits(), b[0].to_bits());
    }
}
