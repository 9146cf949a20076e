use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::tape::{Tape, Var};
use super::Parameterized;
use crate::error::{Error, Result};

/// Gate order used for every per-gate array.
pub const GATES: [&str; 4] = ["input", "forget", "output", "candidate"];

#[derive(Debug, Clone, PartialEq)]
pub struct LstmGate {
    /// (hidden × input)
    pub input_weights: Array2<f64>,
    /// (hidden × hidden)
    pub recurrent_weights: Array2<f64>,
    /// (1 × hidden)
    pub bias: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCellParams {
    gates: [LstmGate; 4],
}

impl LstmCellParams {
    pub fn init<R: Rng + ?Sized>(input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let limit = 1.0 / (hidden_dim as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
        let mut gate = || LstmGate {
            input_weights: Array2::from_shape_simple_fn((hidden_dim, input_dim), || {
                dist.sample(rng)
            }),
            recurrent_weights: Array2::from_shape_simple_fn((hidden_dim, hidden_dim), || {
                dist.sample(rng)
            }),
            bias: Array2::from_shape_simple_fn((1, hidden_dim), || dist.sample(rng)),
        };
        Self {
            gates: [gate(), gate(), gate(), gate()],
        }
    }

    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let gate = || LstmGate {
            input_weights: Array2::zeros((hidden_dim, input_dim)),
            recurrent_weights: Array2::zeros((hidden_dim, hidden_dim)),
            bias: Array2::zeros((1, hidden_dim)),
        };
        Self {
            gates: [gate(), gate(), gate(), gate()],
        }
    }

    pub fn from_gates(gates: [LstmGate; 4]) -> Result<Self> {
        let hidden = gates[0].recurrent_weights.nrows();
        let input = gates[0].input_weights.ncols();
        for (g, name) in gates.iter().zip(GATES) {
            let checks = [
                (g.input_weights.dim(), (hidden, input)),
                (g.recurrent_weights.dim(), (hidden, hidden)),
                (g.bias.dim(), (1, hidden)),
            ];
            for (got, want) in checks {
                if got != want {
                    return Err(Error::dims(
                        format!("lstm {name} gate"),
                        want.0 * want.1,
                        got.0 * got.1,
                    ));
                }
            }
        }
        Ok(Self { gates })
    }

    pub fn input_dim(&self) -> usize {
        self.gates[0].input_weights.ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.gates[0].recurrent_weights.nrows()
    }

    pub fn gate(&self, index: usize) -> &LstmGate {
        &self.gates[index]
    }

    pub fn gate_mut(&mut self, index: usize) -> &mut LstmGate {
        &mut self.gates[index]
    }

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

    /// One recurrence step on the tape; all of `input`, `hidden` and `cell`
    /// are batched row-wise.
    pub fn step_on<'t>(
        &self,
        bound: &[Var<'t>],
        input: Var<'t>,
        hidden: Var<'t>,
        cell: Var<'t>,
    ) -> Result<(Var<'t>, Var<'t>)> {
        let (h, i) = (self.hidden_dim(), self.input_dim());
        if input.shape().1 != i {
            return Err(Error::dims("lstm input", i, input.shape().1));
        }
        if hidden.shape().1 != h {
            return Err(Error::dims("lstm hidden", h, hidden.shape().1));
        }
        if cell.shape().1 != h {
            return Err(Error::dims("lstm cell", h, cell.shape().1));
        }
        let pre = |g: usize| {
            let p = &bound[3 * g..3 * g + 3];
            input.dense(p[0], Some(p[2])).add(hidden.dense(p[1], None))
        };
        let input_gate = pre(0).sigmoid();
        let forget_gate = pre(1).sigmoid();
        let output_gate = pre(2).sigmoid();
        let candidate = pre(3).tanh();
        let cell_next = forget_gate.mul(cell).add(input_gate.mul(candidate));
        let hidden_next = output_gate.mul(cell_next.tanh());
        Ok((hidden_next, cell_next))
    }
}

impl Parameterized for LstmCellParams {
    fn params(&self) -> Vec<&Array2<f64>> {
        self.gates
            .iter()
            .flat_map(|g| [&g.input_weights, &g.recurrent_weights, &g.bias])
            .collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Array2<f64>> {
        self.gates
            .iter_mut()
            .flat_map(|g| [&mut g.input_weights, &mut g.recurrent_weights, &mut g.bias])
            .collect()
    }
}

fn row(v: &[f64]) -> Array2<f64> {
    Array2::from_shape_vec((1, v.len()), v.to_vec()).expect("row vector")
}

/// Single-sample LSTM step returning `(hidden', cell')`.
pub fn lstm_step(
    params: &LstmCellParams,
    input: &[f64],
    hidden: &[f64],
    cell: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let tape = Tape::new();
    let bound = params.bind(&tape, false);
    let (h, c) = params.step_on(
        &bound,
        tape.constant(row(input)),
        tape.constant(row(hidden)),
        tape.constant(row(cell)),
    )?;
    tape.check_finite()?;
    let h = h.value().iter().copied().collect();
    let c = c.value().iter().copied().collect();
    Ok((h, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    /// Gate-by-gate transcription of the cell equations.
    fn oracle(p: &LstmCellParams, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let hd = p.hidden_dim();
        let pre = |g: usize, k: usize| {
            let gate = p.gate(g);
            let mut acc = gate.bias[[0, k]];
            for (j, xj) in x.iter().enumerate() {
                acc += gate.input_weights[[k, j]] * xj;
            }
            for (j, hj) in h.iter().enumerate() {
                acc += gate.recurrent_weights[[k, j]] * hj;
            }
            acc
        };
        let mut h2 = vec![0.0; hd];
        let mut c2 = vec![0.0; hd];
        for k in 0..hd {
            let i = sig(pre(0, k));
            let f = sig(pre(1, k));
            let o = sig(pre(2, k));
            let g = pre(3, k).tanh();
            c2[k] = f * c[k] + i * g;
            h2[k] = o * c2[k].tanh();
        }
        (h2, c2)
    }

    #[test]
    fn zero_params_closed_form() {
        let p = LstmCellParams::zeros(5, 8);
        let (h, c) = lstm_step(&p, &[0.3; 5], &[1.0; 8], &[1.0; 8]).unwrap();
        for k in 0..8 {
            assert!((c[k] - 0.5).abs() < 1e-15);
            assert!((h[k] - 0.5 * 0.5f64.tanh()).abs() < 1e-15);
            assert!((h[k] - 0.231059).abs() < 1e-6);
        }
    }

    #[test]
    fn saturated_forget_gate_keeps_cell() {
        let mut p = LstmCellParams::zeros(3, 4);
        p.gate_mut(1).bias.fill(20.0);
        let cell = [0.7, -0.2, 1.5, 0.0];
        let (_, c) = lstm_step(&p, &[0.0; 3], &[0.0; 4], &cell).unwrap();
        for (a, b) in c.iter().zip(cell) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn matches_gate_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let p = LstmCellParams::init(5, 8, &mut rng);
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let h: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let c: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
            let (h2, c2) = lstm_step(&p, &x, &h, &c).unwrap();
            let (oh, oc) = oracle(&p, &x, &h, &c);
            for k in 0..8 {
                assert!((h2[k] - oh[k]).abs() < 1e-10);
                assert!((c2[k] - oc[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dimension_errors() {
        let p = LstmCellParams::zeros(5, 8);
        assert!(lstm_step(&p, &[0.0; 4], &[0.0; 8], &[0.0; 8]).is_err());
        assert!(lstm_step(&p, &[0.0; 5], &[0.0; 7], &[0.0; 8]).is_err());
        assert!(lstm_step(&p, &[0.0; 5], &[0.0; 8], &[0.0; 9]).is_err());
    }
}
