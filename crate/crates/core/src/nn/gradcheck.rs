//! Finite-difference verification of the analytic gradients.
//!
//! Each case compares reverse-mode gradients against central differences
//! on a random subset of coordinates of every parameter tensor. Probes whose
//! `+h` and `-h` evaluations land on different sides of a rectifier kink are
//! skipped: the loss is not differentiable across them.

use std::time::Instant;

use ndarray::Array2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{grad_scalar, GradientSet, LstmCellParams, Mlp, Parameterized, Tape};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct GradCheckConfig {
    pub seeds: u64,
    pub step: f64,
    pub tolerance: f64,
    pub coords_per_tensor: usize,
    pub batch: usize,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            seeds: 20,
            step: 1e-5,
            tolerance: 1e-4,
            coords_per_tensor: 8,
            batch: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseReport {
    pub name: String,
    pub seeds: u64,
    pub checked: usize,
    pub skipped_kinks: usize,
    pub max_rel_error: f64,
    pub failures: usize,
}

impl CaseReport {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_owned(),
            seeds: 0,
            checked: 0,
            skipped_kinks: 0,
            max_rel_error: 0.0,
            failures: 0,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checked > 0
    }

    fn absorb(&mut self, other: CaseReport) {
        self.seeds += other.seeds;
        self.checked += other.checked;
        self.skipped_kinks += other.skipped_kinks;
        self.failures += other.failures;
        self.max_rel_error = self.max_rel_error.max(other.max_rel_error);
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub cases: Vec<CaseReport>,
    pub seconds: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(CaseReport::passed)
    }
}

/// `|a − n| / max(|a|, |n|, 1e-6)`. The floor keeps coordinates whose true
/// gradient is zero from being judged on round-off alone.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

impl Parameterized for Vec<Array2<f64>> {
    fn params(&self) -> Vec<&Array2<f64>> {
        self.iter().collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Array2<f64>> {
        self.iter_mut().collect()
    }
}

/// Compares `analytic` against central differences of `value` on sampled
/// coordinates of every tensor of `model`. `pattern` returns a signature of
/// the non-smooth branch taken (empty for smooth losses).
pub fn check_model<P, V, K>(
    name: &str,
    model: &P,
    analytic: &GradientSet,
    value: V,
    pattern: K,
    cfg: &GradCheckConfig,
    rng: &mut impl Rng,
) -> Result<CaseReport>
where
    P: Parameterized + Clone,
    V: Fn(&P) -> Result<f64>,
    K: Fn(&P) -> Vec<bool>,
{
    let mut report = CaseReport::new(name);
    report.seeds = 1;
    let mut probe = model.clone();
    let shapes: Vec<usize> = model.params().iter().map(|p| p.len()).collect();
    for (t, &len) in shapes.iter().enumerate() {
        let picks = sample(rng, len, cfg.coords_per_tensor.min(len));
        for idx in picks.iter() {
            let orig = model.params()[t].as_slice().expect("contiguous")[idx];
            let set = |p: &mut P, v: f64| {
                p.params_mut()[t].as_slice_mut().expect("contiguous")[idx] = v;
            };
            set(&mut probe, orig + cfg.step);
            let (f_plus, k_plus) = (value(&probe)?, pattern(&probe));
            set(&mut probe, orig - cfg.step);
            let (f_minus, k_minus) = (value(&probe)?, pattern(&probe));
            set(&mut probe, orig);
            if k_plus != k_minus {
                report.skipped_kinks += 1;
                continue;
            }
            let numeric = (f_plus - f_minus) / (2.0 * cfg.step);
            let a = analytic.tensors[t].as_slice().expect("contiguous")[idx];
            let err = relative_error(a, numeric);
            report.checked += 1;
            report.max_rel_error = report.max_rel_error.max(err);
            if !(err < cfg.tolerance) {
                report.failures += 1;
            }
        }
    }
    Ok(report)
}

fn uniform(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
}

fn mlp_loss(net: &Mlp, tape: &Tape, bound: &[super::Var<'_>], x: &Array2<f64>, y: &Array2<f64>) -> Result<f64> {
    let out = net.forward_on(tape.constant(x.clone()), bound)?;
    let loss = out.sub(tape.constant(y.clone())).square().mean().scale(0.5);
    Ok(loss.item())
}

/// Squared-error loss of a rectifier MLP with the given layer sizes.
pub fn check_mlp(sizes: &[usize], seed: u64, cfg: &GradCheckConfig) -> Result<CaseReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = Mlp::new(sizes, &mut rng);
    let x = uniform(cfg.batch, net.in_dim(), &mut rng);
    let y = uniform(cfg.batch, net.out_dim(), &mut rng);

    let tape = Tape::new();
    let bound = net.bind(&tape, true);
    let out = net.forward_on(tape.constant(x.clone()), &bound)?;
    let loss = out.sub(tape.constant(y.clone())).square().mean().scale(0.5);
    let grads = GradientSet::from_tape(&tape.backward(loss)?, &bound);

    let name = format!(
        "mlp {}",
        sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("-")
    );
    check_model(
        &name,
        &net,
        &grads,
        |n: &Mlp| {
            let tape = Tape::new();
            let bound = n.bind(&tape, false);
            mlp_loss(n, &tape, &bound, &x, &y)
        },
        |n: &Mlp| n.relu_pattern(&x),
        cfg,
        &mut rng,
    )
}

fn lstm_loss<'t>(
    cell: &LstmCellParams,
    tape: &'t Tape,
    bound: &[super::Var<'t>],
    data: &[Array2<f64>; 5],
) -> Result<super::Var<'t>> {
    let [x, h, c, th, tc] = data;
    let (h2, c2) = cell.step_on(
        bound,
        tape.constant(x.clone()),
        tape.constant(h.clone()),
        tape.constant(c.clone()),
    )?;
    let lh = h2.sub(tape.constant(th.clone())).square().mean();
    let lc = c2.sub(tape.constant(tc.clone())).square().mean();
    Ok(lh.add(lc.scale(0.5)))
}

/// Squared-error loss on both outputs of one LSTM step.
pub fn check_lstm(
    input_dim: usize,
    hidden_dim: usize,
    seed: u64,
    cfg: &GradCheckConfig,
) -> Result<CaseReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cell = LstmCellParams::init(input_dim, hidden_dim, &mut rng);
    let b = cfg.batch;
    let data = [
        uniform(b, input_dim, &mut rng),
        uniform(b, hidden_dim, &mut rng),
        uniform(b, hidden_dim, &mut rng).mapv(|v| 2.0 * v),
        uniform(b, hidden_dim, &mut rng),
        uniform(b, hidden_dim, &mut rng),
    ];
    let params = cell.params();
    let (_, grads) = grad_scalar(&params, |tape, bound| lstm_loss(&cell, tape, bound, &data))?;
    check_model(
        &format!("lstm {input_dim}->{hidden_dim}"),
        &cell,
        &grads,
        |c: &LstmCellParams| {
            let tape = Tape::new();
            let bound = c.bind(&tape, false);
            Ok(lstm_loss(c, &tape, &bound, &data)?.item())
        },
        |_| Vec::new(),
        cfg,
        &mut rng,
    )
}

/// The standard suite: actor 8-256-256-10, critic 13-256-256-1,
/// value 8-256-256-1 and a 4-unit LSTM cell fed 5-dimensional inputs.
pub fn run_suite(cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    let start = Instant::now();
    let shapes: [(&str, &[usize]); 3] = [
        ("actor 8-256-256-10", &[8, 256, 256, 10]),
        ("critic 13-256-256-1", &[13, 256, 256, 1]),
        ("value 8-256-256-1", &[8, 256, 256, 1]),
    ];
    let mut cases = Vec::new();
    for (name, sizes) in shapes {
        let mut total = CaseReport::new(name);
        for seed in 0..cfg.seeds {
            total.absorb(check_mlp(sizes, seed, cfg)?);
        }
        cases.push(total);
    }
    let mut lstm = CaseReport::new("lstm 5->4");
    for seed in 0..cfg.seeds {
        lstm.absorb(check_lstm(5, 4, seed, cfg)?);
    }
    cases.push(lstm);
    Ok(GradCheckReport {
        cases,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_mlp_passes() {
        let cfg = GradCheckConfig {
            coords_per_tensor: 1000,
            ..Default::default()
        };
        for seed in 0..5 {
            let r = check_mlp(&[3, 6, 5, 2], seed, &cfg).unwrap();
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn lstm_passes() {
        let cfg = GradCheckConfig {
            coords_per_tensor: 1000,
            ..Default::default()
        };
        let r = check_lstm(3, 4, 1, &cfg).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.checked, 4 * (4 * 3 + 4 * 4 + 4));
    }

    #[test]
    fn wrong_gradient_is_caught() {
        let cfg = GradCheckConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let model = vec![Array2::from_elem((1, 1), 2.0)];
        let wrong = GradientSet {
            tensors: vec![Array2::from_elem((1, 1), 5.0)],
        };
        let r = check_model(
            "x^2",
            &model,
            &wrong,
            |m: &Vec<Array2<f64>>| Ok(m[0][[0, 0]].powi(2)),
            |_| Vec::new(),
            &cfg,
            &mut rng,
        )
        .unwrap();
        assert_eq!(r.failures, 1);
        assert!(!r.passed());
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!(relative_error(1.0, 1.00001) < 1e-4);
        assert!(relative_error(0.0, 1e-12) < 1e-4);
    }
}
