//! Reverse-mode differentiation over batched matrices.
//!
//! Every value on the tape is a row-major `rows × cols` matrix where rows
//! index the batch. The supported primitive set is deliberately closed:
//! dense (affine) maps, elementwise arithmetic, the rectifier, tanh, sigmoid,
//! exp, log, square, clamp, min-of-two, column slicing/concatenation and
//! reductions (row sums and the full mean).
//!
//! Leaves are either trainable (gradients are tracked) or constants. A node
//! requires a gradient iff one of its inputs does, so constants double as a
//! stop-gradient and backward never spends work on them.

use std::cell::{Cell, Ref, RefCell};

use ndarray::{s, Array2, Axis, Zip};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Dense { x: usize, w: usize, b: Option<usize> },
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    AddRow(usize, usize),
    Scale(usize, f64),
    Offset(usize),
    Relu(usize),
    Tanh(usize),
    Sigmoid(usize),
    Exp(usize),
    Log(usize),
    Square(usize),
    Clamp(usize, f64, f64),
    Min(usize, usize),
    SliceCols(usize, usize),
    ConcatCols(usize, usize),
    SumCols(usize),
    Mean(usize),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Dense { .. } => "dense",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::AddRow(..) => "add_row",
            Op::Scale(..) => "scale",
            Op::Offset(..) => "offset",
            Op::Relu(..) => "relu",
            Op::Tanh(..) => "tanh",
            Op::Sigmoid(..) => "sigmoid",
            Op::Exp(..) => "exp",
            Op::Log(..) => "log",
            Op::Square(..) => "square",
            Op::Clamp(..) => "clamp",
            Op::Min(..) => "min",
            Op::SliceCols(..) => "slice_cols",
            Op::ConcatCols(..) => "concat_cols",
            Op::SumCols(..) => "sum_cols",
            Op::Mean(..) => "mean",
        }
    }
}

struct Node {
    value: Array2<f64>,
    op: Op,
    requires_grad: bool,
}

#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    non_finite: Cell<Option<&'static str>>,
}

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Var").field("id", &self.id).finish()
    }
}

/// Gradients produced by [`Tape::backward`], indexed by node.
pub struct Gradients {
    grads: Vec<Option<Array2<f64>>>,
}

impl Gradients {
    /// Gradient with respect to the leaf `v`; zeros when `v` is off the loss
    /// path. Intermediate nodes do not retain gradients.
    pub fn wrt(&self, v: Var<'_>) -> Array2<f64> {
        match &self.grads[v.id] {
            Some(g) => g.clone(),
            None => Array2::zeros(v.shape()),
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&self, value: Array2<f64>, op: Op, requires_grad: bool) -> Var<'_> {
        if self.non_finite.get().is_none() && !value.iter().all(|v| v.is_finite()) {
            self.non_finite.set(Some(op.name()));
        }
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    /// A trainable leaf.
    pub fn param(&self, value: Array2<f64>) -> Var<'_> {
        self.push(value, Op::Leaf, true)
    }

    /// A constant leaf; gradients never flow into it.
    pub fn constant(&self, value: Array2<f64>) -> Var<'_> {
        self.push(value, Op::Leaf, false)
    }

    pub fn scalar(&self, value: f64) -> Var<'_> {
        self.constant(Array2::from_elem((1, 1), value))
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The first primitive that produced a non-finite value, if any.
    pub fn non_finite(&self) -> Option<&'static str> {
        self.non_finite.get()
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.non_finite.get() {
            Some(primitive) => Err(Error::NonFinite { primitive }),
            None => Ok(()),
        }
    }

    /// Reverse pass from a 1×1 node.
    pub fn backward(&self, loss: Var<'_>) -> Result<Gradients> {
        self.check_finite()?;
        let nodes = self.nodes.borrow();
        assert_eq!(nodes[loss.id].value.dim(), (1, 1), "backward needs a scalar");
        let mut grads: Vec<Option<Array2<f64>>> = vec![None; nodes.len()];
        if nodes[loss.id].requires_grad {
            grads[loss.id] = Some(Array2::ones((1, 1)));
        }

        for id in (0..=loss.id).rev() {
            let node = &nodes[id];
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[id].take() else { continue };
            let needs = |i: usize| nodes[i].requires_grad;
            let val = |i: usize| &nodes[i].value;
            let mut acc = |i: usize, d: Array2<f64>| match &mut grads[i] {
                Some(existing) => *existing += &d,
                slot @ None => *slot = Some(d),
            };

            match node.op {
                Op::Leaf => unreachable!(),
                Op::Dense { x, w, b } => {
                    if needs(x) {
                        acc(x, g.dot(val(w)));
                    }
                    if needs(w) {
                        acc(w, g.t().dot(val(x)));
                    }
                    if let Some(b) = b {
                        if needs(b) {
                            acc(b, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                        }
                    }
                }
                Op::Add(a, b) => {
                    if needs(a) {
                        acc(a, g.clone());
                    }
                    if needs(b) {
                        acc(b, g);
                    }
                }
                Op::Sub(a, b) => {
                    if needs(a) {
                        acc(a, g.clone());
                    }
                    if needs(b) {
                        acc(b, -g);
                    }
                }
                Op::Mul(a, b) => {
                    if needs(a) {
                        acc(a, &g * val(b));
                    }
                    if needs(b) {
                        acc(b, &g * val(a));
                    }
                }
                Op::AddRow(a, row) => {
                    if needs(row) {
                        acc(row, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    }
                    if needs(a) {
                        acc(a, g);
                    }
                }
                Op::Scale(a, c) => acc(a, g * c),
                Op::Offset(a) => acc(a, g),
                Op::Relu(a) => {
                    let mut d = g;
                    Zip::from(&mut d).and(val(a)).for_each(|d, &x| {
                        if x <= 0.0 {
                            *d = 0.0;
                        }
                    });
                    acc(a, d);
                }
                Op::Tanh(a) => {
                    let mut d = g;
                    Zip::from(&mut d)
                        .and(&node.value)
                        .for_each(|d, &y| *d *= 1.0 - y * y);
                    acc(a, d);
                }
                Op::Sigmoid(a) => {
                    let mut d = g;
                    Zip::from(&mut d)
                        .and(&node.value)
                        .for_each(|d, &y| *d *= y * (1.0 - y));
                    acc(a, d);
                }
                Op::Exp(a) => acc(a, g * &node.value),
                Op::Log(a) => acc(a, g / val(a)),
                Op::Square(a) => acc(a, g * val(a) * 2.0),
                Op::Clamp(a, lo, hi) => {
                    let mut d = g;
                    Zip::from(&mut d).and(val(a)).for_each(|d, &x| {
                        if x < lo || x > hi {
                            *d = 0.0;
                        }
                    });
                    acc(a, d);
                }
                Op::Min(a, b) => {
                    // Ties route the gradient to the first operand.
                    let mut da = g.clone();
                    let mut db = g;
                    Zip::from(&mut da)
                        .and(&mut db)
                        .and(val(a))
                        .and(val(b))
                        .for_each(|da, db, &x, &y| {
                            if x <= y {
                                *db = 0.0;
                            } else {
                                *da = 0.0;
                            }
                        });
                    if needs(a) {
                        acc(a, da);
                    }
                    if needs(b) {
                        acc(b, db);
                    }
                }
                Op::SliceCols(a, start) => {
                    let mut d = Array2::zeros(val(a).dim());
                    let end = start + g.ncols();
                    d.slice_mut(s![.., start..end]).assign(&g);
                    acc(a, d);
                }
                Op::ConcatCols(a, b) => {
                    let split = val(a).ncols();
                    if needs(a) {
                        acc(a, g.slice(s![.., ..split]).to_owned());
                    }
                    if needs(b) {
                        acc(b, g.slice(s![.., split..]).to_owned());
                    }
                }
                Op::SumCols(a) => {
                    let cols = val(a).ncols();
                    let d = g
                        .broadcast((g.nrows(), cols))
                        .expect("row-sum gradient broadcast")
                        .to_owned();
                    acc(a, d);
                }
                Op::Mean(a) => {
                    let n = val(a).len() as f64;
                    acc(a, Array2::from_elem(val(a).dim(), g[[0, 0]] / n));
                }
            }
        }
        Ok(Gradients { grads })
    }
}

impl<'t> Var<'t> {
    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn value(&self) -> Ref<'t, Array2<f64>> {
        Ref::map(self.tape.nodes.borrow(), |n| &n[self.id].value)
    }

    /// Value of a 1×1 node.
    pub fn item(&self) -> f64 {
        let v = self.value();
        assert_eq!(v.dim(), (1, 1), "item() on a non-scalar node");
        v[[0, 0]]
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value().dim()
    }

    pub fn requires_grad(&self) -> bool {
        self.tape.nodes.borrow()[self.id].requires_grad
    }

    fn unary(self, op: Op, f: impl FnOnce(&Array2<f64>) -> Array2<f64>) -> Var<'t> {
        let (value, rg) = {
            let nodes = self.tape.nodes.borrow();
            let n = &nodes[self.id];
            (f(&n.value), n.requires_grad)
        };
        self.tape.push(value, op, rg)
    }

    fn binary(
        self,
        other: Var<'t>,
        op: Op,
        f: impl FnOnce(&Array2<f64>, &Array2<f64>) -> Array2<f64>,
    ) -> Var<'t> {
        debug_assert!(std::ptr::eq(self.tape, other.tape));
        let (value, rg) = {
            let nodes = self.tape.nodes.borrow();
            let (a, b) = (&nodes[self.id], &nodes[other.id]);
            (f(&a.value, &b.value), a.requires_grad || b.requires_grad)
        };
        self.tape.push(value, op, rg)
    }

    fn same_shape(&self, other: &Var<'t>, what: &str) {
        assert_eq!(self.shape(), other.shape(), "{what}: shape mismatch");
    }

    /// `self · wᵀ + b` with `w` shaped (out × in) and `b` a (1 × out) row.
    pub fn dense(self, w: Var<'t>, b: Option<Var<'t>>) -> Var<'t> {
        let (value, rg) = {
            let nodes = self.tape.nodes.borrow();
            let (x, wn) = (&nodes[self.id], &nodes[w.id]);
            assert_eq!(x.value.ncols(), wn.value.ncols(), "dense: input width");
            let mut y = x.value.dot(&wn.value.t());
            let mut rg = x.requires_grad || wn.requires_grad;
            if let Some(b) = b {
                let bn = &nodes[b.id];
                assert_eq!(bn.value.dim(), (1, y.ncols()), "dense: bias shape");
                y += &bn.value;
                rg |= bn.requires_grad;
            }
            (y, rg)
        };
        self.tape.push(
            value,
            Op::Dense {
                x: self.id,
                w: w.id,
                b: b.map(|b| b.id),
            },
            rg,
        )
    }

    pub fn add(self, other: Var<'t>) -> Var<'t> {
        self.same_shape(&other, "add");
        self.binary(other, Op::Add(self.id, other.id), |a, b| a + b)
    }

    pub fn sub(self, other: Var<'t>) -> Var<'t> {
        self.same_shape(&other, "sub");
        self.binary(other, Op::Sub(self.id, other.id), |a, b| a - b)
    }

    pub fn mul(self, other: Var<'t>) -> Var<'t> {
        self.same_shape(&other, "mul");
        self.binary(other, Op::Mul(self.id, other.id), |a, b| a * b)
    }

    /// Adds a (1 × cols) row to every row.
    pub fn add_row(self, row: Var<'t>) -> Var<'t> {
        assert_eq!(row.shape(), (1, self.shape().1), "add_row: row shape");
        self.binary(row, Op::AddRow(self.id, row.id), |a, r| a + r)
    }

    pub fn scale(self, c: f64) -> Var<'t> {
        self.unary(Op::Scale(self.id, c), |a| a * c)
    }

    pub fn offset(self, c: f64) -> Var<'t> {
        self.unary(Op::Offset(self.id), |a| a + c)
    }

    pub fn neg(self) -> Var<'t> {
        self.scale(-1.0)
    }

    pub fn relu(self) -> Var<'t> {
        self.unary(Op::Relu(self.id), |a| a.mapv(|x| x.max(0.0)))
    }

    pub fn tanh(self) -> Var<'t> {
        self.unary(Op::Tanh(self.id), |a| a.mapv(f64::tanh))
    }

    pub fn sigmoid(self) -> Var<'t> {
        self.unary(Op::Sigmoid(self.id), |a| a.mapv(sigmoid))
    }

    pub fn exp(self) -> Var<'t> {
        self.unary(Op::Exp(self.id), |a| a.mapv(f64::exp))
    }

    pub fn log(self) -> Var<'t> {
        self.unary(Op::Log(self.id), |a| a.mapv(f64::ln))
    }

    pub fn square(self) -> Var<'t> {
        self.unary(Op::Square(self.id), |a| a.mapv(|x| x * x))
    }

    pub fn clamp(self, lo: f64, hi: f64) -> Var<'t> {
        self.unary(Op::Clamp(self.id, lo, hi), |a| a.mapv(|x| x.clamp(lo, hi)))
    }

    pub fn min(self, other: Var<'t>) -> Var<'t> {
        self.same_shape(&other, "min");
        self.binary(other, Op::Min(self.id, other.id), |a, b| {
            let mut out = a.clone();
            Zip::from(&mut out).and(b).for_each(|o, &y| {
                if y < *o {
                    *o = y;
                }
            });
            out
        })
    }

    pub fn slice_cols(self, start: usize, end: usize) -> Var<'t> {
        assert!(start < end && end <= self.shape().1, "slice_cols: range");
        self.unary(Op::SliceCols(self.id, start), |a| {
            a.slice(s![.., start..end]).to_owned()
        })
    }

    pub fn concat_cols(self, other: Var<'t>) -> Var<'t> {
        assert_eq!(self.shape().0, other.shape().0, "concat_cols: row count");
        self.binary(other, Op::ConcatCols(self.id, other.id), |a, b| {
            ndarray::concatenate(Axis(1), &[a.view(), b.view()]).expect("concat")
        })
    }

    /// Per-row sum, producing a (rows × 1) column.
    pub fn sum_cols(self) -> Var<'t> {
        self.unary(Op::SumCols(self.id), |a| {
            a.sum_axis(Axis(1)).insert_axis(Axis(1))
        })
    }

    /// Mean over every entry, producing a 1×1 node.
    pub fn mean(self) -> Var<'t> {
        self.unary(Op::Mean(self.id), |a| {
            Array2::from_elem((1, 1), a.mean().unwrap_or(0.0))
        })
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
