//! Reverse-mode differentiation over a linear tape of matrix operations.
//!
//! Forward values are computed eagerly as ops are recorded; `backward`
//! replays the tape in reverse and accumulates one gradient per tracked
//! node. A fresh tape is built for every batch; tapes never outlive the
//! batch they were recorded for.

use crate::error::{Error, Result};
use crate::numcore::matrix::{sigmoid, Matrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul { a: NodeId, b: NodeId },
    Add { a: NodeId, b: NodeId },
    Sub { a: NodeId, b: NodeId },
    Mul { a: NodeId, b: NodeId },
    Tanh { a: NodeId },
    Sigmoid { a: NodeId },
    // out[r][c] = a[r][c] + bias[0][c]
    AddBias { a: NodeId, bias: NodeId },
    Sum { a: NodeId },
    Scale { a: NodeId, factor: f64 },
    MseLoss { pred: NodeId, target: NodeId },
}

struct Node {
    value: Matrix,
    op: Op,
    // true iff this node is a parameter or depends on one
    tracked: bool,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: Vec<NodeId>,
}

/// Gradients from one backward pass, indexed by tape node.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> Option<&Matrix> {
        self.grads[id.0].as_ref()
    }

    /// Gradient for a parameter node. Parameters the loss never touched get
    /// an exact zero matrix of the parameter's shape.
    pub fn for_param(&self, tape: &Tape, id: NodeId) -> Matrix {
        match &self.grads[id.0] {
            Some(g) => g.clone(),
            None => {
                let (r, c) = tape.value(id).shape();
                Matrix::zeros(r, c)
            }
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Matrix, op: Op, tracked: bool) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node { value, op, tracked });
        id
    }

    /// Insert an untracked value (inputs, targets, masks, frozen embeddings).
    pub fn constant(&mut self, value: Matrix) -> NodeId {
        self.push(value, Op::Leaf, false)
    }

    /// Insert a trainable parameter; backward will produce a gradient for it.
    pub fn parameter(&mut self, value: Matrix) -> NodeId {
        let id = self.push(value, Op::Leaf, true);
        self.params.push(id);
        id
    }

    pub fn value(&self, id: NodeId) -> &Matrix {
        &self.nodes[id.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn tracked(&self, id: NodeId) -> bool {
        self.nodes[id.0].tracked
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).matmul(self.value(b))?;
        let tracked = self.tracked(a) || self.tracked(b);
        Ok(self.push(value, Op::MatMul { a, b }, tracked))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).add(self.value(b))?;
        let tracked = self.tracked(a) || self.tracked(b);
        Ok(self.push(value, Op::Add { a, b }, tracked))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).sub(self.value(b))?;
        let tracked = self.tracked(a) || self.tracked(b);
        Ok(self.push(value, Op::Sub { a, b }, tracked))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).mul(self.value(b))?;
        let tracked = self.tracked(a) || self.tracked(b);
        Ok(self.push(value, Op::Mul { a, b }, tracked))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).map(f64::tanh);
        let tracked = self.tracked(a);
        self.push(value, Op::Tanh { a }, tracked)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).map(sigmoid);
        let tracked = self.tracked(a);
        self.push(value, Op::Sigmoid { a }, tracked)
    }

    /// Row-broadcast add of a 1 x m bias onto an n x m matrix.
    pub fn add_bias(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId> {
        let (av, bv) = (self.value(a), self.value(bias));
        if bv.rows() != 1 || av.cols() != bv.cols() {
            return Err(Error::shape("add_bias", av.shape(), bv.shape()));
        }
        let value = Matrix::from_fn(av.rows(), av.cols(), |r, c| av.get(r, c) + bv.get(0, c));
        let tracked = self.tracked(a) || self.tracked(bias);
        Ok(self.push(value, Op::AddBias { a, bias }, tracked))
    }

    /// Sum of all elements as a 1x1 node.
    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let value = Matrix::from_vec(1, 1, vec![self.value(a).sum()]).expect("finite sum");
        let tracked = self.tracked(a);
        self.push(value, Op::Sum { a }, tracked)
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> NodeId {
        let value = self.value(a).scale(factor);
        let tracked = self.tracked(a);
        self.push(value, Op::Scale { a, factor }, tracked)
    }

    /// Mean over every element of the squared difference, as a 1x1 node.
    pub fn mse_loss(&mut self, pred: NodeId, target: NodeId) -> Result<NodeId> {
        let (pv, tv) = (self.value(pred), self.value(target));
        if pv.shape() != tv.shape() {
            return Err(Error::shape("mse_loss", pv.shape(), tv.shape()));
        }
        let n = pv.numel() as f64;
        let sum: f64 = pv
            .as_slice()
            .iter()
            .zip(tv.as_slice())
            .map(|(&p, &t)| (p - t) * (p - t))
            .sum();
        // written through the raw slice so an overflowing loss surfaces as a
        // non-finite value the trainer can detect, instead of erroring here
        let mut value = Matrix::zeros(1, 1);
        value.as_mut_slice()[0] = sum / n;
        let tracked = self.tracked(pred) || self.tracked(target);
        Ok(self.push(value, Op::MseLoss { pred, target }, tracked))
    }

    /// Reverse pass from a scalar loss node. Returns one gradient per
    /// tracked node; parameters off the loss path read back as exact zeros.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.shape() != (1, 1) {
            return Err(Error::Contract(format!(
                "backward requires a scalar loss, got {}x{}",
                lv.rows(),
                lv.cols()
            )));
        }
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Matrix::from_vec(1, 1, vec![1.0]).expect("unit seed"));

        for idx in (0..=loss.0).rev() {
            if !self.nodes[idx].tracked {
                continue;
            }
            let Some(g) = grads[idx].clone() else {
                continue;
            };
            match self.nodes[idx].op {
                Op::Leaf => {}
                Op::MatMul { a, b } => {
                    if self.tracked(a) {
                        let delta = g.matmul(&self.value(b).transpose())?;
                        accumulate(&mut grads[a.0], delta)?;
                    }
                    if self.tracked(b) {
                        let delta = self.value(a).transpose().matmul(&g)?;
                        accumulate(&mut grads[b.0], delta)?;
                    }
                }
                Op::Add { a, b } => {
                    if self.tracked(a) {
                        accumulate(&mut grads[a.0], g.clone())?;
                    }
                    if self.tracked(b) {
                        accumulate(&mut grads[b.0], g)?;
                    }
                }
                Op::Sub { a, b } => {
                    if self.tracked(a) {
                        accumulate(&mut grads[a.0], g.clone())?;
                    }
                    if self.tracked(b) {
                        accumulate(&mut grads[b.0], g.scale(-1.0))?;
                    }
                }
                Op::Mul { a, b } => {
                    if self.tracked(a) {
                        accumulate(&mut grads[a.0], g.mul(self.value(b))?)?;
                    }
                    if self.tracked(b) {
                        accumulate(&mut grads[b.0], g.mul(self.value(a))?)?;
                    }
                }
                Op::Tanh { a } => {
                    if self.tracked(a) {
                        let y = &self.nodes[idx].value;
                        let delta = Matrix::from_fn(y.rows(), y.cols(), |r, c| {
                            let t = y.get(r, c);
                            g.get(r, c) * (1.0 - t * t)
                        });
                        accumulate(&mut grads[a.0], delta)?;
                    }
                }
                Op::Sigmoid { a } => {
                    if self.tracked(a) {
                        let y = &self.nodes[idx].value;
                        let delta = Matrix::from_fn(y.rows(), y.cols(), |r, c| {
                            let s = y.get(r, c);
                            g.get(r, c) * s * (1.0 - s)
                        });
                        accumulate(&mut grads[a.0], delta)?;
                    }
                }
                Op::AddBias { a, bias } => {
                    if self.tracked(a) {
                        accumulate(&mut grads[a.0], g.clone())?;
                    }
                    if self.tracked(bias) {
                        accumulate(&mut grads[bias.0], g.col_sums())?;
                    }
                }
                Op::Sum { a } => {
                    if self.tracked(a) {
                        let v = self.value(a);
                        let seed = g.get(0, 0);
                        let delta = Matrix::from_fn(v.rows(), v.cols(), |_, _| seed);
                        accumulate(&mut grads[a.0], delta)?;
                    }
                }
                Op::Scale { a, factor } => {
                    if self.tracked(a) {
                        accumulate(&mut grads[a.0], g.scale(factor))?;
                    }
                }
                Op::MseLoss { pred, target } => {
                    let seed = g.get(0, 0);
                    let pv = self.value(pred);
                    let tv = self.value(target);
                    let scale = 2.0 * seed / pv.numel() as f64;
                    if self.tracked(pred) {
                        let delta = Matrix::from_fn(pv.rows(), pv.cols(), |r, c| {
                            scale * (pv.get(r, c) - tv.get(r, c))
                        });
                        accumulate(&mut grads[pred.0], delta)?;
                    }
                    if self.tracked(target) {
                        let delta = Matrix::from_fn(pv.rows(), pv.cols(), |r, c| {
                            -scale * (pv.get(r, c) - tv.get(r, c))
                        });
                        accumulate(&mut grads[target.0], delta)?;
                    }
                }
            }
        }
        Ok(Gradients { grads })
    }
}

fn accumulate(slot: &mut Option<Matrix>, delta: Matrix) -> Result<()> {
    match slot {
        Some(m) => m.add_assign(&delta),
        None => {
            *slot = Some(delta);
            Ok(())
        }
    }
}
