//! Define-by-run tape. Every operation appends a node holding its value;
//! inputs always have smaller ids, so one reverse sweep over the node list
//! is a valid backward pass.

use super::params::ParameterSet;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Probabilities are clamped to `[BCE_CLAMP, 1 - BCE_CLAMP]` inside the loss.
pub const BCE_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Cols,
}

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Param(String),
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    AddRowBias(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    Concat(Vec<NodeId>),
    StackRows(Vec<NodeId>),
    Slice {
        input: NodeId,
        axis: Axis,
        start: usize,
    },
    Transpose(NodeId),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Softmax(NodeId),
    Sum(NodeId),
    Mean(NodeId),
    BceMean {
        probs: NodeId,
        targets: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Tensor,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn shape_err(op: &'static str, a: &Tensor, b: &Tensor) -> Error {
    Error::ShapeMismatch {
        op,
        left: a.shape().to_vec(),
        right: b.shape().to_vec(),
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn constant(&mut self, t: Tensor) -> NodeId {
        self.push(Op::Constant, t)
    }

    /// Leaf bound to a named parameter; its gradient flows into that
    /// parameter's accumulator on backward.
    pub fn param(&mut self, params: &ParameterSet, name: &str) -> Result<NodeId> {
        let value = params
            .value(name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown parameter `{name}`")))?
            .clone();
        Ok(self.push(Op::Param(name.to_string()), value))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (m, k) = ta.dims2("matmul")?;
        let (k2, n) = tb.dims2("matmul")?;
        if k != k2 {
            return Err(shape_err("matmul", ta, tb));
        }
        let mut out = vec![0.0; m * n];
        let (ad, bd) = (ta.data(), tb.data());
        for i in 0..m {
            let row = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let av = ad[i * k + p];
                if av == 0.0 {
                    continue;
                }
                let brow = &bd[p * n..(p + 1) * n];
                for (o, &bv) in row.iter_mut().zip(brow) {
                    *o += av * bv;
                }
            }
        }
        Ok(self.push(Op::MatMul(a, b), Tensor::from_parts(vec![m, n], out)))
    }

    /// Elementwise sum of equal shapes, or a `[m, n]` matrix plus a bias of
    /// shape `[n]` or `[1, n]` added to every row.
    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() == tb.shape() {
            let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x + y).collect();
            return Ok(self.push(Op::Add(a, b), Tensor::from_parts(ta.shape().to_vec(), data)));
        }
        let bias_ok = ta.shape().len() == 2
            && ((tb.shape().len() == 1 && tb.shape()[0] == ta.shape()[1])
                || (tb.shape().len() == 2 && tb.shape()[0] == 1 && tb.shape()[1] == ta.shape()[1]));
        if !bias_ok {
            return Err(shape_err("add", ta, tb));
        }
        let n = ta.shape()[1];
        let data = ta
            .data()
            .iter()
            .enumerate()
            .map(|(i, x)| x + tb.data()[i % n])
            .collect();
        Ok(self.push(Op::AddRowBias(a, b), Tensor::from_parts(ta.shape().to_vec(), data)))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(shape_err("mul", ta, tb));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x * y).collect();
        Ok(self.push(Op::Mul(a, b), Tensor::from_parts(ta.shape().to_vec(), data)))
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> NodeId {
        let t = self.value(a);
        let data = t.data().iter().map(|x| x * factor).collect();
        let v = Tensor::from_parts(t.shape().to_vec(), data);
        self.push(Op::Scale(a, factor), v)
    }

    /// Concatenation along the last axis; leading dimensions must agree.
    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let first = *parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("concat of nothing".into()))?;
        let lead = {
            let s = self.value(first).shape();
            s[..s.len().saturating_sub(1)].to_vec()
        };
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let t = self.value(p);
            let s = t.shape();
            if s.is_empty() || s[..s.len() - 1] != lead[..] {
                return Err(shape_err("concat", self.value(first), t));
            }
            widths.push(t.last_dim());
        }
        let rows: usize = lead.iter().product();
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for (&p, &w) in parts.iter().zip(&widths) {
                data.extend_from_slice(&self.value(p).data()[r * w..(r + 1) * w]);
            }
        }
        let mut shape = lead;
        shape.push(total);
        Ok(self.push(Op::Concat(parts.to_vec()), Tensor::from_parts(shape, data)))
    }

    /// Concatenation of rank-2 tensors along the first axis.
    pub fn stack_rows(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let first = *parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("stack of nothing".into()))?;
        let (_, cols) = self.value(first).dims2("stack_rows")?;
        let mut rows = 0;
        let mut data = Vec::new();
        for &p in parts {
            let t = self.value(p);
            let (r, c) = t.dims2("stack_rows")?;
            if c != cols {
                return Err(shape_err("stack_rows", self.value(first), t));
            }
            rows += r;
            data.extend_from_slice(t.data());
        }
        Ok(self.push(Op::StackRows(parts.to_vec()), Tensor::from_parts(vec![rows, cols], data)))
    }

    /// `len` rows or columns of a rank-2 tensor starting at `start`.
    pub fn slice(&mut self, input: NodeId, axis: Axis, start: usize, len: usize) -> Result<NodeId> {
        let t = self.value(input);
        let (r, c) = t.dims2("slice")?;
        let limit = if axis == Axis::Rows { r } else { c };
        if start + len > limit || len == 0 {
            return Err(Error::ShapeMismatch {
                op: "slice",
                left: t.shape().to_vec(),
                right: vec![start, len],
            });
        }
        let (shape, data) = match axis {
            Axis::Rows => (vec![len, c], t.data()[start * c..(start + len) * c].to_vec()),
            Axis::Cols => {
                let mut d = Vec::with_capacity(r * len);
                for row in 0..r {
                    d.extend_from_slice(&t.data()[row * c + start..row * c + start + len]);
                }
                (vec![r, len], d)
            }
        };
        Ok(self.push(Op::Slice { input, axis, start }, Tensor::from_parts(shape, data)))
    }

    pub fn transpose(&mut self, a: NodeId) -> Result<NodeId> {
        let t = self.value(a);
        let (r, c) = t.dims2("transpose")?;
        let mut data = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = t.data()[i * c + j];
            }
        }
        Ok(self.push(Op::Transpose(a), Tensor::from_parts(vec![c, r], data)))
    }

    fn unary(&mut self, a: NodeId, op: Op, f: impl Fn(f64) -> f64) -> NodeId {
        let t = self.value(a);
        let v = Tensor::from_parts(t.shape().to_vec(), t.data().iter().map(|&x| f(x)).collect());
        self.push(op, v)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        self.unary(a, Op::Sigmoid(a), sigmoid)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        self.unary(a, Op::Tanh(a), f64::tanh)
    }

    /// Softmax along the last axis, computed after subtracting the row max.
    pub fn softmax(&mut self, a: NodeId) -> NodeId {
        let t = self.value(a);
        let w = t.last_dim();
        let mut data = t.data().to_vec();
        for row in data.chunks_mut(w) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for x in row.iter_mut() {
                *x = (*x - max).exp();
                z += *x;
            }
            for x in row.iter_mut() {
                *x /= z;
            }
        }
        let v = Tensor::from_parts(t.shape().to_vec(), data);
        self.push(Op::Softmax(a), v)
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let s = self.value(a).data().iter().sum();
        self.push(Op::Sum(a), Tensor::scalar(s))
    }

    pub fn mean(&mut self, a: NodeId) -> NodeId {
        let t = self.value(a);
        let s = t.data().iter().sum::<f64>() / t.len() as f64;
        self.push(Op::Mean(a), Tensor::scalar(s))
    }

    /// Mean binary cross-entropy of `probs` against 0/1 `targets`.
    pub fn bce_mean(&mut self, probs: NodeId, targets: &[f64]) -> Result<NodeId> {
        let t = self.value(probs);
        if t.len() != targets.len() || targets.is_empty() {
            return Err(Error::LengthMismatch {
                left: t.len(),
                right: targets.len(),
            });
        }
        let loss = t
            .data()
            .iter()
            .zip(targets)
            .map(|(&p, &y)| bce(p, y))
            .sum::<f64>()
            / targets.len() as f64;
        Ok(self.push(
            Op::BceMean {
                probs,
                targets: targets.to_vec(),
            },
            Tensor::scalar(loss),
        ))
    }

    /// Reverse sweep from a scalar node; returns the adjoint of every node.
    /// Nodes that do not influence the loss get `None`.
    pub fn adjoints(&self, loss: NodeId) -> Result<Vec<Option<Vec<f64>>>> {
        if self.value(loss).len() != 1 {
            return Err(Error::InvalidArgument(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(grads)
    }

    /// Accumulates dloss/dparam into `params` for every parameter leaf.
    pub fn backward(&self, loss: NodeId, params: &mut ParameterSet) -> Result<()> {
        let grads = self.adjoints(loss)?;
        for (node, g) in self.nodes.iter().zip(grads) {
            if let (Op::Param(name), Some(g)) = (&node.op, g) {
                params.accumulate(name, &g)?;
            }
        }
        Ok(())
    }

    fn propagate(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[i];
        let out = node.value.data();
        let mut acc = |id: NodeId, f: &dyn Fn(&mut [f64])| {
            let len = self.nodes[id.0].value.len();
            let slot = grads[id.0].get_or_insert_with(|| vec![0.0; len]);
            f(slot);
        };
        match &node.op {
            Op::Constant | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (m, k) = (ta.shape()[0], ta.shape()[1]);
                let n = tb.shape()[1];
                let (ad, bd) = (ta.data(), tb.data());
                acc(*a, &|ga| {
                    for r in 0..m {
                        let grow = &g[r * n..(r + 1) * n];
                        for p in 0..k {
                            let brow = &bd[p * n..(p + 1) * n];
                            ga[r * k + p] += grow.iter().zip(brow).map(|(x, y)| x * y).sum::<f64>();
                        }
                    }
                });
                acc(*b, &|gb| {
                    for r in 0..m {
                        let grow = &g[r * n..(r + 1) * n];
                        for p in 0..k {
                            let av = ad[r * k + p];
                            if av == 0.0 {
                                continue;
                            }
                            for (o, &gv) in gb[p * n..(p + 1) * n].iter_mut().zip(grow) {
                                *o += av * gv;
                            }
                        }
                    }
                });
            }
            Op::Add(a, b) => {
                acc(*a, &|ga| ga.iter_mut().zip(g).for_each(|(o, x)| *o += x));
                acc(*b, &|gb| gb.iter_mut().zip(g).for_each(|(o, x)| *o += x));
            }
            Op::AddRowBias(a, b) => {
                let n = self.value(*b).len();
                acc(*a, &|ga| ga.iter_mut().zip(g).for_each(|(o, x)| *o += x));
                acc(*b, &|gb| {
                    for (j, x) in g.iter().enumerate() {
                        gb[j % n] += x;
                    }
                });
            }
            Op::Mul(a, b) => {
                let (va, vb) = (self.value(*a).data(), self.value(*b).data());
                acc(*a, &|ga| {
                    for j in 0..g.len() {
                        ga[j] += g[j] * vb[j];
                    }
                });
                acc(*b, &|gb| {
                    for j in 0..g.len() {
                        gb[j] += g[j] * va[j];
                    }
                });
            }
            Op::Scale(a, f) => acc(*a, &|ga| ga.iter_mut().zip(g).for_each(|(o, x)| *o += f * x)),
            Op::Concat(parts) => {
                let total = node.value.last_dim();
                let rows = g.len() / total;
                let mut offset = 0;
                for p in parts {
                    let w = self.value(*p).last_dim();
                    acc(*p, &|gp| {
                        for r in 0..rows {
                            for j in 0..w {
                                gp[r * w + j] += g[r * total + offset + j];
                            }
                        }
                    });
                    offset += w;
                }
            }
            Op::StackRows(parts) => {
                let mut offset = 0;
                for p in parts {
                    let len = self.value(*p).len();
                    acc(*p, &|gp| {
                        gp.iter_mut().zip(&g[offset..offset + len]).for_each(|(o, x)| *o += x)
                    });
                    offset += len;
                }
            }
            Op::Slice { input, axis, start } => {
                let c_in = self.value(*input).shape()[1];
                let (r_out, c_out) = (node.value.shape()[0], node.value.shape()[1]);
                acc(*input, &|gi| match axis {
                    Axis::Rows => {
                        for (o, x) in gi[start * c_in..(start + r_out) * c_in].iter_mut().zip(g) {
                            *o += x;
                        }
                    }
                    Axis::Cols => {
                        for r in 0..r_out {
                            for j in 0..c_out {
                                gi[r * c_in + start + j] += g[r * c_out + j];
                            }
                        }
                    }
                });
            }
            Op::Transpose(a) => {
                let (r, c) = (node.value.shape()[1], node.value.shape()[0]);
                acc(*a, &|ga| {
                    for i in 0..r {
                        for j in 0..c {
                            ga[i * c + j] += g[j * r + i];
                        }
                    }
                });
            }
            Op::Sigmoid(a) => acc(*a, &|ga| {
                for j in 0..g.len() {
                    ga[j] += g[j] * out[j] * (1.0 - out[j]);
                }
            }),
            Op::Tanh(a) => acc(*a, &|ga| {
                for j in 0..g.len() {
                    ga[j] += g[j] * (1.0 - out[j] * out[j]);
                }
            }),
            Op::Softmax(a) => {
                let w = node.value.last_dim();
                acc(*a, &|ga| {
                    for r in 0..g.len() / w {
                        let (gr, yr) = (&g[r * w..(r + 1) * w], &out[r * w..(r + 1) * w]);
                        let dot: f64 = gr.iter().zip(yr).map(|(x, y)| x * y).sum();
                        for j in 0..w {
                            ga[r * w + j] += yr[j] * (gr[j] - dot);
                        }
                    }
                });
            }
            Op::Sum(a) => acc(*a, &|ga| ga.iter_mut().for_each(|o| *o += g[0])),
            Op::Mean(a) => {
                let n = self.value(*a).len() as f64;
                acc(*a, &|ga| ga.iter_mut().for_each(|o| *o += g[0] / n));
            }
            Op::BceMean { probs, targets } => {
                let p = self.value(*probs).data();
                let n = targets.len() as f64;
                acc(*probs, &|gp| {
                    for j in 0..targets.len() {
                        if p[j] <= BCE_CLAMP || p[j] >= 1.0 - BCE_CLAMP {
                            continue;
                        }
                        gp[j] += g[0] * (p[j] - targets[j]) / (p[j] * (1.0 - p[j])) / n;
                    }
                });
            }
        }
    }
}

/// Binary cross-entropy of one probability, clamped away from 0 and 1.
pub fn bce(p: f64, y: f64) -> f64 {
    let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}
