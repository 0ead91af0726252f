//! Reverse-mode differentiation over a fixed, closed op set.
//!
//! A [`Tape`] records tensor operations in topological order. Calling
//! [`Tape::backward`] on a scalar node walks the records in reverse and
//! accumulates adjoints, returning one gradient per `requires_grad` leaf.
//!
//! The op set is deliberately closed: every loss and model in this crate is
//! composed from the operations below, so each backward rule can be checked
//! against central finite differences in isolation.

use super::tensor::Tensor;
use super::AutodiffError;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    /// Elementwise add; `broadcast_rhs` adds a length-`d` vector to every row.
    Add {
        lhs: NodeId,
        rhs: NodeId,
        broadcast_rhs: bool,
    },
    Sub {
        lhs: NodeId,
        rhs: NodeId,
    },
    Mul {
        lhs: NodeId,
        rhs: NodeId,
    },
    /// `lhs · rhs`, or `lhs · rhsᵀ` when `transpose_rhs` is set.
    MatMul {
        lhs: NodeId,
        rhs: NodeId,
        transpose_rhs: bool,
    },
    Relu {
        input: NodeId,
    },
    Exp {
        input: NodeId,
    },
    Log {
        input: NodeId,
    },
    Neg {
        input: NodeId,
    },
    Sum {
        input: NodeId,
    },
    Mean {
        input: NodeId,
    },
    Scale {
        input: NodeId,
        factor: f64,
    },
    MaxConst {
        input: NodeId,
        threshold: f64,
    },
    L2NormalizeRows {
        input: NodeId,
    },
    DotRows {
        lhs: NodeId,
        rhs: NodeId,
    },
    /// Row softmax over entries where the mask was 1; masked outputs are 0,
    /// which is all the backward rule needs.
    SoftmaxRowsMasked {
        input: NodeId,
    },
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Tensor,
    /// Leaf flag: gradient was requested for this leaf.
    requires_grad: bool,
    /// True when some `requires_grad` leaf feeds this node.
    needs_grad: bool,
}

/// Gradients returned by [`Tape::backward`], keyed by leaf node id.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of the root with respect to the given leaf, if the leaf was
    /// registered with `requires_grad`.
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.grads.get(id.index()).and_then(|g| g.as_ref())
    }
}

/// Append-only record of operations; single-writer by construction.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Forward value of a node.
    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.index()].value
    }

    /// Registers a graph leaf. Gradient accumulates there iff `requires_grad`.
    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> NodeId {
        self.push(Op::Leaf, value, requires_grad, requires_grad)
    }

    /// A leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.leaf(value, false)
    }

    fn push(&mut self, op: Op, value: Tensor, requires_grad: bool, needs_grad: bool) -> NodeId {
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
            needs_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn push_op(&mut self, op: Op, value: Tensor, inputs: &[NodeId]) -> NodeId {
        let needs = inputs.iter().any(|id| self.nodes[id.index()].needs_grad);
        self.push(op, value, false, needs)
    }

    fn check_same_shape(
        &self,
        op: &'static str,
        lhs: NodeId,
        rhs: NodeId,
    ) -> Result<(), AutodiffError> {
        let ls = self.value(lhs).shape();
        let rs = self.value(rhs).shape();
        if ls == rs {
            Ok(())
        } else {
            Err(AutodiffError::ShapeMismatch {
                op,
                lhs: ls.to_vec(),
                rhs: rs.to_vec(),
            })
        }
    }

    /// Elementwise sum. A rank-1 right operand of length `d` broadcasts over
    /// the rows of a rank-2 `[n, d]` left operand (bias addition).
    pub fn add(&mut self, lhs: NodeId, rhs: NodeId) -> Result<NodeId, AutodiffError> {
        let lv = self.value(lhs);
        let rv = self.value(rhs);
        let broadcast = lv.rank() == 2 && rv.rank() == 1 && rv.len() == lv.shape()[1];
        if !broadcast {
            self.check_same_shape("add", lhs, rhs)?;
        }
        let lv = self.value(lhs);
        let rv = self.value(rhs);
        let data: Vec<f64> = if broadcast {
            let d = rv.len();
            lv.data()
                .iter()
                .enumerate()
                .map(|(i, &a)| a + rv.data()[i % d])
                .collect()
        } else {
            lv.data()
                .iter()
                .zip(rv.data())
                .map(|(&a, &b)| a + b)
                .collect()
        };
        let value = Tensor::from_parts(lv.shape().to_vec(), data);
        Ok(self.push_op(
            Op::Add {
                lhs,
                rhs,
                broadcast_rhs: broadcast,
            },
            value,
            &[lhs, rhs],
        ))
    }

    /// Elementwise difference.
    pub fn sub(&mut self, lhs: NodeId, rhs: NodeId) -> Result<NodeId, AutodiffError> {
        self.check_same_shape("sub", lhs, rhs)?;
        let data: Vec<f64> = self
            .value(lhs)
            .data()
            .iter()
            .zip(self.value(rhs).data())
            .map(|(&a, &b)| a - b)
            .collect();
        let value = Tensor::from_parts(self.value(lhs).shape().to_vec(), data);
        Ok(self.push_op(Op::Sub { lhs, rhs }, value, &[lhs, rhs]))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, lhs: NodeId, rhs: NodeId) -> Result<NodeId, AutodiffError> {
        self.check_same_shape("mul", lhs, rhs)?;
        let data: Vec<f64> = self
            .value(lhs)
            .data()
            .iter()
            .zip(self.value(rhs).data())
            .map(|(&a, &b)| a * b)
            .collect();
        let value = Tensor::from_parts(self.value(lhs).shape().to_vec(), data);
        Ok(self.push_op(Op::Mul { lhs, rhs }, value, &[lhs, rhs]))
    }

    /// Matrix product of rank-2 tensors.
    pub fn matmul(&mut self, lhs: NodeId, rhs: NodeId) -> Result<NodeId, AutodiffError> {
        self.matmul_impl(lhs, rhs, false)
    }

    /// `lhs · rhsᵀ`; used for pairwise similarity matrices.
    pub fn matmul_transpose_rhs(
        &mut self,
        lhs: NodeId,
        rhs: NodeId,
    ) -> Result<NodeId, AutodiffError> {
        self.matmul_impl(lhs, rhs, true)
    }

    fn matmul_impl(
        &mut self,
        lhs: NodeId,
        rhs: NodeId,
        transpose_rhs: bool,
    ) -> Result<NodeId, AutodiffError> {
        let (m, k) = self.value(lhs).dims2("matmul")?;
        let (rr, rc) = self.value(rhs).dims2("matmul")?;
        let (inner, n) = if transpose_rhs { (rc, rr) } else { (rr, rc) };
        if k != inner {
            return Err(AutodiffError::ShapeMismatch {
                op: "matmul",
                lhs: self.value(lhs).shape().to_vec(),
                rhs: self.value(rhs).shape().to_vec(),
            });
        }
        let a = self.value(lhs).data();
        let b = self.value(rhs).data();
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                let mut acc = 0.0;
                for p in 0..k {
                    let bv = if transpose_rhs {
                        b[j * k + p]
                    } else {
                        b[p * n + j]
                    };
                    acc += a[i * k + p] * bv;
                }
                out[i * n + j] = acc;
            }
        }
        let value = Tensor::from_parts(vec![m, n], out);
        Ok(self.push_op(
            Op::MatMul {
                lhs,
                rhs,
                transpose_rhs,
            },
            value,
            &[lhs, rhs],
        ))
    }

    /// Elementwise `max(x, 0)`. The derivative at exactly 0 is taken as 0.
    pub fn relu(&mut self, input: NodeId) -> NodeId {
        let data: Vec<f64> = self
            .value(input)
            .data()
            .iter()
            .map(|&x| x.max(0.0))
            .collect();
        let value = Tensor::from_parts(self.value(input).shape().to_vec(), data);
        self.push_op(Op::Relu { input }, value, &[input])
    }

    /// Elementwise exponential.
    pub fn exp(&mut self, input: NodeId) -> NodeId {
        let data: Vec<f64> = self.value(input).data().iter().map(|&x| x.exp()).collect();
        let value = Tensor::from_parts(self.value(input).shape().to_vec(), data);
        self.push_op(Op::Exp { input }, value, &[input])
    }

    /// Elementwise natural logarithm; rejects non-positive inputs.
    pub fn log(&mut self, input: NodeId) -> Result<NodeId, AutodiffError> {
        if let Some(&bad) = self.value(input).data().iter().find(|&&x| x <= 0.0) {
            return Err(AutodiffError::LogDomain { value: bad });
        }
        let data: Vec<f64> = self.value(input).data().iter().map(|&x| x.ln()).collect();
        let value = Tensor::from_parts(self.value(input).shape().to_vec(), data);
        Ok(self.push_op(Op::Log { input }, value, &[input]))
    }

    /// Elementwise negation.
    pub fn neg(&mut self, input: NodeId) -> NodeId {
        let data: Vec<f64> = self.value(input).data().iter().map(|&x| -x).collect();
        let value = Tensor::from_parts(self.value(input).shape().to_vec(), data);
        self.push_op(Op::Neg { input }, value, &[input])
    }

    /// Sum of all entries, as a scalar node.
    pub fn sum(&mut self, input: NodeId) -> NodeId {
        let total: f64 = self.value(input).data().iter().sum();
        let value = Tensor::from_parts(Vec::new(), vec![total]);
        self.push_op(Op::Sum { input }, value, &[input])
    }

    /// Mean of all entries, as a scalar node.
    pub fn mean(&mut self, input: NodeId) -> NodeId {
        let n = self.value(input).len() as f64;
        let total: f64 = self.value(input).data().iter().sum();
        let value = Tensor::from_parts(Vec::new(), vec![total / n]);
        self.push_op(Op::Mean { input }, value, &[input])
    }

    /// Multiplication by a finite constant.
    pub fn scale(&mut self, input: NodeId, factor: f64) -> Result<NodeId, AutodiffError> {
        if !factor.is_finite() {
            return Err(AutodiffError::NonFinite {
                index: 0,
                value: factor,
            });
        }
        let data: Vec<f64> = self
            .value(input)
            .data()
            .iter()
            .map(|&x| factor * x)
            .collect();
        let value = Tensor::from_parts(self.value(input).shape().to_vec(), data);
        Ok(self.push_op(Op::Scale { input, factor }, value, &[input]))
    }

    /// Elementwise `max(x, threshold)`; derivative at the threshold is 0.
    pub fn max_with_constant(
        &mut self,
        input: NodeId,
        threshold: f64,
    ) -> Result<NodeId, AutodiffError> {
        if !threshold.is_finite() {
            return Err(AutodiffError::NonFinite {
                index: 0,
                value: threshold,
            });
        }
        let data: Vec<f64> = self
            .value(input)
            .data()
            .iter()
            .map(|&x| x.max(threshold))
            .collect();
        let value = Tensor::from_parts(self.value(input).shape().to_vec(), data);
        Ok(self.push_op(Op::MaxConst { input, threshold }, value, &[input]))
    }

    /// Scales each row of a rank-2 tensor to unit Euclidean norm.
    /// Zero rows are rejected: their gradient is undefined.
    pub fn l2_normalize_rows(&mut self, input: NodeId) -> Result<NodeId, AutodiffError> {
        let (n, d) = self.value(input).dims2("l2_normalize_rows")?;
        let x = self.value(input).data();
        let mut out = vec![0.0; n * d];
        for i in 0..n {
            let row = &x[i * d..(i + 1) * d];
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(AutodiffError::ZeroRow { row: i });
            }
            for j in 0..d {
                out[i * d + j] = row[j] / norm;
            }
        }
        let value = Tensor::from_parts(vec![n, d], out);
        Ok(self.push_op(Op::L2NormalizeRows { input }, value, &[input]))
    }

    /// Row-wise dot products of two `[n, d]` tensors, yielding shape `[n]`.
    pub fn dot_rows(&mut self, lhs: NodeId, rhs: NodeId) -> Result<NodeId, AutodiffError> {
        self.check_same_shape("dot_rows", lhs, rhs)?;
        let (n, d) = self.value(lhs).dims2("dot_rows")?;
        let a = self.value(lhs).data();
        let b = self.value(rhs).data();
        let out: Vec<f64> = (0..n)
            .map(|i| (0..d).map(|j| a[i * d + j] * b[i * d + j]).sum())
            .collect();
        let value = Tensor::from_parts(vec![n], out);
        Ok(self.push_op(Op::DotRows { lhs, rhs }, value, &[lhs, rhs]))
    }

    /// Max-shifted softmax over each row, restricted to entries where `mask`
    /// is 1. Masked positions produce 0 and receive no gradient. Every row
    /// must keep at least one entry.
    pub fn softmax_rows_with_mask(
        &mut self,
        input: NodeId,
        mask: &Tensor,
    ) -> Result<NodeId, AutodiffError> {
        let (n, d) = self.value(input).dims2("softmax_rows_with_mask")?;
        if mask.shape() != [n, d] {
            return Err(AutodiffError::ShapeMismatch {
                op: "softmax_rows_with_mask",
                lhs: vec![n, d],
                rhs: mask.shape().to_vec(),
            });
        }
        if let Some(&bad) = mask.data().iter().find(|&&m| m != 0.0 && m != 1.0) {
            return Err(AutodiffError::InvalidMask { value: bad });
        }
        let x = self.value(input).data();
        let mut out = vec![0.0; n * d];
        for i in 0..n {
            let row = &x[i * d..(i + 1) * d];
            let kept = mask.row(i);
            let max = row
                .iter()
                .zip(kept)
                .filter(|(_, &m)| m == 1.0)
                .map(|(&v, _)| v)
                .fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                return Err(AutodiffError::EmptyMaskRow { row: i });
            }
            let mut denom = 0.0;
            for j in 0..d {
                if kept[j] == 1.0 {
                    let e = (row[j] - max).exp();
                    out[i * d + j] = e;
                    denom += e;
                }
            }
            for j in 0..d {
                out[i * d + j] /= denom;
            }
        }
        let value = Tensor::from_parts(vec![n, d], out);
        Ok(self.push_op(Op::SoftmaxRowsMasked { input }, value, &[input]))
    }

    /// Reverse pass from a scalar root. Returns one gradient tensor per
    /// `requires_grad` leaf; every other node is absent from the result.
    pub fn backward(&self, root: NodeId) -> Result<Gradients, AutodiffError> {
        let root_value = self.value(root);
        if !root_value.is_scalar() {
            return Err(AutodiffError::NonScalar {
                shape: root_value.shape().to_vec(),
            });
        }
        let mut adjoints: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        adjoints[root.index()] = Some(vec![1.0]);

        for id in (0..=root.index()).rev() {
            if !self.nodes[id].needs_grad {
                adjoints[id] = None;
                continue;
            }
            let Some(dz) = adjoints[id].take() else {
                continue;
            };
            self.accumulate(id, &dz, &mut adjoints);
            if self.nodes[id].requires_grad {
                // Leaf: keep the adjoint around as the result.
                adjoints[id] = Some(dz);
            }
        }

        let grads = self
            .nodes
            .iter()
            .zip(adjoints)
            .map(|(node, adj)| match (node.requires_grad, adj) {
                (true, Some(buf)) => Some(Tensor::from_parts(node.value.shape().to_vec(), buf)),
                (true, None) => Some(node.value.zeros_like()),
                _ => None,
            })
            .collect();
        Ok(Gradients { grads })
    }

    fn accumulate(&self, id: usize, dz: &[f64], adjoints: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[id];
        match &node.op {
            Op::Leaf => {}
            Op::Add {
                lhs,
                rhs,
                broadcast_rhs,
            } => {
                self.add_to(adjoints, *lhs, |buf| {
                    for (g, &d) in buf.iter_mut().zip(dz) {
                        *g += d;
                    }
                });
                if *broadcast_rhs {
                    let d = self.nodes[rhs.index()].value.len();
                    self.add_to(adjoints, *rhs, |buf| {
                        for (i, &v) in dz.iter().enumerate() {
                            buf[i % d] += v;
                        }
                    });
                } else {
                    self.add_to(adjoints, *rhs, |buf| {
                        for (g, &d) in buf.iter_mut().zip(dz) {
                            *g += d;
                        }
                    });
                }
            }
            Op::Sub { lhs, rhs } => {
                self.add_to(adjoints, *lhs, |buf| {
                    for (g, &d) in buf.iter_mut().zip(dz) {
                        *g += d;
                    }
                });
                self.add_to(adjoints, *rhs, |buf| {
                    for (g, &d) in buf.iter_mut().zip(dz) {
                        *g -= d;
                    }
                });
            }
            Op::Mul { lhs, rhs } => {
                let a = self.nodes[lhs.index()].value.data();
                let b = self.nodes[rhs.index()].value.data();
                self.add_to(adjoints, *lhs, |buf| {
                    for i in 0..buf.len() {
                        buf[i] += dz[i] * b[i];
                    }
                });
                self.add_to(adjoints, *rhs, |buf| {
                    for i in 0..buf.len() {
                        buf[i] += dz[i] * a[i];
                    }
                });
            }
            Op::MatMul {
                lhs,
                rhs,
                transpose_rhs,
            } => {
                let a = &self.nodes[lhs.index()].value;
                let b = &self.nodes[rhs.index()].value;
                let (m, k) = (a.shape()[0], a.shape()[1]);
                let n = node.value.shape()[1];
                let (ad, bd) = (a.data(), b.data());
                if *transpose_rhs {
                    // z = a · bᵀ with b of shape [n, k]
                    self.add_to(adjoints, *lhs, |buf| {
                        for i in 0..m {
                            for p in 0..k {
                                let mut acc = 0.0;
                                for j in 0..n {
                                    acc += dz[i * n + j] * bd[j * k + p];
                                }
                                buf[i * k + p] += acc;
                            }
                        }
                    });
                    self.add_to(adjoints, *rhs, |buf| {
                        for j in 0..n {
                            for p in 0..k {
                                let mut acc = 0.0;
                                for i in 0..m {
                                    acc += dz[i * n + j] * ad[i * k + p];
                                }
                                buf[j * k + p] += acc;
                            }
                        }
                    });
                } else {
                    self.add_to(adjoints, *lhs, |buf| {
                        for i in 0..m {
                            for p in 0..k {
                                let mut acc = 0.0;
                                for j in 0..n {
                                    acc += dz[i * n + j] * bd[p * n + j];
                                }
                                buf[i * k + p] += acc;
                            }
                        }
                    });
                    self.add_to(adjoints, *rhs, |buf| {
                        for p in 0..k {
                            for j in 0..n {
                                let mut acc = 0.0;
                                for i in 0..m {
                                    acc += ad[i * k + p] * dz[i * n + j];
                                }
                                buf[p * n + j] += acc;
                            }
                        }
                    });
                }
            }
            Op::Relu { input } => {
                let x = self.nodes[input.index()].value.data();
                self.add_to(adjoints, *input, |buf| {
                    for i in 0..buf.len() {
                        if x[i] > 0.0 {
                            buf[i] += dz[i];
                        }
                    }
                });
            }
            Op::Exp { input } => {
                let z = node.value.data();
                self.add_to(adjoints, *input, |buf| {
                    for i in 0..buf.len() {
                        buf[i] += dz[i] * z[i];
                    }
                });
            }
            Op::Log { input } => {
                let x = self.nodes[input.index()].value.data();
                self.add_to(adjoints, *input, |buf| {
                    for i in 0..buf.len() {
                        buf[i] += dz[i] / x[i];
                    }
                });
            }
            Op::Neg { input } => {
                self.add_to(adjoints, *input, |buf| {
                    for (g, &d) in buf.iter_mut().zip(dz) {
                        *g -= d;
                    }
                });
            }
            Op::Sum { input } => {
                let d = dz[0];
                self.add_to(adjoints, *input, |buf| {
                    for g in buf.iter_mut() {
                        *g += d;
                    }
                });
            }
            Op::Mean { input } => {
                let len = self.nodes[input.index()].value.len() as f64;
                let d = dz[0] / len;
                self.add_to(adjoints, *input, |buf| {
                    for g in buf.iter_mut() {
                        *g += d;
                    }
                });
            }
            Op::Scale { input, factor } => {
                let f = *factor;
                self.add_to(adjoints, *input, |buf| {
                    for (g, &d) in buf.iter_mut().zip(dz) {
                        *g += f * d;
                    }
                });
            }
            Op::MaxConst { input, threshold } => {
                let x = self.nodes[input.index()].value.data();
                let t = *threshold;
                self.add_to(adjoints, *input, |buf| {
                    for i in 0..buf.len() {
                        if x[i] > t {
                            buf[i] += dz[i];
                        }
                    }
                });
            }
            Op::L2NormalizeRows { input } => {
                let x = self.nodes[input.index()].value.data();
                let z = node.value.data();
                let d = node.value.shape()[1];
                let n = node.value.shape()[0];
                self.add_to(adjoints, *input, |buf| {
                    for i in 0..n {
                        let xs = &x[i * d..(i + 1) * d];
                        let us = &z[i * d..(i + 1) * d];
                        let norm = xs.iter().map(|v| v * v).sum::<f64>().sqrt();
                        let proj: f64 = (0..d).map(|j| dz[i * d + j] * us[j]).sum();
                        for j in 0..d {
                            buf[i * d + j] += (dz[i * d + j] - proj * us[j]) / norm;
                        }
                    }
                });
            }
            Op::DotRows { lhs, rhs } => {
                let a = self.nodes[lhs.index()].value.data();
                let b = self.nodes[rhs.index()].value.data();
                let d = self.nodes[lhs.index()].value.shape()[1];
                self.add_to(adjoints, *lhs, |buf| {
                    for (i, &dv) in dz.iter().enumerate() {
                        for j in 0..d {
                            buf[i * d + j] += dv * b[i * d + j];
                        }
                    }
                });
                self.add_to(adjoints, *rhs, |buf| {
                    for (i, &dv) in dz.iter().enumerate() {
                        for j in 0..d {
                            buf[i * d + j] += dv * a[i * d + j];
                        }
                    }
                });
            }
            Op::SoftmaxRowsMasked { input } => {
                let z = node.value.data();
                let n = node.value.shape()[0];
                let d = node.value.shape()[1];
                self.add_to(adjoints, *input, |buf| {
                    for i in 0..n {
                        let zs = &z[i * d..(i + 1) * d];
                        let dot: f64 = (0..d).map(|j| dz[i * d + j] * zs[j]).sum();
                        for j in 0..d {
                            // Masked entries have z = 0, so they contribute
                            // and receive nothing.
                            buf[i * d + j] += zs[j] * (dz[i * d + j] - dot);
                        }
                    }
                });
            }
        }
    }

    fn add_to<F>(&self, adjoints: &mut [Option<Vec<f64>>], target: NodeId, write: F)
    where
        F: FnOnce(&mut Vec<f64>),
    {
        if !self.nodes[target.index()].needs_grad {
            return;
        }
        let slot = &mut adjoints[target.index()];
        if slot.is_none() {
            *slot = Some(vec![0.0; self.nodes[target.index()].value.len()]);
        }
        write(slot.as_mut().expect("adjoint buffer just initialized"));
    }
}
