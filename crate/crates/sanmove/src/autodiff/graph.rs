use super::tensor::{matmul_into, matmul_nt_into, matmul_tn_into};
use super::{Tensor, TensorError};

/// Handle to a node recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    MatMulNT(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Sigmoid(Var),
    Tanh(Var),
    Softmax(Var, usize),
    LogSoftmax(Var, usize),
    Mean(Var, usize),
    Sum(Var),
    Reshape(Var),
    GatherRows(Var, Vec<usize>),
    SliceRows(Var, usize),
    SliceCols(Var, usize),
    ConcatRows(Vec<Var>),
    ConcatCols(Vec<Var>),
    MaskFill(Var, Vec<bool>),
    Pick(Var, Vec<(usize, usize)>),
}

#[derive(Debug)]
struct Node {
    shape: Vec<usize>,
    value: Vec<f64>,
    op: Op,
    needs_grad: bool,
}

/// Define-by-run tape. Nodes are appended in evaluation order, so the node
/// list is already a topological order and `backward` walks it in reverse.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
}

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

/// Numpy-style broadcast: shapes are right-aligned and every extent pair must
/// be equal or contain a 1.
fn broadcast_shape(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0; rank];
    for i in 0..rank {
        let ea = if i + a.len() >= rank { a[i + a.len() - rank] } else { 1 };
        let eb = if i + b.len() >= rank { b[i + b.len() - rank] } else { 1 };
        out[i] = match (ea, eb) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => return None,
        };
    }
    Some(out)
}

fn broadcast_strides(shape: &[usize], rank: usize) -> Vec<usize> {
    let pad = rank - shape.len();
    let mut strides = vec![0; rank];
    let mut acc = 1;
    for i in (0..shape.len()).rev() {
        strides[i + pad] = if shape[i] == 1 { 0 } else { acc };
        acc *= shape[i];
    }
    strides
}

/// Calls `f(out_index, a_index, b_index)` for every element of the broadcast output.
fn walk_broadcast(out: &[usize], a: &[usize], b: &[usize], mut f: impl FnMut(usize, usize, usize)) {
    if a == b {
        for i in 0..numel(out) {
            f(i, i, i);
        }
        return;
    }
    let rank = out.len();
    let sa = broadcast_strides(a, rank);
    let sb = broadcast_strides(b, rank);
    let total = numel(out);
    let mut idx = vec![0usize; rank];
    let (mut ia, mut ib) = (0usize, 0usize);
    for o in 0..total {
        f(o, ia, ib);
        for ax in (0..rank).rev() {
            idx[ax] += 1;
            ia += sa[ax];
            ib += sb[ax];
            if idx[ax] < out[ax] {
                break;
            }
            ia -= sa[ax] * idx[ax];
            ib -= sb[ax] * idx[ax];
            idx[ax] = 0;
        }
    }
}

/// (outer, extent, inner) decomposition for reductions along `axis`.
fn lanes(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = numel(&shape[..axis]);
    let inner = numel(&shape[axis + 1..]);
    (outer, shape[axis], inner)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, shape: Vec<usize>, value: Vec<f64>, op: Op, needs_grad: bool) -> Var {
        debug_assert_eq!(numel(&shape), value.len());
        self.nodes.push(Node {
            shape,
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Records a trainable leaf; its gradient is available after `backward`.
    pub fn param(&mut self, t: &Tensor) -> Var {
        self.push(t.shape().to_vec(), t.data().to_vec(), Op::Leaf, true)
    }

    /// Records a leaf that never receives a gradient.
    pub fn constant(&mut self, t: &Tensor) -> Var {
        self.push(t.shape().to_vec(), t.data().to_vec(), Op::Leaf, false)
    }

    pub fn constant_raw(&mut self, shape: Vec<usize>, data: Vec<f64>) -> Result<Var, TensorError> {
        if numel(&shape) != data.len() {
            return Err(TensorError::BadLength {
                shape,
                len: data.len(),
            });
        }
        Ok(self.push(shape, data, Op::Leaf, false))
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn tensor(&self, v: Var) -> Tensor {
        let n = &self.nodes[v.0];
        Tensor::new(n.shape.clone(), n.value.clone()).expect("node shape is consistent")
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[0]
    }

    fn dims2(&self, v: Var, op: &'static str) -> Result<(usize, usize), TensorError> {
        match self.shape(v) {
            [r, c] => Ok((*r, *c)),
            s => Err(TensorError::RankMismatch {
                op,
                expected: 2,
                shape: s.to_vec(),
            }),
        }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (m, k) = self.dims2(a, "matmul")?;
        let (k2, n) = self.dims2(b, "matmul")?;
        if k != k2 {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                left: vec![m, k],
                right: vec![k2, n],
            });
        }
        let mut out = vec![0.0; m * n];
        matmul_into(self.value(a), self.value(b), &mut out, m, k, n);
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(vec![m, n], out, Op::MatMul(a, b), ng))
    }

    /// `a · bᵀ` without materializing the transpose.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (m, k) = self.dims2(a, "matmul_t")?;
        let (n, k2) = self.dims2(b, "matmul_t")?;
        if k != k2 {
            return Err(TensorError::ShapeMismatch {
                op: "matmul_t",
                left: vec![m, k],
                right: vec![n, k2],
            });
        }
        let mut out = vec![0.0; m * n];
        matmul_nt_into(self.value(a), self.value(b), &mut out, m, k, n);
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(vec![m, n], out, Op::MatMulNT(a, b), ng))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var, TensorError> {
        let (m, n) = self.dims2(a, "transpose")?;
        let src = self.value(a);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = src[i * n + j];
            }
        }
        let ng = self.needs(a);
        Ok(self.push(vec![n, m], out, Op::Transpose(a), ng))
    }

    fn binary(
        &mut self,
        a: Var,
        b: Var,
        name: &'static str,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var, TensorError> {
        let sa = self.shape(a).to_vec();
        let sb = self.shape(b).to_vec();
        let out_shape = broadcast_shape(&sa, &sb).ok_or_else(|| TensorError::ShapeMismatch {
            op: name,
            left: sa.clone(),
            right: sb.clone(),
        })?;
        let mut out = vec![0.0; numel(&out_shape)];
        {
            let va = self.value(a);
            let vb = self.value(b);
            walk_broadcast(&out_shape, &sa, &sb, |o, i, j| out[o] = f(va[i], vb[j]));
        }
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(out_shape, out, op, ng))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.binary(a, b, "add", |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.binary(a, b, "sub", |x, y| x - y, Op::Sub(a, b))
    }

    /// Elementwise (Hadamard) product with broadcasting.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.binary(a, b, "mul", |x, y| x * y, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let out = self.value(a).iter().map(|x| x * s).collect();
        let shape = self.shape(a).to_vec();
        let ng = self.needs(a);
        self.push(shape, out, Op::Scale(a, s), ng)
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let out = self.value(a).iter().map(|&x| f(x)).collect();
        let shape = self.shape(a).to_vec();
        let ng = self.needs(a);
        self.push(shape, out, op, ng)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, |x| if x > 0.0 { x } else { 0.0 }, Op::Relu(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, f64::tanh, Op::Tanh(a))
    }

    fn check_axis(&self, a: Var, axis: usize, op: &'static str) -> Result<(), TensorError> {
        let rank = self.shape(a).len();
        if axis >= rank {
            return Err(TensorError::InvalidAxis { op, axis, rank });
        }
        Ok(())
    }

    /// Max-shifted softmax along `axis`. Lanes may contain `-inf` entries
    /// (masked positions), which receive probability exactly 0.
    pub fn softmax(&mut self, a: Var, axis: usize) -> Result<Var, TensorError> {
        self.check_axis(a, axis, "softmax")?;
        let shape = self.shape(a).to_vec();
        let (outer, n, inner) = lanes(&shape, axis);
        let src = self.value(a);
        let mut out = vec![0.0; src.len()];
        for o in 0..outer {
            for i in 0..inner {
                let at = |j: usize| o * n * inner + j * inner + i;
                let max = (0..n).map(|j| src[at(j)]).fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for j in 0..n {
                    let e = (src[at(j)] - max).exp();
                    out[at(j)] = e;
                    sum += e;
                }
                for j in 0..n {
                    out[at(j)] /= sum;
                }
            }
        }
        let ng = self.needs(a);
        Ok(self.push(shape, out, Op::Softmax(a, axis), ng))
    }

    pub fn log_softmax(&mut self, a: Var, axis: usize) -> Result<Var, TensorError> {
        self.check_axis(a, axis, "log_softmax")?;
        let shape = self.shape(a).to_vec();
        let (outer, n, inner) = lanes(&shape, axis);
        let src = self.value(a);
        let mut out = vec![0.0; src.len()];
        for o in 0..outer {
            for i in 0..inner {
                let at = |j: usize| o * n * inner + j * inner + i;
                let max = (0..n).map(|j| src[at(j)]).fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = (0..n).map(|j| (src[at(j)] - max).exp()).sum();
                let lse = max + sum.ln();
                for j in 0..n {
                    out[at(j)] = src[at(j)] - lse;
                }
            }
        }
        let ng = self.needs(a);
        Ok(self.push(shape, out, Op::LogSoftmax(a, axis), ng))
    }

    /// Mean along `axis`; the axis is removed from the result shape.
    pub fn mean(&mut self, a: Var, axis: usize) -> Result<Var, TensorError> {
        self.check_axis(a, axis, "mean")?;
        let shape = self.shape(a).to_vec();
        let (outer, n, inner) = lanes(&shape, axis);
        let src = self.value(a);
        let mut out = vec![0.0; outer * inner];
        for o in 0..outer {
            for j in 0..n {
                for i in 0..inner {
                    out[o * inner + i] += src[o * n * inner + j * inner + i];
                }
            }
        }
        for v in &mut out {
            *v /= n as f64;
        }
        let mut out_shape = shape;
        out_shape.remove(axis);
        let ng = self.needs(a);
        Ok(self.push(out_shape, out, Op::Mean(a, axis), ng))
    }

    /// Sum of all elements, as a rank-0 scalar.
    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).iter().sum();
        let ng = self.needs(a);
        self.push(vec![], vec![s], Op::Sum(a), ng)
    }

    pub fn reshape(&mut self, a: Var, shape: Vec<usize>) -> Result<Var, TensorError> {
        if numel(&shape) != numel(self.shape(a)) {
            return Err(TensorError::ShapeMismatch {
                op: "reshape",
                left: self.shape(a).to_vec(),
                right: shape,
            });
        }
        let value = self.value(a).to_vec();
        let ng = self.needs(a);
        Ok(self.push(shape, value, Op::Reshape(a), ng))
    }

    /// Row lookup; the adjoint scatter-adds into the table.
    pub fn gather_rows(&mut self, table: Var, indices: &[usize]) -> Result<Var, TensorError> {
        let (rows, cols) = self.dims2(table, "gather_rows")?;
        let src = self.value(table);
        let mut out = Vec::with_capacity(indices.len() * cols);
        for &ix in indices {
            if ix >= rows {
                return Err(TensorError::IndexOutOfRange { index: ix, bound: rows });
            }
            out.extend_from_slice(&src[ix * cols..(ix + 1) * cols]);
        }
        let ng = self.needs(table);
        Ok(self.push(
            vec![indices.len(), cols],
            out,
            Op::GatherRows(table, indices.to_vec()),
            ng,
        ))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, end: usize) -> Result<Var, TensorError> {
        let (rows, cols) = self.dims2(a, "slice_rows")?;
        if start >= end || end > rows {
            return Err(TensorError::IndexOutOfRange { index: end, bound: rows });
        }
        let value = self.value(a)[start * cols..end * cols].to_vec();
        let ng = self.needs(a);
        Ok(self.push(vec![end - start, cols], value, Op::SliceRows(a, start), ng))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var, TensorError> {
        let (rows, cols) = self.dims2(a, "slice_cols")?;
        if start >= end || end > cols {
            return Err(TensorError::IndexOutOfRange { index: end, bound: cols });
        }
        let src = self.value(a);
        let w = end - start;
        let mut value = Vec::with_capacity(rows * w);
        for r in 0..rows {
            value.extend_from_slice(&src[r * cols + start..r * cols + end]);
        }
        let ng = self.needs(a);
        Ok(self.push(vec![rows, w], value, Op::SliceCols(a, start), ng))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let first = *parts.first().ok_or(TensorError::Empty { op: "concat_rows" })?;
        let (_, cols) = self.dims2(first, "concat_rows")?;
        let mut rows = 0;
        let mut value = Vec::new();
        for &p in parts {
            let (r, c) = self.dims2(p, "concat_rows")?;
            if c != cols {
                return Err(TensorError::ShapeMismatch {
                    op: "concat_rows",
                    left: vec![rows, cols],
                    right: vec![r, c],
                });
            }
            rows += r;
            value.extend_from_slice(self.value(p));
        }
        let ng = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(vec![rows, cols], value, Op::ConcatRows(parts.to_vec()), ng))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let first = *parts.first().ok_or(TensorError::Empty { op: "concat_cols" })?;
        let (rows, _) = self.dims2(first, "concat_cols")?;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (r, c) = self.dims2(p, "concat_cols")?;
            if r != rows {
                return Err(TensorError::ShapeMismatch {
                    op: "concat_cols",
                    left: vec![rows, 0],
                    right: vec![r, c],
                });
            }
            widths.push(c);
        }
        let total: usize = widths.iter().sum();
        let mut value = vec![0.0; rows * total];
        let mut offset = 0;
        for (&p, &w) in parts.iter().zip(&widths) {
            let src = self.value(p);
            for r in 0..rows {
                value[r * total + offset..r * total + offset + w]
                    .copy_from_slice(&src[r * w..(r + 1) * w]);
            }
            offset += w;
        }
        let ng = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(vec![rows, total], value, Op::ConcatCols(parts.to_vec()), ng))
    }

    /// Replaces masked entries with `-inf`; those entries pass no gradient.
    pub fn mask_fill(&mut self, a: Var, mask: &[bool]) -> Result<Var, TensorError> {
        let shape = self.shape(a).to_vec();
        if mask.len() != numel(&shape) {
            return Err(TensorError::BadLength {
                shape,
                len: mask.len(),
            });
        }
        let value = self
            .value(a)
            .iter()
            .zip(mask)
            .map(|(&x, &m)| if m { f64::NEG_INFINITY } else { x })
            .collect();
        let ng = self.needs(a);
        Ok(self.push(shape, value, Op::MaskFill(a, mask.to_vec()), ng))
    }

    /// Gathers the entries `a[r, c]` for each `(r, c)` pair into a vector.
    pub fn pick(&mut self, a: Var, at: &[(usize, usize)]) -> Result<Var, TensorError> {
        let (rows, width) = self.dims2(a, "pick")?;
        let src = self.value(a);
        let mut value = Vec::with_capacity(at.len());
        for &(r, c) in at {
            if r >= rows {
                return Err(TensorError::IndexOutOfRange { index: r, bound: rows });
            }
            if c >= width {
                return Err(TensorError::IndexOutOfRange { index: c, bound: width });
            }
            value.push(src[r * width + c]);
        }
        let ng = self.needs(a);
        Ok(self.push(vec![at.len()], value, Op::Pick(a, at.to_vec()), ng))
    }

    /// Reverse pass from a scalar node. Every node is visited at most once,
    /// in reverse recording order.
    pub fn backward(&mut self, loss: Var) -> Result<(), TensorError> {
        let loss_shape = self.shape(loss);
        if numel(loss_shape) != 1 {
            return Err(TensorError::NotScalar {
                shape: loss_shape.to_vec(),
            });
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);
        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            if self.nodes[idx].needs_grad {
                self.propagate(idx, &g, &mut grads);
            }
            grads[idx] = Some(g);
        }
        self.grads = grads;
        Ok(())
    }

    /// Gradient of the last `backward` loss with respect to `v`, if reached.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    fn accumulate(&self, grads: &mut [Option<Vec<f64>>], v: Var, f: impl FnOnce(&mut [f64])) {
        if !self.nodes[v.0].needs_grad {
            return;
        }
        let len = self.nodes[v.0].value.len();
        let slot = grads[v.0].get_or_insert_with(|| vec![0.0; len]);
        f(slot);
    }

    fn propagate(&self, idx: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[idx];
        let y = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (m, k) = (self.shape(*a)[0], self.shape(*a)[1]);
                let n = self.shape(*b)[1];
                let (va, vb) = (self.value(*a), self.value(*b));
                self.accumulate(grads, *a, |ga| matmul_nt_into(g, vb, ga, m, n, k));
                self.accumulate(grads, *b, |gb| matmul_tn_into(va, g, gb, m, k, n));
            }
            Op::MatMulNT(a, b) => {
                let (m, k) = (self.shape(*a)[0], self.shape(*a)[1]);
                let n = self.shape(*b)[0];
                let (va, vb) = (self.value(*a), self.value(*b));
                self.accumulate(grads, *a, |ga| matmul_into(g, vb, ga, m, n, k));
                self.accumulate(grads, *b, |gb| matmul_tn_into(g, va, gb, m, n, k));
            }
            Op::Transpose(a) => {
                let (m, n) = (self.shape(*a)[0], self.shape(*a)[1]);
                self.accumulate(grads, *a, |ga| {
                    for i in 0..m {
                        for j in 0..n {
                            ga[i * n + j] += g[j * m + i];
                        }
                    }
                });
            }
            Op::Add(a, b) | Op::Sub(a, b) => {
                let sign = if matches!(node.op, Op::Sub(..)) { -1.0 } else { 1.0 };
                let (sa, sb) = (self.shape(*a), self.shape(*b));
                self.accumulate(grads, *a, |ga| {
                    walk_broadcast(&node.shape, sa, sb, |o, i, _| ga[i] += g[o]);
                });
                self.accumulate(grads, *b, |gb| {
                    walk_broadcast(&node.shape, sa, sb, |o, _, j| gb[j] += sign * g[o]);
                });
            }
            Op::Mul(a, b) => {
                let (sa, sb) = (self.shape(*a), self.shape(*b));
                let (va, vb) = (self.value(*a), self.value(*b));
                self.accumulate(grads, *a, |ga| {
                    walk_broadcast(&node.shape, sa, sb, |o, i, j| ga[i] += g[o] * vb[j]);
                });
                self.accumulate(grads, *b, |gb| {
                    walk_broadcast(&node.shape, sa, sb, |o, i, j| gb[j] += g[o] * va[i]);
                });
            }
            Op::Scale(a, s) => {
                self.accumulate(grads, *a, |ga| {
                    for (d, &go) in ga.iter_mut().zip(g) {
                        *d += s * go;
                    }
                });
            }
            Op::Relu(a) => {
                let x = self.value(*a);
                self.accumulate(grads, *a, |ga| {
                    for i in 0..ga.len() {
                        if x[i] > 0.0 {
                            ga[i] += g[i];
                        }
                    }
                });
            }
            Op::Sigmoid(a) => self.accumulate(grads, *a, |ga| {
                for i in 0..ga.len() {
                    ga[i] += g[i] * y[i] * (1.0 - y[i]);
                }
            }),
            Op::Tanh(a) => self.accumulate(grads, *a, |ga| {
                for i in 0..ga.len() {
                    ga[i] += g[i] * (1.0 - y[i] * y[i]);
                }
            }),
            Op::Softmax(a, axis) => {
                let (outer, n, inner) = lanes(&node.shape, *axis);
                self.accumulate(grads, *a, |ga| {
                    for o in 0..outer {
                        for i in 0..inner {
                            let at = |j: usize| o * n * inner + j * inner + i;
                            let dot: f64 = (0..n).map(|j| g[at(j)] * y[at(j)]).sum();
                            for j in 0..n {
                                let p = y[at(j)];
                                if p != 0.0 {
                                    ga[at(j)] += p * (g[at(j)] - dot);
                                }
                            }
                        }
                    }
                });
            }
            Op::LogSoftmax(a, axis) => {
                let (outer, n, inner) = lanes(&node.shape, *axis);
                self.accumulate(grads, *a, |ga| {
                    for o in 0..outer {
                        for i in 0..inner {
                            let at = |j: usize| o * n * inner + j * inner + i;
                            let total: f64 = (0..n).map(|j| g[at(j)]).sum();
                            for j in 0..n {
                                let p = y[at(j)].exp();
                                ga[at(j)] += g[at(j)] - p * total;
                            }
                        }
                    }
                });
            }
            Op::Mean(a, axis) => {
                let (outer, n, inner) = lanes(self.shape(*a), *axis);
                let inv = 1.0 / n as f64;
                self.accumulate(grads, *a, |ga| {
                    for o in 0..outer {
                        for j in 0..n {
                            for i in 0..inner {
                                ga[o * n * inner + j * inner + i] += g[o * inner + i] * inv;
                            }
                        }
                    }
                });
            }
            Op::Sum(a) => self.accumulate(grads, *a, |ga| {
                for d in ga.iter_mut() {
                    *d += g[0];
                }
            }),
            Op::Reshape(a) => self.accumulate(grads, *a, |ga| {
                for (d, &go) in ga.iter_mut().zip(g) {
                    *d += go;
                }
            }),
            Op::GatherRows(table, indices) => {
                let cols = self.shape(*table)[1];
                self.accumulate(grads, *table, |gt| {
                    for (r, &ix) in indices.iter().enumerate() {
                        for c in 0..cols {
                            gt[ix * cols + c] += g[r * cols + c];
                        }
                    }
                });
            }
            Op::SliceRows(a, start) => {
                let cols = self.shape(*a)[1];
                self.accumulate(grads, *a, |ga| {
                    for (d, &go) in ga[start * cols..start * cols + g.len()].iter_mut().zip(g) {
                        *d += go;
                    }
                });
            }
            Op::SliceCols(a, start) => {
                let cols = self.shape(*a)[1];
                let (rows, w) = (node.shape[0], node.shape[1]);
                self.accumulate(grads, *a, |ga| {
                    for r in 0..rows {
                        for c in 0..w {
                            ga[r * cols + start + c] += g[r * w + c];
                        }
                    }
                });
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let len = self.value(p).len();
                    self.accumulate(grads, p, |gp| {
                        for (d, &go) in gp.iter_mut().zip(&g[offset..offset + len]) {
                            *d += go;
                        }
                    });
                    offset += len;
                }
            }
            Op::ConcatCols(parts) => {
                let (rows, total) = (node.shape[0], node.shape[1]);
                let mut offset = 0;
                for &p in parts {
                    let w = self.shape(p)[1];
                    self.accumulate(grads, p, |gp| {
                        for r in 0..rows {
                            for c in 0..w {
                                gp[r * w + c] += g[r * total + offset + c];
                            }
                        }
                    });
                    offset += w;
                }
            }
            Op::MaskFill(a, mask) => self.accumulate(grads, *a, |ga| {
                for i in 0..ga.len() {
                    if !mask[i] {
                        ga[i] += g[i];
                    }
                }
            }),
            Op::Pick(a, at) => {
                let width = self.shape(*a)[1];
                self.accumulate(grads, *a, |ga| {
                    for (i, &(r, c)) in at.iter().enumerate() {
                        ga[r * width + c] += g[i];
                    }
                });
            }
        }
    }
}
