use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use super::{dims2, gemm, Tensor};
use crate::error::{Error, Result};

static NEXT_TAPE_ID: AtomicU64 = AtomicU64::new(1);

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var {
    tape: u64,
    index: usize,
}

#[derive(Debug)]
enum Op {
    Leaf,
    Affine { x: Var, w: Var, b: Var },
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Relu(Var),
    Sigmoid(Var),
    Softplus(Var),
    Exp(Var),
    Log(Var),
    Square(Var),
    Sum(Var),
    Mean(Var),
    Concat(Vec<Var>),
    Slice { x: Var, start: usize },
    Scale(Var, f64),
    AddConst(Var),
    Mask(Var, Vec<f64>),
    Clamp { x: Var, lo: f64, hi: f64 },
    TileRows { x: Var, times: usize },
    RowCosine { a: Var, b: Var, eps: f64 },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Records primitive operations in execution order so gradients can be
/// propagated in reverse.
///
/// Nodes are appended only after their parents, so the node list is always a
/// topological order.
#[derive(Debug)]
pub struct Tape {
    id: u64,
    nodes: Vec<Node>,
}

impl Default for Tape {
    fn default() -> Self {
        Tape::new()
    }
}

/// Gradients of a scalar loss with respect to the tape's trainable leaves.
#[derive(Debug, Default)]
pub struct Gradients {
    map: HashMap<Var, Tensor>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.map.get(&v)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Tensor)> {
        self.map.iter()
    }
}

fn check_finite(op: &'static str, data: &[f64]) -> Result<()> {
    if data.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { op })
    }
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Tape {
        Tape {
            id: NEXT_TAPE_ID.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn node(&self, v: Var) -> &Node {
        assert_eq!(v.tape, self.id, "variable belongs to a different tape");
        &self.nodes[v.index]
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.node(v).value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.value(v).shape()
    }

    fn push(&mut self, op: &'static str, value: Tensor, node_op: Op, parents: &[Var]) -> Result<Var> {
        check_finite(op, value.data())?;
        let requires_grad = parents.iter().any(|&p| self.node(p).requires_grad);
        self.nodes.push(Node {
            value: value.with_grad(requires_grad),
            op: node_op,
            requires_grad,
        });
        Ok(Var {
            tape: self.id,
            index: self.nodes.len() - 1,
        })
    }

    /// Records a leaf. It is trainable iff `t.requires_grad()`.
    pub fn leaf(&mut self, t: Tensor) -> Result<Var> {
        check_finite("leaf", t.data())?;
        let requires_grad = t.requires_grad();
        self.nodes.push(Node {
            value: t,
            op: Op::Leaf,
            requires_grad,
        });
        Ok(Var {
            tape: self.id,
            index: self.nodes.len() - 1,
        })
    }

    /// Records a non-trainable leaf.
    pub fn constant(&mut self, t: Tensor) -> Result<Var> {
        self.leaf(t.with_grad(false))
    }

    /// Records a trainable leaf holding a copy of `t`.
    pub fn param(&mut self, t: &Tensor) -> Result<Var> {
        self.leaf(t.clone().with_grad(true))
    }

    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (m, k) = dims2("affine", self.value(x))?;
        let (k2, n) = dims2("affine", self.value(w))?;
        let bshape = self.shape(b);
        if k != k2 || bshape != [n] {
            return Err(Error::shape(
                "affine",
                format!("x {:?}, w {:?}, b {:?}", self.shape(x), self.shape(w), bshape),
            ));
        }
        let bias = self.value(b).data();
        let mut out = Vec::with_capacity(m * n);
        for _ in 0..m {
            out.extend_from_slice(bias);
        }
        gemm(m, k, n, self.value(x).data(), false, self.value(w).data(), false, &mut out, 1.0);
        let t = Tensor::from_vec(&[m, n], out)?;
        self.push("affine", t, Op::Affine { x, w, b }, &[x, w, b])
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = self.value(a).matmul(self.value(b))?;
        self.push("matmul", t, Op::MatMul(a, b), &[a, b])
    }

    fn binary(
        &mut self,
        name: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let t = if ta.shape() == tb.shape() {
            let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
            Tensor::from_vec(ta.shape(), data)?
        } else if tb.is_scalar() {
            let s = tb.item();
            ta.map(|x| f(x, s))
        } else if ta.is_scalar() {
            let s = ta.item();
            tb.map(|y| f(s, y))
        } else {
            return Err(Error::shape(
                name,
                format!("{:?} vs {:?} (only exact match or scalar broadcast)", ta.shape(), tb.shape()),
            ));
        };
        self.push(name, t, op, &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        let t = self.value(x).map(|v| if v > 0.0 { v } else { 0.0 });
        self.push("relu", t, Op::Relu(x), &[x])
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        let t = self.value(x).map(sigmoid);
        self.push("sigmoid", t, Op::Sigmoid(x), &[x])
    }

    /// `ln(1 + e^x)`, evaluated without overflow or cancellation.
    pub fn softplus(&mut self, x: Var) -> Result<Var> {
        let t = self.value(x).map(|v| v.max(0.0) + (-v.abs()).exp().ln_1p());
        self.push("softplus", t, Op::Softplus(x), &[x])
    }

    pub fn exp(&mut self, x: Var) -> Result<Var> {
        let t = self.value(x).map(f64::exp);
        self.push("exp", t, Op::Exp(x), &[x])
    }

    pub fn log(&mut self, x: Var) -> Result<Var> {
        let t = self.value(x).map(f64::ln);
        self.push("log", t, Op::Log(x), &[x])
    }

    pub fn square(&mut self, x: Var) -> Result<Var> {
        let t = self.value(x).map(|v| v * v);
        self.push("square", t, Op::Square(x), &[x])
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let t = Tensor::scalar(self.value(x).sum());
        self.push("sum", t, Op::Sum(x), &[x])
    }

    pub fn mean(&mut self, x: Var) -> Result<Var> {
        let v = self.value(x);
        let t = Tensor::scalar(v.sum() / v.numel() as f64);
        self.push("mean", t, Op::Mean(x), &[x])
    }

    /// Concatenates along the last axis; all inputs must agree on leading axes.
    pub fn concat(&mut self, xs: &[Var]) -> Result<Var> {
        let first = xs
            .first()
            .ok_or_else(|| Error::shape("concat", "no inputs"))?;
        let lead = {
            let s = self.shape(*first);
            s[..s.len().saturating_sub(1)].to_vec()
        };
        let rows = self.value(*first).rows();
        let mut width = 0;
        for &x in xs {
            let s = self.shape(x);
            if s.is_empty() || s[..s.len() - 1] != lead[..] {
                return Err(Error::shape("concat", format!("{:?} vs leading {:?}", s, lead)));
            }
            width += s[s.len() - 1];
        }
        let mut out = Vec::with_capacity(rows * width);
        for r in 0..rows {
            for &x in xs {
                out.extend_from_slice(self.value(x).row(r));
            }
        }
        let mut shape = lead;
        shape.push(width);
        let t = Tensor::from_vec(&shape, out)?;
        self.push("concat", t, Op::Concat(xs.to_vec()), xs)
    }

    /// Columns `start..end` of the last axis.
    pub fn slice(&mut self, x: Var, start: usize, end: usize) -> Result<Var> {
        let v = self.value(x);
        let c = v.last_dim();
        if v.shape().is_empty() || start >= end || end > c {
            return Err(Error::shape("slice", format!("{start}..{end} of {:?}", v.shape())));
        }
        let mut out = Vec::with_capacity(v.rows() * (end - start));
        for r in 0..v.rows() {
            out.extend_from_slice(&v.row(r)[start..end]);
        }
        let mut shape = v.shape().to_vec();
        *shape.last_mut().unwrap() = end - start;
        let t = Tensor::from_vec(&shape, out)?;
        self.push("slice", t, Op::Slice { x, start }, &[x])
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Result<Var> {
        let t = self.value(x).map(|v| v * c);
        self.push("scale", t, Op::Scale(x, c), &[x])
    }

    pub fn add_const(&mut self, x: Var, c: f64) -> Result<Var> {
        let t = self.value(x).map(|v| v + c);
        self.push("add_const", t, Op::AddConst(x), &[x])
    }

    /// Elementwise product with a constant mask (used for dropout).
    pub fn mask(&mut self, x: Var, mask: Vec<f64>) -> Result<Var> {
        let v = self.value(x);
        if mask.len() != v.numel() {
            return Err(Error::shape("mask", format!("{} values for {:?}", mask.len(), v.shape())));
        }
        let data = v.data().iter().zip(&mask).map(|(a, m)| a * m).collect();
        let t = Tensor::from_vec(v.shape(), data)?;
        self.push("mask", t, Op::Mask(x, mask), &[x])
    }

    /// Clamps into `[lo, hi]`; the gradient is passed through strictly inside
    /// the range and zero at or beyond either bound.
    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Result<Var> {
        if !(lo <= hi) {
            return Err(Error::InvalidArgument(format!("clamp range [{lo}, {hi}]")));
        }
        let t = self.value(x).map(|v| v.clamp(lo, hi));
        self.push("clamp", t, Op::Clamp { x, lo, hi }, &[x])
    }

    /// Stacks `times` copies of a 2-D tensor along the first axis.
    pub fn tile_rows(&mut self, x: Var, times: usize) -> Result<Var> {
        let (r, c) = dims2("tile_rows", self.value(x))?;
        if times == 0 {
            return Err(Error::shape("tile_rows", "times must be positive"));
        }
        let t = Tensor::from_vec(&[r * times, c], self.value(x).data().repeat(times))?;
        self.push("tile_rows", t, Op::TileRows { x, times }, &[x])
    }

    /// Row-wise cosine similarity `<a, b> / ((|a| + eps)(|b| + eps))` of two
    /// `[n, d]` tensors, giving an `[n]` tensor.
    pub fn row_cosine(&mut self, a: Var, b: Var, eps: f64) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (n, d) = dims2("row_cosine", ta)?;
        if tb.shape() != [n, d] {
            return Err(Error::shape("row_cosine", format!("{:?} vs {:?}", ta.shape(), tb.shape())));
        }
        let out = (0..n)
            .map(|i| {
                let (ra, rb) = (ta.row(i), tb.row(i));
                let dot: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
                let na = ra.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb = rb.iter().map(|x| x * x).sum::<f64>().sqrt();
                dot / ((na + eps) * (nb + eps))
            })
            .collect();
        let t = Tensor::from_vec(&[n], out)?;
        self.push("row_cosine", t, Op::RowCosine { a, b, eps }, &[a, b])
    }

    /// Reverse pass from a scalar `loss`. Returns gradients for every leaf
    /// that was recorded as trainable.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if loss.tape != self.id || loss.index >= self.nodes.len() {
            return Err(Error::Backward("loss is not recorded on this tape".into()));
        }
        let lv = &self.nodes[loss.index].value;
        if !lv.shape().is_empty() || lv.numel() != 1 {
            return Err(Error::Backward(format!("loss must be a scalar, got shape {:?}", lv.shape())));
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..=loss.index).map(|_| None).collect();
        grads[loss.index] = Some(vec![1.0]);

        for i in (0..=loss.index).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            if let Op::Leaf = node.op {
                grads[i] = Some(g);
                continue;
            }
            self.propagate(node, &g, &mut grads);
        }

        let mut map = HashMap::new();
        for (i, node) in self.nodes.iter().enumerate().take(loss.index + 1) {
            if matches!(node.op, Op::Leaf) && node.requires_grad {
                let data = grads[i].take().unwrap_or_else(|| vec![0.0; node.value.numel()]);
                let v = Var { tape: self.id, index: i };
                map.insert(v, Tensor::from_vec(node.value.shape(), data)?);
            }
        }
        Ok(Gradients { map })
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let val = |v: Var| &self.nodes[v.index].value;
        let wants = |v: Var| self.nodes[v.index].requires_grad;
        // accumulate into parent gradient buffers (never overwrite)
        let mut acc = |v: Var, f: &dyn Fn(&mut [f64])| {
            if !wants(v) {
                return;
            }
            let slot = grads[v.index].get_or_insert_with(|| vec![0.0; val(v).numel()]);
            f(slot);
        };
        match &node.op {
            Op::Leaf => {}
            Op::Affine { x, w, b } => {
                let (m, k) = (val(*x).shape()[0], val(*x).shape()[1]);
                let n = val(*w).shape()[1];
                acc(*x, &|s| gemm(m, n, k, g, false, val(*w).data(), true, s, 1.0));
                acc(*w, &|s| gemm(k, m, n, val(*x).data(), true, g, false, s, 1.0));
                acc(*b, &|s| {
                    for r in 0..m {
                        for (sj, gj) in s.iter_mut().zip(&g[r * n..(r + 1) * n]) {
                            *sj += gj;
                        }
                    }
                });
            }
            Op::MatMul(a, b) => {
                let (m, k) = (val(*a).shape()[0], val(*a).shape()[1]);
                let n = val(*b).shape()[1];
                acc(*a, &|s| gemm(m, n, k, g, false, val(*b).data(), true, s, 1.0));
                acc(*b, &|s| gemm(k, m, n, val(*a).data(), true, g, false, s, 1.0));
            }
            Op::Add(a, b) | Op::Sub(a, b) => {
                let sign = if matches!(node.op, Op::Sub(..)) { -1.0 } else { 1.0 };
                let n = node.value.numel();
                for (p, sgn) in [(*a, 1.0), (*b, sign)] {
                    acc(p, &|s| {
                        if s.len() == n {
                            s.iter_mut().zip(g).for_each(|(si, gi)| *si += sgn * gi);
                        } else {
                            s[0] += sgn * g.iter().sum::<f64>();
                        }
                    });
                }
            }
            Op::Mul(a, b) => {
                let n = node.value.numel();
                for (p, other) in [(*a, *b), (*b, *a)] {
                    let o = val(other).data();
                    acc(p, &|s| {
                        let other_at = |i: usize| if o.len() == 1 { o[0] } else { o[i] };
                        if s.len() == n {
                            for (i, si) in s.iter_mut().enumerate() {
                                *si += g[i] * other_at(i);
                            }
                        } else {
                            s[0] += (0..n).map(|i| g[i] * other_at(i)).sum::<f64>();
                        }
                    });
                }
            }
            Op::Relu(x) => {
                let xv = val(*x).data();
                acc(*x, &|s| {
                    for i in 0..s.len() {
                        if xv[i] > 0.0 {
                            s[i] += g[i];
                        }
                    }
                });
            }
            Op::Sigmoid(x) => {
                let y = node.value.data();
                acc(*x, &|s| {
                    for i in 0..s.len() {
                        s[i] += g[i] * y[i] * (1.0 - y[i]);
                    }
                });
            }
            Op::Softplus(x) => {
                let xv = val(*x).data();
                acc(*x, &|s| {
                    for i in 0..s.len() {
                        s[i] += g[i] * sigmoid(xv[i]);
                    }
                });
            }
            Op::Exp(x) => {
                let y = node.value.data();
                acc(*x, &|s| {
                    for i in 0..s.len() {
                        s[i] += g[i] * y[i];
                    }
                });
            }
            Op::Log(x) => {
                let xv = val(*x).data();
                acc(*x, &|s| {
                    for i in 0..s.len() {
                        s[i] += g[i] / xv[i];
                    }
                });
            }
            Op::Square(x) => {
                let xv = val(*x).data();
                acc(*x, &|s| {
                    for i in 0..s.len() {
                        s[i] += 2.0 * g[i] * xv[i];
                    }
                });
            }
            Op::Sum(x) => acc(*x, &|s| s.iter_mut().for_each(|si| *si += g[0])),
            Op::Mean(x) => {
                let n = val(*x).numel() as f64;
                acc(*x, &|s| s.iter_mut().for_each(|si| *si += g[0] / n));
            }
            Op::Concat(xs) => {
                let width = node.value.last_dim();
                let rows = node.value.rows();
                let mut offset = 0;
                for &x in xs {
                    let c = val(x).last_dim();
                    acc(x, &|s| {
                        for r in 0..rows {
                            let src = &g[r * width + offset..r * width + offset + c];
                            s[r * c..(r + 1) * c]
                                .iter_mut()
                                .zip(src)
                                .for_each(|(si, gi)| *si += gi);
                        }
                    });
                    offset += c;
                }
            }
            Op::Slice { x, start } => {
                let c = val(*x).last_dim();
                let w = node.value.last_dim();
                let rows = node.value.rows();
                acc(*x, &|s| {
                    for r in 0..rows {
                        for j in 0..w {
                            s[r * c + start + j] += g[r * w + j];
                        }
                    }
                });
            }
            Op::Scale(x, c) => acc(*x, &|s| s.iter_mut().zip(g).for_each(|(si, gi)| *si += c * gi)),
            Op::AddConst(x) => acc(*x, &|s| s.iter_mut().zip(g).for_each(|(si, gi)| *si += gi)),
            Op::Mask(x, m) => acc(*x, &|s| {
                for i in 0..s.len() {
                    s[i] += g[i] * m[i];
                }
            }),
            Op::Clamp { x, lo, hi } => {
                let xv = val(*x).data();
                acc(*x, &|s| {
                    for i in 0..s.len() {
                        if xv[i] > *lo && xv[i] < *hi {
                            s[i] += g[i];
                        }
                    }
                });
            }
            Op::TileRows { x, times } => {
                let n = val(*x).numel();
                acc(*x, &|s| {
                    for t in 0..*times {
                        s.iter_mut()
                            .zip(&g[t * n..(t + 1) * n])
                            .for_each(|(si, gi)| *si += gi);
                    }
                });
            }
            Op::RowCosine { a, b, eps } => {
                let (ta, tb) = (val(*a), val(*b));
                let d = ta.last_dim();
                let rows = ta.rows();
                // d cos / d a = b / (Da Db) - dot a / (|a| Da^2 Db), with Da = |a| + eps
                let grad_for = |u: &Tensor, v: &Tensor, s: &mut [f64]| {
                    for r in 0..rows {
                        let (ru, rv) = (u.row(r), v.row(r));
                        let dot: f64 = ru.iter().zip(rv).map(|(x, y)| x * y).sum();
                        let nu = ru.iter().map(|x| x * x).sum::<f64>().sqrt();
                        let nv = rv.iter().map(|x| x * x).sum::<f64>().sqrt();
                        let (du, dv) = (nu + eps, nv + eps);
                        let radial = if nu > 0.0 { dot / (nu * du * du * dv) } else { 0.0 };
                        for j in 0..d {
                            s[r * d + j] += g[r] * (rv[j] / (du * dv) - radial * ru[j]);
                        }
                    }
                };
                acc(*a, &|s| grad_for(ta, tb, s));
                acc(*b, &|s| grad_for(tb, ta, s));
            }
        }
    }
}
