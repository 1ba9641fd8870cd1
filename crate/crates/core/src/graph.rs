//! Define-by-run reverse-mode differentiation.
//!
//! A [`Graph`] records every operation executed on it. Node indices are
//! assigned in execution order, so walking them backwards is a valid
//! reverse topological order. Parameters enter the graph through
//! [`Graph::param`] under a slot index; [`Graph::backward`] adds the loss
//! gradient into the matching [`Parameter::grad`].
//!
//! ```
//! use posecast_core::graph::{Graph, Parameter};
//! use posecast_core::tensor::Tensor;
//!
//! let mut w = Parameter::new("w", Tensor::new(vec![3], vec![1.0, 2.0, 3.0]).unwrap());
//! let mut g = Graph::new();
//! let x = g.param(0, &w);
//! let sq = g.mul(x, x).unwrap();
//! let loss = g.sum(sq);
//! g.backward(loss, &mut [&mut w]).unwrap();
//! assert_eq!(w.grad.values(), &[2.0, 4.0, 6.0]);
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{as_matrix, gemm_nn, gemm_nt, gemm_tn, sigmoid, Tensor};

/// A named learnable tensor with its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        Self {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

/// An ordered collection of parameters. The order defines graph slot indices.
pub trait ParamSet {
    fn params(&self) -> Vec<&Parameter>;
    fn params_mut(&mut self) -> Vec<&mut Parameter>;

    fn zero_grads(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn num_scalars(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}

impl ParamSet for Vec<Parameter> {
    fn params(&self) -> Vec<&Parameter> {
        self.iter().collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        self.iter_mut().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Tanh,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
        }
    }
}

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Input,
    Param(usize),
    MatMul(Var, Var),
    /// `a · bᵀ`
    MatMulT(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    /// Multiply by a graph scalar.
    ScaleBy(Var, Var),
    Act(Var, Activation),
    SliceCols(Var, usize),
    ConcatCols(Var, Var),
    Sum(Var),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
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

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Constant input; never receives a gradient.
    pub fn input(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Input, false)
    }

    /// Registers `p` under `slot`, the index it will have in the slice given
    /// to [`Graph::backward`].
    pub fn param(&mut self, slot: usize, p: &Parameter) -> Var {
        self.push(p.value.clone(), Op::Param(slot), true)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (m, k) = as_matrix(ta, "matmul")?;
        let (k2, n) = as_matrix(tb, "matmul")?;
        if k != k2 {
            return Err(Error::shape("matmul", ta.shape(), tb.shape()));
        }
        let mut out = vec![0.0; m * n];
        gemm_nn(ta.values(), tb.values(), &mut out, m, k, n);
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(Tensor::matrix(m, n, out)?, Op::MatMul(a, b), needs))
    }

    /// `a[m×k] · b[n×k]ᵀ`, the layout used for weight matrices stored as
    /// `out_features × in_features`.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (m, k) = as_matrix(ta, "matmul_t")?;
        let (n, k2) = as_matrix(tb, "matmul_t")?;
        if k != k2 {
            return Err(Error::shape("matmul_t", ta.shape(), tb.shape()));
        }
        let mut out = vec![0.0; m * n];
        gemm_nt(ta.values(), tb.values(), &mut out, m, k, n);
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(Tensor::matrix(m, n, out)?, Op::MatMulT(a, b), needs))
    }

    /// Adds a length-`n` bias to every row of an `m×n` matrix.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Result<Var> {
        let (tx, tb) = (self.value(x), self.value(b));
        let (m, n) = as_matrix(tx, "add_bias")?;
        if tb.len() != n {
            return Err(Error::shape("add_bias", tx.shape(), tb.shape()));
        }
        let mut out = tx.values().to_vec();
        for row in out.chunks_exact_mut(n) {
            for (o, bv) in row.iter_mut().zip(tb.values()) {
                *o += bv;
            }
        }
        let needs = self.needs(x) || self.needs(b);
        Ok(self.push(Tensor::matrix(m, n, out)?, Op::AddBias(x, b), needs))
    }

    fn zip_same(
        &mut self,
        a: Var,
        b: Var,
        name: &'static str,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(Error::shape(name, ta.shape(), tb.shape()));
        }
        let out: Vec<f64> = ta
            .values()
            .iter()
            .zip(tb.values())
            .map(|(&x, &y)| f(x, y))
            .collect();
        let value = Tensor::new(ta.shape().to_vec(), out)?;
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(value, op, needs))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_same(a, b, "add", |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_same(a, b, "sub", |x, y| x - y, Op::Sub(a, b))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_same(a, b, "mul", |x, y| x * y, Op::Mul(a, b))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let t = self.value(x);
        let out = t.values().iter().map(|v| v * c).collect();
        let value = Tensor::new(t.shape().to_vec(), out).expect("same shape");
        let needs = self.needs(x);
        self.push(value, Op::Scale(x, c), needs)
    }

    /// Multiplies every entry of `x` by the scalar node `s`.
    pub fn scale_by(&mut self, x: Var, s: Var) -> Result<Var> {
        let ts = self.value(s);
        if !ts.is_scalar() {
            return Err(Error::shape("scale_by", self.value(x).shape(), ts.shape()));
        }
        let c = ts.values()[0];
        let t = self.value(x);
        let out = t.values().iter().map(|v| c * v).collect();
        let value = Tensor::new(t.shape().to_vec(), out)?;
        let needs = self.needs(x) || self.needs(s);
        Ok(self.push(value, Op::ScaleBy(x, s), needs))
    }

    pub fn activation(&mut self, x: Var, kind: Activation) -> Var {
        let t = self.value(x);
        let out = t.values().iter().map(|&v| kind.apply(v)).collect();
        let value = Tensor::new(t.shape().to_vec(), out).expect("same shape");
        let needs = self.needs(x);
        self.push(value, Op::Act(x, kind), needs)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.activation(x, Activation::Sigmoid)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.activation(x, Activation::Tanh)
    }

    /// Columns `[start, start + width)` of a matrix.
    pub fn slice_cols(&mut self, x: Var, start: usize, width: usize) -> Result<Var> {
        let t = self.value(x);
        let (m, n) = as_matrix(t, "slice_cols")?;
        if width == 0 || start + width > n {
            return Err(Error::shape("slice_cols", t.shape(), &[start, width]));
        }
        let mut out = Vec::with_capacity(m * width);
        for row in t.values().chunks_exact(n) {
            out.extend_from_slice(&row[start..start + width]);
        }
        let needs = self.needs(x);
        Ok(self.push(Tensor::matrix(m, width, out)?, Op::SliceCols(x, start), needs))
    }

    /// `[a | b]` along columns; both must have the same row count.
    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (ma, na) = as_matrix(ta, "concat_cols")?;
        let (mb, nb) = as_matrix(tb, "concat_cols")?;
        if ma != mb {
            return Err(Error::shape("concat_cols", ta.shape(), tb.shape()));
        }
        let mut out = Vec::with_capacity(ma * (na + nb));
        for (ra, rb) in ta.values().chunks_exact(na).zip(tb.values().chunks_exact(nb)) {
            out.extend_from_slice(ra);
            out.extend_from_slice(rb);
        }
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(Tensor::matrix(ma, na + nb, out)?, Op::ConcatCols(a, b), needs))
    }

    /// Sum of all entries, as a scalar node.
    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).values().iter().sum();
        let needs = self.needs(x);
        self.push(Tensor::scalar(s), Op::Sum(x), needs)
    }

    /// Replays the recorded operations in reverse from the scalar `loss`,
    /// adding `∂loss/∂param` into each registered parameter's gradient.
    pub fn backward(&self, loss: Var, params: &mut [&mut Parameter]) -> Result<()> {
        let lt = self.value(loss);
        if !lt.is_scalar() {
            return Err(Error::contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                lt.shape()
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = Vec::with_capacity(loss.0 + 1);
        grads.resize_with(loss.0 + 1, || None);
        grads[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match node.op {
                Op::Input => {}
                Op::Param(slot) => {
                    let p = params.get_mut(slot).ok_or_else(|| {
                        Error::contract(format!("graph references parameter slot {slot}, not supplied"))
                    })?;
                    if p.value.shape() != node.value.shape() {
                        return Err(Error::shape("backward", p.value.shape(), node.value.shape()));
                    }
                    for (acc, v) in p.grad.values_mut().iter_mut().zip(&g) {
                        *acc += v;
                    }
                }
                Op::MatMul(a, b) => {
                    let (m, k) = as_matrix(self.value(a), "matmul")?;
                    let n = node.value.cols();
                    if self.needs(a) {
                        gemm_nt(&g, self.value(b).values(), self.buf(&mut grads, a), m, n, k);
                    }
                    if self.needs(b) {
                        gemm_tn(self.value(a).values(), &g, self.buf(&mut grads, b), m, k, n);
                    }
                }
                Op::MatMulT(a, b) => {
                    let (m, k) = as_matrix(self.value(a), "matmul_t")?;
                    let n = node.value.cols();
                    if self.needs(a) {
                        gemm_nn(&g, self.value(b).values(), self.buf(&mut grads, a), m, n, k);
                    }
                    if self.needs(b) {
                        gemm_tn(&g, self.value(a).values(), self.buf(&mut grads, b), m, n, k);
                    }
                }
                Op::AddBias(x, b) => {
                    if self.needs(x) {
                        add_into(self.buf(&mut grads, x), &g);
                    }
                    if self.needs(b) {
                        let n = node.value.cols();
                        let gb = self.buf(&mut grads, b);
                        for row in g.chunks_exact(n) {
                            add_into(gb, row);
                        }
                    }
                }
                Op::Add(a, b) => {
                    for v in [a, b] {
                        if self.needs(v) {
                            add_into(self.buf(&mut grads, v), &g);
                        }
                    }
                }
                Op::Sub(a, b) => {
                    if self.needs(a) {
                        add_into(self.buf(&mut grads, a), &g);
                    }
                    if self.needs(b) {
                        for (o, v) in self.buf(&mut grads, b).iter_mut().zip(&g) {
                            *o -= v;
                        }
                    }
                }
                Op::Mul(a, b) => {
                    if self.needs(a) {
                        let other = self.value(b).values();
                        for ((o, gv), y) in self.buf(&mut grads, a).iter_mut().zip(&g).zip(other) {
                            *o += gv * y;
                        }
                    }
                    if self.needs(b) {
                        let other = self.value(a).values();
                        for ((o, gv), y) in self.buf(&mut grads, b).iter_mut().zip(&g).zip(other) {
                            *o += gv * y;
                        }
                    }
                }
                Op::Scale(x, c) => {
                    if self.needs(x) {
                        for (o, gv) in self.buf(&mut grads, x).iter_mut().zip(&g) {
                            *o += c * gv;
                        }
                    }
                }
                Op::ScaleBy(x, s) => {
                    if self.needs(x) {
                        let c = self.value(s).values()[0];
                        for (o, gv) in self.buf(&mut grads, x).iter_mut().zip(&g) {
                            *o += c * gv;
                        }
                    }
                    if self.needs(s) {
                        let xs = self.value(x).values();
                        let d: f64 = g.iter().zip(xs).map(|(gv, xv)| gv * xv).sum();
                        self.buf(&mut grads, s)[0] += d;
                    }
                }
                Op::Act(x, kind) => {
                    if self.needs(x) {
                        let y = node.value.values();
                        let gx = self.buf(&mut grads, x);
                        match kind {
                            Activation::Sigmoid => {
                                for ((o, gv), yv) in gx.iter_mut().zip(&g).zip(y) {
                                    *o += gv * yv * (1.0 - yv);
                                }
                            }
                            Activation::Tanh => {
                                for ((o, gv), yv) in gx.iter_mut().zip(&g).zip(y) {
                                    *o += gv * (1.0 - yv * yv);
                                }
                            }
                        }
                    }
                }
                Op::SliceCols(x, start) => {
                    if self.needs(x) {
                        let n = self.value(x).cols();
                        let w = node.value.cols();
                        let gx = self.buf(&mut grads, x);
                        for (dst, src) in gx.chunks_exact_mut(n).zip(g.chunks_exact(w)) {
                            add_into(&mut dst[start..start + w], src);
                        }
                    }
                }
                Op::ConcatCols(a, b) => {
                    let na = self.value(a).cols();
                    let nb = self.value(b).cols();
                    if self.needs(a) {
                        let ga = self.buf(&mut grads, a);
                        for (dst, src) in ga.chunks_exact_mut(na).zip(g.chunks_exact(na + nb)) {
                            add_into(dst, &src[..na]);
                        }
                    }
                    if self.needs(b) {
                        let gb = self.buf(&mut grads, b);
                        for (dst, src) in gb.chunks_exact_mut(nb).zip(g.chunks_exact(na + nb)) {
                            add_into(dst, &src[na..]);
                        }
                    }
                }
                Op::Sum(x) => {
                    if self.needs(x) {
                        let gv = g[0];
                        for o in self.buf(&mut grads, x).iter_mut() {
                            *o += gv;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn buf<'g>(&self, grads: &'g mut [Option<Vec<f64>>], v: Var) -> &'g mut Vec<f64> {
        let n = self.nodes[v.0].value.len();
        grads[v.0].get_or_insert_with(|| vec![0.0; n])
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
