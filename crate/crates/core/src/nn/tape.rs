//! Reverse-mode differentiation over a closed set of primitives: network
//! forward passes, ELU, Gaussian log-densities and scalar arithmetic.
//!
//! Every tape node is a scalar. A network forward is recorded as one call
//! whose outputs are consecutive nodes; its backward pass is a dense backprop
//! into the gradient buffer of the parameter block it used.

use super::mlp::{self, ForwardCache};
use super::spec::NetworkSpec;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockId(usize);

#[derive(Debug, Clone, Copy)]
enum Op<T> {
    Const,
    Param { block: usize, index: usize },
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Neg(usize),
    Scale(usize, T),
    Exp(usize),
    Ln(usize),
    Elu(usize),
    Min(usize, usize),
    Max(usize, usize),
    Clamp { x: usize, lo: T, hi: T },
    Sum { start: usize, len: usize },
    /// Output `k` of network call `call`.
    NetOut { call: usize, k: usize },
}

struct NetCall<'a, T> {
    spec: &'a NetworkSpec,
    block: usize,
    cache: ForwardCache<T>,
    first_node: usize,
}

pub struct Tape<'a, T> {
    ops: Vec<Op<T>>,
    values: Vec<T>,
    sum_args: Vec<usize>,
    blocks: Vec<&'a [T]>,
    calls: Vec<NetCall<'a, T>>,
}

/// Gradients per registered parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub blocks: Vec<Vec<T>>,
}

impl<T> Gradients<T> {
    pub fn block(&self, id: BlockId) -> &[T] {
        &self.blocks[id.0]
    }

    pub fn into_block(mut self, id: BlockId) -> Vec<T> {
        std::mem::take(&mut self.blocks[id.0])
    }
}

impl<'a, T: Scalar> Default for Tape<'a, T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<'a, T: Scalar> Tape<'a, T> {
    pub fn new() -> Self {
        Tape {
            ops: Vec::new(),
            values: Vec::new(),
            sum_args: Vec::new(),
            blocks: Vec::new(),
            calls: Vec::new(),
        }
    }

    pub fn add_block(&mut self, params: &'a [T]) -> BlockId {
        self.blocks.push(params);
        BlockId(self.blocks.len() - 1)
    }

    fn push(&mut self, op: Op<T>, value: T) -> Var {
        self.ops.push(op);
        self.values.push(value);
        Var(self.values.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn value(&self, v: Var) -> T {
        self.values[v.0]
    }

    pub fn constant(&mut self, x: T) -> Var {
        self.push(Op::Const, x)
    }

    pub fn param(&mut self, block: BlockId, index: usize) -> Var {
        let value = self.blocks[block.0][index];
        self.push(Op::Param { block: block.0, index }, value)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.values[a.0] + self.values[b.0];
        self.push(Op::Add(a.0, b.0), v)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.values[a.0] - self.values[b.0];
        self.push(Op::Sub(a.0, b.0), v)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.values[a.0] * self.values[b.0];
        self.push(Op::Mul(a.0, b.0), v)
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        let v = self.values[a.0] / self.values[b.0];
        self.push(Op::Div(a.0, b.0), v)
    }

    pub fn neg(&mut self, a: Var) -> Var {
        let v = -self.values[a.0];
        self.push(Op::Neg(a.0), v)
    }

    pub fn scale(&mut self, a: Var, c: T) -> Var {
        let v = self.values[a.0] * c;
        self.push(Op::Scale(a.0, c), v)
    }

    pub fn add_const(&mut self, a: Var, c: T) -> Var {
        let k = self.constant(c);
        self.add(a, k)
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.mul(a, a)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let v = self.values[a.0].exp();
        self.push(Op::Exp(a.0), v)
    }

    pub fn ln(&mut self, a: Var) -> Var {
        let v = self.values[a.0].ln();
        self.push(Op::Ln(a.0), v)
    }

    pub fn elu(&mut self, a: Var) -> Var {
        let v = mlp::elu(self.values[a.0]);
        self.push(Op::Elu(a.0), v)
    }

    /// Ties send the gradient to `a`.
    pub fn min(&mut self, a: Var, b: Var) -> Var {
        let v = self.values[a.0].min(self.values[b.0]);
        self.push(Op::Min(a.0, b.0), v)
    }

    pub fn max(&mut self, a: Var, b: Var) -> Var {
        let v = self.values[a.0].max(self.values[b.0]);
        self.push(Op::Max(a.0, b.0), v)
    }

    /// Gradient passes only strictly inside `(lo, hi)`.
    pub fn clamp(&mut self, x: Var, lo: T, hi: T) -> Var {
        let v = self.values[x.0].max(lo).min(hi);
        self.push(Op::Clamp { x: x.0, lo, hi }, v)
    }

    pub fn sum(&mut self, xs: &[Var]) -> Var {
        let start = self.sum_args.len();
        let mut v = T::zero();
        for x in xs {
            self.sum_args.push(x.0);
            v = v + self.values[x.0];
        }
        self.push(Op::Sum { start, len: xs.len() }, v)
    }

    pub fn mean(&mut self, xs: &[Var]) -> Var {
        let s = self.sum(xs);
        self.scale(s, T::one() / T::from_usize(xs.len().max(1)).unwrap())
    }

    /// Records a network forward on a constant input.
    pub fn forward(&mut self, spec: &'a NetworkSpec, block: BlockId, input: &[T]) -> Result<Vec<Var>> {
        let params = self.blocks[block.0];
        let mut cache = ForwardCache::default();
        mlp::forward_cached(spec, params, input, &mut cache)?;
        let call = self.calls.len();
        let first_node = self.ops.len();
        let outs: Vec<Var> = cache
            .output(spec)
            .to_vec()
            .into_iter()
            .enumerate()
            .map(|(k, y)| self.push(Op::NetOut { call, k }, y))
            .collect();
        self.calls.push(NetCall {
            spec,
            block: block.0,
            cache,
            first_node,
        });
        Ok(outs)
    }

    /// Diagonal Gaussian log-density of a constant action, built from primitives.
    pub fn gaussian_log_prob(&mut self, mean: &[Var], log_std: &[Var], action: &[T]) -> Result<Var> {
        if mean.len() != log_std.len() {
            return Err(Error::dim("policy log_std", mean.len(), log_std.len()));
        }
        if mean.len() != action.len() {
            return Err(Error::dim("action", mean.len(), action.len()));
        }
        let half_log_two_pi = T::lit(0.5) * (T::lit(2.0) * T::PI()).ln();
        let mut terms = Vec::with_capacity(mean.len());
        for ((&mu, &ls), &a) in mean.iter().zip(log_std).zip(action) {
            let a = self.constant(a);
            let diff = self.sub(a, mu);
            let neg_ls = self.neg(ls);
            let inv_std = self.exp(neg_ls);
            let z = self.mul(diff, inv_std);
            let z2 = self.square(z);
            let quad = self.scale(z2, T::lit(-0.5));
            let t = self.sub(quad, ls);
            terms.push(self.add_const(t, -half_log_two_pi));
        }
        Ok(self.sum(&terms))
    }

    /// Reverse sweep from a single scalar output.
    pub fn backward(&self, loss: &[Var]) -> Result<Gradients<T>> {
        if loss.len() != 1 {
            return Err(Error::NonScalarLoss(loss.len()));
        }
        let root = loss[0].0;
        let mut adj = vec![T::zero(); root + 1];
        adj[root] = T::one();
        let mut grads: Vec<Vec<T>> = self.blocks.iter().map(|b| vec![T::zero(); b.len()]).collect();
        let mut d_out: Vec<T> = Vec::new();
        for i in (0..=root).rev() {
            let g = adj[i];
            match self.ops[i] {
                Op::NetOut { call, k } => {
                    // Outputs are contiguous and all consumers come later, so
                    // the call is complete once its first output is reached.
                    if k != 0 {
                        continue;
                    }
                    let c = &self.calls[call];
                    let n = c.spec.output_dim;
                    let end = (c.first_node + n).min(root + 1);
                    d_out.clear();
                    d_out.extend_from_slice(&adj[c.first_node..end]);
                    d_out.resize(n, T::zero());
                    if d_out.iter().all(|d| *d == T::zero()) {
                        continue;
                    }
                    mlp::backprop(c.spec, self.blocks[c.block], &c.cache, &d_out, &mut grads[c.block]);
                    continue;
                }
                _ if g == T::zero() => continue,
                Op::Const => {}
                Op::Param { block, index } => {
                    grads[block][index] = grads[block][index] + g;
                }
                Op::Add(a, b) => {
                    adj[a] = adj[a] + g;
                    adj[b] = adj[b] + g;
                }
                Op::Sub(a, b) => {
                    adj[a] = adj[a] + g;
                    adj[b] = adj[b] - g;
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (self.values[a], self.values[b]);
                    adj[a] = adj[a] + g * vb;
                    adj[b] = adj[b] + g * va;
                }
                Op::Div(a, b) => {
                    let vb = self.values[b];
                    adj[a] = adj[a] + g / vb;
                    adj[b] = adj[b] - g * self.values[i] / vb;
                }
                Op::Neg(a) => adj[a] = adj[a] - g,
                Op::Scale(a, c) => adj[a] = adj[a] + g * c,
                Op::Exp(a) => adj[a] = adj[a] + g * self.values[i],
                Op::Ln(a) => adj[a] = adj[a] + g / self.values[a],
                Op::Elu(a) => adj[a] = adj[a] + g * mlp::elu_grad(self.values[a]),
                Op::Min(a, b) => {
                    if self.values[a] <= self.values[b] {
                        adj[a] = adj[a] + g;
                    } else {
                        adj[b] = adj[b] + g;
                    }
                }
                Op::Max(a, b) => {
                    if self.values[a] >= self.values[b] {
                        adj[a] = adj[a] + g;
                    } else {
                        adj[b] = adj[b] + g;
                    }
                }
                Op::Clamp { x, lo, hi } => {
                    let v = self.values[x];
                    if v > lo && v < hi {
                        adj[x] = adj[x] + g;
                    }
                }
                Op::Sum { start, len } => {
                    for &a in &self.sum_args[start..start + len] {
                        adj[a] = adj[a] + g;
                    }
                }
            }
        }
        Ok(Gradients { blocks: grads })
    }
}
