//! Scalar Wengert tape.
//!
//! Nodes are appended in evaluation order, so every node's parents have
//! smaller indices and a single reverse sweep computes all adjoints.
//! Two constants, zero and one, are always present at fixed indices and the
//! recording methods fold operations against them. Folding keeps the graph
//! small when tangents are identically zero (parameters, collocation times).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Primitive tag of a tape node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Op {
    Const,
    Var,
    Add,
    Mul,
    Neg,
    Exp,
    Sin,
    Cos,
    Tanh,
    Recip,
}

impl Op {
    pub fn arity(self) -> usize {
        match self {
            Op::Const | Op::Var => 0,
            Op::Add | Op::Mul => 2,
            Op::Neg | Op::Exp | Op::Sin | Op::Cos | Op::Tanh | Op::Recip => 1,
        }
    }
}

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn from_index(i: usize) -> Var {
        Var(i as u32)
    }
}

#[derive(Clone, Copy, Debug)]
struct Node {
    value: f64,
    a: u32,
    b: u32,
    op: Op,
}

#[derive(Clone, Debug)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub const ZERO: Var = Var(0);
    pub const ONE: Var = Var(1);

    pub fn new() -> Self {
        Self::with_capacity(1024)
    }

    pub fn with_capacity(capacity: usize) -> Self {
        let mut nodes = Vec::with_capacity(capacity.max(2));
        nodes.push(Node { value: 0.0, a: 0, b: 0, op: Op::Const });
        nodes.push(Node { value: 1.0, a: 0, b: 0, op: Op::Const });
        Tape { nodes }
    }

    /// Drops every recorded node except the two built-in constants.
    /// Capacity is retained so the next forward pass does not reallocate.
    pub fn clear(&mut self) {
        self.nodes.truncate(2);
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() <= 2
    }

    #[inline]
    pub fn value(&self, v: Var) -> f64 {
        self.nodes[v.index()].value
    }

    pub fn op(&self, v: Var) -> Op {
        self.nodes[v.index()].op
    }

    pub fn parents(&self, v: Var) -> Vec<Var> {
        let n = &self.nodes[v.index()];
        match n.op.arity() {
            0 => vec![],
            1 => vec![Var(n.a)],
            _ => vec![Var(n.a), Var(n.b)],
        }
    }

    #[inline]
    fn push(&mut self, op: Op, a: u32, b: u32, value: f64) -> Var {
        let idx = self.nodes.len();
        assert!(idx < u32::MAX as usize, "tape overflow");
        self.nodes.push(Node { value, a, b, op });
        Var(idx as u32)
    }

    #[inline]
    fn is_const(&self, v: Var) -> bool {
        self.nodes[v.index()].op == Op::Const
    }

    #[inline]
    pub fn is_zero(&self, v: Var) -> bool {
        let n = &self.nodes[v.index()];
        n.op == Op::Const && n.value == 0.0
    }

    #[inline]
    fn is_one(&self, v: Var) -> bool {
        let n = &self.nodes[v.index()];
        n.op == Op::Const && n.value == 1.0
    }

    pub fn constant(&mut self, c: f64) -> Var {
        if c == 0.0 && c.is_sign_positive() {
            Self::ZERO
        } else if c == 1.0 {
            Self::ONE
        } else {
            self.push(Op::Const, 0, 0, c)
        }
    }

    /// Records a differentiable leaf.
    pub fn variable(&mut self, x: f64) -> Var {
        self.push(Op::Var, 0, 0, x)
    }

    #[inline]
    pub fn add(&mut self, a: Var, b: Var) -> Var {
        if self.is_zero(a) {
            return b;
        }
        if self.is_zero(b) {
            return a;
        }
        let value = self.value(a) + self.value(b);
        if self.is_const(a) && self.is_const(b) {
            return self.constant(value);
        }
        self.push(Op::Add, a.0, b.0, value)
    }

    #[inline]
    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        if self.is_zero(a) || self.is_zero(b) {
            return Self::ZERO;
        }
        if self.is_one(a) {
            return b;
        }
        if self.is_one(b) {
            return a;
        }
        let value = self.value(a) * self.value(b);
        if self.is_const(a) && self.is_const(b) {
            return self.constant(value);
        }
        self.push(Op::Mul, a.0, b.0, value)
    }

    #[inline]
    pub fn neg(&mut self, a: Var) -> Var {
        if self.is_zero(a) {
            return Self::ZERO;
        }
        let value = -self.value(a);
        if self.is_const(a) {
            return self.constant(value);
        }
        self.push(Op::Neg, a.0, 0, value)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let nb = self.neg(b);
        self.add(a, nb)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let k = self.constant(c);
        self.mul(a, k)
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.mul(a, a)
    }

    fn unary(&mut self, op: Op, a: Var, f: fn(f64) -> f64) -> Var {
        let value = f(self.value(a));
        if self.is_const(a) {
            return self.constant(value);
        }
        self.push(op, a.0, 0, value)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(Op::Exp, a, f64::exp)
    }

    pub fn sin(&mut self, a: Var) -> Var {
        self.unary(Op::Sin, a, f64::sin)
    }

    pub fn cos(&mut self, a: Var) -> Var {
        self.unary(Op::Cos, a, f64::cos)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(Op::Tanh, a, f64::tanh)
    }

    pub fn recip(&mut self, a: Var) -> Var {
        self.unary(Op::Recip, a, f64::recip)
    }

    /// Sum of a sequence, left to right.
    pub fn sum<I: IntoIterator<Item = Var>>(&mut self, items: I) -> Var {
        items.into_iter().fold(Self::ZERO, |acc, v| self.add(acc, v))
    }

    /// Reverse sweep from `root`; returns the adjoint of every node.
    ///
    /// The tape itself is not modified, so it can be swept again or cleared
    /// and reused for a fresh forward pass.
    pub fn adjoints(&self, root: Var) -> Result<Vec<f64>> {
        let r = root.index();
        let mut adj = vec![0.0; r + 1];
        adj[r] = 1.0;
        for i in (0..=r).rev() {
            let g = adj[i];
            if g == 0.0 {
                continue;
            }
            let node = self.nodes[i];
            let (a, b) = (node.a as usize, node.b as usize);
            let arity = node.op.arity();
            if (arity >= 1 && a >= i) || (arity == 2 && b >= i) {
                return Err(Error::Cycle { node: i });
            }
            match node.op {
                Op::Const | Op::Var => continue,
                Op::Add => {
                    adj[a] += g;
                    adj[b] += g;
                }
                Op::Mul => {
                    adj[a] += g * self.nodes[b].value;
                    adj[b] += g * self.nodes[a].value;
                }
                Op::Neg => adj[a] -= g,
                Op::Exp => adj[a] += g * node.value,
                Op::Sin => adj[a] += g * self.nodes[a].value.cos(),
                Op::Cos => adj[a] -= g * self.nodes[a].value.sin(),
                Op::Tanh => adj[a] += g * (1.0 - node.value * node.value),
                Op::Recip => adj[a] -= g * node.value * node.value,
            }
            if !adj[a].is_finite() || (arity == 2 && !adj[b].is_finite()) {
                return Err(Error::NonFiniteGradient { op: node.op });
            }
        }
        Ok(adj)
    }
}
