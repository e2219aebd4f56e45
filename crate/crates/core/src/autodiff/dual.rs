//! Time tangents carried as tape nodes.
//!
//! A [`Dual`] pairs a value with its derivative in `t`, and both halves live
//! on the tape. The tangent of the ansatz is therefore an ordinary graph
//! node and the reverse sweep differentiates it with respect to the
//! parameters (forward-over-reverse).

use super::tape::{Op, Tape, Var};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dual {
    pub primal: Var,
    pub tangent: Var,
}

impl Dual {
    pub fn new(primal: Var, tangent: Var) -> Self {
        Dual { primal, tangent }
    }

    /// A value with zero time derivative.
    pub fn constant(primal: Var) -> Self {
        Dual { primal, tangent: Tape::ZERO }
    }

    /// The time variable itself: tangent one.
    pub fn time(tape: &mut Tape, t: f64) -> Self {
        Dual { primal: tape.constant(t), tangent: Tape::ONE }
    }

    pub fn zero() -> Self {
        Dual { primal: Tape::ZERO, tangent: Tape::ZERO }
    }
}

impl Tape {
    pub fn dual_add(&mut self, a: Dual, b: Dual) -> Dual {
        Dual { primal: self.add(a.primal, b.primal), tangent: self.add(a.tangent, b.tangent) }
    }

    pub fn dual_sub(&mut self, a: Dual, b: Dual) -> Dual {
        let nb = self.dual_neg(b);
        self.dual_add(a, nb)
    }

    pub fn dual_neg(&mut self, a: Dual) -> Dual {
        Dual { primal: self.neg(a.primal), tangent: self.neg(a.tangent) }
    }

    pub fn dual_mul(&mut self, a: Dual, b: Dual) -> Dual {
        let primal = self.mul(a.primal, b.primal);
        let l = self.mul(a.primal, b.tangent);
        let r = self.mul(a.tangent, b.primal);
        Dual { primal, tangent: self.add(l, r) }
    }

    /// Product with a value whose time derivative is zero (e.g. a weight).
    pub fn dual_mul_const(&mut self, a: Dual, w: Var) -> Dual {
        Dual { primal: self.mul(a.primal, w), tangent: self.mul(a.tangent, w) }
    }

    pub fn dual_scale(&mut self, a: Dual, c: f64) -> Dual {
        let k = self.constant(c);
        self.dual_mul_const(a, k)
    }

    pub fn dual_exp(&mut self, a: Dual) -> Dual {
        let e = self.exp(a.primal);
        Dual { primal: e, tangent: self.mul(e, a.tangent) }
    }

    pub fn dual_sin(&mut self, a: Dual) -> Dual {
        let primal = self.sin(a.primal);
        if self.is_zero(a.tangent) {
            return Dual::constant(primal);
        }
        let c = self.cos(a.primal);
        Dual { primal, tangent: self.mul(c, a.tangent) }
    }

    pub fn dual_cos(&mut self, a: Dual) -> Dual {
        let primal = self.cos(a.primal);
        if self.is_zero(a.tangent) {
            return Dual::constant(primal);
        }
        let s = self.sin(a.primal);
        let ns = self.neg(s);
        Dual { primal, tangent: self.mul(ns, a.tangent) }
    }

    /// tanh with tangent (1 - h^2) * a' written as a' - h*(h*a').
    pub fn dual_tanh(&mut self, a: Dual) -> Dual {
        let h = self.tanh(a.primal);
        if self.is_zero(a.tangent) {
            return Dual::constant(h);
        }
        let ha = self.mul(h, a.tangent);
        let hha = self.mul(h, ha);
        Dual { primal: h, tangent: self.sub(a.tangent, hha) }
    }

    pub fn dual_recip(&mut self, a: Dual) -> Dual {
        let r = self.recip(a.primal);
        if self.is_zero(a.tangent) {
            return Dual::constant(r);
        }
        let ra = self.mul(r, a.tangent);
        let rra = self.mul(r, ra);
        Dual { primal: r, tangent: self.neg(rra) }
    }

    /// Applies a primitive by tag. Leaves (`Const`, `Var`) have no tangent
    /// rule and are rejected, as is a wrong argument count.
    pub fn dual_apply(&mut self, op: Op, args: &[Dual]) -> Result<Dual> {
        let unsupported = || Error::UnsupportedDualOp { op, arity: args.len() };
        match (op, args) {
            (Op::Add, [a, b]) => Ok(self.dual_add(*a, *b)),
            (Op::Mul, [a, b]) => Ok(self.dual_mul(*a, *b)),
            (Op::Neg, [a]) => Ok(self.dual_neg(*a)),
            (Op::Exp, [a]) => Ok(self.dual_exp(*a)),
            (Op::Sin, [a]) => Ok(self.dual_sin(*a)),
            (Op::Cos, [a]) => Ok(self.dual_cos(*a)),
            (Op::Tanh, [a]) => Ok(self.dual_tanh(*a)),
            (Op::Recip, [a]) => Ok(self.dual_recip(*a)),
            _ => Err(unsupported()),
        }
    }
}
