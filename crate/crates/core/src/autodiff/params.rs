use std::collections::HashMap;
use std::ops::Range;

use super::tape::{Tape, Var};
use crate::error::{Error, Result};

/// Flat parameter vector with named, disjoint slices.
///
/// Each subnetwork owns one slice. Indices never move once registered, so a
/// gradient vector produced by [`ParamSet::gradient`] lines up with
/// [`ParamSet::values`] across every forward pass.
#[derive(Clone, Debug, Default)]
pub struct ParamSet {
    values: Vec<f64>,
    slices: Vec<(String, Range<usize>)>,
    by_name: HashMap<String, usize>,
}

/// The parameters of one forward pass, recorded contiguously on a tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamVars {
    start: usize,
    len: usize,
}

impl ParamVars {
    #[inline]
    pub fn get(&self, i: usize) -> Var {
        debug_assert!(i < self.len);
        // Recorded back to back by `ParamSet::record`.
        Var::from_index(self.start + i)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub(crate) fn get_start(&self) -> usize {
        self.start
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: &str, values: Vec<f64>) -> Result<Range<usize>> {
        if self.by_name.contains_key(name) {
            return Err(Error::DuplicateSlice(name.to_string()));
        }
        let range = self.values.len()..self.values.len() + values.len();
        self.values.extend(values);
        self.by_name.insert(name.to_string(), self.slices.len());
        self.slices.push((name.to_string(), range.clone()));
        Ok(range)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Replaces every value; the length must match.
    pub fn set_values(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.values.len() {
            return Err(Error::ShapeError(format!(
                "parameter vector has {} entries, expected {}",
                values.len(),
                self.values.len()
            )));
        }
        self.values.copy_from_slice(values);
        Ok(())
    }

    pub fn slices(&self) -> impl Iterator<Item = (&str, Range<usize>)> {
        self.slices.iter().map(|(n, r)| (n.as_str(), r.clone()))
    }

    pub fn range(&self, name: &str) -> Option<Range<usize>> {
        self.by_name.get(name).map(|&i| self.slices[i].1.clone())
    }

    pub fn slice(&self, name: &str) -> Option<&[f64]> {
        self.range(name).map(|r| &self.values[r])
    }

    pub fn slice_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let r = self.range(name)?;
        Some(&mut self.values[r])
    }

    /// Records every parameter as a leaf, in index order.
    pub fn record(&self, tape: &mut Tape) -> ParamVars {
        let start = tape.len();
        for &v in &self.values {
            tape.variable(v);
        }
        ParamVars { start, len: self.values.len() }
    }

    /// Reverse sweep from `root`, restricted to the recorded parameters.
    /// Parameters that do not influence `root` get exactly zero.
    pub fn gradient(&self, tape: &Tape, root: Var, vars: ParamVars) -> Result<Vec<f64>> {
        super::backward(tape, root, vars)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slices_are_disjoint_and_named() {
        let mut ps = ParamSet::new();
        let a = ps.register("a", vec![1.0, 2.0]).unwrap();
        let b = ps.register("b", vec![3.0]).unwrap();
        assert_eq!(a, 0..2);
        assert_eq!(b, 2..3);
        assert_eq!(ps.slice("b"), Some(&[3.0][..]));
        assert!(matches!(ps.register("a", vec![]), Err(Error::DuplicateSlice(_))));
    }

    #[test]
    fn unused_parameters_get_zero_gradient() {
        let mut ps = ParamSet::new();
        ps.register("p", vec![2.0, 5.0, 7.0]).unwrap();
        let mut tape = Tape::new();
        let pv = ps.record(&mut tape);
        let root = tape.mul(pv.get(0), pv.get(2));
        let g = ps.gradient(&tape, root, pv).unwrap();
        assert_eq!(g, vec![7.0, 0.0, 2.0]);
    }
}
