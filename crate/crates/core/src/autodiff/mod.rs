//! Minimal scalar automatic differentiation.
//!
//! Reverse mode over a recorded [`Tape`] supplies parameter gradients;
//! [`Dual`] values carry time derivatives as tape nodes so the reverse sweep
//! also differentiates through them.

mod dual;
mod params;
mod tape;

pub use dual::Dual;
pub use params::{ParamSet, ParamVars};
pub use tape::{Op, Tape, Var};

use crate::error::{Error, Result};

/// Gradient of `root` with respect to the recorded parameters.
pub fn backward(tape: &Tape, root: Var, vars: ParamVars) -> Result<Vec<f64>> {
    if root.index() < vars.get_start() {
        return Ok(vec![0.0; vars.len()]);
    }
    let adj = tape.adjoints(root)?;
    Ok((0..vars.len())
        .map(|i| adj.get(vars.get(i).index()).copied().unwrap_or(0.0))
        .collect())
}

/// Evaluates `f` at time `t` and returns the value and its time derivative.
pub fn eval_dual<F>(f: F, t: f64) -> Result<(f64, f64)>
where
    F: FnOnce(&mut Tape, Dual) -> Result<Dual>,
{
    let mut tape = Tape::new();
    let td = Dual::time(&mut tape, t);
    let y = f(&mut tape, td)?;
    Ok((tape.value(y.primal), tape.value(y.tangent)))
}

/// Outcome of comparing reverse-mode gradients with central differences.
#[derive(Clone, Debug)]
pub struct FdReport {
    pub max_rel_err: f64,
    pub worst_index: Option<usize>,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
}

/// Relative error with the denominator floored at 1e-8.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(1e-8)
}

/// Compares `backward` against the fourth-order central difference
/// `(8 (f(p+h) - f(p-h)) - (f(p+2h) - f(p-2h))) / 12h` for every parameter
/// and reports the worst relative error.
pub fn finite_diff_check<F>(mut f: F, params: &ParamSet, h: f64) -> Result<FdReport>
where
    F: FnMut(&mut Tape, ParamVars) -> Result<Var>,
{
    if !(h > 0.0) {
        return Err(Error::Config(format!("finite-difference step must be positive, got {h}")));
    }
    let mut tape = Tape::new();
    let vars = params.record(&mut tape);
    let root = f(&mut tape, vars)?;
    let analytic = backward(&tape, root, vars)?;

    let mut probe = params.clone();
    let mut eval = |probe: &ParamSet| -> Result<f64> {
        tape.clear();
        let vars = probe.record(&mut tape);
        let root = f(&mut tape, vars)?;
        Ok(tape.value(root))
    };
    let mut numeric = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let p = params.values()[i];
        let mut at = |x: f64| -> Result<f64> {
            probe.values_mut()[i] = x;
            eval(&probe)
        };
        let (up, down) = (at(p + h)?, at(p - h)?);
        let (up2, down2) = (at(p + 2.0 * h)?, at(p - 2.0 * h)?);
        probe.values_mut()[i] = p;
        numeric.push((8.0 * (up - down) - (up2 - down2)) / (12.0 * h));
    }

    let mut max_rel_err = 0.0;
    let mut worst_index = None;
    for (i, (&a, &n)) in analytic.iter().zip(&numeric).enumerate() {
        let e = relative_error(a, n);
        if e > max_rel_err || worst_index.is_none() {
            max_rel_err = e;
            worst_index = Some(i);
        }
    }
    Ok(FdReport { max_rel_err, worst_index, analytic, numeric })
}
