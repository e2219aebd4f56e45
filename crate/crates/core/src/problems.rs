//! Stiff test problems `y' = f(t, y)` on `[0, T]`.
//!
//! Right-hand sides are written once against [`Arith`] so the same formula
//! drives the reference integrator (plain `f64`) and the training residual
//! (tape nodes).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ansatz::StiffModel;
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};

/// The arithmetic a right-hand side may use.
pub trait Arith {
    type V: Copy;
    fn constant(&mut self, c: f64) -> Self::V;
    fn add(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn mul(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn neg(&mut self, a: Self::V) -> Self::V;

    fn sub(&mut self, a: Self::V, b: Self::V) -> Self::V {
        let nb = self.neg(b);
        self.add(a, nb)
    }

    fn scale(&mut self, a: Self::V, c: f64) -> Self::V {
        let k = self.constant(c);
        self.mul(a, k)
    }
}

/// Plain floating-point arithmetic.
pub struct Real;

impl Arith for Real {
    type V = f64;
    fn constant(&mut self, c: f64) -> f64 {
        c
    }
    fn add(&mut self, a: f64, b: f64) -> f64 {
        a + b
    }
    fn mul(&mut self, a: f64, b: f64) -> f64 {
        a * b
    }
    fn neg(&mut self, a: f64) -> f64 {
        -a
    }
}

impl Arith for Tape {
    type V = Var;
    fn constant(&mut self, c: f64) -> Var {
        Tape::constant(self, c)
    }
    fn add(&mut self, a: Var, b: Var) -> Var {
        Tape::add(self, a, b)
    }
    fn mul(&mut self, a: Var, b: Var) -> Var {
        Tape::mul(self, a, b)
    }
    fn neg(&mut self, a: Var) -> Var {
        Tape::neg(self, a)
    }
}

/// A right-hand side usable both numerically and on the tape.
pub trait Rhs: Send + Sync {
    fn eval(&self, t: f64, y: &[f64]) -> Vec<f64>;
    fn eval_graph(&self, tape: &mut Tape, t: f64, y: &[Var]) -> Vec<Var>;
}

/// Right-hand sides written once, generically over [`Arith`].
pub trait GenericRhs: Send + Sync {
    fn apply<A: Arith>(&self, ar: &mut A, t: f64, y: &[A::V]) -> Vec<A::V>;
}

impl<T: GenericRhs> Rhs for T {
    fn eval(&self, t: f64, y: &[f64]) -> Vec<f64> {
        self.apply(&mut Real, t, y)
    }
    fn eval_graph(&self, tape: &mut Tape, t: f64, y: &[Var]) -> Vec<Var> {
        self.apply(tape, t, y)
    }
}

/// `y' = A y`.
#[derive(Clone, Debug)]
pub struct LinearRhs {
    pub matrix: Vec<Vec<f64>>,
}

impl GenericRhs for LinearRhs {
    fn apply<A: Arith>(&self, ar: &mut A, _t: f64, y: &[A::V]) -> Vec<A::V> {
        self.matrix
            .iter()
            .map(|row| {
                let mut acc = ar.constant(0.0);
                for (&a, &yj) in row.iter().zip(y) {
                    if a != 0.0 {
                        let term = ar.scale(yj, a);
                        acc = ar.add(acc, term);
                    }
                }
                acc
            })
            .collect()
    }
}

/// `y' = -lambda (y - cos t) - sin t`.
#[derive(Clone, Debug)]
pub struct ProtheroRhs {
    pub lambda: f64,
}

impl GenericRhs for ProtheroRhs {
    fn apply<A: Arith>(&self, ar: &mut A, t: f64, y: &[A::V]) -> Vec<A::V> {
        let forcing = ar.constant(self.lambda * t.cos() - t.sin());
        let decay = ar.scale(y[0], -self.lambda);
        vec![ar.add(decay, forcing)]
    }
}

/// `y' = y^2 - y^3`.
#[derive(Clone, Debug)]
pub struct FlameRhs;

impl GenericRhs for FlameRhs {
    fn apply<A: Arith>(&self, ar: &mut A, _t: f64, y: &[A::V]) -> Vec<A::V> {
        let y2 = ar.mul(y[0], y[0]);
        let one = ar.constant(1.0);
        let rest = ar.sub(one, y[0]);
        vec![ar.mul(y2, rest)]
    }
}

/// `f(t, y) = dY/dt` of a frozen model, independent of `y`.
#[derive(Clone, Debug)]
pub struct ManufacturedRhs {
    model: StiffModel,
}

impl Rhs for ManufacturedRhs {
    fn eval(&self, t: f64, _y: &[f64]) -> Vec<f64> {
        match self.model.predict_with_derivative(t) {
            Ok((_, dy)) => dy,
            Err(_) => vec![f64::NAN; self.model.n()],
        }
    }
    fn eval_graph(&self, tape: &mut Tape, t: f64, y: &[Var]) -> Vec<Var> {
        self.eval(t, &vec![0.0; y.len()]).into_iter().map(|v| tape.constant(v)).collect()
    }
}

pub type ExactFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// An initial value problem with optional closed-form solution.
#[derive(Clone)]
pub struct OdeProblem {
    pub name: String,
    pub n: usize,
    pub horizon: f64,
    pub y0: Vec<f64>,
    pub rhs: Arc<dyn Rhs>,
    pub exact: Option<ExactFn>,
    /// Estimated slowest and fastest decay rates.
    pub stiffness_hint: (f64, f64),
}

impl fmt::Debug for OdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeProblem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("horizon", &self.horizon)
            .field("y0", &self.y0)
            .field("has_exact", &self.exact.is_some())
            .field("stiffness_hint", &self.stiffness_hint)
            .finish()
    }
}

impl OdeProblem {
    pub fn f(&self, t: f64, y: &[f64]) -> Vec<f64> {
        self.rhs.eval(t, y)
    }

    pub fn exact_at(&self, t: f64) -> Option<Vec<f64>> {
        self.exact.as_ref().map(|e| e(t))
    }

    pub fn stiffness_ratio(&self) -> f64 {
        let (lo, hi) = self.stiffness_hint;
        hi / lo
    }

    /// The problem whose solution is `model` itself: `f := dY/dt`,
    /// `y0 := Y(0)`.
    pub fn manufactured(model: &StiffModel) -> Result<OdeProblem> {
        let y0 = model.predict(0.0)?;
        let frozen = model.clone();
        let exact_model = model.clone();
        Ok(OdeProblem {
            name: "manufactured".into(),
            n: model.n(),
            horizon: model.horizon(),
            y0,
            rhs: Arc::new(ManufacturedRhs { model: frozen }),
            exact: Some(Arc::new(move |t| {
                exact_model.predict(t).unwrap_or_else(|_| vec![f64::NAN; exact_model.n()])
            })),
            stiffness_hint: (1.0, 1.0),
        })
    }
}

/// Optional per-run changes to a built-in problem.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

pub const PROBLEM_NAMES: [&str; 5] = ["linear1", "linear2", "prothero", "tworate", "flame"];

/// Rotation that couples the two-rate linear problems.
const COUPLING_ANGLE: f64 = PI / 6.0;

fn rotation() -> [[f64; 2]; 2] {
    let (s, c) = COUPLING_ANGLE.sin_cos();
    [[c, -s], [s, c]]
}

/// `R diag(rates) R^T` and the closed form for `y(0) = y0`.
fn rotated_diagonal(rates: [f64; 2], y0: [f64; 2]) -> (Vec<Vec<f64>>, ExactFn) {
    let r = rotation();
    let a = (0..2)
        .map(|i| (0..2).map(|j| (0..2).map(|k| r[i][k] * rates[k] * r[j][k]).sum()).collect())
        .collect();
    // modal coordinates z = R^T y0
    let z0 = [r[0][0] * y0[0] + r[1][0] * y0[1], r[0][1] * y0[0] + r[1][1] * y0[1]];
    let exact: ExactFn = Arc::new(move |t| {
        let z = [z0[0] * (rates[0] * t).exp(), z0[1] * (rates[1] * t).exp()];
        vec![r[0][0] * z[0] + r[0][1] * z[1], r[1][0] * z[0] + r[1][1] * z[1]]
    });
    (a, exact)
}

pub fn problem_by_name(name: &str) -> Result<OdeProblem> {
    problem_with(name, &ProblemOverrides::default())
}

pub fn problem_with(name: &str, overrides: &ProblemOverrides) -> Result<OdeProblem> {
    if let Some(l) = overrides.lambda {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::Config(format!("problem.lambda must be positive, got {l}")));
        }
    }
    if let Some(h) = overrides.horizon {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Config(format!("problem.horizon must be positive, got {h}")));
        }
    }
    let mut p = match name {
        "linear1" => {
            let lambda = overrides.lambda.unwrap_or(100.0);
            OdeProblem {
                name: name.into(),
                n: 1,
                horizon: 1.0,
                y0: vec![1.0],
                rhs: Arc::new(LinearRhs { matrix: vec![vec![-lambda]] }),
                exact: Some(Arc::new(move |t| vec![(-lambda * t).exp()])),
                stiffness_hint: (lambda, lambda),
            }
        }
        "linear2" => {
            let (matrix, exact) = rotated_diagonal([-1.0, -100.0], [1.0, 1.0]);
            OdeProblem {
                name: name.into(),
                n: 2,
                horizon: 2.0,
                y0: vec![1.0, 1.0],
                rhs: Arc::new(LinearRhs { matrix }),
                exact: Some(exact),
                stiffness_hint: (1.0, 100.0),
            }
        }
        "tworate" => {
            // modal start (1, 1): the rotated coordinates are exactly e^{-t}, e^{-50t}
            let r = rotation();
            let y0 = [r[0][0] + r[0][1], r[1][0] + r[1][1]];
            let (matrix, exact) = rotated_diagonal([-1.0, -50.0], y0);
            OdeProblem {
                name: name.into(),
                n: 2,
                horizon: 1.0,
                y0: y0.to_vec(),
                rhs: Arc::new(LinearRhs { matrix }),
                exact: Some(exact),
                stiffness_hint: (1.0, 50.0),
            }
        }
        "prothero" => {
            let lambda = overrides.lambda.unwrap_or(1e4);
            OdeProblem {
                name: name.into(),
                n: 1,
                horizon: 5.0,
                y0: vec![1.0],
                rhs: Arc::new(ProtheroRhs { lambda }),
                exact: Some(Arc::new(|t: f64| vec![t.cos()])),
                stiffness_hint: (1.0, lambda),
            }
        }
        "flame" => {
            let y0 = 0.01;
            OdeProblem {
                name: name.into(),
                n: 1,
                horizon: 2.0 / y0,
                y0: vec![y0],
                rhs: Arc::new(FlameRhs),
                exact: None,
                // linearisation 2y - 3y^2: ~y0 before ignition, -1 after
                stiffness_hint: (y0, 1.0),
            }
        }
        other => return Err(Error::UnknownProblem(other.to_string())),
    };
    if let Some(h) = overrides.horizon {
        p.horizon = h;
    }
    Ok(p)
}
