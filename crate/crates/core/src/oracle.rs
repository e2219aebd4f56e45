//! Adaptive TR-BDF2 reference integrator.
//!
//! Each step is a trapezoidal stage to `t + gamma h` followed by a BDF2
//! stage to `t + h`, with `gamma = 2 - sqrt(2)` so both stages share the
//! iteration matrix `I - (gamma/2) h J`. The method is L-stable. The local
//! error is estimated from the three stage derivatives and filtered through
//! the same iteration matrix, which keeps the estimate bounded for stiff
//! components. Dense output is cubic Hermite on the accepted mesh.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problems::OdeProblem;

const GAMMA: f64 = 2.0 - std::f64::consts::SQRT_2;
const D: f64 = GAMMA / 2.0;
/// Leading local error constant: `(-3 gamma^2 + 4 gamma - 2) / (12 (2 - gamma))`.
const ERR_CONST: f64 = (-3.0 * GAMMA * GAMMA + 4.0 * GAMMA - 2.0) / (12.0 * (2.0 - GAMMA));
const MAX_NEWTON: usize = 10;

/// Fraction of the user tolerance granted to each step's local error.
///
/// Per-step control of a second-order method leaves a global error that
/// grows like `tol^(2/3)`. Shrinking the local target by `sqrt(rtol)` makes
/// the accumulated error proportional to the tolerance itself.
fn local_fraction(rtol: f64) -> f64 {
    (50.0 * rtol.sqrt()).min(0.1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeshPoint {
    pub t: f64,
    pub y: Vec<f64>,
    pub f: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ReferenceTrajectory {
    pub times: Vec<f64>,
    /// One row per entry of `times`.
    pub states: Vec<Vec<f64>>,
    pub atol: f64,
    pub rtol: f64,
    pub accepted: usize,
    pub rejected: usize,
    /// Accepted step endpoints, with `f` for Hermite interpolation.
    pub mesh: Vec<MeshPoint>,
}

impl ReferenceTrajectory {
    pub fn dim(&self) -> usize {
        self.mesh.first().map_or(0, |m| m.y.len())
    }

    /// Cubic Hermite interpolation on the accepted mesh.
    pub fn interpolate(&self, t: f64) -> Vec<f64> {
        let mesh = &self.mesh;
        let last = mesh.len() - 1;
        if t <= mesh[0].t {
            return mesh[0].y.clone();
        }
        if t >= mesh[last].t {
            return mesh[last].y.clone();
        }
        let i = mesh.partition_point(|m| m.t <= t) - 1;
        hermite(&mesh[i], &mesh[i + 1], t)
    }
}

fn hermite(a: &MeshPoint, b: &MeshPoint, t: f64) -> Vec<f64> {
    let h = b.t - a.t;
    let s = (t - a.t) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    (0..a.y.len())
        .map(|i| h00 * a.y[i] + h10 * h * a.f[i] + h01 * b.y[i] + h11 * h * b.f[i])
        .collect()
}

struct Stepper<'a> {
    problem: &'a OdeProblem,
    atol: f64,
    rtol: f64,
    local_fraction: f64,
}

enum StepOutcome {
    Accepted { y: DVector<f64>, f: DVector<f64>, err: f64 },
    Rejected { err: f64 },
    NewtonFailed,
}

impl Stepper<'_> {
    fn f(&self, t: f64, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(self.problem.f(t, y.as_slice()))
    }

    fn weights(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        a.zip_map(b, |x, y| self.atol + self.rtol * x.abs().max(y.abs()))
    }

    fn norm(v: &DVector<f64>, w: &DVector<f64>) -> f64 {
        v.iter().zip(w.iter()).map(|(x, s)| (x / s).abs()).fold(0.0, f64::max)
    }

    fn jacobian(&self, t: f64, y: &DVector<f64>) -> DMatrix<f64> {
        let n = y.len();
        let mut j = DMatrix::zeros(n, n);
        let mut probe = y.clone();
        for c in 0..n {
            let delta = 6e-6 * y[c].abs().max(1.0);
            probe[c] = y[c] + delta;
            let up = self.f(t, &probe);
            probe[c] = y[c] - delta;
            let down = self.f(t, &probe);
            probe[c] = y[c];
            j.set_column(c, &((up - down) / (2.0 * delta)));
        }
        j
    }

    /// Solves `z - D h f(t, z) = rhs` by damped simplified Newton.
    fn solve_stage(
        &self,
        t: f64,
        h: f64,
        rhs: &DVector<f64>,
        guess: DVector<f64>,
        lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
        w: &DVector<f64>,
    ) -> Option<(DVector<f64>, DVector<f64>)> {
        let residual = |z: &DVector<f64>| -> (DVector<f64>, DVector<f64>) {
            let fz = self.f(t, z);
            (z - D * h * &fz - rhs, fz)
        };
        let mut z = guess;
        let (mut r, mut fz) = residual(&z);
        let mut prev = f64::INFINITY;
        for _ in 0..MAX_NEWTON {
            if !r.iter().all(|v| v.is_finite()) {
                return None;
            }
            let delta = lu.solve(&(-&r))?;
            let size = Self::norm(&delta, w);
            if size > 2.0 * prev {
                return None;
            }
            let r_norm = r.norm();
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..5 {
                let trial = &z + alpha * &delta;
                let (tr, tf) = residual(&trial);
                if tr.iter().all(|v| v.is_finite()) && (tr.norm() <= r_norm || alpha < 0.1) {
                    z = trial;
                    r = tr;
                    fz = tf;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                return None;
            }
            if alpha * size < 1e-3 {
                return Some((z, fz));
            }
            prev = size;
        }
        None
    }

    fn step(&self, t: f64, h: f64, y: &DVector<f64>, f0: &DVector<f64>) -> StepOutcome {
        let n = y.len();
        let jac = self.jacobian(t, y);
        let iter_matrix = DMatrix::identity(n, n) - D * h * &jac;
        let lu = iter_matrix.lu();
        let w0 = self.weights(y, y);

        // trapezoidal stage
        let rhs1 = y + D * h * f0;
        let guess = y + GAMMA * h * f0;
        let Some((yg, fg)) = self.solve_stage(t + GAMMA * h, h, &rhs1, guess, &lu, &w0) else {
            return StepOutcome::NewtonFailed;
        };

        // BDF2 stage
        let c = 1.0 / (GAMMA * (2.0 - GAMMA));
        let rhs2 = c * &yg - c * (1.0 - GAMMA).powi(2) * y;
        let guess = y + h * &fg;
        let Some((y1, f1)) = self.solve_stage(t + h, h, &rhs2, guess, &lu, &w0) else {
            return StepOutcome::NewtonFailed;
        };

        // h^3 y''' from the second divided difference of (f0, fg, f1)
        let dd = f0 / GAMMA - &fg / (GAMMA * (1.0 - GAMMA)) + &f1 / (1.0 - GAMMA);
        let raw = 2.0 * ERR_CONST * h * dd;
        let est = lu.solve(&raw).unwrap_or(raw);
        let err = Self::norm(&est, &self.weights(y, &y1)) / self.local_fraction;
        if !err.is_finite() {
            return StepOutcome::NewtonFailed;
        }
        if err <= 1.0 {
            StepOutcome::Accepted { y: y1, f: f1, err }
        } else {
            StepOutcome::Rejected { err }
        }
    }

    fn initial_step(&self, y0: &DVector<f64>, f0: &DVector<f64>, horizon: f64) -> f64 {
        let w = self.weights(y0, y0);
        let d0 = Self::norm(y0, &w);
        let d1 = Self::norm(f0, &w);
        let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * horizon } else { 0.01 * d0 / d1 };
        h.min(horizon).max(1e-12 * horizon)
    }
}

/// Step size multiplier from an error norm, at most halving or doubling.
fn step_factor(err: f64) -> f64 {
    if err == 0.0 {
        return 2.0;
    }
    (0.9 * err.powf(-1.0 / 3.0)).clamp(0.5, 2.0)
}

/// Integrates `problem` over `[0, T]` and samples the solution at `dense_times`.
pub fn integrate_reference(
    problem: &OdeProblem,
    atol: f64,
    rtol: f64,
    dense_times: &[f64],
) -> Result<ReferenceTrajectory> {
    if !(atol > 0.0 && rtol > 0.0) {
        return Err(Error::Config(format!("tolerances must be positive (atol {atol}, rtol {rtol})")));
    }
    let horizon = problem.horizon;
    if dense_times.iter().any(|&t| !(0.0..=horizon).contains(&t)) {
        return Err(Error::InvalidGrid(format!("output times must lie in [0, {horizon}]")));
    }
    if dense_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("output times must be strictly increasing".into()));
    }

    let stepper = Stepper { problem, atol, rtol, local_fraction: local_fraction(rtol) };
    let mut t = 0.0;
    let mut y = DVector::from_vec(problem.y0.clone());
    let mut f = stepper.f(t, &y);
    if !f.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteRhs { t });
    }
    let h_min = 1e-14 * horizon;
    let mut h = stepper.initial_step(&y, &f, horizon);
    let mut mesh = vec![MeshPoint { t, y: y.as_slice().to_vec(), f: f.as_slice().to_vec() }];
    let (mut accepted, mut rejected) = (0, 0);

    while t < horizon {
        let last = horizon - t <= h * (1.0 + 1e-12);
        let h_try = if last { horizon - t } else { h };
        match stepper.step(t, h_try, &y, &f) {
            StepOutcome::Accepted { y: y1, f: f1, err } => {
                if !f1.iter().all(|v| v.is_finite()) {
                    return Err(Error::NonFiniteRhs { t: t + h_try });
                }
                t = if last { horizon } else { t + h_try };
                y = y1;
                f = f1;
                mesh.push(MeshPoint { t, y: y.as_slice().to_vec(), f: f.as_slice().to_vec() });
                accepted += 1;
                h = h_try * step_factor(err);
            }
            StepOutcome::Rejected { err } => {
                rejected += 1;
                h = h_try * step_factor(err).min(0.9);
            }
            StepOutcome::NewtonFailed => {
                rejected += 1;
                h = h_try * 0.5;
            }
        }
        if h < h_min {
            return Err(Error::StiffFailure {
                t,
                reason: format!("step size {h:e} fell below minimum {h_min:e}"),
            });
        }
    }

    let mut traj = ReferenceTrajectory {
        times: dense_times.to_vec(),
        states: Vec::new(),
        atol,
        rtol,
        accepted,
        rejected,
        mesh,
    };
    traj.states = dense_times.iter().map(|&s| traj.interpolate(s)).collect();
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{problem_by_name, problem_with, ProblemOverrides};

    fn lam(l: f64) -> ProblemOverrides {
        ProblemOverrides { lambda: Some(l), horizon: None }
    }

    #[test]
    fn error_estimate_tracks_true_local_error() {
        // y' = -y, one step from y = 1
        let p = problem_with("linear1", &lam(1.0)).unwrap();
        let s = Stepper { problem: &p, atol: 1.0, rtol: 0.0, local_fraction: 1.0 };
        for h in [0.05, 0.02, 0.01] {
            let y = DVector::from_vec(vec![1.0]);
            let f = s.f(0.0, &y);
            let StepOutcome::Accepted { y: y1, err, .. } = s.step(0.0, h, &y, &f) else {
                panic!("step rejected");
            };
            let true_err = (y1[0] - (-h).exp()).abs();
            let ratio = err / true_err;
            assert!((0.7..1.4).contains(&ratio), "h={h}: est {err:e} true {true_err:e}");
        }
    }

    #[test]
    fn fast_exponential() {
        let p = problem_with("linear1", &lam(1000.0)).unwrap();
        let r = integrate_reference(&p, 1e-10, 1e-10, &[0.0, 0.01, 1.0]).unwrap();
        assert_eq!(r.states[0], vec![1.0]);
        assert!((r.states[1][0] - 4.539993e-5).abs() < 1e-9);
    }

    #[test]
    fn prothero_tracks_cosine() {
        let p = problem_by_name("prothero").unwrap();
        let r = integrate_reference(&p, 1e-10, 1e-10, &[1.0]).unwrap();
        assert!((r.states[0][0] - 0.5403023).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_requests() {
        let p = problem_by_name("linear1").unwrap();
        assert!(integrate_reference(&p, 0.0, 1e-6, &[]).is_err());
        assert!(matches!(
            integrate_reference(&p, 1e-6, 1e-6, &[0.5, 2.0]),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn extreme_stiffness_stays_monotone() {
        let p = problem_with("linear1", &lam(1e6)).unwrap();
        let r = integrate_reference(&p, 1e-8, 1e-8, &[]).unwrap();
        for w in r.mesh.windows(2) {
            assert!(w[1].y[0].abs() <= w[0].y[0].abs(), "t={}: {} > {}", w[1].t, w[1].y[0], w[0].y[0]);
        }
        assert_eq!(r.mesh.last().unwrap().t, 1.0);
    }
}
