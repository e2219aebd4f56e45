//! Error metrics of a model or trajectory against the truth.

use serde::{Deserialize, Serialize};

use crate::ansatz::StiffModel;
use crate::error::{Error, Result};
use crate::oracle::{integrate_reference, ReferenceTrajectory};
use crate::problems::OdeProblem;

/// Tolerance used when a reference trajectory has to be computed on demand.
pub const REFERENCE_TOL: f64 = 1e-10;

/// Anything that can be sampled on a time grid.
pub trait Predictor {
    fn dim(&self) -> usize;
    fn predict_many(&self, times: &[f64]) -> Result<Vec<Vec<f64>>>;
}

impl Predictor for StiffModel {
    fn dim(&self) -> usize {
        self.n()
    }
    fn predict_many(&self, times: &[f64]) -> Result<Vec<Vec<f64>>> {
        StiffModel::predict_many(self, times)
    }
}

impl Predictor for ReferenceTrajectory {
    fn dim(&self) -> usize {
        ReferenceTrajectory::dim(self)
    }
    fn predict_many(&self, times: &[f64]) -> Result<Vec<Vec<f64>>> {
        Ok(times.iter().map(|&t| self.interpolate(t)).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthSource {
    Exact,
    Reference,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentMetrics {
    pub linf: f64,
    pub rel_l2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub linf: f64,
    pub rel_l2: f64,
    pub components: Vec<ComponentMetrics>,
    pub truth: TruthSource,
}

/// `count` equally spaced times covering `[0, horizon]`.
pub fn uniform_grid(horizon: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..count)
            .map(|i| if i + 1 == count { horizon } else { horizon * i as f64 / (count - 1) as f64 })
            .collect(),
    }
}

fn rel_l2(err_sq: f64, truth_sq: f64) -> f64 {
    err_sq.sqrt() / (truth_sq.sqrt() + 1e-12)
}

/// Metrics of `truth` rows against `pred` rows.
pub fn metrics_between(pred: &[Vec<f64>], truth: &[Vec<f64>], source: TruthSource) -> Result<Metrics> {
    if pred.len() != truth.len() {
        return Err(Error::ShapeError(format!(
            "{} predictions for {} truth samples",
            pred.len(),
            truth.len()
        )));
    }
    let n = truth.first().map_or(0, Vec::len);
    let mut comp = vec![(0.0f64, 0.0f64, 0.0f64); n];
    for (p, q) in pred.iter().zip(truth) {
        if p.len() != n || q.len() != n {
            return Err(Error::ShapeError(format!(
                "state of dimension {} against {}",
                p.len(),
                q.len()
            )));
        }
        for i in 0..n {
            let e = p[i] - q[i];
            comp[i].0 = comp[i].0.max(e.abs());
            comp[i].1 += e * e;
            comp[i].2 += q[i] * q[i];
        }
    }
    let components: Vec<ComponentMetrics> = comp
        .iter()
        .map(|&(linf, e2, t2)| ComponentMetrics { linf, rel_l2: rel_l2(e2, t2) })
        .collect();
    let linf = comp.iter().map(|c| c.0).fold(0.0, f64::max);
    let e2: f64 = comp.iter().map(|c| c.1).sum();
    let t2: f64 = comp.iter().map(|c| c.2).sum();
    Ok(Metrics { linf, rel_l2: rel_l2(e2, t2), components, truth: source })
}

/// Compares `pred` with the exact solution when the problem has one, else
/// with `reference` (computed at [`REFERENCE_TOL`] if not supplied).
pub fn compare(
    pred: &dyn Predictor,
    problem: &OdeProblem,
    eval_grid: &[f64],
    reference: Option<&ReferenceTrajectory>,
) -> Result<Metrics> {
    if pred.dim() != problem.n {
        return Err(Error::ShapeError(format!(
            "predictor has dimension {}, problem {} has {}",
            pred.dim(),
            problem.name,
            problem.n
        )));
    }
    if eval_grid.iter().any(|&t| !(0.0..=problem.horizon).contains(&t)) {
        return Err(Error::InvalidGrid(format!(
            "evaluation times must lie in [0, {}]",
            problem.horizon
        )));
    }
    let predicted = pred.predict_many(eval_grid)?;
    let (truth, source) = match (&problem.exact, reference) {
        (Some(exact), _) => (eval_grid.iter().map(|&t| exact(t)).collect::<Vec<_>>(), TruthSource::Exact),
        (None, Some(r)) => (r.predict_many(eval_grid)?, TruthSource::Reference),
        (None, None) => {
            let r = integrate_reference(problem, REFERENCE_TOL, REFERENCE_TOL, &[])?;
            (r.predict_many(eval_grid)?, TruthSource::Reference)
        }
    };
    metrics_between(&predicted, &truth, source)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{Form, ModelSpec};
    use crate::problems::{problem_by_name, problem_with, ProblemOverrides};

    #[test]
    fn identical_inputs_give_zero() {
        let p = problem_by_name("linear2").unwrap();
        let grid = uniform_grid(p.horizon, 51);
        let rows: Vec<Vec<f64>> = grid.iter().map(|&t| p.exact_at(t).unwrap()).collect();
        let m = metrics_between(&rows, &rows, TruthSource::Exact).unwrap();
        assert_eq!((m.linf, m.rel_l2), (0.0, 0.0));
        assert!(m.components.iter().all(|c| c.linf == 0.0 && c.rel_l2 == 0.0));
    }

    #[test]
    fn zero_model_has_unit_relative_error() {
        let p = problem_with("linear1", &ProblemOverrides { lambda: Some(1.0), horizon: None }).unwrap();
        let mut model = StiffModel::new(ModelSpec {
            form: Form::Compact,
            n: 1,
            horizon: 1.0,
            lambda_max: 2.0,
            k: 2,
            omega_max: 0.0,
            l: 1,
            hidden: vec![4],
            per_component: false,
            seed: 0,
        })
        .unwrap();
        model.params_mut().values_mut().fill(0.0);
        let m = compare(&model, &p, &uniform_grid(1.0, 101), None).unwrap();
        assert!((m.rel_l2 - 1.0).abs() < 1e-12);
        assert_eq!(m.linf, 1.0);
        assert_eq!(m.truth, TruthSource::Exact);
    }

    #[test]
    fn dimension_mismatch() {
        let p = problem_by_name("linear2").unwrap();
        let l1 = problem_by_name("linear1").unwrap();
        let traj = integrate_reference(&l1, 1e-6, 1e-6, &[]).unwrap();
        assert!(matches!(compare(&traj, &p, &[0.0], None), Err(Error::ShapeError(_))));
    }

    #[test]
    fn uniform_grid_endpoints() {
        let g = uniform_grid(2.0, 2001);
        assert_eq!(g.len(), 2001);
        assert_eq!((g[0], g[2000]), (0.0, 2.0));
    }
}
