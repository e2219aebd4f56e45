use crate::ansatz::StiffModel;
use crate::autodiff::{Dual, ParamVars, Tape, Var};
use crate::error::{Error, Result};
use crate::problems::OdeProblem;

use super::collocation::CollocationGrid;

/// Handles into a recorded loss graph.
#[derive(Clone, Copy, Debug)]
pub struct LossGraph {
    pub loss: Var,
    /// Mean squared residual over the collocation points.
    pub residual: Var,
    /// Squared initial-condition mismatch, before weighting.
    pub ic: Var,
    pub vars: ParamVars,
}

/// Records `(1/S) sum_s |Y'(t_s) - f(t_s, Y(t_s))|^2 + ic_weight |Y(0) - y0|^2`
/// on a cleared tape.
pub fn residual_loss(
    tape: &mut Tape,
    model: &StiffModel,
    problem: &OdeProblem,
    grid: &CollocationGrid,
    ic_weight: f64,
) -> Result<LossGraph> {
    tape.clear();
    let vars = model.params().record(tape);
    record_loss(tape, model, vars, problem, grid, ic_weight)
}

/// As [`residual_loss`], for parameters already recorded as `vars`.
pub fn record_loss(
    tape: &mut Tape,
    model: &StiffModel,
    vars: ParamVars,
    problem: &OdeProblem,
    grid: &CollocationGrid,
    ic_weight: f64,
) -> Result<LossGraph> {
    if model.n() != problem.n {
        return Err(Error::ShapeError(format!(
            "model has {} components, problem {} has {}",
            model.n(),
            problem.name,
            problem.n
        )));
    }
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty collocation grid".into()));
    }
    let mut terms = Vec::with_capacity(grid.len());
    let mut primals = Vec::with_capacity(problem.n);
    for &t in &grid.points {
        let td = Dual::time(tape, t);
        let y = model.eval(tape, vars, td)?;
        primals.clear();
        primals.extend(y.iter().map(|d| d.primal));
        let f = problem.rhs.eval_graph(tape, t, &primals);
        if f.iter().any(|&v| !tape.value(v).is_finite()) {
            return Err(Error::NonFiniteResidual { t });
        }
        for (yi, fi) in y.iter().zip(f) {
            let r = tape.sub(yi.tangent, fi);
            terms.push(tape.square(r));
        }
    }
    let total = tape.sum(terms.iter().copied());
    let residual = tape.scale(total, 1.0 / grid.len() as f64);

    let td = Dual::time(tape, 0.0);
    let y = model.eval(tape, vars, td)?;
    terms.clear();
    for (yi, &target) in y.iter().zip(&problem.y0) {
        let c = tape.constant(target);
        let d = tape.sub(yi.primal, c);
        terms.push(tape.square(d));
    }
    let ic = tape.sum(terms.iter().copied());
    let weighted = tape.scale(ic, ic_weight);
    let loss = tape.add(residual, weighted);
    if !tape.value(loss).is_finite() {
        return Err(Error::NonFiniteResidual { t: f64::NAN });
    }
    Ok(LossGraph { loss, residual, ic, vars })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::ansatz::{Form, Group, ModelSpec};
    use crate::problems::{problem_by_name, Arith, GenericRhs};
    use crate::training::collocation::{build_collocation, CollocationMode};

    struct Still;
    impl GenericRhs for Still {
        fn apply<A: Arith>(&self, a: &mut A, _t: f64, y: &[A::V]) -> Vec<A::V> {
            y.iter().map(|_| a.constant(0.0)).collect()
        }
    }

    struct Blowup;
    impl GenericRhs for Blowup {
        fn apply<A: Arith>(&self, a: &mut A, t: f64, y: &[A::V]) -> Vec<A::V> {
            let v = if t > 0.5 { f64::INFINITY } else { 0.0 };
            y.iter().map(|_| a.constant(v)).collect()
        }
    }

    fn model(n: usize, seed: u64) -> StiffModel {
        StiffModel::new(ModelSpec {
            form: Form::Compact,
            n,
            horizon: 1.0,
            lambda_max: 3.0,
            k: 3,
            omega_max: 2.0,
            l: 2,
            hidden: vec![6],
            per_component: false,
            seed,
        })
        .unwrap()
    }

    fn with_rhs(base: &str, rhs: Arc<dyn crate::problems::Rhs>) -> OdeProblem {
        let mut p = problem_by_name(base).unwrap();
        p.rhs = rhs;
        p.horizon = 1.0;
        p
    }

    fn loss_value(m: &StiffModel, p: &OdeProblem, gamma: f64) -> Result<(f64, f64)> {
        let grid = build_collocation(1.0, 9, CollocationMode::Uniform, 0)?;
        let mut tape = Tape::new();
        let g = residual_loss(&mut tape, m, p, &grid, gamma)?;
        Ok((tape.value(g.loss), tape.value(g.residual)))
    }

    #[test]
    fn zero_dynamics_zero_model() {
        let mut m = model(2, 3);
        m.params_mut().values_mut().fill(0.0);
        let p = with_rhs("linear2", Arc::new(Still));
        let (loss, _) = loss_value(&m, &p, 10.0).unwrap();
        assert_eq!(loss, 10.0 * 2.0);
    }

    #[test]
    fn manufactured_residual_vanishes() {
        let m = model(2, 9);
        let p = OdeProblem::manufactured(&m).unwrap();
        let (loss, res) = loss_value(&m, &p, 10.0).unwrap();
        assert!(res < 1e-24, "{res}");
        assert!(loss < 1e-20, "{loss}");
    }

    #[test]
    fn exact_exponential_has_no_loss() {
        let mut m = StiffModel::new(ModelSpec {
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
        m.params_mut().values_mut().fill(0.0);
        m.set_constant(Group::T { k: 1, l: 0 }, &[1.0, 0.0]).unwrap();
        let p = crate::problems::problem_with(
            "linear1",
            &crate::problems::ProblemOverrides { lambda: Some(1.0), horizon: Some(1.0) },
        )
        .unwrap();
        let (loss, _) = loss_value(&m, &p, 10.0).unwrap();
        assert!(loss < 1e-20, "{loss}");
    }

    #[test]
    fn non_finite_rhs_names_the_time() {
        let m = model(1, 1);
        let p = with_rhs("linear1", Arc::new(Blowup));
        match loss_value(&m, &p, 1.0) {
            Err(Error::NonFiniteResidual { t }) => assert_eq!(t, 0.625),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch() {
        let m = model(1, 1);
        let p = problem_by_name("linear2").unwrap();
        assert!(matches!(loss_value(&m, &p, 1.0), Err(Error::ShapeError(_))));
    }
}
