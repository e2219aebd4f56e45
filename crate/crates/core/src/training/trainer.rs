use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::collocation::{build_collocation, CollocationMode};
use super::loss::residual_loss;
use crate::ansatz::{Form, ModelSpec, StiffModel};
use crate::autodiff::{backward, Tape};
use crate::error::{Error, Result};
use crate::metrics::{compare, uniform_grid, Metrics};
use crate::problems::OdeProblem;

/// Everything that determines a training run besides the problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub form: Form,
    pub k: usize,
    pub lambda_max: f64,
    pub l: usize,
    pub omega_max: f64,
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub per_component: bool,
    /// Number of uniform collocation stations.
    pub stations: usize,
    pub collocation: CollocationMode,
    pub ic_weight: f64,
    pub iterations: usize,
    pub optimizer: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            form: Form::Compact,
            k: 4,
            lambda_max: 200.0,
            l: 1,
            omega_max: 0.0,
            hidden: vec![20, 20, 20],
            per_component: false,
            stations: 256,
            collocation: CollocationMode::Uniform,
            ic_weight: 10.0,
            iterations: 10_000,
            optimizer: AdamConfig::default(),
            seed: 0,
        }
    }
}

fn bad(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key}: {msg}"))
}

impl TrainConfig {
    /// Checks ranges; messages name the config-file key.
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(bad("grid.K", "must be at least 1"));
        }
        if !(self.lambda_max > 0.0 && self.lambda_max.is_finite()) {
            return Err(bad("grid.lambda_max", format!("must be positive, got {}", self.lambda_max)));
        }
        if self.l == 0 {
            return Err(bad("grid.L", "must be at least 1"));
        }
        if !(self.omega_max >= 0.0 && self.omega_max.is_finite()) {
            return Err(bad("grid.omega_max", format!("must be non-negative, got {}", self.omega_max)));
        }
        if self.hidden.contains(&0) {
            return Err(bad("net.width", "hidden widths must be positive"));
        }
        if self.stations < 2 {
            return Err(bad("train.S", format!("need at least 2 points, got {}", self.stations)));
        }
        if !(self.ic_weight >= 0.0 && self.ic_weight.is_finite()) {
            return Err(bad("train.ic_weight", format!("must be non-negative, got {}", self.ic_weight)));
        }
        let o = &self.optimizer;
        if !(o.lr > 0.0 && o.lr.is_finite()) {
            return Err(bad("train.lr", format!("must be positive, got {}", o.lr)));
        }
        if !(0.0..1.0).contains(&o.beta1) {
            return Err(bad("train.beta1", "must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&o.beta2) {
            return Err(bad("train.beta2", "must lie in [0, 1)"));
        }
        if !(o.eps > 0.0) {
            return Err(bad("train.eps", "must be positive"));
        }
        if let Some(d) = o.lr_decay {
            if !(d > 0.0 && d <= 1.0) {
                return Err(bad("train.lr_decay", "must lie in (0, 1]"));
            }
        }
        Ok(())
    }

    pub fn model_spec(&self, problem: &OdeProblem) -> ModelSpec {
        ModelSpec {
            form: self.form,
            n: problem.n,
            horizon: problem.horizon,
            lambda_max: self.lambda_max,
            k: self.k,
            omega_max: self.omega_max,
            l: self.l,
            hidden: self.hidden.clone(),
            per_component: self.per_component,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub iteration: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub problem: String,
    pub seed: u64,
    pub iterations_run: usize,
    pub loss_history: Vec<f64>,
    /// Root mean square of the residual over points and components.
    pub final_residual_rms: f64,
    /// Euclidean norm of `Y(0) - y0`.
    pub ic_error: f64,
    pub error: Option<Metrics>,
    /// Fastest over slowest decay rate of the problem.
    pub stiffness_ratio: f64,
    pub wall_clock_seconds: f64,
    pub diverged: Option<Divergence>,
}

pub fn train(problem: &OdeProblem, config: &TrainConfig) -> Result<(StiffModel, TrainReport)> {
    train_with(problem, config, |_, _| {})
}

/// Like [`train`], calling `observe(iteration, loss)` after every step.
pub fn train_with<F>(problem: &OdeProblem, config: &TrainConfig, mut observe: F) -> Result<(StiffModel, TrainReport)>
where
    F: FnMut(usize, f64),
{
    config.validate()?;
    if !(problem.horizon > 0.0) {
        return Err(Error::Config(format!("problem.horizon must be positive, got {}", problem.horizon)));
    }
    let started = Instant::now();
    let mut model = StiffModel::new(config.model_spec(problem))?;
    let grid = build_collocation(problem.horizon, config.stations, config.collocation, config.seed)?;
    let mut state = AdamState::new(model.params().len());
    let mut tape = Tape::new();
    let mut history = Vec::with_capacity(config.iterations);
    let mut diverged = None;

    for it in 0..config.iterations {
        let step = residual_loss(&mut tape, &model, problem, &grid, config.ic_weight).and_then(|g| {
            let grads = backward(&tape, g.loss, g.vars)?;
            adam_step(model.params_mut().values_mut(), &grads, &mut state, &config.optimizer)?;
            Ok(tape.value(g.loss))
        });
        match step {
            Ok(loss) => {
                history.push(loss);
                observe(it, loss);
            }
            Err(e) if e.is_numerical() => {
                diverged = Some(Divergence { iteration: it, message: e.to_string() });
                break;
            }
            Err(e) => return Err(e),
        }
    }

    let (final_residual_rms, ic_error) = match residual_loss(&mut tape, &model, problem, &grid, config.ic_weight) {
        Ok(g) => ((tape.value(g.residual) / problem.n as f64).sqrt(), tape.value(g.ic).sqrt()),
        Err(_) => (f64::NAN, f64::NAN),
    };
    let eval_grid = uniform_grid(problem.horizon, 10 * (config.stations - 1) + 1);
    let error = if diverged.is_none() { compare(&model, problem, &eval_grid, None).ok() } else { None };

    let report = TrainReport {
        problem: problem.name.clone(),
        seed: config.seed,
        iterations_run: history.len(),
        loss_history: history,
        final_residual_rms,
        ic_error,
        error,
        stiffness_ratio: problem.stiffness_ratio(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        diverged,
    };
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{problem_with, ProblemOverrides};

    fn decay() -> OdeProblem {
        problem_with("linear1", &ProblemOverrides { lambda: Some(1.0), horizon: Some(2.0) }).unwrap()
    }

    fn small() -> TrainConfig {
        TrainConfig {
            k: 2,
            lambda_max: 2.0,
            hidden: vec![6],
            stations: 16,
            iterations: 30,
            ..Default::default()
        }
    }

    #[test]
    fn zero_iterations_return_initial_model() {
        let cfg = TrainConfig { iterations: 0, ..small() };
        let (model, report) = train(&decay(), &cfg).unwrap();
        assert!(report.loss_history.is_empty());
        assert_eq!(report.iterations_run, 0);
        let fresh = StiffModel::new(cfg.model_spec(&decay())).unwrap();
        assert_eq!(model.params().values(), fresh.params().values());
    }

    #[test]
    fn same_seed_same_history() {
        let a = train(&decay(), &small()).unwrap().1;
        let b = train(&decay(), &small()).unwrap().1;
        let bits = |r: &TrainReport| r.loss_history.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a.loss_history.len(), 30);
        assert!(a.loss_history.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn config_round_trips() {
        let cfg = TrainConfig {
            collocation: CollocationMode::UniformLog,
            optimizer: AdamConfig { lr_decay: Some(0.999), ..Default::default() },
            form: Form::Expanded,
            ..small()
        };
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<TrainConfig>(&json).unwrap(), cfg);
    }

    #[test]
    fn invalid_config_names_key() {
        let err = TrainConfig { k: 0, ..small() }.validate().unwrap_err();
        assert!(err.to_string().contains("grid.K"));
        let err = TrainConfig { stations: 1, ..small() }.validate().unwrap_err();
        assert!(err.to_string().contains("train.S"));
    }

    #[test]
    fn divergence_is_flagged() {
        let cfg = TrainConfig { optimizer: AdamConfig { lr: 1e300, ..Default::default() }, iterations: 5, ..small() };
        let (_, report) = train(&decay(), &cfg).unwrap();
        let d = report.diverged.expect("huge step should blow up");
        assert_eq!(report.loss_history.len(), d.iteration);
        assert!(report.loss_history.iter().all(|v| v.is_finite()));
    }
}
