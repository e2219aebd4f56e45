//! Self-audits runnable from the command line and the test suite.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ansatz::{Form, ModelSpec, StiffModel};
use crate::autodiff::{finite_diff_check, relative_error};
use crate::error::{Error, Result};
use crate::problems::{problem_with, OdeProblem, ProblemOverrides};
use crate::training::{
    build_collocation, record_loss, train, AdamConfig, CollocationMode, TrainConfig,
};

pub const GRAD_TOL: f64 = 1e-5;
pub const DUAL_TOL: f64 = 1e-6;
pub const ABSORB_TOL: f64 = 5e-2;

const GRAD_CASES: usize = 20;
const DUAL_CASES: usize = 100;
const GRAD_STEP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Grad,
    Dual,
    Absorb,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Grad, Suite::Dual, Suite::Absorb];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Grad => "grad",
            Suite::Dual => "dual",
            Suite::Absorb => "absorb",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite `{s}` (expected grad, dual or absorb)")))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub cases: usize,
    /// Worst metric over all cases; compared against `threshold`.
    pub worst: f64,
    pub threshold: f64,
    pub passed: bool,
    pub details: Vec<String>,
}

impl SuiteReport {
    fn new(suite: Suite, threshold: f64) -> Self {
        Self { suite, cases: 0, worst: 0.0, threshold, passed: false, details: vec![] }
    }

    fn record(&mut self, metric: f64, detail: String) {
        self.cases += 1;
        if metric > self.worst || metric.is_nan() {
            self.worst = metric;
        }
        self.details.push(detail);
    }

    fn finish(mut self) -> Self {
        self.passed = self.worst < self.threshold;
        self
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} suite: {} cases, worst {:.3e} (limit {:.0e}) {}",
            self.suite,
            self.cases,
            self.worst,
            self.threshold,
            if self.passed { "PASS" } else { "FAIL" }
        )
    }
}

pub fn run_suite(suite: Suite) -> Result<SuiteReport> {
    match suite {
        Suite::Grad => grad_suite(0),
        Suite::Dual => dual_suite(0),
        Suite::Absorb => absorb_suite(),
    }
}

fn random_spec(rng: &mut ChaCha8Rng, n: usize, horizon: f64, lambda_cap: f64, max_k: usize, max_l: usize, max_width: usize) -> ModelSpec {
    let depth = rng.gen_range(1..=2);
    ModelSpec {
        form: if rng.gen_bool(0.5) { Form::Compact } else { Form::Expanded },
        n,
        horizon,
        lambda_max: rng.gen_range(1.0..=lambda_cap),
        k: rng.gen_range(1..=max_k),
        omega_max: rng.gen_range(0.0..=6.0),
        l: rng.gen_range(1..=max_l),
        hidden: (0..depth).map(|_| rng.gen_range(2..=max_width)).collect(),
        per_component: rng.gen_bool(0.3),
        seed: rng.gen(),
    }
}

fn random_problem(rng: &mut ChaCha8Rng) -> Result<OdeProblem> {
    let horizon = Some(1.0);
    match rng.gen_range(0..5) {
        0 => problem_with("linear1", &ProblemOverrides { lambda: Some(rng.gen_range(1.0..=50.0)), horizon }),
        1 => problem_with("linear2", &ProblemOverrides { lambda: None, horizon }),
        2 => problem_with("tworate", &ProblemOverrides { lambda: None, horizon }),
        3 => problem_with("prothero", &ProblemOverrides { lambda: Some(rng.gen_range(1.0..=20.0)), horizon }),
        _ => problem_with("flame", &ProblemOverrides { lambda: None, horizon }),
    }
}

/// Reverse-mode gradient of the full training loss against central
/// differences on random small models, problems and grids.
pub fn grad_suite(seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::new(Suite::Grad, GRAD_TOL);
    for case in 0..GRAD_CASES {
        let problem = random_problem(&mut rng)?;
        let spec = random_spec(&mut rng, problem.n, problem.horizon, 10.0, 3, 2, 8);
        let model = StiffModel::new(spec)?;
        let mode = if rng.gen_bool(0.5) { CollocationMode::Uniform } else { CollocationMode::UniformLog };
        let stations = rng.gen_range(2..=12);
        let grid = build_collocation(problem.horizon, stations, mode, rng.gen())?;
        let gamma = rng.gen_range(0.1..=10.0);
        let fd = finite_diff_check(
            |tape, vars| Ok(record_loss(tape, &model, vars, &problem, &grid, gamma)?.loss),
            model.params(),
            GRAD_STEP,
        )?;
        let w = fd.worst_index.unwrap_or(0);
        report.record(
            fd.max_rel_err,
            format!(
                "case {case}: {} {} K={} L={} S={} params={} rel err {:.3e} at grad {:.3e}",
                problem.name,
                model.form().as_str(),
                model.spec().k,
                model.spec().l,
                grid.len(),
                model.params().len(),
                fd.max_rel_err,
                fd.analytic.get(w).copied().unwrap_or(0.0)
            ),
        );
    }
    Ok(report.finish())
}

/// Time derivative from dual evaluation against fourth-order central
/// differences of the model output with step `1e-5 T`.
pub fn dual_suite(seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::new(Suite::Dual, DUAL_TOL);
    for case in 0..DUAL_CASES {
        let n = rng.gen_range(1..=3);
        let horizon = rng.gen_range(0.5..=2.0);
        let spec = random_spec(&mut rng, n, horizon, 100.0, 4, 3, 10);
        let model = StiffModel::new(spec)?;
        let t = rng.gen_range(0.0..=horizon);
        let h = 1e-5 * horizon;
        let (_, dy) = model.predict_with_derivative(t)?;
        let [up, down, up2, down2] = [t + h, t - h, t + 2.0 * h, t - 2.0 * h].map(|x| model.predict(x));
        let (up, down, up2, down2) = (up?, down?, up2?, down2?);
        let worst = (0..n)
            .map(|i| {
                let fd = (8.0 * (up[i] - down[i]) - (up2[i] - down2[i])) / (12.0 * h);
                relative_error(dy[i], fd)
            })
            .fold(0.0, f64::max);
        report.record(
            worst,
            format!(
                "case {case}: {} n={n} lambda_max={:.1} t={t:.4} rel err {worst:.3e}",
                model.form().as_str(),
                model.spec().lambda_max
            ),
        );
    }
    Ok(report.finish())
}

/// Off-grid decay rate used by the absorption check: midway between the
/// two nonzero grid rates.
pub const ABSORB_RATE: f64 = 75.0;

pub fn absorb_config() -> TrainConfig {
    TrainConfig {
        form: Form::Compact,
        k: 2,
        lambda_max: 100.0,
        l: 1,
        omega_max: 0.0,
        hidden: vec![16],
        per_component: false,
        stations: 512,
        collocation: CollocationMode::UniformLog,
        ic_weight: 10.0,
        iterations: 4000,
        optimizer: AdamConfig { lr: 5e-3, lr_decay: Some(0.9995), ..AdamConfig::default() },
        seed: 0,
    }
}

pub fn absorb_problem() -> Result<OdeProblem> {
    problem_with("linear1", &ProblemOverrides { lambda: Some(ABSORB_RATE), horizon: Some(1.0) })
}

/// Trains on `y' = -75 y` with rates `{0, 50, 100}` available and checks
/// the relative L2 error against `e^{-75 t}`.
pub fn absorb_suite() -> Result<SuiteReport> {
    let problem = absorb_problem()?;
    let config = absorb_config();
    let mut report = SuiteReport::new(Suite::Absorb, ABSORB_TOL);
    let (_, run) = train(&problem, &config)?;
    let rel = match (&run.diverged, &run.error) {
        (None, Some(m)) => m.rel_l2,
        _ => f64::INFINITY,
    };
    report.record(
        rel,
        format!(
            "lambda={ABSORB_RATE} grid rates {:?}: rel L2 {rel:.3e} after {} iterations",
            [50.0, 100.0],
            run.iterations_run
        ),
    );
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_parse() {
        for s in Suite::ALL {
            assert_eq!(s.as_str().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn report_fails_on_nan() {
        let mut r = SuiteReport::new(Suite::Grad, 1.0);
        r.record(f64::NAN, String::new());
        assert!(!r.finish().passed);
    }
}
