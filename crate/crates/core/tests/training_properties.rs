use proptest::prelude::*;
use stiffnet::ansatz::{Form, ModelSpec, StiffModel};
use stiffnet::autodiff::Tape;
use stiffnet::checks::grad_suite;
use stiffnet::problems::{problem_with, OdeProblem, ProblemOverrides};
use stiffnet::training::{build_collocation, residual_loss, train, CollocationMode, TrainConfig};

fn random_model(seed: u64, form: Form, n: usize) -> StiffModel {
    StiffModel::new(ModelSpec {
        form,
        n,
        horizon: 1.0 + (seed % 3) as f64,
        lambda_max: 5.0 + (seed % 40) as f64,
        k: 1 + (seed % 3) as usize,
        omega_max: (seed % 5) as f64,
        l: 1 + (seed % 2) as usize,
        hidden: vec![4 + (seed % 5) as usize, 3],
        per_component: seed.is_multiple_of(4),
        seed,
    })
    .unwrap()
}

#[test]
fn decay_fits_exponential() {
    let problem = problem_with("linear1", &ProblemOverrides { lambda: Some(1.0), horizon: Some(2.0) }).unwrap();
    let config = TrainConfig {
        k: 4,
        lambda_max: 4.0,
        l: 1,
        omega_max: 0.0,
        hidden: vec![16],
        stations: 64,
        ic_weight: 10.0,
        iterations: 5000,
        seed: 1,
        ..TrainConfig::default()
    };
    let (_, report) = train(&problem, &config).unwrap();
    let m = report.error.expect("exact solution available");
    println!("rel L2 {:.3e}, Linf {:.3e}", m.rel_l2, m.linf);
    assert!(m.rel_l2 < 1e-2, "{}", m.rel_l2);
    assert_eq!(report.loss_history.len(), 5000);
}

#[test]
fn reverse_gradient_matches_differences() {
    let report = grad_suite(17).unwrap();
    println!("{report}");
    assert!(report.passed, "{:#?}", report.details);
}

#[test]
fn manufactured_problem_has_no_loss() {
    for seed in 0..10u64 {
        let form = if seed % 2 == 0 { Form::Compact } else { Form::Expanded };
        let model = random_model(seed, form, 1 + (seed % 3) as usize);
        let problem = OdeProblem::manufactured(&model).unwrap();
        let grid = build_collocation(problem.horizon, 33, CollocationMode::UniformLog, seed).unwrap();
        let mut tape = Tape::new();
        let g = residual_loss(&mut tape, &model, &problem, &grid, 10.0).unwrap();
        assert!(tape.value(g.loss) < 1e-20, "seed {seed}: {}", tape.value(g.loss));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn loss_is_nonnegative(seed in any::<u64>(), gamma in 0.0f64..20.0, stations in 2usize..20) {
        let form = if seed % 2 == 0 { Form::Compact } else { Form::Expanded };
        let n = 1 + (seed % 2) as usize;
        let model = random_model(seed, form, n);
        let name = if n == 1 { "linear1" } else { "linear2" };
        let overrides = ProblemOverrides { lambda: (n == 1).then_some(3.0), horizon: Some(model.horizon()) };
        let problem = problem_with(name, &overrides).unwrap();
        let grid = build_collocation(problem.horizon, stations, CollocationMode::Uniform, 0).unwrap();
        let mut tape = Tape::new();
        let g = residual_loss(&mut tape, &model, &problem, &grid, gamma).unwrap();
        let (loss, res, ic) = (tape.value(g.loss), tape.value(g.residual), tape.value(g.ic));
        prop_assert!(loss >= 0.0 && res >= 0.0 && ic >= 0.0);
        prop_assert!((loss - (res + gamma * ic)).abs() <= 1e-12 * loss.max(1.0));
    }
}
