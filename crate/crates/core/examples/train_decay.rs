//! Short training run on y' = -y over [0, 2].

use stiffnet::problems::{problem_with, ProblemOverrides};
use stiffnet::training::{train_with, TrainConfig};

fn main() -> stiffnet::Result<()> {
    let problem = problem_with("linear1", &ProblemOverrides { lambda: Some(1.0), horizon: Some(2.0) })?;
    let config = TrainConfig {
        k: 4,
        lambda_max: 4.0,
        hidden: vec![16],
        stations: 64,
        iterations: 3000,
        seed: 1,
        ..TrainConfig::default()
    };
    let (model, report) = train_with(&problem, &config, |it, loss| {
        if (it + 1) % 500 == 0 {
            println!("iteration {:>5}  loss {loss:.3e}", it + 1);
        }
    })?;
    if let Some(m) = &report.error {
        println!("rel L2 {:.2e}, Linf {:.2e}, {:.1}s", m.rel_l2, m.linf, report.wall_clock_seconds);
    }
    for t in [0.0, 0.5, 1.0, 2.0] {
        println!("t={t}: model {:.6}, exact {:.6}", model.predict(t)?[0], (-t).exp());
    }
    Ok(())
}
