//! Fits a stiff built-in problem with the log-augmented collocation recipe.
//!
//! cargo run --release --example stiff_fit -- [linear1|tworate] [iterations]

use stiffnet::ansatz::Form;
use stiffnet::problems::problem_by_name;
use stiffnet::training::{train_with, AdamConfig, CollocationMode, TrainConfig};

fn main() -> stiffnet::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "linear1".into());
    let iterations = args.next().and_then(|s| s.parse().ok()).unwrap_or(4000);
    let problem = problem_by_name(&name)?;
    let (hidden, decay) = if problem.n > 1 { (vec![12, 12], 0.9997) } else { (vec![16], 0.9995) };
    let config = TrainConfig {
        form: Form::Compact,
        k: 4,
        lambda_max: 200.0,
        hidden,
        stations: 512,
        collocation: CollocationMode::UniformLog,
        iterations,
        optimizer: AdamConfig { lr: 5e-3, lr_decay: Some(decay), ..AdamConfig::default() },
        ..TrainConfig::default()
    };
    println!("{name}: stiffness ratio {}, {} iterations", problem.stiffness_ratio(), iterations);
    let (_, report) = train_with(&problem, &config, |it, loss| {
        if (it + 1) % 500 == 0 {
            println!("iteration {:>5}  loss {loss:.3e}", it + 1);
        }
    })?;
    if let Some(m) = report.error {
        for (i, c) in m.components.iter().enumerate() {
            println!("component {}: rel L2 {:.2e}, Linf {:.2e}", i + 1, c.rel_l2, c.linf);
        }
    }
    println!("{:.1}s", report.wall_clock_seconds);
    Ok(())
}
