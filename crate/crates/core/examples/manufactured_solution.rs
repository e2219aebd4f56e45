//! A problem built from a model's own derivative has zero loss at that
//! model, and a positive loss anywhere else.

use stiffnet::ansatz::{Form, ModelSpec, StiffModel};
use stiffnet::autodiff::Tape;
use stiffnet::problems::OdeProblem;
use stiffnet::training::{build_collocation, residual_loss, CollocationMode};

fn main() -> stiffnet::Result<()> {
    let spec = ModelSpec {
        form: Form::Expanded,
        n: 2,
        horizon: 1.0,
        lambda_max: 50.0,
        k: 3,
        omega_max: 4.0,
        l: 2,
        hidden: vec![8, 8],
        per_component: false,
        seed: 3,
    };
    let model = StiffModel::new(spec.clone())?;
    let problem = OdeProblem::manufactured(&model)?;
    let grid = build_collocation(1.0, 128, CollocationMode::UniformLog, 0)?;
    let mut tape = Tape::new();

    let g = residual_loss(&mut tape, &model, &problem, &grid, 10.0)?;
    println!("loss at the generating model: {:.3e}", tape.value(g.loss));

    let other = StiffModel::new(ModelSpec { seed: 4, ..spec })?;
    let g = residual_loss(&mut tape, &other, &problem, &grid, 10.0)?;
    println!("loss at another model:        {:.3e}", tape.value(g.loss));
    Ok(())
}
