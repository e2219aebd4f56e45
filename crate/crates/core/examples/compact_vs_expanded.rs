//! The two forms of the ansatz side by side: block layout, parameter
//! counts and values on a few times.

use stiffnet::ansatz::{Form, ModelSpec, StiffModel};

fn main() -> stiffnet::Result<()> {
    for form in [Form::Compact, Form::Expanded] {
        let model = StiffModel::new(ModelSpec {
            form,
            n: 2,
            horizon: 1.0,
            lambda_max: 100.0,
            k: 4,
            omega_max: 6.0,
            l: 3,
            hidden: vec![20, 20, 20],
            per_component: false,
            seed: 7,
        })?;
        println!("{} form: {} networks, {} parameters", form.as_str(), model.trunk_count(), model.params().len());
        for net in model.nets().take(3) {
            println!("  {:<14} sizes {:?}", net.name(), net.layer_sizes());
        }
        for t in [0.0, 0.01, 0.3, 1.0] {
            let (y, dy) = model.predict_with_derivative(t)?;
            println!("  t={t:<5} Y={:>9.5?} dY/dt={:>10.4?}", y, dy);
        }
    }
    Ok(())
}
