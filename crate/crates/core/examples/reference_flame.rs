//! The reference integrator on the flame problem, which has no closed form.

use stiffnet::metrics::uniform_grid;
use stiffnet::oracle::integrate_reference;
use stiffnet::problems::problem_by_name;

fn main() -> stiffnet::Result<()> {
    let problem = problem_by_name("flame")?;
    let times = uniform_grid(problem.horizon, 21);
    let traj = integrate_reference(&problem, 1e-8, 1e-8, &times)?;
    println!("{} accepted steps, {} rejected", traj.accepted, traj.rejected);
    for (t, y) in traj.times.iter().zip(&traj.states) {
        let bar = "#".repeat((y[0] * 50.0).round() as usize);
        println!("t={t:>5.0} y={:.6} {bar}", y[0]);
    }
    let steps: Vec<f64> = traj.mesh.windows(2).map(|w| w[1].t - w[0].t).collect();
    let smallest = steps.iter().copied().fold(f64::INFINITY, f64::min);
    println!("smallest step {smallest:.3e}, largest {:.3e}", steps.iter().copied().fold(0.0, f64::max));
    Ok(())
}
