//! Reverse-mode gradients and dual-number time derivatives on one tape.

use stiffnet::autodiff::{backward, eval_dual, finite_diff_check, Dual, ParamSet, Tape};

fn main() -> stiffnet::Result<()> {
    // f(x, y) = x * y + sin(x)
    let mut params = ParamSet::new();
    params.register("xy", vec![2.0, 3.0])?;
    let mut tape = Tape::new();
    let v = params.record(&mut tape);
    let (x, y) = (v.get(0), v.get(1));
    let xy = tape.mul(x, y);
    let sx = tape.sin(x);
    let f = tape.add(xy, sx);
    let grad = backward(&tape, f, v)?;
    println!("f = {:.6}, grad = [{:.6}, {:.6}]", tape.value(f), grad[0], grad[1]);

    // d/dt [exp(-2t) sin t] at t = 0 is 1
    let (value, slope) = eval_dual(
        |tape, t| {
            let m2t = tape.dual_scale(t, -2.0);
            let e = tape.dual_exp(m2t);
            let s = tape.dual_sin(t);
            Ok(tape.dual_mul(e, s))
        },
        0.0,
    )?;
    println!("exp(-2t) sin t at 0: value {value}, slope {slope}");

    // gradients flow through tangents too: d/dw of d/dt tanh(w t) at t = 0.5
    let mut w = ParamSet::new();
    w.register("w", vec![1.5])?;
    let report = finite_diff_check(
        |tape, v| {
            let t = Dual::time(tape, 0.5);
            let wt = tape.dual_mul_const(t, v.get(0));
            Ok(tape.dual_tanh(wt).tangent)
        },
        &w,
        1e-4,
    )?;
    println!(
        "mixed derivative: analytic {:.9}, finite difference {:.9}, rel err {:.1e}",
        report.analytic[0], report.numeric[0], report.max_rel_err
    );
    Ok(())
}
