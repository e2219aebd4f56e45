use super::grid::BasisIndex;
use crate::autodiff::{Dual, Tape};

/// Below this decay factor a block contributes exactly zero.
pub const DECAY_FLOOR: f64 = 1e-300;

/// `e^{-lambda t} cos(omega t)` and `e^{-lambda t} sin(omega t)` with their
/// time derivatives. Both are exactly zero once the decay factor drops
/// below [`DECAY_FLOOR`]; the sine channel is the folded zero when
/// `omega == 0`.
pub fn basis_dual(tape: &mut Tape, idx: BasisIndex, t: Dual) -> (Dual, Dual) {
    if is_floored(idx.lambda, tape.value(t.primal)) {
        return (Dual::zero(), Dual::zero());
    }
    let decay = {
        let arg = tape.dual_scale(t, -idx.lambda);
        tape.dual_exp(arg)
    };
    if idx.omega == 0.0 {
        return (decay, Dual::zero());
    }
    let phase = tape.dual_scale(t, idx.omega);
    let cos = tape.dual_cos(phase);
    let sin = tape.dual_sin(phase);
    (tape.dual_mul(decay, cos), tape.dual_mul(decay, sin))
}

pub(crate) fn is_floored(lambda: f64, t: f64) -> bool {
    (-lambda * t).exp() < DECAY_FLOOR
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(lambda: f64, omega: f64, t: f64) -> [(f64, f64); 2] {
        let mut tape = Tape::new();
        let td = Dual::time(&mut tape, t);
        let (c, s) = basis_dual(&mut tape, BasisIndex { lambda, omega }, td);
        [
            (tape.value(c.primal), tape.value(c.tangent)),
            (tape.value(s.primal), tape.value(s.tangent)),
        ]
    }

    #[test]
    fn constant_basis() {
        for t in [0.0, 0.4, 7.0] {
            assert_eq!(at(0.0, 0.0, t), [(1.0, 0.0), (0.0, 0.0)]);
        }
    }

    #[test]
    fn value_at_origin() {
        assert_eq!(at(5.0, 2.0, 0.0), [(1.0, -5.0), (0.0, 2.0)]);
    }

    #[test]
    fn fast_decay_table_value() {
        let [(c, _), _] = at(100.0, 0.0, 0.1);
        assert!((c - 4.5400e-5).abs() < 1e-8);
        assert_eq!(c, (-10.0f64).exp());
    }

    #[test]
    fn tangent_formula() {
        let (l, w, t) = (3.0, 4.0, 0.37);
        let [(c, dc), (s, ds)] = at(l, w, t);
        let e = (-l * t).exp();
        assert!((c - e * (w * t).cos()).abs() < 1e-15);
        assert!((s - e * (w * t).sin()).abs() < 1e-15);
        assert!((dc - e * (-l * (w * t).cos() - w * (w * t).sin())).abs() < 1e-14);
        assert!((ds - e * (-l * (w * t).sin() + w * (w * t).cos())).abs() < 1e-14);
    }

    #[test]
    fn floor_gives_exact_zero() {
        assert_eq!(at(1000.0, 3.0, 1.0), [(0.0, 0.0), (0.0, 0.0)]);
    }
}
