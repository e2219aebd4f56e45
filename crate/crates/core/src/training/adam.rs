use serde::{Deserialize, Serialize};

use crate::autodiff::Op;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Per-step multiplicative learning-rate decay.
    #[serde(default)]
    pub lr_decay: Option<f64>,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, lr_decay: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self { m: vec![0.0; len], v: vec![0.0; len], step: 0 }
    }
}

pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, hyper: &AdamConfig) -> Result<()> {
    if grads.len() != params.len() || state.m.len() != params.len() || state.v.len() != params.len() {
        return Err(Error::ShapeError(format!(
            "adam: {} params, {} grads, state of {}",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    if !(hyper.lr > 0.0) {
        return Err(Error::Config(format!("train.lr must be positive, got {}", hyper.lr)));
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient { op: Op::Var });
    }
    let lr = match hyper.lr_decay {
        Some(d) => hyper.lr * d.powf(state.step as f64),
        None => hyper.lr,
    };
    state.step += 1;
    let c1 = 1.0 - hyper.beta1.powf(state.step as f64);
    let c2 = 1.0 - hyper.beta2.powf(state.step as f64);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
        state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + hyper.eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = vec![1.0, -2.0];
        let mut s = AdamState::new(2);
        adam_step(&mut p, &[0.0, 0.0], &mut s, &AdamConfig::default()).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr_against_sign() {
        let hyper = AdamConfig { lr: 0.01, ..Default::default() };
        let mut p = vec![0.0, 0.0, 0.0];
        let mut s = AdamState::new(3);
        adam_step(&mut p, &[3.0, -0.5, 1e-3], &mut s, &hyper).unwrap();
        assert!((p[0] + 0.01).abs() < 1e-9);
        assert!((p[1] - 0.01).abs() < 1e-9);
        assert!((p[2] + 0.01).abs() < 1e-7);
    }

    #[test]
    fn two_step_trace() {
        // By hand with g = 2, lr = 0.1: m = 0.2, 0.38; v = 0.004, 0.007996;
        // bias-corrected ratios are both 1, so each step moves 0.1/(1+eps/2).
        let hyper = AdamConfig { lr: 0.1, ..Default::default() };
        let mut p = vec![1.0];
        let mut s = AdamState::new(1);
        adam_step(&mut p, &[2.0], &mut s, &hyper).unwrap();
        let after_one = p[0];
        adam_step(&mut p, &[2.0], &mut s, &hyper).unwrap();
        let step = 0.1 / (1.0 + 1e-8 / 2.0);
        assert!((after_one - (1.0 - step)).abs() < 1e-12);
        assert!((p[0] - (1.0 - 2.0 * step)).abs() < 1e-12);
        assert!((s.m[0] - 0.38).abs() < 1e-15);
        assert!((s.v[0] - 0.007996).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut p = vec![1.0];
        let mut s = AdamState::new(1);
        let err = adam_step(&mut p, &[f64::NAN], &mut s, &AdamConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NonFiniteGradient { .. }));
        assert_eq!((p[0], s.step), (1.0, 0));
    }

    #[test]
    fn decay_shrinks_later_steps() {
        let hyper = AdamConfig { lr: 0.1, lr_decay: Some(0.5), ..Default::default() };
        let mut p = vec![0.0];
        let mut s = AdamState::new(1);
        adam_step(&mut p, &[1.0], &mut s, &hyper).unwrap();
        let first = -p[0];
        adam_step(&mut p, &[1.0], &mut s, &hyper).unwrap();
        assert!((-p[0] - first - first / 2.0).abs() < 1e-9);
    }

    #[test]
    fn shape_mismatch() {
        let mut p = vec![0.0; 2];
        let mut s = AdamState::new(2);
        assert!(matches!(
            adam_step(&mut p, &[1.0], &mut s, &AdamConfig::default()),
            Err(Error::ShapeError(_))
        ));
    }
}
