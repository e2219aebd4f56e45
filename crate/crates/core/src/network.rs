//! Small dense tanh networks of one scaled time input.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Dual, ParamSet, ParamVars, Tape};
use crate::error::{Error, Result};

/// Affine map applied to `t` before the first layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputMap {
    pub scale: f64,
    pub shift: f64,
}

impl InputMap {
    pub fn identity() -> Self {
        InputMap { scale: 1.0, shift: 0.0 }
    }

    /// Maps `[0, horizon]` onto `[-1, 1]`.
    pub fn unit_interval(horizon: f64) -> Self {
        InputMap { scale: 2.0 / horizon, shift: -1.0 }
    }
}

/// Dense feed-forward network: tanh on hidden layers, identity output.
///
/// Parameters live in a [`ParamSet`] slice. Per layer the layout is the
/// row-major weight matrix `[n_out][n_in]` followed by the `n_out` biases.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    offset: usize,
    input: InputMap,
    name: String,
}

pub fn parameter_count(layer_sizes: &[usize]) -> usize {
    layer_sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
}

fn validate_layers(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::InvalidArchitecture(format!(
            "need an input and an output layer, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::InvalidArchitecture(format!("zero-width layer in {layer_sizes:?}")));
    }
    if layer_sizes[0] != 1 {
        return Err(Error::InvalidArchitecture(format!(
            "input width must be 1 (scaled time), got {}",
            layer_sizes[0]
        )));
    }
    Ok(())
}

/// Xavier-uniform weights and zero biases, drawn from a ChaCha8 stream
/// seeded with `seed`, registered in `params` under `name`.
pub fn init_mlp(
    name: &str,
    layer_sizes: &[usize],
    seed: u64,
    input: InputMap,
    params: &mut ParamSet,
) -> Result<Mlp> {
    validate_layers(layer_sizes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(parameter_count(layer_sizes));
    for w in layer_sizes.windows(2) {
        let (n_in, n_out) = (w[0], w[1]);
        let bound = (6.0 / (n_in + n_out) as f64).sqrt();
        values.extend((0..n_in * n_out).map(|_| rng.gen_range(-bound..bound)));
        values.extend(std::iter::repeat_n(0.0, n_out));
    }
    let range = params.register(name, values)?;
    Ok(Mlp { layer_sizes: layer_sizes.to_vec(), offset: range.start, input, name: name.to_string() })
}

impl Mlp {
    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("validated at init")
    }

    pub fn parameter_count(&self) -> usize {
        parameter_count(&self.layer_sizes)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_map(&self) -> InputMap {
        self.input
    }

    pub fn param_range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.parameter_count()
    }

    /// Zeroes every weight and sets the output biases, making the network
    /// the constant function `bias`.
    pub fn set_constant(&self, params: &mut ParamSet, bias: &[f64]) -> Result<()> {
        if bias.len() != self.output_dim() {
            return Err(Error::ShapeError(format!(
                "{} outputs {} values, got {} biases",
                self.name,
                self.output_dim(),
                bias.len()
            )));
        }
        let values = &mut params.values_mut()[self.param_range()];
        values.fill(0.0);
        let n = values.len();
        values[n - bias.len()..].copy_from_slice(bias);
        Ok(())
    }

    /// Evaluates the network and its time derivative on the tape.
    pub fn forward(&self, tape: &mut Tape, vars: ParamVars, t: Dual) -> Result<Vec<Dual>> {
        let tau = {
            let scaled = tape.dual_scale(t, self.input.scale);
            let shift = tape.constant(self.input.shift);
            tape.dual_add(scaled, Dual::constant(shift))
        };
        let mut x = vec![tau];
        let mut p = self.offset;
        let last = self.layer_sizes.len() - 2;
        for (layer, w) in self.layer_sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let bias_at = p + n_in * n_out;
            let mut out = Vec::with_capacity(n_out);
            for j in 0..n_out {
                let mut acc = Dual::constant(vars.get(bias_at + j));
                for (i, xi) in x.iter().enumerate() {
                    let term = tape.dual_mul_const(*xi, vars.get(p + j * n_in + i));
                    acc = tape.dual_add(acc, term);
                }
                if layer < last {
                    acc = tape.dual_tanh(acc);
                }
                if !tape.value(acc.primal).is_finite() || !tape.value(acc.tangent).is_finite() {
                    return Err(Error::NonFiniteForward);
                }
                out.push(acc);
            }
            x = out;
            p = bias_at + n_out;
        }
        Ok(x)
    }

    /// Plain evaluation at `t` with the current parameter values.
    pub fn eval(&self, params: &ParamSet, t: f64) -> Result<Vec<(f64, f64)>> {
        let mut tape = Tape::with_capacity(64 * self.parameter_count());
        let vars = params.record(&mut tape);
        let td = Dual::time(&mut tape, t);
        let out = self.forward(&mut tape, vars, td)?;
        Ok(out.iter().map(|d| (tape.value(d.primal), tape.value(d.tangent))).collect())
    }
}
