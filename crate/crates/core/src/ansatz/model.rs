use serde::{Deserialize, Serialize};

use super::basis::{basis_dual, is_floored};
use super::grid::{build_freq_grid, build_rate_grid, BasisIndex, FrequencyGrid, RateGrid};
use crate::autodiff::{Dual, ParamSet, ParamVars, Tape};
use crate::error::{Error, Result};
use crate::network::{init_mlp, InputMap, Mlp};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    /// One coefficient network per basis point.
    #[default]
    Compact,
    /// Rate envelopes `V_k` times onset gates `U_kl`, plus the `W_l` row.
    Expanded,
}

impl Form {
    pub fn as_str(self) -> &'static str {
        match self {
            Form::Compact => "compact",
            Form::Expanded => "expanded",
        }
    }
}

/// Everything needed to rebuild a model's structure; parameters aside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub form: Form,
    pub n: usize,
    pub horizon: f64,
    pub lambda_max: f64,
    pub k: usize,
    pub omega_max: f64,
    pub l: usize,
    /// Hidden layer widths shared by every subnetwork.
    pub hidden: Vec<usize>,
    /// One network per state component instead of one shared trunk.
    #[serde(default)]
    pub per_component: bool,
    pub seed: u64,
}

/// Identifies one group of subnetworks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Group {
    /// Compact coefficient block at rate index `k` (0 is the undamped row)
    /// and frequency index `l`.
    T { k: usize, l: usize },
    /// Expanded form: undamped row, frequency index `l`.
    W { l: usize },
    /// Expanded form: slowly varying envelope of rate `k` (1-based).
    V { k: usize },
    /// Expanded form: onset gate of rate `k` (1-based) at frequency `l`.
    U { k: usize, l: usize },
}

/// Networks producing `channels * n` outputs, channel-major
/// (`out[ch * n + i]`), either from one shared trunk or one net per
/// component.
#[derive(Clone, Debug, PartialEq)]
pub struct NetGroup {
    nets: Vec<Mlp>,
    channels: usize,
    n: usize,
}

impl NetGroup {
    pub fn nets(&self) -> &[Mlp] {
        &self.nets
    }

    pub fn output_dim(&self) -> usize {
        self.channels * self.n
    }

    fn forward(&self, tape: &mut Tape, vars: ParamVars, t: Dual) -> Result<Vec<Dual>> {
        if self.nets.len() == 1 {
            return self.nets[0].forward(tape, vars, t);
        }
        let mut out = vec![Dual::zero(); self.output_dim()];
        for (i, net) in self.nets.iter().enumerate() {
            for (ch, d) in net.forward(tape, vars, t)?.into_iter().enumerate() {
                out[ch * self.n + i] = d;
            }
        }
        Ok(out)
    }

    fn set_constant(&self, params: &mut ParamSet, values: &[f64]) -> Result<()> {
        if values.len() != self.output_dim() {
            return Err(Error::ShapeError(format!(
                "group outputs {} values, got {}",
                self.output_dim(),
                values.len()
            )));
        }
        if self.nets.len() == 1 {
            return self.nets[0].set_constant(params, values);
        }
        for (i, net) in self.nets.iter().enumerate() {
            let bias: Vec<f64> = (0..self.channels).map(|ch| values[ch * self.n + i]).collect();
            net.set_constant(params, &bias)?;
        }
        Ok(())
    }
}

/// The rate-modulated network ansatz for an `n`-dimensional state.
#[derive(Clone, Debug)]
pub struct StiffModel {
    spec: ModelSpec,
    rate_grid: RateGrid,
    freq_grid: FrequencyGrid,
    /// Compact: every `(k, l)` block, `k = 0..=K`. Expanded: the `k = 0` row only.
    blocks: Vec<(BasisIndex, NetGroup)>,
    envelopes: Vec<NetGroup>,
    gates: Vec<(BasisIndex, NetGroup)>,
    params: ParamSet,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Builder<'a> {
    spec: &'a ModelSpec,
    params: ParamSet,
    next_net: u64,
}

impl Builder<'_> {
    fn net(&mut self, name: &str, out: usize) -> Result<Mlp> {
        let mut sizes = vec![1];
        sizes.extend(&self.spec.hidden);
        sizes.push(out);
        let seed = splitmix64(self.spec.seed ^ splitmix64(self.next_net));
        self.next_net += 1;
        init_mlp(name, &sizes, seed, InputMap::unit_interval(self.spec.horizon), &mut self.params)
    }

    fn group(&mut self, name: &str, channels: usize, split: bool) -> Result<NetGroup> {
        let n = self.spec.n;
        let nets = if split && n > 1 {
            (0..n).map(|i| self.net(&format!("{name}#{i}"), channels)).collect::<Result<_>>()?
        } else {
            vec![self.net(name, channels * n)?]
        };
        Ok(NetGroup { nets, channels, n })
    }
}

impl StiffModel {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        if spec.n == 0 {
            return Err(Error::InvalidArchitecture("state dimension must be positive".into()));
        }
        if !(spec.horizon > 0.0) || !spec.horizon.is_finite() {
            return Err(Error::InvalidArchitecture(format!(
                "horizon must be positive, got {}",
                spec.horizon
            )));
        }
        let rate_grid = build_rate_grid(spec.lambda_max, spec.k)?;
        let freq_grid = build_freq_grid(spec.omega_max, spec.l)?;
        let mut b = Builder { spec: &spec, params: ParamSet::new(), next_net: 0 };
        let split = spec.per_component;

        let mut blocks = Vec::new();
        let mut envelopes = Vec::new();
        let mut gates = Vec::new();
        let row_rates: Vec<f64> = match spec.form {
            Form::Compact => std::iter::once(0.0).chain(rate_grid.rates.iter().copied()).collect(),
            Form::Expanded => vec![0.0],
        };
        for (k, &lambda) in row_rates.iter().enumerate() {
            for (l, &omega) in freq_grid.freqs.iter().enumerate() {
                let name = match spec.form {
                    Form::Compact => format!("T[k={k},l={l}]"),
                    Form::Expanded => format!("W[l={l}]"),
                };
                blocks.push((BasisIndex { lambda, omega }, b.group(&name, 2, split)?));
            }
        }
        if spec.form == Form::Expanded {
            for k in 1..=spec.k {
                envelopes.push(b.group(&format!("V[k={k}]"), 1, split)?);
            }
            for (k, &lambda) in rate_grid.rates.iter().enumerate() {
                for (l, &omega) in freq_grid.freqs.iter().enumerate() {
                    let name = format!("U[k={},l={l}]", k + 1);
                    let net = b.net(&name, 2)?;
                    gates.push((BasisIndex { lambda, omega }, NetGroup { nets: vec![net], channels: 2, n: 1 }));
                }
            }
        }
        let params = b.params;
        Ok(StiffModel { spec, rate_grid, freq_grid, blocks, envelopes, gates, params })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn form(&self) -> Form {
        self.spec.form
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn horizon(&self) -> f64 {
        self.spec.horizon
    }

    pub fn rate_grid(&self) -> &RateGrid {
        &self.rate_grid
    }

    pub fn freq_grid(&self) -> &FrequencyGrid {
        &self.freq_grid
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Basis points of the coefficient blocks, in evaluation order.
    pub fn basis(&self) -> Vec<BasisIndex> {
        self.blocks.iter().map(|(b, _)| *b).chain(self.gates.iter().map(|(b, _)| *b)).collect()
    }

    /// Number of subnetworks (trunks) in the model.
    pub fn trunk_count(&self) -> usize {
        self.blocks.iter().map(|(_, g)| g.nets.len()).sum::<usize>()
            + self.envelopes.iter().map(|g| g.nets.len()).sum::<usize>()
            + self.gates.len()
    }

    /// Every subnetwork in parameter order.
    pub fn nets(&self) -> impl Iterator<Item = &Mlp> {
        self.blocks
            .iter()
            .map(|(_, g)| g)
            .chain(&self.envelopes)
            .chain(self.gates.iter().map(|(_, g)| g))
            .flat_map(|g| g.nets.iter())
    }

    pub fn group(&self, group: Group) -> Option<&NetGroup> {
        let nl = self.spec.l;
        match (self.spec.form, group) {
            (Form::Compact, Group::T { k, l }) if k <= self.spec.k && l < nl => {
                Some(&self.blocks[k * nl + l].1)
            }
            (Form::Expanded, Group::W { l }) if l < nl => Some(&self.blocks[l].1),
            (Form::Expanded, Group::V { k }) if (1..=self.spec.k).contains(&k) => {
                Some(&self.envelopes[k - 1])
            }
            (Form::Expanded, Group::U { k, l }) if (1..=self.spec.k).contains(&k) && l < nl => {
                Some(&self.gates[(k - 1) * nl + l].1)
            }
            _ => None,
        }
    }

    /// Makes a group the constant function `values` (channel-major).
    pub fn set_constant(&mut self, group: Group, values: &[f64]) -> Result<()> {
        let g = self
            .group(group)
            .ok_or_else(|| Error::ShapeError(format!("{group:?} is not part of this model")))?
            .clone();
        g.set_constant(&mut self.params, values)
    }

    /// Evaluates `Y(t)` and `dY/dt` on the tape, dispatching on the form.
    pub fn eval(&self, tape: &mut Tape, vars: ParamVars, t: Dual) -> Result<Vec<Dual>> {
        match self.spec.form {
            Form::Compact => self.eval_compact(tape, vars, t),
            Form::Expanded => self.eval_expanded(tape, vars, t),
        }
    }

    /// Adds `c * out[i] + s * out[n + i]` into `acc`.
    fn accumulate(tape: &mut Tape, acc: &mut [Dual], c: Dual, s: Dual, out: &[Dual]) {
        let n = acc.len();
        for i in 0..n {
            let a = tape.dual_mul(c, out[i]);
            let b = tape.dual_mul(s, out[n + i]);
            let ab = tape.dual_add(a, b);
            acc[i] = tape.dual_add(acc[i], ab);
        }
    }

    pub fn eval_compact(&self, tape: &mut Tape, vars: ParamVars, t: Dual) -> Result<Vec<Dual>> {
        if self.spec.form != Form::Compact {
            return Err(Error::FormMismatch { expected: "compact" });
        }
        let mut y = vec![Dual::zero(); self.spec.n];
        let tv = tape.value(t.primal);
        for (idx, group) in &self.blocks {
            if is_floored(idx.lambda, tv) {
                continue;
            }
            let (c, s) = basis_dual(tape, *idx, t);
            let out = group.forward(tape, vars, t)?;
            Self::accumulate(tape, &mut y, c, s, &out);
        }
        Ok(y)
    }

    pub fn eval_expanded(&self, tape: &mut Tape, vars: ParamVars, t: Dual) -> Result<Vec<Dual>> {
        if self.spec.form != Form::Expanded {
            return Err(Error::FormMismatch { expected: "expanded" });
        }
        let n = self.spec.n;
        let nl = self.spec.l;
        let tv = tape.value(t.primal);
        let mut y = vec![Dual::zero(); n];
        for (idx, group) in &self.blocks {
            let (c, s) = basis_dual(tape, *idx, t);
            let out = group.forward(tape, vars, t)?;
            Self::accumulate(tape, &mut y, c, s, &out);
        }
        for (k, envelope) in self.envelopes.iter().enumerate() {
            if is_floored(self.rate_grid.rates[k], tv) {
                continue;
            }
            // sum_l e^{s_kl t} U_kl(t), shared by every component
            let mut gate = Dual::zero();
            for (idx, u) in &self.gates[k * nl..(k + 1) * nl] {
                let (c, s) = basis_dual(tape, *idx, t);
                let out = u.forward(tape, vars, t)?;
                let a = tape.dual_mul(c, out[0]);
                let b = tape.dual_mul(s, out[1]);
                let ab = tape.dual_add(a, b);
                gate = tape.dual_add(gate, ab);
            }
            let v = envelope.forward(tape, vars, t)?;
            for i in 0..n {
                let term = tape.dual_mul(gate, v[i]);
                y[i] = tape.dual_add(y[i], term);
            }
        }
        Ok(y)
    }

    /// `Y(t)` and `dY/dt` as plain numbers.
    pub fn predict_with_derivative(&self, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut tape = Tape::with_capacity(4 * self.params.len() + 1024);
        self.predict_on(&mut tape, t)
    }

    pub fn predict(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.predict_with_derivative(t)?.0)
    }

    /// Evaluates at many times, reusing one tape.
    pub fn predict_many(&self, times: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut tape = Tape::with_capacity(4 * self.params.len() + 1024);
        times.iter().map(|&t| self.predict_on(&mut tape, t).map(|(y, _)| y)).collect()
    }

    fn predict_on(&self, tape: &mut Tape, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        tape.clear();
        let vars = self.params.record(tape);
        let td = Dual::time(tape, t);
        let y = self.eval(tape, vars, td)?;
        Ok((
            y.iter().map(|d| tape.value(d.primal)).collect(),
            y.iter().map(|d| tape.value(d.tangent)).collect(),
        ))
    }
}
