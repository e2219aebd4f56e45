use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform decay rates `k * lambda_max / K` for `k = 1..=K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateGrid {
    pub lambda_max: f64,
    pub k: usize,
    pub rates: Vec<f64>,
}

impl RateGrid {
    pub fn spacing(&self) -> f64 {
        self.lambda_max / self.k as f64
    }
}

pub fn build_rate_grid(lambda_max: f64, k: usize) -> Result<RateGrid> {
    if !(lambda_max > 0.0) || !lambda_max.is_finite() {
        return Err(Error::InvalidGrid(format!("lambda_max must be positive, got {lambda_max}")));
    }
    if k < 1 {
        return Err(Error::InvalidGrid("rate count K must be at least 1".into()));
    }
    let step = lambda_max / k as f64;
    let mut rates: Vec<f64> = (1..=k).map(|i| i as f64 * step).collect();
    // i * step can land one ulp off lambda_max.
    rates[k - 1] = lambda_max;
    Ok(RateGrid { lambda_max, k, rates })
}

/// Uniform frequencies `l * omega_max / max(L - 1, 1)` for `l = 0..L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub omega_max: f64,
    pub l: usize,
    pub freqs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

pub fn build_freq_grid(omega_max: f64, l: usize) -> Result<FrequencyGrid> {
    if l < 1 {
        return Err(Error::InvalidGrid("frequency count L must be at least 1".into()));
    }
    if !(omega_max >= 0.0) || !omega_max.is_finite() {
        return Err(Error::InvalidGrid(format!("omega_max must be non-negative, got {omega_max}")));
    }
    let step = omega_max / (l.max(2) - 1) as f64;
    let freqs: Vec<f64> =
        (0..l).map(|i| if i + 1 == l && l > 1 { omega_max } else { i as f64 * step }).collect();
    let warning = (l == 1 && omega_max != 0.0)
        .then(|| format!("omega_max = {omega_max} ignored: a single frequency is always 0"));
    Ok(FrequencyGrid { omega_max, l, freqs, warning })
}

/// One point `s = -lambda + i omega` of the basis lattice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisIndex {
    pub lambda: f64,
    pub omega: f64,
}

/// Nearest grid rate to `lambda_true` and the distance to it.
///
/// Ties go to the smaller rate. Accepts `0 < lambda_true <= lambda_max + spacing`.
pub fn absorb_check(lambda_true: f64, grid: &RateGrid) -> Result<(f64, f64)> {
    let limit = grid.lambda_max + grid.spacing();
    if !(lambda_true > 0.0 && lambda_true <= limit) {
        return Err(Error::OutOfRange { lambda: lambda_true, limit });
    }
    let mut best = (grid.rates[0], (lambda_true - grid.rates[0]).abs());
    for &r in &grid.rates[1..] {
        let gap = (lambda_true - r).abs();
        if gap < best.1 {
            best = (r, gap);
        }
    }
    Ok(best)
}
