use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CollocationMode {
    #[default]
    #[serde(rename = "uniform")]
    Uniform,
    /// Uniform stations plus `ceil(S/4)` seeded points `T * 10^-u`,
    /// `u ~ U[1, 6]`, concentrated in the initial transient.
    #[serde(rename = "uniform+log")]
    UniformLog,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollocationGrid {
    pub points: Vec<f64>,
    pub mode: CollocationMode,
}

impl CollocationGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn build_collocation(
    horizon: f64,
    stations: usize,
    mode: CollocationMode,
    seed: u64,
) -> Result<CollocationGrid> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidGrid(format!("horizon must be positive, got {horizon}")));
    }
    if stations < 2 {
        return Err(Error::InvalidGrid(format!("need at least 2 collocation points, got {stations}")));
    }
    let last = stations - 1;
    let mut points: Vec<f64> = (0..stations)
        .map(|s| if s == last { horizon } else { s as f64 * horizon / last as f64 })
        .collect();
    if mode == CollocationMode::UniformLog {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let extra = stations.div_ceil(4);
        points.extend((0..extra).map(|_| horizon * 10f64.powf(-rng.gen_range(1.0..=6.0))));
        points.sort_by(f64::total_cmp);
        points.dedup();
    }
    Ok(CollocationGrid { points, mode })
}
