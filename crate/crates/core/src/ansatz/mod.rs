//! The rate-modulated ansatz.
//!
//! Each state component is a sum over basis points `s = -lambda + i omega`
//! of `e^{-lambda t} (cos(omega t), sin(omega t))` times small networks of
//! `t`. Rates come from a uniform grid on `(0, lambda_max]`, frequencies from
//! a uniform grid starting at zero, and the `lambda = 0` row carries the
//! undamped part of the solution.

mod basis;
mod grid;
mod model;

pub use basis::{basis_dual, DECAY_FLOOR};
pub use grid::{absorb_check, build_freq_grid, build_rate_grid, BasisIndex, FrequencyGrid, RateGrid};
pub use model::{Form, Group, ModelSpec, NetGroup, StiffModel};
