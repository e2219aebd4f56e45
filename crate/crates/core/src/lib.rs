pub mod ansatz;
pub mod autodiff;
pub mod checks;
pub mod cli;
pub mod error;
pub mod metrics;
pub mod network;
pub mod oracle;
pub mod problems;
pub mod training;

pub use error::{Error, Result};
