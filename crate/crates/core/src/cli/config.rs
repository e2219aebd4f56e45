//! The JSON run configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::ansatz::Form;
use crate::error::{Error, Result};
use crate::problems::{problem_with, OdeProblem, ProblemOverrides};
use crate::training::{AdamConfig, CollocationMode, TrainConfig};

pub const SEED_ENV: &str = "STIFFNET_SEED";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self { name: "linear1".into(), lambda: None, horizon: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "K")]
    pub k: usize,
    pub lambda_max: f64,
    #[serde(rename = "L")]
    pub l: usize,
    pub omega_max: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { k: 4, lambda_max: 200.0, l: 1, omega_max: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetSection {
    pub hidden_layers: usize,
    pub width: usize,
    pub per_component: bool,
}

impl Default for NetSection {
    fn default() -> Self {
        Self { hidden_layers: 3, width: 20, per_component: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    #[serde(rename = "S")]
    pub s: usize,
    pub collocation_mode: CollocationMode,
    pub iterations: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr_decay: Option<f64>,
    pub ic_weight: f64,
    pub seed: u64,
    pub form: Form,
}

impl Default for TrainSection {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            s: 256,
            collocation_mode: CollocationMode::Uniform,
            iterations: 10_000,
            lr: adam.lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
            lr_decay: None,
            ic_weight: 10.0,
            seed: 0,
            form: Form::Compact,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

/// Top-level config document. Every key is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfigFile {
    pub problem: ProblemSection,
    pub grid: GridSection,
    pub net: NetSection,
    pub train: TrainSection,
    pub output: OutputSection,
}

impl RunConfigFile {
    /// Parses JSON; errors carry the dotted path of the offending key.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            if path == "." {
                Error::Config(e.into_inner().to_string())
            } else {
                Error::Config(format!("{path}: {}", e.into_inner()))
            }
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            form: self.train.form,
            k: self.grid.k,
            lambda_max: self.grid.lambda_max,
            l: self.grid.l,
            omega_max: self.grid.omega_max,
            hidden: vec![self.net.width; self.net.hidden_layers],
            per_component: self.net.per_component,
            stations: self.train.s,
            collocation: self.train.collocation_mode,
            ic_weight: self.train.ic_weight,
            iterations: self.train.iterations,
            optimizer: AdamConfig {
                lr: self.train.lr,
                beta1: self.train.beta1,
                beta2: self.train.beta2,
                eps: self.train.eps,
                lr_decay: self.train.lr_decay,
            },
            seed: self.train.seed,
        }
    }

    pub fn problem(&self) -> Result<OdeProblem> {
        let overrides = ProblemOverrides { lambda: self.problem.lambda, horizon: self.problem.horizon };
        problem_with(&self.problem.name, &overrides).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("problem: {m}")),
            other => other,
        })
    }

    /// Builds the problem and training configuration, validating both.
    pub fn resolve(&self) -> Result<(OdeProblem, TrainConfig)> {
        let problem = self.problem()?;
        let config = self.train_config();
        config.validate()?;
        Ok((problem, config))
    }
}

/// Seed precedence: command-line flag, then environment, then file.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>, file: u64) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match env {
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV}: expected an unsigned integer, got `{v}`"))),
        None => Ok(file),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_takes_defaults() {
        let c = RunConfigFile::from_json("{}").unwrap();
        assert_eq!(c, RunConfigFile::default());
        let t = c.train_config();
        assert_eq!(t.hidden, vec![20, 20, 20]);
        assert_eq!(t.ic_weight, 10.0);
        assert_eq!(t.optimizer, AdamConfig::default());
    }

    #[test]
    fn round_trip_is_lossless() {
        let mut c = RunConfigFile::default();
        c.problem.lambda = Some(123.25);
        c.train.collocation_mode = CollocationMode::UniformLog;
        c.train.lr_decay = Some(0.9999);
        c.train.form = Form::Expanded;
        c.grid.omega_max = 0.1 + 0.2;
        let back = RunConfigFile::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfigFile::from_json(r#"{"grid": {"K": 2, "Kappa": 1}}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("grid") && msg.contains("Kappa"), "{msg}");
        let err = RunConfigFile::from_json(r#"{"extra": 1}"#).unwrap_err();
        assert!(err.to_string().contains("extra"));
    }

    #[test]
    fn wrong_type_is_named() {
        let err = RunConfigFile::from_json(r#"{"train": {"S": "many"}}"#).unwrap_err();
        assert!(err.to_string().contains("train.S"), "{err}");
    }

    #[test]
    fn zero_rates_rejected_with_key() {
        let c = RunConfigFile::from_json(r#"{"grid": {"K": 0}}"#).unwrap();
        let err = c.resolve().unwrap_err();
        assert!(err.to_string().contains("grid.K"), "{err}");
    }

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(Some(3), Some("5"), 7).unwrap(), 3);
        assert_eq!(resolve_seed(None, Some("5"), 7).unwrap(), 5);
        assert_eq!(resolve_seed(None, None, 7).unwrap(), 7);
        assert!(resolve_seed(None, Some("x"), 7).is_err());
    }
}
