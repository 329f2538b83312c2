use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::SuiteError;

/// Environment variable supplying the seed when neither a flag nor the
/// config file sets one.
pub const SEED_ENV: &str = "CHRONODET_SEED";

pub const SUITES: [&str; 11] = [
    "car",
    "chrono-det",
    "det-bound",
    "covariance",
    "gram-rep",
    "uv-split",
    "gram-ir",
    "decay",
    "sector",
    "effective-action",
    "all",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Everything a suite run depends on. Keys are spelled exactly like the
/// command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct SuiteConfig {
    pub suite: String,
    pub model: String,
    #[serde(rename = "L")]
    pub l: usize,
    pub beta: f64,
    pub trials: usize,
    pub seed: u64,
    /// Rayon worker cap; results do not depend on it.
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
    pub n_max: usize,
    pub epsilon_reg: Option<f64>,
    /// β for the scale-decomposition suites (`uv-split`, `gram-ir`, and the
    /// ultraviolet part of `decay`).
    pub scale_beta: f64,
    /// Ω sweep for the infrared Gram constant.
    pub omegas: Vec<f64>,
    /// Ω sweep for the ultraviolet decay constant.
    pub uv_omegas: Vec<f64>,
    /// Extra Ω values, large enough that `K ‖F‖₁ < Ω/4`, at which the
    /// ultraviolet decay bound is asserted.
    pub uv_bound_omegas: Vec<f64>,
    /// β sweep for decay constants.
    pub betas: Vec<f64>,
    /// Shell widths for the sector probe.
    pub epsilons: Vec<f64>,
    #[serde(rename = "sector-L")]
    pub sector_l: usize,
    pub sector_beta: f64,
    pub coupling: f64,
    /// λ grid as fractions of the convergence radius `1 / (ω ‖V‖_{h'})`.
    pub lambda_fractions: Vec<f64>,
    pub h: f64,
    pub orders: Vec<usize>,
    /// Multiplicative slack on every one-sided bound.
    pub slack: f64,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub format: Format,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            suite: "all".to_string(),
            model: "metal1d".to_string(),
            l: 8,
            beta: 2.0,
            trials: 1000,
            seed: 0,
            threads: None,
            n_max: 6,
            epsilon_reg: None,
            scale_beta: 4.0,
            omegas: vec![4.0, 16.0, 64.0, 256.0],
            uv_omegas: vec![8.0, 16.0, 32.0, 64.0],
            uv_bound_omegas: vec![256.0, 512.0],
            betas: vec![4.0, 8.0, 16.0, 32.0],
            epsilons: vec![0.4, 0.2, 0.1, 0.05],
            sector_l: 512,
            sector_beta: 16.0,
            coupling: 1.0,
            lambda_fractions: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            h: 1.0,
            orders: vec![1, 2],
            slack: chronodet_core::BOUND_SLACK,
            out: None,
            format: Format::Json,
        }
    }
}

impl SuiteConfig {
    /// Defaults, then the environment seed, then the keys present in the
    /// config file.
    pub fn load(path: Option<&Path>, env_seed: Option<u64>) -> Result<Self, SuiteError> {
        let mut base = Self::default();
        if let Some(seed) = env_seed {
            base.seed = seed;
        }
        let Some(path) = path else {
            return Ok(base);
        };
        let err =
            |e: &dyn std::fmt::Display| SuiteError::Config(format!("{}: {e}", path.display()));
        let text = fs::read_to_string(path).map_err(|e| err(&e))?;
        let file: serde_json::Value = serde_json::from_str(&text).map_err(|e| err(&e))?;
        let serde_json::Value::Object(keys) = file else {
            return Err(err(&"expected a JSON object"));
        };
        let mut merged = serde_json::to_value(&base).map_err(|e| err(&e))?;
        let serde_json::Value::Object(target) = &mut merged else {
            unreachable!("configs serialize to objects")
        };
        target.extend(keys);
        serde_json::from_value(merged).map_err(|e| err(&e))
    }

    pub fn validate(&self) -> Result<(), SuiteError> {
        if !SUITES.contains(&self.suite.as_str()) {
            return Err(SuiteError::Config(format!(
                "unknown suite `{}`; expected one of {}",
                self.suite,
                SUITES.join(", ")
            )));
        }
        if !["metal1d", "insulator1d", "metal2d"].contains(&self.model.as_str()) {
            return Err(SuiteError::Config(format!(
                "unknown model `{}`",
                self.model
            )));
        }
        if self.l < 2 || self.sector_l < 2 {
            return Err(SuiteError::Config(
                "lattice size must be at least 2".to_string(),
            ));
        }
        if !(self.beta > 0.0) || !(self.sector_beta > 0.0) || !(self.scale_beta > 0.0) {
            return Err(SuiteError::Config("beta must be positive".to_string()));
        }
        if self.trials == 0 || self.n_max == 0 || self.n_max > 8 {
            return Err(SuiteError::Config(
                "need trials >= 1 and 1 <= n-max <= 8".to_string(),
            ));
        }
        if !(self.h > 0.0) || !(self.slack >= 0.0) {
            return Err(SuiteError::Config(
                "h must be positive and slack non-negative".to_string(),
            ));
        }
        if self.lambda_fractions.iter().any(|f| !(*f >= 0.0)) {
            return Err(SuiteError::Config(
                "lambda fractions must be non-negative".to_string(),
            ));
        }
        if self.uv_bound_omegas.iter().any(|x| !(*x > 0.0)) {
            return Err(SuiteError::Config(
                "uv-bound-omegas must be positive".to_string(),
            ));
        }
        if self.orders.is_empty() || self.orders.iter().any(|&p| p == 0 || p > 8) {
            return Err(SuiteError::Config("orders must lie in 1..=8".to_string()));
        }
        for (name, list) in [
            ("omegas", &self.omegas),
            ("uv-omegas", &self.uv_omegas),
            ("betas", &self.betas),
            ("epsilons", &self.epsilons),
        ] {
            if list.len() < 2 || list.iter().any(|x| !(*x > 0.0)) {
                return Err(SuiteError::Config(format!(
                    "{name} needs at least two positive entries"
                )));
            }
        }
        Ok(())
    }
}
