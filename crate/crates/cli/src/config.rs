//! TOML experiment configurations and their validated forms.

use std::path::{Path, PathBuf};

use evill_core::env::BanditInstance;
use evill_core::experiment::{warmup_pulls, WarmupMethod, WarmupSpec};
use evill_core::policy::{PolicyKind, PolicySpec};
use evill_core::rng::{stream, StreamKind};
use serde::Deserialize;

use crate::error::{CliError, Result};

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn none() -> String {
    "none".into()
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: String,
    pub a: f64,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default)]
    pub phe_fisher_scaled: bool,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WarmupConfig {
    #[serde(default = "none")]
    pub method: String,
    #[serde(default = "half")]
    pub b: f64,
}

impl Default for WarmupConfig {
    fn default() -> Self {
        WarmupConfig {
            method: none(),
            b: half(),
        }
    }
}

/// Bandit experiment. `horizon` counts warm-up rounds.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub instance: String,
    pub horizon: usize,
    pub replicates: u64,
    pub seed: u64,
    pub output: PathBuf,
    #[serde(default)]
    pub normalize_arms: bool,
    pub policy: PolicyConfig,
    #[serde(default)]
    pub warmup: WarmupConfig,
}

/// Validated bandit experiment.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub config: RunConfig,
    pub instance: BanditInstance,
    pub spec: PolicySpec,
    pub warmup: WarmupSpec,
    pub tau: usize,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read(path)?)
    }

    pub fn plan(&self) -> Result<RunPlan> {
        if self.replicates == 0 {
            return Err(invalid("replicates must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(invalid("horizon must be at least 1"));
        }
        let instance = BanditInstance::by_name(&self.instance, self.normalize_arms)?;
        let kind: PolicyKind = self.policy.kind.parse()?;
        let mut spec = PolicySpec::new(kind, self.policy.a, self.policy.lambda)?;
        spec.phe_fisher_scaled = self.policy.phe_fisher_scaled;
        let method: WarmupMethod = self.warmup.method.parse()?;
        if !(self.warmup.b > 0.0) {
            return Err(invalid("warmup.b must be positive"));
        }
        let warmup = WarmupSpec {
            method,
            b: self.warmup.b,
        };
        // the warm-up length does not depend on the random stream
        let mut rng = stream(self.seed, 0, 0, StreamKind::Warmup);
        let tau = warmup_pulls(&instance, &warmup, spec.lambda, &mut rng)?.len();
        if tau > self.horizon {
            return Err(invalid(format!(
                "warm-up length {tau} exceeds horizon {}",
                self.horizon
            )));
        }
        Ok(RunPlan {
            config: self.clone(),
            instance,
            spec,
            warmup,
            tau,
        })
    }
}

fn est_instance() -> String {
    "rayleigh-est".into()
}

fn step() -> usize {
    100
}

fn max_n() -> usize {
    10_000
}

/// Estimation experiment: error of MLE, EVILL and PHE against sample size.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EstimationConfig {
    #[serde(default = "est_instance")]
    pub instance: String,
    pub replicates: u64,
    pub seed: u64,
    pub output: PathBuf,
    #[serde(default = "step")]
    pub step: usize,
    #[serde(default = "max_n")]
    pub max_n: usize,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default = "one")]
    pub lambda: f64,
}

impl EstimationConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read(path)?)
    }

    pub fn validate(&self) -> Result<BanditInstance> {
        if self.replicates == 0 {
            return Err(invalid("replicates must be at least 1"));
        }
        if self.step == 0 || self.max_n < self.step {
            return Err(invalid("need 0 < step <= max_n"));
        }
        if !(self.a > 0.0 && self.lambda > 0.0) {
            return Err(invalid("a and lambda must be positive"));
        }
        Ok(BanditInstance::by_name(&self.instance, false)?)
    }
}
