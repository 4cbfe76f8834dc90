//! Experiment description, read from TOML.
//!
//! ```toml
//! target = "mixture"
//! methods = ["smc", "rsmc", "ps", "wfsmc"]
//! n = [64, 128]
//! k = [50, 100]
//! replicates = 50
//! root_seed = 7
//!
//! [alpha]
//! smc = 0.9
//! ps = 3.0        # omit to calibrate against the SMC budget
//!
//! [reference]
//! runs = 20
//! n = 4096
//! alpha = 0.999
//! k = 20
//! ```

use std::path::{Path, PathBuf};

use persistent_sampling::samplers::{Method, Resampler};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, HarnessError, Result};

pub const DEFAULT_REPLICATES: usize = 50;
pub const DEFAULT_N: [usize; 3] = [32, 64, 128];
pub const DEFAULT_K: [usize; 4] = [25, 50, 100, 200];
pub const BASELINE_ALPHA: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub target: String,
    pub methods: Vec<Method>,
    #[serde(rename = "n", default = "default_n")]
    pub n_particles: Vec<usize>,
    #[serde(rename = "k", default = "default_k")]
    pub mcmc_steps: Vec<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub root_seed: u64,
    #[serde(default)]
    pub resampler: Resampler,
    #[serde(default)]
    pub alpha: AlphaSettings,
    #[serde(default)]
    pub calibration: CalibrationSettings,
    #[serde(default)]
    pub reference: ReferenceSettings,
    /// Reference values written by `psbench reference`; skips reference runs.
    #[serde(default)]
    pub reference_file: Option<PathBuf>,
    /// UCI German credit file for the `logistic` target.
    #[serde(default)]
    pub credit_path: Option<PathBuf>,
}

fn default_n() -> Vec<usize> {
    DEFAULT_N.to_vec()
}

fn default_k() -> Vec<usize> {
    DEFAULT_K.to_vec()
}

fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}

/// ESS thresholds. A missing `ps` or `wfsmc` value is calibrated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaSettings {
    #[serde(default = "baseline_alpha")]
    pub smc: f64,
    #[serde(default = "baseline_alpha")]
    pub rsmc: f64,
    #[serde(default)]
    pub ps: Option<f64>,
    #[serde(default)]
    pub wfsmc: Option<f64>,
}

fn baseline_alpha() -> f64 {
    BASELINE_ALPHA
}

impl Default for AlphaSettings {
    fn default() -> Self {
        Self {
            smc: BASELINE_ALPHA,
            rsmc: BASELINE_ALPHA,
            ps: None,
            wfsmc: None,
        }
    }
}

impl AlphaSettings {
    /// Fixed threshold for `method`, or `None` when it must be calibrated.
    pub fn fixed(&self, method: Method) -> Option<f64> {
        match method {
            Method::Smc => Some(self.smc),
            Method::Rsmc => Some(self.rsmc),
            Method::Ps => self.ps,
            Method::Wfsmc => self.wfsmc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSettings {
    #[serde(default = "default_pilots")]
    pub pilots: usize,
    #[serde(default = "default_probes")]
    pub max_probes: usize,
    /// Relative tolerance on mean likelihood evaluations.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_pilots() -> usize {
    10
}

fn default_probes() -> usize {
    25
}

fn default_tolerance() -> f64 {
    0.01
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            pilots: default_pilots(),
            max_probes: default_probes(),
            tolerance: default_tolerance(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSettings {
    #[serde(default = "default_ref_runs")]
    pub runs: usize,
    #[serde(rename = "n", default = "default_ref_n")]
    pub n_particles: usize,
    #[serde(default = "default_ref_alpha")]
    pub alpha: f64,
    #[serde(rename = "k", default = "default_ref_k")]
    pub mcmc_steps: usize,
    /// Run the reference SMC even when the target has a closed form.
    #[serde(default)]
    pub self_check: bool,
}

fn default_ref_runs() -> usize {
    20
}

fn default_ref_n() -> usize {
    4096
}

fn default_ref_alpha() -> f64 {
    0.999
}

fn default_ref_k() -> usize {
    20
}

impl Default for ReferenceSettings {
    fn default() -> Self {
        Self {
            runs: default_ref_runs(),
            n_particles: default_ref_n(),
            alpha: default_ref_alpha(),
            mcmc_steps: default_ref_k(),
            self_check: false,
        }
    }
}

impl ExperimentSpec {
    /// A spec with desk-scale defaults.
    pub fn new(target: impl Into<String>, methods: Vec<Method>) -> Self {
        Self {
            target: target.into(),
            methods,
            n_particles: default_n(),
            mcmc_steps: default_k(),
            replicates: DEFAULT_REPLICATES,
            root_seed: 0,
            resampler: Resampler::default(),
            alpha: AlphaSettings::default(),
            calibration: CalibrationSettings::default(),
            reference: ReferenceSettings::default(),
            reference_file: None,
            credit_path: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.methods.is_empty() {
            return fail("no methods listed");
        }
        if self.n_particles.is_empty() || self.mcmc_steps.is_empty() {
            return fail("empty N or k grid");
        }
        if self.n_particles.iter().any(|&n| n < 2) {
            return fail("N must be at least 2");
        }
        if self.mcmc_steps.contains(&0) {
            return fail("k must be positive");
        }
        if self.replicates == 0 {
            return fail("need at least one replicate");
        }
        if self.calibration.pilots == 0 || self.calibration.max_probes == 0 {
            return fail("calibration needs pilots and probes");
        }
        if !(self.calibration.tolerance > 0.0) {
            return fail("calibration tolerance must be positive");
        }
        Ok(())
    }
}
