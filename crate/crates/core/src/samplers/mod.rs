//! Sampler loops: standard SMC (also run for recycling), persistent sampling
//! and waste-free SMC.

mod beta;
mod ps;
mod resample;
mod smc;
mod wfsmc;
mod weights;

use std::fmt;
use std::str::FromStr;

pub use beta::solve_next_beta;
pub use ps::run_ps;
pub use resample::{resample_multinomial, resample_systematic, Resampler};
pub use smc::run_smc;
pub use weights::{ps_log_weights, smc_log_weights, tempered, MixtureCache};
pub use wfsmc::run_wfsmc;

use crate::ensemble::{Generation, PersistentStore};
use crate::error::{Error, Result};
use crate::rng::{purpose, RngStream};
use crate::targets::Target;

pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Smc,
    Rsmc,
    Ps,
    Wfsmc,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Smc, Method::Rsmc, Method::Ps, Method::Wfsmc];

    /// Stream tag mixed into replicate seeds.
    pub fn tag(self) -> u32 {
        match self {
            Method::Smc => 10,
            Method::Rsmc => 11,
            Method::Ps => 12,
            Method::Wfsmc => 13,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Smc => "smc",
            Method::Rsmc => "rsmc",
            Method::Ps => "ps",
            Method::Wfsmc => "wfsmc",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "smc" => Ok(Method::Smc),
            "rsmc" => Ok(Method::Rsmc),
            "ps" => Ok(Method::Ps),
            "wfsmc" => Ok(Method::Wfsmc),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub n_particles: usize,
    pub ess_alpha: f64,
    pub mcmc_steps: usize,
    pub max_iterations: usize,
    pub resampler: Resampler,
    /// Persistent sampling only: keep iterating at `β = 1` until the
    /// persistent ESS reaches this many effective samples.
    pub final_ess_target: Option<f64>,
}

impl RunConfig {
    pub fn new(method: Method, n_particles: usize, ess_alpha: f64, mcmc_steps: usize) -> Self {
        Self {
            method,
            n_particles,
            ess_alpha,
            mcmc_steps,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            resampler: Resampler::default(),
            final_ess_target: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(Error::InvalidConfig("need at least 2 particles".into()));
        }
        if self.mcmc_steps < 1 {
            return Err(Error::InvalidConfig("need at least 1 MCMC step".into()));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidConfig("iteration cap must be positive".into()));
        }
        let a = self.ess_alpha;
        let ok = match self.method {
            Method::Ps => a > 0.0 && a.is_finite(),
            _ => a > 0.0 && a < 1.0,
        };
        if !ok {
            return Err(Error::InvalidConfig(format!(
                "ESS fraction {a} out of range for {}",
                self.method
            )));
        }
        if self.final_ess_target.is_some() && self.method != Method::Ps {
            return Err(Error::InvalidConfig("final_ess_target only applies to ps".into()));
        }
        Ok(())
    }
}

/// Output of one sampler run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub method: Method,
    /// Every generation for SMC, RSMC and PS; the final pool for WFSMC.
    pub store: PersistentStore,
    /// `log Ẑ_t` after each iteration, starting with the prior's 0.
    pub log_z_trace: Vec<f64>,
    pub beta_schedule: Vec<f64>,
    /// ESS realized by the reweighting of each iteration.
    pub ess_trace: Vec<f64>,
    pub acceptance_trace: Vec<f64>,
    pub likelihood_evals: u64,
    /// Number of generations `T`, the prior included.
    pub iterations: usize,
    /// False when the iteration cap stopped the run before `β = 1`.
    pub completed: bool,
}

impl RunResult {
    pub fn log_z(&self) -> f64 {
        *self.log_z_trace.last().expect("trace starts with the prior")
    }

    pub fn mean_acceptance(&self) -> f64 {
        if self.acceptance_trace.is_empty() {
            return f64::NAN;
        }
        self.acceptance_trace.iter().sum::<f64>() / self.acceptance_trace.len() as f64
    }
}

/// Phases reported to a [`RunObserver`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Temperature solve, weight computation and evidence update begin.
    ReweightStart,
    ReweightEnd,
}

/// Receives phase boundaries; used to audit likelihood evaluations.
pub trait RunObserver {
    fn phase(&mut self, iteration: usize, phase: Phase);
}

impl<F: FnMut(usize, Phase)> RunObserver for F {
    fn phase(&mut self, iteration: usize, phase: Phase) {
        self(iteration, phase)
    }
}

pub(crate) struct NoObserver;

impl RunObserver for NoObserver {
    fn phase(&mut self, _: usize, _: Phase) {}
}

/// Dispatches on `config.method`.
pub fn run<T: Target + ?Sized>(target: &T, config: &RunConfig, rng: &mut RngStream) -> Result<RunResult> {
    run_observed(target, config, rng, &mut NoObserver)
}

pub fn run_observed<T: Target + ?Sized>(
    target: &T,
    config: &RunConfig,
    rng: &mut RngStream,
    observer: &mut dyn RunObserver,
) -> Result<RunResult> {
    match config.method {
        Method::Smc | Method::Rsmc => smc::run_smc_observed(target, config, rng, observer),
        Method::Ps => ps::run_ps_observed(target, config, rng, observer),
        Method::Wfsmc => wfsmc::run_wfsmc_observed(target, config, rng, observer),
    }
}

/// Prior draws with their likelihoods; `count` evaluations.
pub(crate) fn prior_generation<T: Target + ?Sized>(target: &T, count: usize, rng: &mut RngStream) -> Generation {
    let mut stream = rng.fork(0, purpose::PRIOR);
    let particles = target.sample_prior(&mut stream, count);
    let log_like = particles
        .chunks_exact(target.dim())
        .map(|x| target.log_likelihood(x))
        .collect();
    Generation::new(target.dim(), particles, log_like, 0.0).expect("prior sampler shape")
}
