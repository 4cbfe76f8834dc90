//! Waste-free SMC: the next pool is every state visited by the `k`-step
//! chains of the previous sweep, `M = k · N` members at one temperature.

use super::{prior_generation, smc_log_weights, solve_next_beta, NoObserver, Phase, RunConfig, RunObserver, RunResult};
use crate::ensemble::PersistentStore;
use crate::error::{Error, Result};
use crate::kernels::{adapt_scale, estimate_covariance, rwm_sweep, RwmState};
use crate::numeric::{ess, normalize_log_weights};
use crate::rng::RngStream;
use crate::samplers::Method;
use crate::targets::Target;

pub fn run_wfsmc<T: Target + ?Sized>(target: &T, config: &RunConfig, rng: &mut RngStream) -> Result<RunResult> {
    run_wfsmc_observed(target, config, rng, &mut NoObserver)
}

pub(crate) fn run_wfsmc_observed<T: Target + ?Sized>(
    target: &T,
    config: &RunConfig,
    rng: &mut RngStream,
    observer: &mut dyn RunObserver,
) -> Result<RunResult> {
    config.validate()?;
    if config.method != Method::Wfsmc {
        return Err(Error::InvalidConfig(format!("run_wfsmc cannot run {}", config.method)));
    }
    let n = config.n_particles;
    let mut pool = prior_generation(target, n, rng);
    let mut evals = n as u64;

    let mut state = RwmState::new(target.dim());
    let mut beta = 0.0;
    let mut log_z = 0.0;
    let mut log_z_trace = vec![0.0];
    let mut beta_schedule = vec![0.0];
    let mut ess_trace = Vec::new();
    let mut acceptance_trace = Vec::new();

    while beta < 1.0 && beta_schedule.len() < config.max_iterations {
        let t = beta_schedule.len() + 1;
        observer.phase(t, Phase::ReweightStart);
        // threshold relative to the pool: the chain states stand in for M particles
        let beta_new = solve_next_beta(|b| smc_log_weights(&pool, b), beta, config.ess_alpha, pool.len())?;
        let normalized = normalize_log_weights(&smc_log_weights(&pool, beta_new))?;
        log_z += normalized.log_mean;
        observer.phase(t, Phase::ReweightEnd);
        ess_trace.push(ess(&normalized.weights)?);

        let indices = config.resampler.resample(&normalized.weights, n, rng)?;
        let resampled = pool.select(&indices).with_beta(beta_new);
        let uniform = vec![1.0 / n as f64; n];
        if let Ok(cov) = estimate_covariance(resampled.particles(), resampled.dim(), &uniform) {
            state.set_covariance(&cov);
        }
        let sweep = rwm_sweep(&resampled, target, beta_new, &state, config.mcmc_steps, rng, true);
        evals += sweep.likelihood_evals;
        acceptance_trace.push(sweep.mean_acceptance);
        state = adapt_scale(&state, sweep.mean_acceptance);

        pool = sweep.path.expect("path requested");
        beta = beta_new;
        log_z_trace.push(log_z);
        beta_schedule.push(beta);
    }

    let store = PersistentStore::from_parts(vec![pool], vec![log_z])?;
    Ok(RunResult {
        method: Method::Wfsmc,
        iterations: beta_schedule.len(),
        completed: beta == 1.0,
        store,
        log_z_trace,
        beta_schedule,
        ess_trace,
        acceptance_trace,
        likelihood_evals: evals,
    })
}
