use super::{
    prior_generation, solve_next_beta, smc_log_weights, NoObserver, Phase, RunConfig, RunObserver, RunResult,
};
use crate::ensemble::PersistentStore;
use crate::error::{Error, Result};
use crate::kernels::{adapt_scale, estimate_covariance, rwm_sweep, RwmState};
use crate::numeric::{ess, normalize_log_weights};
use crate::rng::RngStream;
use crate::samplers::Method;
use crate::targets::Target;

/// Adaptive-temperature SMC. The full history is kept so recycling
/// estimators can be applied afterwards.
pub fn run_smc<T: Target + ?Sized>(target: &T, config: &RunConfig, rng: &mut RngStream) -> Result<RunResult> {
    run_smc_observed(target, config, rng, &mut NoObserver)
}

pub(crate) fn run_smc_observed<T: Target + ?Sized>(
    target: &T,
    config: &RunConfig,
    rng: &mut RngStream,
    observer: &mut dyn RunObserver,
) -> Result<RunResult> {
    config.validate()?;
    if !matches!(config.method, Method::Smc | Method::Rsmc) {
        return Err(Error::InvalidConfig(format!("run_smc cannot run {}", config.method)));
    }
    let n = config.n_particles;
    let mut current = prior_generation(target, n, rng);
    let mut evals = n as u64;
    let mut store = PersistentStore::new();
    store.push(current.clone(), 0.0)?;

    let mut state = RwmState::new(target.dim());
    let mut beta = 0.0;
    let mut log_z = 0.0;
    let mut log_z_trace = vec![0.0];
    let mut beta_schedule = vec![0.0];
    let mut ess_trace = Vec::new();
    let mut acceptance_trace = Vec::new();

    while beta < 1.0 {
        if store.len() >= config.max_iterations {
            break;
        }
        let t = store.len() + 1;
        observer.phase(t, Phase::ReweightStart);
        let beta_new = solve_next_beta(|b| smc_log_weights(&current, b), beta, config.ess_alpha, n)?;
        let normalized = normalize_log_weights(&smc_log_weights(&current, beta_new))?;
        log_z += normalized.log_mean;
        observer.phase(t, Phase::ReweightEnd);
        ess_trace.push(ess(&normalized.weights)?);

        let indices = config.resampler.resample(&normalized.weights, n, rng)?;
        let resampled = current.select(&indices).with_beta(beta_new);
        let uniform = vec![1.0 / n as f64; n];
        if let Ok(cov) = estimate_covariance(resampled.particles(), resampled.dim(), &uniform) {
            state.set_covariance(&cov);
        }
        let sweep = rwm_sweep(&resampled, target, beta_new, &state, config.mcmc_steps, rng, false);
        evals += sweep.likelihood_evals;
        acceptance_trace.push(sweep.mean_acceptance);
        state = adapt_scale(&state, sweep.mean_acceptance);

        current = sweep.generation;
        store.push(current.clone(), log_z)?;
        beta = beta_new;
        log_z_trace.push(log_z);
        beta_schedule.push(beta);
    }

    Ok(RunResult {
        method: config.method,
        iterations: store.len(),
        completed: beta == 1.0,
        store,
        log_z_trace,
        beta_schedule,
        ess_trace,
        acceptance_trace,
        likelihood_evals: evals,
    })
}
