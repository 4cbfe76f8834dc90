//! Persistent sampling: every generation stays in a growing pool that is
//! reweighted against the mixture of all previous annealed targets.

use super::{prior_generation, solve_next_beta, MixtureCache, NoObserver, Phase, RunConfig, RunObserver, RunResult};
use crate::ensemble::{Generation, PersistentStore};
use crate::error::{Error, Result};
use crate::kernels::{adapt_scale, estimate_covariance, rwm_sweep, RwmState};
use crate::numeric::{ess, normalize_log_weights};
use crate::rng::RngStream;
use crate::samplers::Method;
use crate::targets::Target;

pub fn run_ps<T: Target + ?Sized>(target: &T, config: &RunConfig, rng: &mut RngStream) -> Result<RunResult> {
    run_ps_observed(target, config, rng, &mut NoObserver)
}

fn gather(store: &PersistentStore, indices: &[usize], beta: f64) -> Generation {
    let dim = store.dim();
    let mut particles = Vec::with_capacity(indices.len() * dim);
    let mut log_like = Vec::with_capacity(indices.len());
    let sizes: Vec<usize> = store.generations().iter().map(Generation::len).collect();
    for &flat in indices {
        let (mut g, mut i) = (0, flat);
        while i >= sizes[g] {
            i -= sizes[g];
            g += 1;
        }
        let gen = &store.generations()[g];
        particles.extend_from_slice(gen.particle(i));
        log_like.push(gen.log_like()[i]);
    }
    Generation::new(dim, particles, log_like, beta).expect("gathered shape")
}

pub(crate) fn run_ps_observed<T: Target + ?Sized>(
    target: &T,
    config: &RunConfig,
    rng: &mut RngStream,
    observer: &mut dyn RunObserver,
) -> Result<RunResult> {
    config.validate()?;
    if config.method != Method::Ps {
        return Err(Error::InvalidConfig(format!("run_ps cannot run {}", config.method)));
    }
    let n = config.n_particles;
    let mut store = PersistentStore::new();
    store.push(prior_generation(target, n, rng), 0.0)?;
    let mut evals = n as u64;
    let mut cache = MixtureCache::new();
    cache.push_latest(&store)?;

    let mut state = RwmState::new(target.dim());
    let mut beta = 0.0;
    let mut log_z_trace = vec![0.0];
    let mut beta_schedule = vec![0.0];
    let mut ess_trace = Vec::new();
    let mut acceptance_trace = Vec::new();
    let mut completed = false;

    while store.len() < config.max_iterations {
        let t = store.len() + 1;
        observer.phase(t, Phase::ReweightStart);
        let beta_new = solve_next_beta(|b| cache.log_weights(b), beta, config.ess_alpha, n)?;
        let normalized = normalize_log_weights(&cache.log_weights(beta_new))?;
        // mean over (t-1) x N equals the double average since every
        // generation holds N particles
        let log_z = normalized.log_mean;
        observer.phase(t, Phase::ReweightEnd);
        ess_trace.push(ess(&normalized.weights)?);

        let next = if beta_new == 0.0 {
            // still at the prior: fresh i.i.d. draws replace the move step
            evals += n as u64;
            prior_generation(target, n, rng)
        } else {
            let indices = config.resampler.resample(&normalized.weights, n, rng)?;
            let resampled = gather(&store, &indices, beta_new);
            if let Ok(cov) = estimate_covariance(&store.flat_particles(), store.dim(), &normalized.weights) {
                state.set_covariance(&cov);
            }
            let sweep = rwm_sweep(&resampled, target, beta_new, &state, config.mcmc_steps, rng, false);
            evals += sweep.likelihood_evals;
            acceptance_trace.push(sweep.mean_acceptance);
            state = adapt_scale(&state, sweep.mean_acceptance);
            sweep.generation
        };
        store.push(next, log_z)?;
        cache.push_latest(&store)?;
        beta = beta_new;
        log_z_trace.push(log_z);
        beta_schedule.push(beta);

        if beta == 1.0 {
            match config.final_ess_target {
                None => {
                    completed = true;
                    break;
                }
                Some(goal) => {
                    let w = normalize_log_weights(&cache.log_weights(1.0))?;
                    if ess(&w.weights)? >= goal {
                        completed = true;
                        break;
                    }
                }
            }
        }
    }

    Ok(RunResult {
        method: Method::Ps,
        iterations: store.len(),
        completed,
        store,
        log_z_trace,
        beta_schedule,
        ess_trace,
        acceptance_trace,
        likelihood_evals: evals,
    })
}
