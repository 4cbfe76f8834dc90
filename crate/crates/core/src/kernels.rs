//! Random-walk Metropolis moves at a fixed temperature.
//!
//! The proposal covariance comes from the (weighted) ensemble and is frozen
//! for the duration of a sweep; a single global scale is tuned between
//! iterations by Robbins-Monro toward 23.4% acceptance.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::ensemble::Generation;
use crate::error::{Error, Result};
use crate::rng::{purpose, RngStream};
use crate::targets::Target;

pub const TARGET_ACCEPTANCE: f64 = 0.234;
const ADAPTATION_EXPONENT: f64 = 0.6;
const SCALE_MIN: f64 = 1e-8;
const SCALE_MAX: f64 = 1e3;
const REGULARIZATION: f64 = 1e-6;
const REGULARIZATION_FLOOR: f64 = 1e-12;
const FACTORIZATION_RETRIES: usize = 3;

/// Ensemble covariance and its lower Cholesky factor.
#[derive(Debug, Clone)]
pub struct ProposalCovariance {
    pub covariance: DMatrix<f64>,
    pub cholesky: DMatrix<f64>,
}

/// Weighted covariance `Σ w (x - m)(x - m)ᵀ` of row-major `particles`,
/// regularized on the diagonal and factorized.
pub fn estimate_covariance(particles: &[f64], dim: usize, weights: &[f64]) -> Result<ProposalCovariance> {
    let m = weights.len();
    if m < 2 || particles.len() != m * dim {
        return Err(Error::Shape {
            expected: format!("at least 2 particles of dimension {dim}"),
            found: format!("{m} weights, {} values", particles.len()),
        });
    }
    if particles.iter().any(|x| !x.is_finite()) || weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("ensemble"));
    }
    let mut mean = vec![0.0; dim];
    for (x, &w) in particles.chunks_exact(dim).zip(weights) {
        for (acc, xi) in mean.iter_mut().zip(x) {
            *acc += w * xi;
        }
    }
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    let mut centered = vec![0.0; dim];
    for (x, &w) in particles.chunks_exact(dim).zip(weights) {
        if w == 0.0 {
            continue;
        }
        for ((c, xi), mi) in centered.iter_mut().zip(x).zip(&mean) {
            *c = xi - mi;
        }
        for a in 0..dim {
            let wa = w * centered[a];
            for b in 0..=a {
                cov[(a, b)] += wa * centered[b];
            }
        }
    }
    for a in 0..dim {
        for b in 0..a {
            cov[(b, a)] = cov[(a, b)];
        }
    }
    if (0..dim).all(|a| cov[(a, a)] <= 0.0) {
        return Err(Error::DegenerateEnsemble);
    }
    let mut eps = REGULARIZATION;
    for _ in 0..=FACTORIZATION_RETRIES {
        let mut reg = cov.clone();
        for a in 0..dim {
            reg[(a, a)] += (eps * cov[(a, a)]).max(REGULARIZATION_FLOOR);
        }
        if let Some(ch) = reg.clone().cholesky() {
            let l = ch.l();
            if l.iter().all(|v| v.is_finite()) {
                return Ok(ProposalCovariance {
                    covariance: reg,
                    cholesky: l,
                });
            }
        }
        eps *= 10.0;
    }
    Err(Error::DegenerateEnsemble)
}

/// Adaptive state of the random-walk kernel.
#[derive(Debug, Clone)]
pub struct RwmState {
    dim: usize,
    /// Row-major lower-triangular factor.
    chol: Vec<f64>,
    global_scale: f64,
    adaptation_step: u64,
    target_acceptance: f64,
}

impl RwmState {
    /// Identity covariance with the classic `2.38 / sqrt(D)` scale.
    pub fn new(dim: usize) -> Self {
        let mut chol = vec![0.0; dim * dim];
        for a in 0..dim {
            chol[a * dim + a] = 1.0;
        }
        Self {
            dim,
            chol,
            global_scale: 2.38 / (dim as f64).sqrt(),
            adaptation_step: 0,
            target_acceptance: TARGET_ACCEPTANCE,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        assert!(scale > 0.0);
        self.global_scale = scale;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn global_scale(&self) -> f64 {
        self.global_scale
    }

    pub fn adaptation_step(&self) -> u64 {
        self.adaptation_step
    }

    pub fn target_acceptance(&self) -> f64 {
        self.target_acceptance
    }

    pub fn cholesky(&self) -> &[f64] {
        &self.chol
    }

    /// Installs a new proposal factor.
    pub fn set_covariance(&mut self, cov: &ProposalCovariance) {
        assert_eq!(cov.cholesky.nrows(), self.dim);
        for a in 0..self.dim {
            for b in 0..self.dim {
                self.chol[a * self.dim + b] = if b <= a { cov.cholesky[(a, b)] } else { 0.0 };
            }
        }
    }
}

/// One Robbins-Monro step on `log(global_scale)` with gain `n^-0.6`.
pub fn adapt_scale(state: &RwmState, observed_acceptance: f64) -> RwmState {
    let mut next = state.clone();
    next.adaptation_step += 1;
    let gain = (next.adaptation_step as f64).powf(-ADAPTATION_EXPONENT);
    let log_scale = state.global_scale.ln() + gain * (observed_acceptance - state.target_acceptance);
    next.global_scale = log_scale.exp().clamp(SCALE_MIN, SCALE_MAX);
    next
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub generation: Generation,
    pub mean_acceptance: f64,
    pub accepted: u64,
    pub proposals: u64,
    pub likelihood_evals: u64,
    /// Every post-step state, chain-major (`i * k + step`), when requested.
    pub path: Option<Generation>,
}

#[inline]
fn tempered(beta: f64, log_like: f64) -> f64 {
    if beta == 0.0 {
        0.0
    } else {
        beta * log_like
    }
}

struct ChainOutcome {
    state: Vec<f64>,
    log_like: f64,
    accepted: u64,
    evals: u64,
    path: Vec<f64>,
    path_ll: Vec<f64>,
}

/// Advances every particle `steps` Metropolis steps targeting
/// `log π(θ) + β log L(θ)`.
///
/// Particle `i` draws from its own substream, so results do not depend on how
/// the work is split across threads. Proposals outside the prior support are
/// rejected without a likelihood evaluation.
pub fn rwm_sweep<T: Target + ?Sized>(
    ensemble: &Generation,
    target: &T,
    beta: f64,
    state: &RwmState,
    steps: usize,
    rng: &mut RngStream,
    record_path: bool,
) -> SweepOutcome {
    assert!(steps >= 1, "steps must be positive");
    assert!((0.0..=1.0).contains(&beta));
    let dim = ensemble.dim();
    assert_eq!(dim, state.dim);
    let key = rng.draw_key();
    let n = ensemble.len();

    let chains: Vec<ChainOutcome> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut stream = RngStream::substream(key, i as u32, purpose::SWEEP);
            run_chain(
                ensemble.particle(i),
                ensemble.log_like()[i],
                target,
                beta,
                state,
                steps,
                &mut stream,
                record_path,
            )
        })
        .collect();

    let mut particles = Vec::with_capacity(n * dim);
    let mut log_like = Vec::with_capacity(n);
    let (mut accepted, mut evals) = (0, 0);
    let mut path = record_path.then(|| (Vec::with_capacity(n * steps * dim), Vec::with_capacity(n * steps)));
    for c in chains {
        particles.extend_from_slice(&c.state);
        log_like.push(c.log_like);
        accepted += c.accepted;
        evals += c.evals;
        if let Some((p, l)) = path.as_mut() {
            p.extend_from_slice(&c.path);
            l.extend_from_slice(&c.path_ll);
        }
    }
    let proposals = (n * steps) as u64;
    SweepOutcome {
        generation: Generation::new(dim, particles, log_like, beta).expect("sweep keeps shape"),
        mean_acceptance: accepted as f64 / proposals as f64,
        accepted,
        proposals,
        likelihood_evals: evals,
        path: path.map(|(p, l)| Generation::new(dim, p, l, beta).expect("path shape")),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_chain<T: Target + ?Sized>(
    start: &[f64],
    start_ll: f64,
    target: &T,
    beta: f64,
    state: &RwmState,
    steps: usize,
    rng: &mut RngStream,
    record_path: bool,
) -> ChainOutcome {
    let dim = start.len();
    let mut current = start.to_vec();
    let mut current_ll = start_ll;
    let mut current_lp = target.log_prior(&current);
    let mut proposal = vec![0.0; dim];
    let mut noise = vec![0.0; dim];
    let (mut accepted, mut evals) = (0, 0);
    let mut path = Vec::with_capacity(if record_path { steps * dim } else { 0 });
    let mut path_ll = Vec::with_capacity(if record_path { steps } else { 0 });
    let scale = state.global_scale;

    for _ in 0..steps {
        for z in noise.iter_mut() {
            *z = rng.sample(StandardNormal);
        }
        for a in 0..dim {
            let row = &state.chol[a * dim..a * dim + a + 1];
            let step: f64 = row.iter().zip(&noise).map(|(l, z)| l * z).sum();
            proposal[a] = current[a] + scale * step;
        }
        let u: f64 = rng.random();
        let lp = target.log_prior(&proposal);
        if lp != f64::NEG_INFINITY && !lp.is_nan() {
            evals += 1;
            let mut ll = target.log_likelihood(&proposal);
            if ll.is_nan() {
                ll = f64::NEG_INFINITY;
            }
            let delta = (lp + tempered(beta, ll)) - (current_lp + tempered(beta, current_ll));
            if u.ln() < delta {
                current.copy_from_slice(&proposal);
                current_ll = ll;
                current_lp = lp;
                accepted += 1;
            }
        }
        if record_path {
            path.extend_from_slice(&current);
            path_ll.push(current_ll);
        }
    }
    ChainOutcome {
        state: current,
        log_like: current_ll,
        accepted,
        evals,
        path,
        path_ll,
    }
}
