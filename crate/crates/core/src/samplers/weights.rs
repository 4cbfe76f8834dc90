//! Importance weights for standard and persistent reweighting.
//!
//! Both use cached log-likelihoods only; nothing here touches a target.

use crate::ensemble::{Generation, PersistentStore};
use crate::error::{Error, Result};
use crate::numeric::{log_add_exp, LogWeights};

/// `β · log L`, with `0 · (-inf) = 0`.
#[inline]
pub fn tempered(beta: f64, log_like: f64) -> f64 {
    if beta == 0.0 {
        0.0
    } else {
        beta * log_like
    }
}

/// `(β_new - β) · log L(θ_i)` for the particles of one generation.
pub fn smc_log_weights(generation: &Generation, beta_new: f64) -> LogWeights {
    let step = beta_new - generation.beta();
    debug_assert!(step >= 0.0, "beta must not decrease");
    LogWeights::from_vec_unchecked(
        generation
            .log_like()
            .iter()
            .map(|&ll| tempered(step, ll))
            .collect(),
    )
}

fn check_history(store: &PersistentStore) -> Result<()> {
    if store.is_empty() {
        return Err(Error::MissingEvidence);
    }
    if store.log_z().iter().any(|z| !z.is_finite()) {
        return Err(Error::CorruptEvidenceHistory);
    }
    Ok(())
}

/// Log of the mixture denominator `(1/S) Σ_s L^{β_s} / Ẑ_s` for one cached
/// log-likelihood, summed over every generation in the store.
fn mixture_log_denominator(log_like: f64, betas: &[f64], log_z: &[f64], terms: &mut Vec<f64>) -> f64 {
    terms.clear();
    terms.extend(
        betas
            .iter()
            .zip(log_z)
            .map(|(&b, &z)| tempered(b, log_like) - z),
    );
    let lse = crate::numeric::log_sum_exp(terms).expect("non-empty history");
    lse - (betas.len() as f64).ln()
}

/// Persistent weights for every stored particle, flattened `(t', i)`:
/// `β_new · log L − log[(1/S) Σ_s exp(β_s log L − log Ẑ_s)]`.
pub fn ps_log_weights(store: &PersistentStore, beta_new: f64) -> Result<LogWeights> {
    check_history(store)?;
    let betas = store.betas();
    let log_z = store.log_z();
    let mut terms = Vec::with_capacity(betas.len());
    let mut out = Vec::with_capacity(store.total_particles());
    for g in store.generations() {
        for &ll in g.log_like() {
            let denom = mixture_log_denominator(ll, betas, log_z, &mut terms);
            out.push(tempered(beta_new, ll) - denom);
        }
    }
    LogWeights::new(out).map_err(|_| Error::CorruptEvidenceHistory)
}

/// Per-particle running mixture sums, updated as generations are appended,
/// so each iteration costs `O(M)` instead of `O(M · t)`.
#[derive(Debug, Clone, Default)]
pub struct MixtureCache {
    log_like: Vec<f64>,
    /// `log Σ_s exp(β_s log L − log Ẑ_s)` for each stored particle.
    log_sums: Vec<f64>,
    components: usize,
}

impl MixtureCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers the newest generation of `store` (which must be the only
    /// one not yet seen by the cache).
    pub fn push_latest(&mut self, store: &PersistentStore) -> Result<()> {
        check_history(store)?;
        assert_eq!(store.len(), self.components + 1, "cache out of sync with store");
        let s = store.len() - 1;
        let beta_s = store.betas()[s];
        let log_z_s = store.log_z()[s];
        for (sum, &ll) in self.log_sums.iter_mut().zip(&self.log_like) {
            *sum = log_add_exp(*sum, tempered(beta_s, ll) - log_z_s);
        }
        let latest = &store.generations()[s];
        let mut terms = Vec::with_capacity(store.len());
        for &ll in latest.log_like() {
            terms.clear();
            terms.extend(
                store
                    .betas()
                    .iter()
                    .zip(store.log_z())
                    .map(|(&b, &z)| tempered(b, ll) - z),
            );
            self.log_sums
                .push(crate::numeric::log_sum_exp(&terms).expect("non-empty history"));
            self.log_like.push(ll);
        }
        self.components += 1;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.log_like.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_like.is_empty()
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// Persistent log-weights at `beta_new` over every cached particle.
    pub fn log_weights(&self, beta_new: f64) -> LogWeights {
        let ln_s = (self.components as f64).ln();
        LogWeights::from_vec_unchecked(
            self.log_like
                .iter()
                .zip(&self.log_sums)
                .map(|(&ll, &sum)| tempered(beta_new, ll) - (sum - ln_s))
                .collect(),
        )
    }
}
