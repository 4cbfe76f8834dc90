//! Log-domain numeric primitives shared by every sampler.
//!
//! Weights are carried as unnormalized log values end to end. Linear-domain
//! probabilities only appear transiently, for resampling and ESS.

use crate::error::{Error, Result};

/// Unnormalized log-domain weights. Entries are finite or `-inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogWeights(Vec<f64>);

impl LogWeights {
    /// Wraps raw log-weights, rejecting NaN and `+inf`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyLogSumExp);
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::NanInput);
        }
        if values.iter().any(|v| *v == f64::INFINITY) {
            return Err(Error::NonFinite("log-weights"));
        }
        Ok(Self(values))
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| !v.is_nan() && *v != f64::INFINITY));
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Shorthand for [`normalize_log_weights`].
    pub fn normalize(&self) -> Result<Normalized> {
        normalize_log_weights(self)
    }
}

/// Normalized weights together with the log of the mean unnormalized weight.
#[derive(Debug, Clone)]
pub struct Normalized {
    pub weights: Vec<f64>,
    pub log_mean: f64,
}

/// `log Σ exp(v)` with the max subtracted first.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyLogSumExp);
    }
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        if v.is_nan() {
            return Err(Error::NanInput);
        }
        if v > max {
            max = v;
        }
    }
    Ok(lse_with_max(values, max))
}

#[inline]
fn lse_with_max(values: &[f64], max: f64) -> f64 {
    if max == f64::NEG_INFINITY || max == f64::INFINITY {
        return max;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// `log(exp(a) + exp(b))`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Normalizes log-weights to a probability vector.
///
/// `log_mean = log_sum_exp(logw) - ln M` is the log of the average unnormalized
/// weight, which is what the evidence updates consume.
pub fn normalize_log_weights(logw: &LogWeights) -> Result<Normalized> {
    let values = logw.values();
    let total = log_sum_exp(values)?;
    if total == f64::NEG_INFINITY {
        return Err(Error::DegenerateWeights);
    }
    let weights = values.iter().map(|&v| (v - total).exp()).collect();
    Ok(Normalized {
        weights,
        log_mean: total - (values.len() as f64).ln(),
    })
}

/// Effective sample size `1 / Σ w²` of a normalized weight vector.
pub fn ess(weights: &[f64]) -> Result<f64> {
    let sq: f64 = weights.iter().map(|w| w * w).sum();
    if sq <= 0.0 || !sq.is_finite() {
        return Err(Error::ZeroWeights);
    }
    Ok(1.0 / sq)
}

/// ESS from unnormalized log-weights via `(Σ w)² / Σ w²`, computed in log space.
pub fn ess_unnormalized(logw: &LogWeights) -> Result<f64> {
    let values = logw.values();
    let lse = log_sum_exp(values)?;
    if lse == f64::NEG_INFINITY {
        return Err(Error::ZeroWeights);
    }
    let doubled: Vec<f64> = values.iter().map(|v| 2.0 * v).collect();
    let lse2 = log_sum_exp(&doubled)?;
    Ok((2.0 * lse - lse2).exp())
}

/// ESS of log-weights, routed through normalization.
pub fn ess_of_log_weights(logw: &LogWeights) -> Result<f64> {
    ess(&normalize_log_weights(logw)?.weights)
}
