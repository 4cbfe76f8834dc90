//! Benchmark posteriors behind a common [`Target`] interface.
//!
//! Every prior is normalized, so the evidence reached at `beta = 1` is the
//! marginal likelihood of the model.

mod credit;
mod funnel;
mod gaussian;
mod mixture;
mod rosenbrock;

use std::sync::atomic::{AtomicU64, Ordering};

pub use credit::{
    horseshoe_logreg_log_density, load_german_credit, parse_german_credit, synthetic_german_credit,
    synthetic_german_credit_table, CreditDataset, SparseLogistic,
};
pub use funnel::{funnel_bhm_log_density, generate_funnel_data, Funnel, FUNNEL_DATA_SEED, FUNNEL_LOCALS};
pub use gaussian::ConjugateGaussian;
pub use mixture::GaussianMixture;
pub use rosenbrock::Rosenbrock;

use crate::rng::RngStream;

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Closed-form (or quadrature) posterior summary of a target.
///
/// Moments are coordinatewise `E[θ]`, `E[θ²]` and `E[θ⁴]`; the fourth moment
/// gives the posterior spread of `θ²` needed to normalize second-moment bias.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSummary {
    pub log_z: f64,
    pub mean: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub fourth_moment: Vec<f64>,
}

impl AnalyticSummary {
    pub fn sd(&self) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.second_moment)
            .map(|(m, s)| (s - m * m).max(0.0).sqrt())
            .collect()
    }

    pub fn sd_of_square(&self) -> Vec<f64> {
        self.second_moment
            .iter()
            .zip(&self.fourth_moment)
            .map(|(s, f)| (f - s * s).max(0.0).sqrt())
            .collect()
    }
}

/// A Bayesian model: normalized prior, likelihood and an exact prior sampler.
pub trait Target: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn log_prior(&self, theta: &[f64]) -> f64;

    fn log_likelihood(&self, theta: &[f64]) -> f64;

    /// `count` i.i.d. prior draws, row-major `count x dim`.
    fn sample_prior(&self, rng: &mut RngStream, count: usize) -> Vec<f64>;

    fn analytic(&self) -> Option<&AnalyticSummary> {
        None
    }
}

impl<T: Target + ?Sized> Target for &T {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_prior(&self, theta: &[f64]) -> f64 {
        (**self).log_prior(theta)
    }
    fn log_likelihood(&self, theta: &[f64]) -> f64 {
        (**self).log_likelihood(theta)
    }
    fn sample_prior(&self, rng: &mut RngStream, count: usize) -> Vec<f64> {
        (**self).sample_prior(rng, count)
    }
    fn analytic(&self) -> Option<&AnalyticSummary> {
        (**self).analytic()
    }
}

impl<T: Target + ?Sized> Target for Box<T> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_prior(&self, theta: &[f64]) -> f64 {
        (**self).log_prior(theta)
    }
    fn log_likelihood(&self, theta: &[f64]) -> f64 {
        (**self).log_likelihood(theta)
    }
    fn sample_prior(&self, rng: &mut RngStream, count: usize) -> Vec<f64> {
        (**self).sample_prior(rng, count)
    }
    fn analytic(&self) -> Option<&AnalyticSummary> {
        (**self).analytic()
    }
}

/// Wraps a target and counts every likelihood evaluation.
pub struct CountingTarget<T> {
    inner: T,
    calls: AtomicU64,
}

impl<T: Target> CountingTarget<T> {
    pub fn new(inner: T) -> Self {
        Self {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    pub fn count(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn inner(&self) -> &T {
        &self.inner
    }
}

impl<T: Target> Target for CountingTarget<T> {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn log_prior(&self, theta: &[f64]) -> f64 {
        self.inner.log_prior(theta)
    }
    fn log_likelihood(&self, theta: &[f64]) -> f64 {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.log_likelihood(theta)
    }
    fn sample_prior(&self, rng: &mut RngStream, count: usize) -> Vec<f64> {
        self.inner.sample_prior(rng, count)
    }
    fn analytic(&self) -> Option<&AnalyticSummary> {
        self.inner.analytic()
    }
}

/// Log-density of `N(x | mean, var)`.
#[inline]
pub(crate) fn normal_log_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (LN_2PI + var.ln()) - 0.5 * d * d / var
}

/// Names accepted by [`by_name`].
pub const TARGET_NAMES: [&str; 5] = ["gaussian", "mixture", "rosenbrock", "logistic", "funnel"];

/// Constructs a benchmark target by name. `credit` is only consulted for
/// `logistic`.
pub fn by_name(name: &str, credit: Option<CreditDataset>) -> crate::Result<Box<dyn Target>> {
    Ok(match name {
        "gaussian" => Box::new(ConjugateGaussian::new(4)),
        "mixture" => Box::new(GaussianMixture::new()),
        "rosenbrock" => Box::new(Rosenbrock::new()),
        "funnel" => Box::new(Funnel::with_default_data()),
        "logistic" => {
            let data = match credit {
                Some(d) => d,
                None => synthetic_german_credit(0)?,
            };
            Box::new(SparseLogistic::new(data))
        }
        other => {
            if let Some(d) = other.strip_prefix("gaussian") {
                if let Ok(d) = d.parse::<usize>() {
                    if d >= 1 {
                        return Ok(Box::new(ConjugateGaussian::new(d)));
                    }
                }
            }
            return Err(crate::Error::InvalidConfig(format!("unknown target {other:?}")));
        }
    })
}
