use rand_distr::{Distribution, Normal};

use super::{normal_log_pdf, Target};
use crate::rng::RngStream;

const PRIOR_VAR: f64 = 25.0;

/// Paired Rosenbrock log-likelihood
/// `-Σ_i [10 (θ_{2i-1}² - θ_{2i})² + (θ_{2i-1} - 1)²]` under a `N(0, 25 I)` prior.
#[derive(Debug, Clone)]
pub struct Rosenbrock {
    dim: usize,
}

impl Rosenbrock {
    pub fn new() -> Self {
        Self::with_dim(16)
    }

    pub fn with_dim(dim: usize) -> Self {
        assert!(dim >= 2 && dim % 2 == 0, "dimension must be even");
        Self { dim }
    }
}

impl Default for Rosenbrock {
    fn default() -> Self {
        Self::new()
    }
}

impl Target for Rosenbrock {
    fn name(&self) -> &str {
        "rosenbrock"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        theta.iter().map(|&x| normal_log_pdf(x, 0.0, PRIOR_VAR)).sum()
    }

    fn log_likelihood(&self, theta: &[f64]) -> f64 {
        -theta
            .chunks_exact(2)
            .map(|p| {
                let a = p[0] * p[0] - p[1];
                let b = p[0] - 1.0;
                10.0 * a * a + b * b
            })
            .sum::<f64>()
    }

    fn sample_prior(&self, rng: &mut RngStream, count: usize) -> Vec<f64> {
        let normal = Normal::new(0.0, PRIOR_VAR.sqrt()).expect("valid normal");
        (0..count * self.dim).map(|_| normal.sample(rng)).collect()
    }
}
