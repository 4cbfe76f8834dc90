use rand::Rng;
use statrs::function::erf::erfc;

use super::{AnalyticSummary, Target, LN_2PI};
use crate::numeric::log_add_exp;
use crate::rng::RngStream;

const MODE: f64 = 5.0;
const BOX: f64 = 10.0;

/// Bimodal likelihood `1/3 N(θ|-5·1, I) + 2/3 N(θ|5·1, I)` under a uniform
/// prior on `[-10, 10]^D`.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    dim: usize,
    name: String,
    log_prior_inside: f64,
    analytic: AnalyticSummary,
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

impl GaussianMixture {
    pub fn new() -> Self {
        Self::with_dim(16)
    }

    pub fn with_dim(dim: usize) -> Self {
        assert!(dim >= 1);
        let d = dim as f64;
        // Both modes sit at the same distance from the walls, so each keeps
        // the same per-coordinate mass inside the box.
        let inside = std_normal_cdf(BOX - MODE) - std_normal_cdf(-BOX - MODE);
        let log_z = -d * (2.0 * BOX).ln() + d * inside.ln();
        let mean = (-MODE + 2.0 * MODE) / 3.0;
        let second = MODE * MODE + 1.0;
        let fourth = MODE.powi(4) + 6.0 * MODE * MODE + 3.0;
        Self {
            dim,
            name: if dim == 16 {
                "mixture".to_string()
            } else {
                format!("mixture{dim}")
            },
            log_prior_inside: -d * (2.0 * BOX).ln(),
            analytic: AnalyticSummary {
                log_z,
                mean: vec![mean; dim],
                second_moment: vec![second; dim],
                fourth_moment: vec![fourth; dim],
            },
        }
    }
}

impl Default for GaussianMixture {
    fn default() -> Self {
        Self::new()
    }
}

impl Target for GaussianMixture {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        if theta.iter().all(|x| (-BOX..=BOX).contains(x)) {
            self.log_prior_inside
        } else {
            f64::NEG_INFINITY
        }
    }

    fn log_likelihood(&self, theta: &[f64]) -> f64 {
        let (mut lo, mut hi) = (0.0, 0.0);
        for &x in theta {
            lo += (x + MODE) * (x + MODE);
            hi += (x - MODE) * (x - MODE);
        }
        let norm = -0.5 * self.dim as f64 * LN_2PI;
        let lo = (1.0f64 / 3.0).ln() + norm - 0.5 * lo;
        let hi = (2.0f64 / 3.0).ln() + norm - 0.5 * hi;
        log_add_exp(lo, hi)
    }

    fn sample_prior(&self, rng: &mut RngStream, count: usize) -> Vec<f64> {
        (0..count * self.dim)
            .map(|_| rng.random_range(-BOX..BOX))
            .collect()
    }

    fn analytic(&self) -> Option<&AnalyticSummary> {
        Some(&self.analytic)
    }
}
