use rand_distr::{Distribution, StandardNormal};

use super::{AnalyticSummary, Target, LN_2PI};
use crate::rng::RngStream;

/// Prior `N(0, I_d)` with likelihood `N(θ | 0, I_d)`.
///
/// The posterior is `N(0, I_d / 2)` and `Z = N(0 | 0, 2 I_d)`.
#[derive(Debug, Clone)]
pub struct ConjugateGaussian {
    dim: usize,
    name: String,
    analytic: AnalyticSummary,
}

impl ConjugateGaussian {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        let analytic = AnalyticSummary {
            log_z: -(dim as f64) / 2.0 * (4.0 * std::f64::consts::PI).ln(),
            mean: vec![0.0; dim],
            second_moment: vec![0.5; dim],
            // 3 σ⁴ with σ² = 1/2
            fourth_moment: vec![0.75; dim],
        };
        Self {
            dim,
            name: format!("gaussian{dim}"),
            analytic,
        }
    }
}

fn std_normal_log_density(theta: &[f64]) -> f64 {
    let sq: f64 = theta.iter().map(|x| x * x).sum();
    -0.5 * (theta.len() as f64 * LN_2PI + sq)
}

impl Target for ConjugateGaussian {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        std_normal_log_density(theta)
    }

    fn log_likelihood(&self, theta: &[f64]) -> f64 {
        std_normal_log_density(theta)
    }

    fn sample_prior(&self, rng: &mut RngStream, count: usize) -> Vec<f64> {
        (0..count * self.dim).map(|_| StandardNormal.sample(rng)).collect()
    }

    fn analytic(&self) -> Option<&AnalyticSummary> {
        Some(&self.analytic)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_evidence() {
        assert!((ConjugateGaussian::new(2).analytic.log_z - (-2.531_024_246_969_290_7)).abs() < 1e-12);
        let four = ConjugateGaussian::new(4).analytic.log_z;
        assert!((four + 2.0 * (4.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
        let one = ConjugateGaussian::new(1);
        assert_eq!(one.analytic.sd(), vec![0.5f64.sqrt()]);
    }

    #[test]
    fn evidence_by_quadrature() {
        // Z for d = 1 is ∫ N(x|0,1)² dx; trapezoid on a fine grid.
        let t = ConjugateGaussian::new(1);
        let h = 1e-3;
        let z: f64 = (-20_000..=20_000)
            .map(|i| {
                let x = [i as f64 * h];
                (t.log_prior(&x) + t.log_likelihood(&x)).exp() * h
            })
            .sum();
        assert!((z.ln() - t.analytic.log_z).abs() < 1e-10);
    }
}
