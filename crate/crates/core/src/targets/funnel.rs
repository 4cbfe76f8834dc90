//! Hierarchical funnel: `θ ~ N(0, τ²)`, `z_j | θ ~ N(0, e^θ)`, `D_j | z_j ~ N(z_j, σ²)`.
//!
//! Integrating the local parameters out analytically leaves a one-dimensional
//! integral over θ, which gives the evidence and every posterior moment by
//! quadrature.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::{normal_log_pdf, AnalyticSummary, Target, LN_2PI};
use crate::numeric::log_sum_exp;
use crate::rng::RngStream;

pub const FUNNEL_TAU: f64 = 2.0;
pub const FUNNEL_SIGMA: f64 = 0.1;
pub const FUNNEL_LOCALS: usize = 30;
/// Seed that produced `data/funnel_data.txt`.
pub const FUNNEL_DATA_SEED: u64 = 20_240_531;

const DEFAULT_DATA: &str = include_str!("../../data/funnel_data.txt");

/// Draws the dataset at `θ = 0`.
pub fn generate_funnel_data(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, FUNNEL_SIGMA).expect("valid normal");
    (0..FUNNEL_LOCALS)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z + noise.sample(&mut rng)
        })
        .collect()
}

/// Returns `(log_prior, log_likelihood)` at `params = (θ, z_1..z_30)`.
pub fn funnel_bhm_log_density(params: &[f64], data: &[f64]) -> (f64, f64) {
    (funnel_log_prior(params), funnel_log_likelihood(params, data))
}

fn funnel_log_prior(params: &[f64]) -> f64 {
    let theta = params[0];
    let mut lp = normal_log_pdf(theta, 0.0, FUNNEL_TAU * FUNNEL_TAU);
    let inv_var = (-theta).exp();
    for &z in &params[1..] {
        let quad = if z == 0.0 { 0.0 } else { z * z * inv_var };
        lp += -0.5 * (LN_2PI + theta) - 0.5 * quad;
    }
    lp
}

fn funnel_log_likelihood(params: &[f64], data: &[f64]) -> f64 {
    let var = FUNNEL_SIGMA * FUNNEL_SIGMA;
    let norm = -0.5 * (LN_2PI + var.ln());
    params[1..]
        .iter()
        .zip(data)
        .map(|(z, d)| norm - 0.5 * (d - z) * (d - z) / var)
        .sum()
}

#[derive(Debug, Clone)]
pub struct Funnel {
    data: Vec<f64>,
    analytic: AnalyticSummary,
}

impl Funnel {
    pub fn new(data: Vec<f64>) -> Self {
        assert!(!data.is_empty());
        let analytic = quadrature_summary(&data);
        Self { data, analytic }
    }

    pub fn with_default_data() -> Self {
        Self::new(parse_data(DEFAULT_DATA))
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

fn parse_data(text: &str) -> Vec<f64> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse().expect("funnel data file holds one number per line"))
        .collect()
}

fn quadrature_summary(data: &[f64]) -> AnalyticSummary {
    let s2 = FUNNEL_SIGMA * FUNNEL_SIGMA;
    let (lo, hi, n) = (-20.0, 20.0, 200_000usize);
    let h = (hi - lo) / n as f64;
    let grid: Vec<f64> = (0..=n).map(|i| lo + i as f64 * h).collect();
    let log_g: Vec<f64> = grid
        .iter()
        .map(|&t| {
            let var = t.exp() + s2;
            normal_log_pdf(t, 0.0, FUNNEL_TAU * FUNNEL_TAU)
                + data.iter().map(|&d| normal_log_pdf(d, 0.0, var)).sum::<f64>()
        })
        .collect();
    // Trapezoid rule; the integrand is negligible at both ends.
    let mut log_terms = log_g.clone();
    log_terms[0] -= std::f64::consts::LN_2;
    log_terms[n] -= std::f64::consts::LN_2;
    let log_z = log_sum_exp(&log_terms).expect("non-empty grid") + h.ln();
    let weights: Vec<f64> = log_terms
        .iter()
        .map(|lt| (lt + h.ln() - log_z).exp())
        .collect();

    let dim = 1 + data.len();
    let mut mean = vec![0.0; dim];
    let mut second = vec![0.0; dim];
    let mut fourth = vec![0.0; dim];
    for (&t, &w) in grid.iter().zip(&weights) {
        if w == 0.0 {
            continue;
        }
        mean[0] += w * t;
        second[0] += w * t * t;
        fourth[0] += w * t.powi(4);
        let e = t.exp();
        let r = e / (e + s2);
        let v = r * s2;
        for (j, &d) in data.iter().enumerate() {
            let m = r * d;
            mean[1 + j] += w * m;
            second[1 + j] += w * (m * m + v);
            fourth[1 + j] += w * (m.powi(4) + 6.0 * m * m * v + 3.0 * v * v);
        }
    }
    AnalyticSummary {
        log_z,
        mean,
        second_moment: second,
        fourth_moment: fourth,
    }
}

impl Target for Funnel {
    fn name(&self) -> &str {
        "funnel"
    }

    fn dim(&self) -> usize {
        1 + self.data.len()
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        funnel_log_prior(theta)
    }

    fn log_likelihood(&self, theta: &[f64]) -> f64 {
        funnel_log_likelihood(theta, &self.data)
    }

    fn sample_prior(&self, rng: &mut RngStream, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count * self.dim());
        for _ in 0..count {
            let g: f64 = StandardNormal.sample(rng);
            let theta = FUNNEL_TAU * g;
            out.push(theta);
            let sd = (0.5 * theta).exp();
            for _ in 0..self.data.len() {
                let z: f64 = StandardNormal.sample(rng);
                out.push(sd * z);
            }
        }
        out
    }

    fn analytic(&self) -> Option<&AnalyticSummary> {
        Some(&self.analytic)
    }
}
