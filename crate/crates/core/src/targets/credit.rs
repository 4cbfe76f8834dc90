//! German-credit sparse logistic regression with a horseshoe prior.
//!
//! Parameter layout (51 values): `[ln τ, β_1..β_25, ln λ_1..ln λ_25]`.
//! τ and λ_j live on the log scale so a random walk never meets a boundary;
//! their log-prior carries the Jacobian `+ ln x`.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::{Target, LN_2PI};
use crate::error::{Error, Result};
use crate::rng::RngStream;

pub const CREDIT_ROWS: usize = 1000;
pub const CREDIT_COVARIATES: usize = 24;
/// Covariates plus intercept.
pub const CREDIT_FEATURES: usize = CREDIT_COVARIATES + 1;

/// Standardized design matrix (intercept in column 0) and binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CreditDataset {
    /// Row-major `rows x 25`.
    design: Vec<f64>,
    labels: Vec<f64>,
}

impl CreditDataset {
    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn features(&self) -> usize {
        CREDIT_FEATURES
    }

    pub fn design(&self) -> &[f64] {
        &self.design
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.design[i * CREDIT_FEATURES..(i + 1) * CREDIT_FEATURES]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Standardizes raw rows of 24 covariates plus a `{1, 2}` label.
    pub fn from_raw(raw: &[Vec<f64>]) -> Result<Self> {
        if raw.len() != CREDIT_ROWS {
            return Err(Error::Shape {
                expected: format!("{CREDIT_ROWS} rows x {} columns", CREDIT_COVARIATES + 1),
                found: format!("{} rows", raw.len()),
            });
        }
        let n = raw.len() as f64;
        let mut means = [0.0; CREDIT_COVARIATES];
        let mut sds = [0.0; CREDIT_COVARIATES];
        for j in 0..CREDIT_COVARIATES {
            let mean = raw.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = raw.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            if var <= 0.0 {
                return Err(Error::ConstantColumn(j));
            }
            means[j] = mean;
            sds[j] = var.sqrt();
        }
        let mut design = Vec::with_capacity(raw.len() * CREDIT_FEATURES);
        let mut labels = Vec::with_capacity(raw.len());
        for (i, r) in raw.iter().enumerate() {
            design.push(1.0);
            for j in 0..CREDIT_COVARIATES {
                design.push((r[j] - means[j]) / sds[j]);
            }
            labels.push(match r[CREDIT_COVARIATES] {
                x if x == 1.0 => 1.0,
                x if x == 2.0 => 0.0,
                x => {
                    return Err(Error::Parse {
                        row: i + 1,
                        token: format!("label {x}"),
                    })
                }
            });
        }
        Ok(Self { design, labels })
    }
}

/// Parses the UCI numeric table: 1000 lines of 25 whitespace-separated numbers.
pub fn parse_german_credit(text: &str) -> Result<CreditDataset> {
    let mut raw = Vec::with_capacity(CREDIT_ROWS);
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| Error::Parse {
                    row: lineno + 1,
                    token: tok.to_string(),
                })
            })
            .collect::<Result<_>>()?;
        if row.len() != CREDIT_COVARIATES + 1 {
            return Err(Error::Shape {
                expected: format!("{} columns per row", CREDIT_COVARIATES + 1),
                found: format!("{} columns at row {}", row.len(), lineno + 1),
            });
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parse {
                row: lineno + 1,
                token: line.to_string(),
            });
        }
        raw.push(row);
    }
    CreditDataset::from_raw(&raw)
}

pub fn load_german_credit(path: impl AsRef<Path>) -> Result<CreditDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_german_credit(&text)
}

/// A synthetic table in the UCI numeric layout, for machines without the
/// real file. Labels follow a sparse logistic model over a few covariates.
pub fn synthetic_german_credit_table(seed: u64) -> String {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    // (low, high) integer ranges loosely shaped like the UCI columns
    let ranges: [(i64, i64); CREDIT_COVARIATES] = [
        (1, 4), (4, 72), (0, 4), (2, 184), (1, 5), (1, 5), (1, 4), (1, 4),
        (1, 3), (1, 4), (19, 75), (1, 3), (1, 4), (1, 2), (1, 2), (0, 1),
        (0, 1), (0, 1), (0, 1), (0, 1), (0, 1), (0, 1), (0, 1), (0, 1),
    ];
    let active = [(0usize, -0.9), (1, 0.5), (2, -0.6), (10, -0.3)];
    let mut out = String::with_capacity(CREDIT_ROWS * 80);
    for _ in 0..CREDIT_ROWS {
        let row: Vec<i64> = ranges
            .iter()
            .map(|&(lo, hi)| rng.random_range(lo..=hi))
            .collect();
        let mut eta = 0.9;
        for &(j, w) in &active {
            let (lo, hi) = ranges[j];
            let mid = (lo + hi) as f64 / 2.0;
            let half = ((hi - lo) as f64 / 2.0).max(0.5);
            eta += w * (row[j] as f64 - mid) / half;
        }
        let p_good = 1.0 / (1.0 + (-eta).exp());
        let label = if rng.random::<f64>() < p_good { 1 } else { 2 };
        for v in &row {
            let _ = write!(out, "{v:4}");
        }
        let _ = writeln!(out, "{label:4}");
    }
    out
}

pub fn synthetic_german_credit(seed: u64) -> Result<CreditDataset> {
    parse_german_credit(&synthetic_german_credit_table(seed))
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `Gamma(x | 1/2, rate 1/2)` evaluated at `x = e^u`, plus the Jacobian `u`.
#[inline]
fn log_half_gamma_of_log(u: f64) -> f64 {
    // 0.5 ln 0.5 - lnΓ(0.5) = -0.5 ln 2 - 0.5 ln π = -0.5 ln(2π)
    -0.5 * LN_2PI + 0.5 * u - 0.5 * u.exp()
}

/// Returns `(log_prior, log_likelihood)` for the horseshoe logistic model.
pub fn horseshoe_logreg_log_density(params: &[f64], data: &CreditDataset) -> (f64, f64) {
    (horseshoe_log_prior(params), horseshoe_log_likelihood(params, data))
}

fn horseshoe_log_prior(params: &[f64]) -> f64 {
    let p = CREDIT_FEATURES;
    let mut lp = log_half_gamma_of_log(params[0]);
    for j in 0..p {
        let b = params[1 + j];
        lp += -0.5 * LN_2PI - 0.5 * b * b;
        lp += log_half_gamma_of_log(params[1 + p + j]);
    }
    lp
}

fn horseshoe_log_likelihood(params: &[f64], data: &CreditDataset) -> f64 {
    let p = CREDIT_FEATURES;
    let tau = params[0].exp();
    let mut coef = [0.0; CREDIT_FEATURES];
    for j in 0..p {
        coef[j] = tau * params[1 + p + j].exp() * params[1 + j];
    }
    data.design
        .chunks_exact(p)
        .zip(&data.labels)
        .map(|(x, &y)| {
            let m: f64 = x.iter().zip(&coef).map(|(a, b)| a * b).sum();
            y * m - softplus(m)
        })
        .sum()
}

/// Horseshoe-prior logistic regression target on a credit dataset.
#[derive(Debug, Clone)]
pub struct SparseLogistic {
    data: CreditDataset,
}

impl SparseLogistic {
    pub fn new(data: CreditDataset) -> Self {
        Self { data }
    }

    pub fn data(&self) -> &CreditDataset {
        &self.data
    }
}

impl Target for SparseLogistic {
    fn name(&self) -> &str {
        "logistic"
    }

    fn dim(&self) -> usize {
        1 + 2 * CREDIT_FEATURES
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        horseshoe_log_prior(theta)
    }

    fn log_likelihood(&self, theta: &[f64]) -> f64 {
        horseshoe_log_likelihood(theta, &self.data)
    }

    fn sample_prior(&self, rng: &mut RngStream, count: usize) -> Vec<f64> {
        let gamma = Gamma::new(0.5, 2.0).expect("valid gamma");
        let p = CREDIT_FEATURES;
        let mut out = Vec::with_capacity(count * self.dim());
        for _ in 0..count {
            out.push(positive_log(gamma.sample(rng)));
            for _ in 0..p {
                out.push(StandardNormal.sample(rng));
            }
            for _ in 0..p {
                out.push(positive_log(gamma.sample(rng)));
            }
        }
        out
    }
}

// Gamma(1/2) draws can underflow to zero; clamp to the smallest positive value.
fn positive_log(x: f64) -> f64 {
    x.max(f64::MIN_POSITIVE).ln()
}
