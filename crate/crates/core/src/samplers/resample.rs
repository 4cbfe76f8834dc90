//! Multinomial and systematic resampling from a pool of `M` weighted particles.

use rand::Rng;

use crate::error::{Error, Result};

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resampler {
    Multinomial,
    #[default]
    Systematic,
}

impl Resampler {
    pub fn resample<R: Rng + ?Sized>(self, weights: &[f64], count: usize, rng: &mut R) -> Result<Vec<usize>> {
        match self {
            Resampler::Multinomial => resample_multinomial(weights, count, rng),
            Resampler::Systematic => resample_systematic(weights, count, rng),
        }
    }
}

fn cumulative(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::NotNormalized { sum: f64::NAN });
    }
    let mut acc = 0.0;
    let cdf: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    if (acc - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized { sum: acc });
    }
    Ok(cdf)
}

fn last_positive(weights: &[f64]) -> usize {
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// i.i.d. categorical draws.
pub fn resample_multinomial<R: Rng + ?Sized>(weights: &[f64], count: usize, rng: &mut R) -> Result<Vec<usize>> {
    let cdf = cumulative(weights)?;
    let total = *cdf.last().expect("non-empty");
    let fallback = last_positive(weights);
    Ok((0..count)
        .map(|_| {
            let u = rng.random::<f64>() * total;
            let i = cdf.partition_point(|&c| c <= u);
            if i >= weights.len() || weights[i] == 0.0 {
                fallback.min(i)
            } else {
                i
            }
        })
        .collect())
}

/// One uniform offset, strata `(u + j) / count` against the cumulative weights.
pub fn resample_systematic<R: Rng + ?Sized>(weights: &[f64], count: usize, rng: &mut R) -> Result<Vec<usize>> {
    let cdf = cumulative(weights)?;
    let total = *cdf.last().expect("non-empty");
    let fallback = last_positive(weights);
    let u: f64 = rng.random();
    let mut out = Vec::with_capacity(count);
    let mut i = 0;
    for j in 0..count {
        let pos = (u + j as f64) / count as f64 * total;
        while i < cdf.len() && cdf[i] <= pos {
            i += 1;
        }
        out.push(if i >= cdf.len() { fallback } else { i });
    }
    Ok(out)
}
