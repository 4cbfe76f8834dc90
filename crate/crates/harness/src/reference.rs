//! Reference evidence and posterior moments for scoring replicates.

use std::path::Path;

use persistent_sampling::rng::make_stream;
use persistent_sampling::samplers::{run, Method, RunConfig};
use persistent_sampling::targets::Target;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ReferenceSettings;
use crate::error::{io_err, HarnessError, Result};

/// Stream tag for reference runs, distinct from every method tag.
pub const REFERENCE_TAG: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSource {
    Analytic,
    Runs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceValues {
    pub target: String,
    pub source: ReferenceSource,
    pub log_z: f64,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub second: Vec<f64>,
    /// Posterior standard deviation of `θ²`, per coordinate.
    pub sd_second: Vec<f64>,
    pub runs: usize,
    /// Mean evidence of the reference runs, when any were made.
    pub run_log_z: Option<f64>,
}

impl ReferenceValues {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(io_err(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Ok(serde_json::from_str(&text)?)
    }
}

struct Pooled {
    log_z: f64,
    mean: Vec<f64>,
    second: Vec<f64>,
    fourth: Vec<f64>,
}

fn pooled_runs(target: &dyn Target, settings: &ReferenceSettings, root_seed: u64) -> Result<Pooled> {
    let config = RunConfig::new(Method::Smc, settings.n_particles, settings.alpha, settings.mcmc_steps);
    let results = (0..settings.runs as u32)
        .into_par_iter()
        .map(|r| run(target, &config, &mut make_stream(root_seed, r, REFERENCE_TAG)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if let Some(bad) = results.iter().find(|r| !r.completed) {
        return Err(HarnessError::Calibration(format!(
            "reference run stopped at beta {} after {} iterations",
            bad.beta_schedule.last().copied().unwrap_or(0.0),
            bad.iterations
        )));
    }
    let dim = target.dim();
    let mut mean = vec![0.0; dim];
    let mut second = vec![0.0; dim];
    let mut fourth = vec![0.0; dim];
    let mut count = 0usize;
    for r in &results {
        let last = r.store.last().expect("completed run has generations");
        for (x, _) in last.iter() {
            for d in 0..dim {
                let sq = x[d] * x[d];
                mean[d] += x[d];
                second[d] += sq;
                fourth[d] += sq * sq;
            }
            count += 1;
        }
    }
    for v in mean.iter_mut().chain(second.iter_mut()).chain(fourth.iter_mut()) {
        *v /= count as f64;
    }
    let log_z = results.iter().map(|r| r.log_z()).sum::<f64>() / results.len() as f64;
    Ok(Pooled {
        log_z,
        mean,
        second,
        fourth,
    })
}

fn spread(mean: &[f64], second: &[f64]) -> Vec<f64> {
    mean.iter().zip(second).map(|(m, s)| (s - m * m).max(0.0).sqrt()).collect()
}

/// Reference values for `target`. Closed-form summaries take precedence;
/// reference SMC runs are made for other targets, or as a self-check when
/// `settings.self_check` is set.
pub fn run_reference(target: &dyn Target, settings: &ReferenceSettings, root_seed: u64) -> Result<ReferenceValues> {
    if let Some(a) = target.analytic() {
        let run_log_z = if settings.self_check && settings.runs > 0 {
            Some(pooled_runs(target, settings, root_seed)?.log_z)
        } else {
            None
        };
        return Ok(ReferenceValues {
            target: target.name().to_string(),
            source: ReferenceSource::Analytic,
            log_z: a.log_z,
            mean: a.mean.clone(),
            sd: a.sd(),
            second: a.second_moment.clone(),
            sd_second: a.sd_of_square(),
            runs: if run_log_z.is_some() { settings.runs } else { 0 },
            run_log_z,
        });
    }
    if settings.runs == 0 {
        return Err(HarnessError::Config(format!(
            "target {} has no closed form and reference runs are disabled",
            target.name()
        )));
    }
    let p = pooled_runs(target, settings, root_seed)?;
    Ok(ReferenceValues {
        target: target.name().to_string(),
        source: ReferenceSource::Runs,
        log_z: p.log_z,
        sd: spread(&p.mean, &p.second),
        sd_second: spread(&p.second, &p.fourth),
        mean: p.mean,
        second: p.second,
        runs: settings.runs,
        run_log_z: Some(p.log_z),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use persistent_sampling::targets::{ConjugateGaussian, GaussianMixture, Rosenbrock};

    fn small(runs: usize) -> ReferenceSettings {
        ReferenceSettings {
            runs,
            n_particles: 1024,
            alpha: 0.99,
            mcmc_steps: 10,
            self_check: true,
        }
    }

    #[test]
    fn gaussian_self_check_agrees_with_closed_form() {
        let t = ConjugateGaussian::new(4);
        let r = run_reference(&t, &small(8), 1).unwrap();
        assert_eq!(r.source, ReferenceSource::Analytic);
        assert!((r.log_z + 2.0 * (4.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
        assert!((r.run_log_z.unwrap() - r.log_z).abs() < 0.02);
        assert!(r.sd.iter().all(|&s| (s - 0.5f64.sqrt()).abs() < 1e-12));
    }

    #[test]
    fn mixture_uses_closed_form() {
        let r = run_reference(&GaussianMixture::new(), &ReferenceSettings::default(), 0).unwrap();
        assert!((r.log_z + 47.9309).abs() < 0.05);
        assert_eq!(r.runs, 0);
        assert!(r.sd.iter().chain(&r.sd_second).all(|&s| s > 0.0));
    }

    #[test]
    fn run_based_reference_has_positive_spread() {
        let mut s = small(2);
        s.n_particles = 256;
        let r = run_reference(&Rosenbrock::new(), &s, 0).unwrap();
        assert_eq!(r.source, ReferenceSource::Runs);
        assert!(r.log_z.is_finite());
        assert_eq!(r.mean.len(), 16);
        assert!(r.sd.iter().chain(&r.sd_second).all(|&s| s > 0.0));
    }

    #[test]
    fn json_round_trip() {
        let r = run_reference(&ConjugateGaussian::new(2), &ReferenceSettings::default(), 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("reference.json");
        r.save(&path).unwrap();
        assert_eq!(ReferenceValues::load(&path).unwrap(), r);
    }
}
