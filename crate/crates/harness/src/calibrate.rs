//! ESS-threshold calibration so that PS and WFSMC spend the same number of
//! likelihood evaluations as the SMC baseline.

use persistent_sampling::rng::make_stream;
use persistent_sampling::samplers::{run, Method, Resampler, RunConfig};
use persistent_sampling::targets::Target;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{CalibrationSettings, BASELINE_ALPHA};
use crate::error::{HarnessError, Result};

/// Where PS starts its search; it usually lands within tolerance already.
pub const PS_FIRST_PROBE: f64 = 3.0;
pub const PS_RANGE: (f64, f64) = (0.2, 10.0);
pub const WFSMC_RANGE: (f64, f64) = (0.05, 0.999);
/// WFSMC starts at the baseline threshold, where its pool-relative ESS rule
/// spends roughly what SMC does.
pub const WFSMC_FIRST_PROBE: f64 = BASELINE_ALPHA;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub alpha: f64,
    pub cost: f64,
}

/// Outcome of a threshold search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub method: Method,
    pub n_particles: usize,
    pub mcmc_steps: usize,
    pub alpha: f64,
    pub mean_evals: f64,
    pub baseline_evals: f64,
    pub relative_error: f64,
    /// False when no probed threshold came within tolerance; `alpha` is then
    /// the closest one found.
    pub parity: bool,
    pub probes: Vec<Probe>,
}

/// Bisection for `cost(α) = goal` with `cost` nondecreasing in `α`.
///
/// Returns every probe made, in order, and the index of the closest one.
/// Stops as soon as a probe lands within `tolerance` (relative).
pub fn bisect_cost<F>(
    mut cost: F,
    range: (f64, f64),
    first_probe: Option<f64>,
    goal: f64,
    tolerance: f64,
    max_probes: usize,
) -> Result<(Vec<Probe>, usize)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = range;
    let mut probes: Vec<Probe> = Vec::new();
    let mut next = first_probe.unwrap_or(0.5 * (lo + hi));
    while probes.len() < max_probes {
        let c = cost(next)?;
        probes.push(Probe { alpha: next, cost: c });
        if ((c - goal) / goal).abs() <= tolerance {
            break;
        }
        if c < goal {
            lo = next;
        } else {
            hi = next;
        }
        next = 0.5 * (lo + hi);
    }
    let best = probes
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1.cost - goal).abs().total_cmp(&(b.1.cost - goal).abs()))
        .map(|(i, _)| i)
        .ok_or_else(|| HarnessError::Calibration("no probes allowed".into()))?;
    Ok((probes, best))
}

/// Mean likelihood evaluations over the first `pilots` replicate streams.
#[allow(clippy::too_many_arguments)]
pub fn pilot_mean_evals(
    target: &dyn Target,
    method: Method,
    n: usize,
    k: usize,
    alpha: f64,
    pilots: usize,
    root_seed: u64,
    resampler: Resampler,
) -> Result<f64> {
    let mut config = RunConfig::new(method, n, alpha, k);
    config.resampler = resampler;
    let evals: Vec<u64> = (0..pilots as u32)
        .into_par_iter()
        .map(|r| run(target, &config, &mut make_stream(root_seed, r, method.tag())).map(|res| res.likelihood_evals))
        .collect::<std::result::Result<_, _>>()?;
    Ok(evals.iter().sum::<u64>() as f64 / pilots as f64)
}

/// SMC pilot cost at the baseline threshold.
pub fn baseline_evals(
    target: &dyn Target,
    n: usize,
    k: usize,
    settings: &CalibrationSettings,
    root_seed: u64,
    resampler: Resampler,
) -> Result<f64> {
    pilot_mean_evals(target, Method::Smc, n, k, BASELINE_ALPHA, settings.pilots, root_seed, resampler)
}

/// Search range and first probe for a calibrated method.
pub fn search_plan(method: Method) -> Result<((f64, f64), Option<f64>)> {
    match method {
        Method::Ps => Ok((PS_RANGE, Some(PS_FIRST_PROBE))),
        Method::Wfsmc => Ok((WFSMC_RANGE, Some(WFSMC_FIRST_PROBE))),
        Method::Smc | Method::Rsmc => Err(HarnessError::Calibration("baseline method needs no calibration".into())),
    }
}

/// Calibrates against an arbitrary pilot-cost function.
pub fn search_alpha<F>(
    method: Method,
    n: usize,
    k: usize,
    baseline_evals: f64,
    settings: &CalibrationSettings,
    cost: F,
) -> Result<Calibration>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (range, first) = search_plan(method)?;
    let (probes, best) = bisect_cost(cost, range, first, baseline_evals, settings.tolerance, settings.max_probes)?;
    let chosen = probes[best];
    let relative_error = (chosen.cost - baseline_evals) / baseline_evals;
    Ok(Calibration {
        method,
        n_particles: n,
        mcmc_steps: k,
        alpha: chosen.alpha,
        mean_evals: chosen.cost,
        baseline_evals,
        relative_error,
        parity: relative_error.abs() <= settings.tolerance,
        probes,
    })
}

/// Finds the ESS threshold at which `method` matches `baseline_evals`.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_alpha(
    target: &dyn Target,
    method: Method,
    n: usize,
    k: usize,
    baseline_evals: f64,
    root_seed: u64,
    settings: &CalibrationSettings,
    resampler: Resampler,
) -> Result<Calibration> {
    search_plan(method)?;
    let cost = |alpha| pilot_mean_evals(target, method, n, k, alpha, settings.pilots, root_seed, resampler);
    search_alpha(method, n, k, baseline_evals, settings, cost)
}
