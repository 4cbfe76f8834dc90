//! Cost-matched replicate runs and their aggregate scores.

use std::collections::BTreeMap;

use persistent_sampling::estimators::{
    max_squared_bias, moments_persistent, moments_recycled, moments_standard, mse_log_z, MomentEstimate,
};
use persistent_sampling::rng::make_stream;
use persistent_sampling::samplers::{run, Method, RunConfig, RunResult};
use persistent_sampling::targets::Target;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibrate::{search_alpha, Calibration};
use crate::config::ExperimentSpec;
use crate::error::{HarnessError, Result};
use crate::reference::{run_reference, ReferenceValues};
use crate::targets::load_target;

/// One replicate run.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRow {
    pub method: Method,
    pub n_particles: usize,
    pub mcmc_steps: usize,
    pub replicate: u32,
    pub alpha: f64,
    pub calibrated: bool,
    /// Empty on success.
    pub error: String,
    pub completed: bool,
    pub log_z: f64,
    pub likelihood_evals: u64,
    pub iterations: usize,
    pub acceptance: f64,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl ReplicateRow {
    pub fn ok(&self) -> bool {
        self.error.is_empty()
    }
}

/// Aggregates for one `(method, N, k)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub n_particles: usize,
    pub mcmc_steps: usize,
    pub alpha: f64,
    pub calibrated: bool,
    pub successes: usize,
    pub failures: usize,
    pub mean_log_z: Option<f64>,
    pub var_log_z: Option<f64>,
    pub mse_log_z: Option<f64>,
    pub b1_sq: Option<f64>,
    pub b2_sq: Option<f64>,
    pub mean_evals: Option<f64>,
    pub mean_iterations: Option<f64>,
    pub mean_acceptance: Option<f64>,
    /// Mean evaluations of the SMC row with the same `N` and `k`.
    pub baseline_evals: Option<f64>,
    pub parity_error: Option<f64>,
    /// Set for PS and WFSMC rows: within tolerance of the SMC budget.
    pub parity_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub target: String,
    pub data_source: String,
    pub reference: ReferenceValues,
    pub parity_tolerance: f64,
    pub calibrations: Vec<Calibration>,
    pub raw: Vec<ReplicateRow>,
    pub summary: Vec<SummaryRow>,
}

/// Method-appropriate posterior moments of a finished run.
pub fn estimate_moments(result: &RunResult) -> Result<MomentEstimate> {
    let last = result
        .store
        .last()
        .ok_or_else(|| HarnessError::Calibration("run produced no generations".into()))?;
    Ok(match result.method {
        Method::Smc | Method::Wfsmc => moments_standard(last, result.method),
        Method::Rsmc => moments_recycled(&result.store)?,
        Method::Ps => moments_persistent(&result.store)?,
    })
}

fn replicate(target: &dyn Target, config: &RunConfig, root_seed: u64, r: u32, calibrated: bool) -> ReplicateRow {
    let mut row = ReplicateRow {
        method: config.method,
        n_particles: config.n_particles,
        mcmc_steps: config.mcmc_steps,
        replicate: r,
        alpha: config.ess_alpha,
        calibrated,
        error: String::new(),
        completed: false,
        log_z: f64::NAN,
        likelihood_evals: 0,
        iterations: 0,
        acceptance: f64::NAN,
        first: Vec::new(),
        second: Vec::new(),
    };
    let outcome = run(target, config, &mut make_stream(root_seed, r, config.method.tag()))
        .map_err(HarnessError::from)
        .and_then(|res| estimate_moments(&res).map(|m| (res, m)));
    match outcome {
        Ok((res, m)) => {
            row.completed = res.completed;
            row.log_z = res.log_z();
            row.likelihood_evals = res.likelihood_evals;
            row.iterations = res.iterations;
            row.acceptance = res.mean_acceptance();
            if !res.completed {
                row.error = "iteration cap reached".into();
            } else if !row.log_z.is_finite() {
                row.error = "non-finite evidence".into();
            }
            row.first = m.first;
            row.second = m.second;
        }
        Err(e) => row.error = e.to_string(),
    }
    row
}

/// Replicate rows for one cell. `reuse` holds rows already computed for the
/// leading replicates with the same configuration and streams.
fn run_cell(
    spec: &ExperimentSpec,
    target: &dyn Target,
    config: &RunConfig,
    calibrated: bool,
    reuse: Vec<ReplicateRow>,
) -> Vec<ReplicateRow> {
    let start = reuse.len().min(spec.replicates);
    let mut rows: Vec<ReplicateRow> = reuse.into_iter().take(start).collect();
    rows.extend(
        (start as u32..spec.replicates as u32)
            .into_par_iter()
            .map(|r| replicate(target, config, spec.root_seed, r, calibrated))
            .collect::<Vec<_>>(),
    );
    rows
}

/// Calibrates `method` on the first replicate streams and returns the pilot
/// rows made at the chosen threshold, which are identical to those replicates.
fn calibrate_cell(
    spec: &ExperimentSpec,
    target: &dyn Target,
    method: Method,
    n: usize,
    k: usize,
    baseline: f64,
) -> Result<(Calibration, Vec<ReplicateRow>)> {
    let mut probes: Vec<(f64, Vec<ReplicateRow>)> = Vec::new();
    let cost = |alpha: f64| -> Result<f64> {
        let mut config = RunConfig::new(method, n, alpha, k);
        config.resampler = spec.resampler;
        let rows: Vec<ReplicateRow> = (0..spec.calibration.pilots as u32)
            .into_par_iter()
            .map(|r| replicate(target, &config, spec.root_seed, r, true))
            .collect();
        if let Some(bad) = rows.iter().find(|r| r.likelihood_evals == 0) {
            return Err(HarnessError::Calibration(format!("pilot run failed: {}", bad.error)));
        }
        let cost = rows.iter().map(|r| r.likelihood_evals as f64).sum::<f64>() / rows.len() as f64;
        probes.push((alpha, rows));
        Ok(cost)
    };
    let cal = search_alpha(method, n, k, baseline, &spec.calibration, cost)?;
    let rows = probes
        .into_iter()
        .find(|(a, _)| a.to_bits() == cal.alpha.to_bits())
        .map(|(_, rows)| rows)
        .unwrap_or_default();
    Ok((cal, rows))
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut count) = (0.0, 0usize);
    for v in values {
        sum += v;
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

/// Aggregates raw rows; every summary value is a function of the raw rows
/// and the reference alone.
pub fn summarize(raw: &[ReplicateRow], reference: &ReferenceValues, tolerance: f64) -> Result<Vec<SummaryRow>> {
    let mut cells: BTreeMap<(usize, usize, Method), Vec<&ReplicateRow>> = BTreeMap::new();
    for row in raw {
        cells
            .entry((row.n_particles, row.mcmc_steps, row.method))
            .or_default()
            .push(row);
    }
    let mut out = Vec::with_capacity(cells.len());
    for (&(n, k, method), rows) in &cells {
        let good: Vec<&&ReplicateRow> = rows.iter().filter(|r| r.ok()).collect();
        let log_z: Vec<f64> = good.iter().map(|r| r.log_z).collect();
        let mean_log_z = mean(log_z.iter().copied());
        let var_log_z = (log_z.len() >= 2).then(|| {
            let m = mean_log_z.expect("non-empty");
            log_z.iter().map(|z| (z - m).powi(2)).sum::<f64>() / (log_z.len() - 1) as f64
        });
        let (mse, b1, b2) = if good.is_empty() {
            (None, None, None)
        } else {
            let firsts: Vec<Vec<f64>> = good.iter().map(|r| r.first.clone()).collect();
            let seconds: Vec<Vec<f64>> = good.iter().map(|r| r.second.clone()).collect();
            (
                Some(mse_log_z(&log_z, reference.log_z)?),
                Some(max_squared_bias(&firsts, &reference.mean, &reference.sd)?),
                Some(max_squared_bias(&seconds, &reference.second, &reference.sd_second)?),
            )
        };
        out.push(SummaryRow {
            method,
            n_particles: n,
            mcmc_steps: k,
            alpha: rows[0].alpha,
            calibrated: rows[0].calibrated,
            successes: good.len(),
            failures: rows.len() - good.len(),
            mean_log_z,
            var_log_z,
            mse_log_z: mse,
            b1_sq: b1,
            b2_sq: b2,
            mean_evals: mean(good.iter().map(|r| r.likelihood_evals as f64)),
            mean_iterations: mean(good.iter().map(|r| r.iterations as f64)),
            mean_acceptance: mean(good.iter().map(|r| r.acceptance)),
            baseline_evals: None,
            parity_error: None,
            parity_ok: None,
        });
    }
    let baselines: BTreeMap<(usize, usize), f64> = out
        .iter()
        .filter(|r| r.method == Method::Smc)
        .filter_map(|r| r.mean_evals.map(|e| ((r.n_particles, r.mcmc_steps), e)))
        .collect();
    for row in &mut out {
        let Some(&base) = baselines.get(&(row.n_particles, row.mcmc_steps)) else {
            continue;
        };
        row.baseline_evals = Some(base);
        if matches!(row.method, Method::Ps | Method::Wfsmc) {
            let err = row.mean_evals.map(|e| (e - base) / base);
            row.parity_error = err;
            row.parity_ok = Some(err.is_some_and(|e| e.abs() <= tolerance));
        }
    }
    Ok(out)
}

/// Methods in execution order, with SMC added whenever a threshold must be
/// calibrated against it.
fn method_plan(spec: &ExperimentSpec) -> Vec<Method> {
    let mut methods = spec.methods.clone();
    let needs_baseline = methods
        .iter()
        .any(|&m| matches!(m, Method::Ps | Method::Wfsmc) && spec.alpha.fixed(m).is_none());
    if needs_baseline && !methods.contains(&Method::Smc) {
        methods.push(Method::Smc);
    }
    methods.sort();
    methods.dedup();
    methods
}

/// Runs an experiment on an already constructed target and reference.
pub fn run_experiment_with(
    spec: &ExperimentSpec,
    target: &dyn Target,
    data_source: &str,
    reference: ReferenceValues,
) -> Result<ExperimentReport> {
    spec.validate()?;
    let methods = method_plan(spec);
    let mut raw = Vec::new();
    let mut calibrations = Vec::new();
    for &n in &spec.n_particles {
        for &k in &spec.mcmc_steps {
            let mut baseline: Option<f64> = None;
            for &method in &methods {
                let (alpha, calibrated, reuse) = match spec.alpha.fixed(method) {
                    Some(a) => (a, false, Vec::new()),
                    None => {
                        let base = baseline.expect("SMC runs first");
                        let (cal, rows) = calibrate_cell(spec, target, method, n, k, base)?;
                        let a = cal.alpha;
                        calibrations.push(cal);
                        (a, true, rows)
                    }
                };
                let mut config = RunConfig::new(method, n, alpha, k);
                config.resampler = spec.resampler;
                let rows = run_cell(spec, target, &config, calibrated, reuse);
                if method == Method::Smc {
                    baseline = mean(rows.iter().filter(|r| r.ok()).map(|r| r.likelihood_evals as f64));
                    if baseline.is_none() {
                        return Err(HarnessError::Calibration(format!("every SMC baseline run failed at N={n}, k={k}")));
                    }
                }
                raw.extend(rows);
            }
        }
    }
    let summary = summarize(&raw, &reference, spec.calibration.tolerance)?;
    Ok(ExperimentReport {
        target: spec.target.clone(),
        data_source: data_source.to_string(),
        reference,
        parity_tolerance: spec.calibration.tolerance,
        calibrations,
        raw,
        summary,
    })
}

/// Loads the target and reference named by `spec` and runs it. `workers`
/// sizes the thread pool; it never changes the results.
pub fn run_experiment(spec: &ExperimentSpec, workers: Option<usize>) -> Result<ExperimentReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    pool.install(|| {
        let loaded = load_target(&spec.target, spec.credit_path.as_deref())?;
        let reference = match &spec.reference_file {
            Some(path) => ReferenceValues::load(path)?,
            None => run_reference(loaded.target.as_ref(), &spec.reference, spec.root_seed)?,
        };
        if reference.mean.len() != loaded.target.dim() {
            return Err(HarnessError::Config(format!(
                "reference has {} coordinates, target {} has {}",
                reference.mean.len(),
                spec.target,
                loaded.target.dim()
            )));
        }
        run_experiment_with(spec, loaded.target.as_ref(), &loaded.data_source, reference)
    })
}
