//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs as a plain binary so the lines always reach stdout.

use std::cell::RefCell;
use std::process::ExitCode;
use std::time::Instant;

use persistent_sampling::ensemble::{Generation, PersistentStore};
use persistent_sampling::kernels::{rwm_sweep, RwmState};
use persistent_sampling::numeric::{ess, ess_unnormalized, log_sum_exp, normalize_log_weights, LogWeights};
use persistent_sampling::rng::make_stream;
use persistent_sampling::samplers::{
    ps_log_weights, resample_systematic, run, run_observed, smc_log_weights, Method, Phase, RunConfig,
};
use persistent_sampling::targets::{ConjugateGaussian, CountingTarget, Target, TARGET_NAMES};
use ps_harness::config::{ExperimentSpec, ReferenceSettings};
use ps_harness::experiment::{ExperimentReport, SummaryRow};
use ps_harness::targets::load_target;
use ps_harness::{emit_report, run_experiment};
use rand::Rng;
use rand_distr_free::standard_normal;
use rayon::prelude::*;

const ROOT_SEED: u64 = 11;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Box–Muller draws so the suite needs no extra distribution crate.
mod rand_distr_free {
    use rand::Rng;

    pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

fn gaussian_truth(d: usize) -> f64 {
    -(d as f64 / 2.0) * (4.0 * std::f64::consts::PI).ln()
}

struct Batch {
    log_z: Vec<f64>,
    mean_evals: f64,
}

fn batch(target: &dyn Target, config: &RunConfig, seeds: u32) -> Batch {
    let runs: Vec<(f64, u64)> = (0..seeds)
        .into_par_iter()
        .map(|s| {
            let r = run(target, config, &mut make_stream(ROOT_SEED, s, config.method.tag())).expect("run");
            assert!(r.completed, "run hit the iteration cap");
            (r.log_z(), r.likelihood_evals)
        })
        .collect();
    Batch {
        log_z: runs.iter().map(|r| r.0).collect(),
        mean_evals: runs.iter().map(|r| r.1 as f64).sum::<f64>() / seeds as f64,
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

fn criterion_1() -> Outcome {
    let target = ConjugateGaussian::new(4);
    let truth = gaussian_truth(4);
    let smc = batch(&target, &RunConfig::new(Method::Smc, 1024, 0.9, 10), 50);
    let ps = batch(&target, &RunConfig::new(Method::Ps, 256, 3.0, 10), 50);
    // SMC sized so that its mean budget matches PS's
    let probe = batch(&target, &RunConfig::new(Method::Smc, 256, 0.9, 10), 10);
    let n_matched = ((256.0 * ps.mean_evals / probe.mean_evals).round() as usize).max(2);
    let matched = batch(&target, &RunConfig::new(Method::Smc, n_matched, 0.9, 10), 50);
    let smc_err = (mean(&smc.log_z) - truth).abs();
    let ps_err = (mean(&ps.log_z) - truth).abs();
    let (v_ps, v_smc) = (variance(&ps.log_z), variance(&matched.log_z));
    outcome(
        smc_err < 0.05 && ps_err < 0.05 && v_ps < v_smc,
        format!(
            "|bias| SMC {smc_err:.4}, PS {ps_err:.4}; var PS {v_ps:.3e} vs SMC(N={n_matched}) {v_smc:.3e}; \
             evals PS {:.0} vs SMC {:.0}",
            ps.mean_evals, matched.mean_evals
        ),
    )
}

fn experiment(target: &str, methods: Vec<Method>, n: usize, k: usize, replicates: usize) -> ExperimentReport {
    let mut spec = ExperimentSpec::new(target, methods);
    spec.n_particles = vec![n];
    spec.mcmc_steps = vec![k];
    spec.replicates = replicates;
    spec.root_seed = ROOT_SEED;
    spec.reference = ReferenceSettings {
        runs: 4,
        n_particles: 512,
        alpha: 0.99,
        mcmc_steps: 20,
        self_check: false,
    };
    let report = run_experiment(&spec, None).expect("experiment");
    let dir = std::env::temp_dir().join(format!("ps-acceptance-{target}-{n}-{k}"));
    emit_report(&report, &dir).expect("report files");
    report
}

fn row(report: &ExperimentReport, method: Method) -> &SummaryRow {
    report.summary.iter().find(|r| r.method == method).expect("row present")
}

fn criterion_2(report: &ExperimentReport) -> Outcome {
    let ps = row(report, Method::Ps);
    let smc = row(report, Method::Smc);
    let m = ps.mean_log_z.unwrap_or(f64::NAN);
    let (mse_ps, mse_smc) = (ps.mse_log_z.unwrap_or(f64::INFINITY), smc.mse_log_z.unwrap_or(f64::NAN));
    outcome(
        (m + 47.931).abs() < 0.3 && mse_ps < mse_smc,
        format!(
            "PS mean log Z {m:.4} (ref {:.5}); MSE PS {mse_ps:.4} vs SMC {mse_smc:.4}; PS alpha {:.4}",
            report.reference.log_z, ps.alpha
        ),
    )
}

fn criterion_3(report: &ExperimentReport) -> Outcome {
    let ps = row(report, Method::Ps);
    let smc = row(report, Method::Smc);
    let reference_ok = report.reference.mean.iter().all(|m| (m - 5.0 / 3.0).abs() < 1e-4);
    let (b_ps, b_smc) = (ps.b1_sq.unwrap_or(f64::INFINITY), smc.b1_sq.unwrap_or(f64::NAN));
    outcome(
        reference_ok && b_ps < b_smc,
        format!("reference mean 5/3: {reference_ok}; b1^2 PS {b_ps:.4} vs SMC {b_smc:.4}; PS alpha {:.4}", ps.alpha),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = make_stream(ROOT_SEED, 0, 40);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = rng.random_range(2..200);
        let log_like: Vec<f64> = (0..n).map(|_| -rng.random::<f64>() * 500.0).collect();
        let gen = Generation::new(1, vec![0.0; n], log_like, 0.0).unwrap();
        let mut store = PersistentStore::new();
        store.push(gen.clone(), 0.0).unwrap();
        let beta: f64 = rng.random();
        let a = smc_log_weights(&gen, beta);
        let b = ps_log_weights(&store, beta).unwrap();
        if a.values().iter().zip(b.values()).any(|(x, y)| x.to_bits() != y.to_bits()) {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches} of 1000 vectors differ"))
}

struct BiasCurve {
    n: Vec<usize>,
    bias: Vec<f64>,
    band: Vec<(f64, f64)>,
}

fn bias_curve() -> BiasCurve {
    let target = ConjugateGaussian::new(2);
    let truth = gaussian_truth(2);
    let seeds = 200;
    let mut curve = BiasCurve {
        n: vec![],
        bias: vec![],
        band: vec![],
    };
    for n in [64, 128, 256, 512] {
        let b = batch(&target, &RunConfig::new(Method::Ps, n, 3.0, 10), seeds);
        let ratios: Vec<f64> = b.log_z.iter().map(|z| (z - truth).exp()).collect();
        let mut rng = make_stream(ROOT_SEED, n as u32, 50);
        let mut boots: Vec<f64> = (0..2000)
            .map(|_| {
                let s: f64 = (0..seeds).map(|_| ratios[rng.random_range(0..seeds as usize)]).sum();
                s / seeds as f64 - 1.0
            })
            .collect();
        boots.sort_by(f64::total_cmp);
        curve.n.push(n);
        curve.bias.push(mean(&ratios) - 1.0);
        curve.band.push((boots[49], boots[1949]));
    }
    curve
}

/// Interval of |x| when x ranges over `band`.
fn magnitude_band((lo, hi): (f64, f64)) -> (f64, f64) {
    if lo <= 0.0 && hi >= 0.0 {
        (0.0, lo.abs().max(hi.abs()))
    } else {
        (lo.abs().min(hi.abs()), lo.abs().max(hi.abs()))
    }
}

fn criterion_5(curve: &BiasCurve) -> Outcome {
    let mut ok = true;
    for i in 0..curve.n.len() - 1 {
        let (a, b) = (curve.bias[i].abs(), curve.bias[i + 1].abs());
        let (la, ha) = magnitude_band(curve.band[i]);
        let (lb, hb) = magnitude_band(curve.band[i + 1]);
        let overlap = la <= hb && lb <= ha;
        ok &= b <= a || overlap;
    }
    let detail = curve
        .n
        .iter()
        .zip(&curve.bias)
        .zip(&curve.band)
        .map(|((n, b), (lo, hi))| format!("N={n}: {b:+.5} [{lo:+.5}, {hi:+.5}]"))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(ok, format!("mean(Z^/Z)-1 with 95% bootstrap bands: {detail}"))
}

fn criterion_6(curve: &BiasCurve) -> Outcome {
    let (b64, b512) = (curve.bias[0].abs(), curve.bias[3].abs());
    let ratio = b64 / b512;
    outcome(ratio >= 3.0, format!("|bias| N=64 {b64:.5}, N=512 {b512:.5}, ratio {ratio:.2}"))
}

fn criterion_7(reports: &[&ExperimentReport]) -> Outcome {
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    let mut failed = Vec::new();
    for rep in reports {
        for r in rep.summary.iter().filter(|r| matches!(r.method, Method::Ps | Method::Wfsmc)) {
            checked += 1;
            let err = r.parity_error.unwrap_or(f64::INFINITY);
            worst = worst.max(err.abs());
            if r.parity_ok != Some(true) {
                failed.push(format!("{}/{} N={} k={} ({:+.2}%)", rep.target, r.method, r.n_particles, r.mcmc_steps, 100.0 * err));
            }
        }
    }
    outcome(
        failed.is_empty() && checked > 0,
        format!(
            "{checked} calibrated rows, worst |error| {:.3}%{}",
            100.0 * worst,
            if failed.is_empty() { String::new() } else { format!("; outside 1%: {}", failed.join(", ")) }
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for name in TARGET_NAMES {
        let loaded = load_target(name, None).expect("target");
        let target = CountingTarget::new(loaded.target);
        let leaked = RefCell::new(0u64);
        let start = RefCell::new(0u64);
        let mut observer = |_: usize, phase: Phase| match phase {
            Phase::ReweightStart => *start.borrow_mut() = target.count(),
            Phase::ReweightEnd => *leaked.borrow_mut() += target.count() - *start.borrow(),
        };
        let config = RunConfig::new(Method::Ps, 32, 3.0, 5);
        let r = run_observed(&target, &config, &mut make_stream(ROOT_SEED, 0, 60), &mut observer).expect("run");
        let leaked = leaked.into_inner();
        let consistent = r.likelihood_evals == target.count();
        ok &= leaked == 0 && r.completed && consistent;
        lines.push(format!("{name}: {leaked} during reweighting of {} total", target.count()));
    }
    outcome(ok, lines.join("; "))
}

fn criterion_9() -> Outcome {
    let mut rng = make_stream(ROOT_SEED, 0, 90);
    let mut failures = Vec::new();

    // ESS unchanged by rescaling the weights; log-sum-exp shifts with its input
    for _ in 0..500 {
        let n = rng.random_range(1..100);
        let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 10.0 - 8.0).collect();
        let shift = rng.random::<f64>() * 400.0 - 200.0;
        let shifted: Vec<f64> = w.iter().map(|x| x + shift).collect();
        let a = ess_unnormalized(&LogWeights::new(w.clone()).unwrap()).unwrap();
        let b = ess_unnormalized(&LogWeights::new(shifted.clone()).unwrap()).unwrap();
        if (a - b).abs() > 1e-9 * a {
            failures.push("ESS scale-freeness");
            break;
        }
        let l = log_sum_exp(&w).unwrap();
        let ls = log_sum_exp(&shifted).unwrap();
        if (ls - l - shift).abs() > 1e-9 * (1.0 + l.abs().max(ls.abs())) {
            failures.push("log-sum-exp shift");
            break;
        }
    }

    // systematic resampling under uniform weights keeps every index once
    for n in [1, 2, 7, 64, 1000] {
        let idx = resample_systematic(&vec![1.0 / n as f64; n], n, &mut rng).unwrap();
        if idx != (0..n).collect::<Vec<_>>() {
            failures.push("systematic exactness");
        }
    }

    // persistent ESS: flattened and normalized forms on a real run
    let target = ConjugateGaussian::new(3);
    let r = run(&target, &RunConfig::new(Method::Ps, 100, 2.0, 5), &mut make_stream(ROOT_SEED, 0, 91)).unwrap();
    for beta in [0.25, 0.5, 1.0] {
        let logw = ps_log_weights(&r.store, beta).unwrap();
        let flat = ess_unnormalized(&logw).unwrap();
        let norm = ess(&normalize_log_weights(&logw).unwrap().weights).unwrap();
        if (flat - norm).abs() > 1e-9 * norm {
            failures.push("persistent ESS forms");
        }
    }

    // random-walk kernel leaves the posterior invariant
    let d = 4;
    let n = 10_000;
    let sd = 0.5f64.sqrt();
    let particles: Vec<f64> = (0..n * d).map(|_| sd * standard_normal(&mut rng)).collect();
    let log_like = particles.chunks_exact(d).map(|x| target_d4().log_likelihood(x)).collect();
    let start = Generation::new(d, particles, log_like, 1.0).unwrap();
    let out = rwm_sweep(&start, &target_d4(), 1.0, &RwmState::new(d), 50, &mut rng, false);
    for a in 0..d {
        let m = out.generation.iter().map(|(x, _)| x[a]).sum::<f64>() / n as f64;
        let v = out.generation.iter().map(|(x, _)| (x[a] - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        // 4 standard errors of the sample mean and of the sample variance
        let (se_m, se_v) = (sd / (n as f64).sqrt(), 0.5 * (2.0 / n as f64).sqrt());
        if m.abs() > 4.0 * se_m || (v - 0.5).abs() > 4.0 * se_v {
            failures.push("RWM stationarity");
        }
    }

    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "ESS scale-freeness, log-sum-exp shift, systematic exactness, persistent ESS forms, RWM stationarity".into()
        } else {
            format!("failed: {}", failures.join(", "))
        },
    )
}

fn target_d4() -> ConjugateGaussian {
    ConjugateGaussian::new(4)
}

fn criterion_10(reports: &[&ExperimentReport]) -> Outcome {
    let mut ok_numerics = true;
    let mut ps_best_somewhere = false;
    let mut parts = Vec::new();
    for rep in reports {
        let failures: usize = rep.summary.iter().map(|r| r.failures).sum();
        ok_numerics &= failures == 0 && rep.summary.iter().all(|r| r.mse_log_z.is_some_and(f64::is_finite));
        let ps = row(rep, Method::Ps).mse_log_z.unwrap_or(f64::INFINITY);
        let best = rep
            .summary
            .iter()
            .filter(|r| r.method != Method::Ps)
            .all(|r| ps <= r.mse_log_z.unwrap_or(f64::INFINITY));
        ps_best_somewhere |= best;
        let mses = rep
            .summary
            .iter()
            .map(|r| format!("{} {:.3}", r.method, r.mse_log_z.unwrap_or(f64::NAN)))
            .collect::<Vec<_>>()
            .join(", ");
        parts.push(format!("{} [{}; ref {:?}] MSE: {mses}", rep.target, rep.data_source, rep.reference.source));
    }
    outcome(ok_numerics && ps_best_somewhere, parts.join(" | "))
}

fn report_line(id: usize, title: &str, elapsed: f64, o: &Outcome) -> bool {
    println!(
        "criterion {id:>2} {:<4} {title} ({elapsed:.1}s): {}",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail
    );
    o.pass
}

fn main() -> ExitCode {
    // `cargo test -- --list` and filters: this suite is all-or-nothing
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let mut all = true;

    let t = Instant::now();
    let o = criterion_1();
    all &= report_line(1, "analytic evidence, conjugate Gaussian d=4", t.elapsed().as_secs_f64(), &o);

    let t = Instant::now();
    let mix128 = experiment("mixture", vec![Method::Smc, Method::Ps], 128, 100, 50);
    let o = criterion_2(&mix128);
    all &= report_line(2, "analytic evidence and MSE ordering, 16-d mixture", t.elapsed().as_secs_f64(), &o);

    let t = Instant::now();
    let mix64 = experiment("mixture", vec![Method::Smc, Method::Ps], 64, 100, 50);
    let o = criterion_3(&mix64);
    all &= report_line(3, "mode-weight recovery, mixture b1^2", t.elapsed().as_secs_f64(), &o);

    let t = Instant::now();
    let o = criterion_4();
    all &= report_line(4, "single-generation persistent weights equal SMC weights", t.elapsed().as_secs_f64(), &o);

    let t = Instant::now();
    let curve = bias_curve();
    let elapsed = t.elapsed().as_secs_f64();
    let o = criterion_5(&curve);
    all &= report_line(5, "evidence consistency over N, Gaussian d=2", elapsed, &o);
    let o = criterion_6(&curve);
    all &= report_line(6, "relative bias shrinks like 1/N", 0.0, &o);

    let t = Instant::now();
    let methods = Method::ALL.to_vec();
    let logistic = experiment("logistic", methods.clone(), 64, 50, 10);
    let funnel = experiment("funnel", methods, 64, 50, 10);
    let smoke_elapsed = t.elapsed().as_secs_f64();

    let o = criterion_7(&[&mix128, &mix64, &logistic, &funnel]);
    all &= report_line(7, "cost parity of calibrated rows", 0.0, &o);

    let t = Instant::now();
    let o = criterion_8();
    all &= report_line(8, "no likelihood calls while reweighting", t.elapsed().as_secs_f64(), &o);

    let t = Instant::now();
    let o = criterion_9();
    all &= report_line(9, "invariant suites", t.elapsed().as_secs_f64(), &o);

    let o = criterion_10(&[&logistic, &funnel]);
    all &= report_line(10, "sparse-logistic and funnel smoke runs", smoke_elapsed, &o);

    if all {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: some criteria FAIL");
        ExitCode::FAILURE
    }
}
