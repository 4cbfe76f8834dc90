use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use persistent_sampling::samplers::Method;
use persistent_sampling::targets::TARGET_NAMES;
use ps_harness::calibrate::{baseline_evals, calibrate_alpha};
use ps_harness::config::{CalibrationSettings, ExperimentSpec, ReferenceSettings};
use ps_harness::targets::load_target;
use ps_harness::{emit_report, run_experiment, run_reference, HarnessError};

#[derive(Parser)]
#[command(name = "psbench", about = "Cost-matched comparisons of persistent sampling and SMC variants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides `root_seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute reference evidence and moments and write `reference.json`.
    Reference {
        #[arg(long)]
        target: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        runs: usize,
        #[arg(long, default_value_t = 4096)]
        n: usize,
        #[arg(long, default_value_t = 0.999)]
        alpha: f64,
        #[arg(long, default_value_t = 20)]
        k: usize,
        #[arg(long)]
        self_check: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Find the ESS threshold matching the SMC likelihood budget.
    Calibrate {
        #[arg(long)]
        target: String,
        #[arg(long)]
        method: Method,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the available target names.
    ListTargets,
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run {
            config,
            out,
            workers,
            seed,
        } => {
            let mut spec = ExperimentSpec::load(&config)?;
            if let Some(s) = seed {
                spec.root_seed = s;
            }
            let report = run_experiment(&spec, workers)?;
            emit_report(&report, &out)?;
            for row in &report.summary {
                let flag = match row.parity_ok {
                    Some(false) => "  PARITY FAILED",
                    _ => "",
                };
                println!(
                    "{:>6} N={:<5} k={:<4} alpha={:<8.4} mse_logz={:<12} b1={:<12} evals={}{}",
                    row.method.as_str(),
                    row.n_particles,
                    row.mcmc_steps,
                    row.alpha,
                    fmt(row.mse_log_z),
                    fmt(row.b1_sq),
                    fmt(row.mean_evals),
                    flag
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Reference {
            target,
            out,
            runs,
            n,
            alpha,
            k,
            self_check,
            seed,
        } => {
            let loaded = load_target(&target, None)?;
            let settings = ReferenceSettings {
                runs,
                n_particles: n,
                alpha,
                mcmc_steps: k,
                self_check,
            };
            let reference = run_reference(loaded.target.as_ref(), &settings, seed)?;
            std::fs::create_dir_all(&out).map_err(|source| HarnessError::Io {
                path: out.clone(),
                source,
            })?;
            let path = out.join("reference.json");
            reference.save(&path)?;
            println!("log_z = {} ({:?}); wrote {}", reference.log_z, reference.source, path.display());
        }
        Command::Calibrate {
            target,
            method,
            n,
            k,
            seed,
        } => {
            let loaded = load_target(&target, None)?;
            let settings = CalibrationSettings::default();
            let t = loaded.target.as_ref();
            let resampler = Default::default();
            let base = baseline_evals(t, n, k, &settings, seed, resampler)?;
            let cal = calibrate_alpha(t, method, n, k, base, seed, &settings, resampler)?;
            println!(
                "alpha = {} (mean evals {} vs baseline {}, error {:+.3}%, {} probes{})",
                cal.alpha,
                cal.mean_evals,
                cal.baseline_evals,
                100.0 * cal.relative_error,
                cal.probes.len(),
                if cal.parity { "" } else { ", parity not reached" }
            );
        }
        Command::ListTargets => {
            for name in TARGET_NAMES {
                println!("{name}");
            }
        }
    }
    Ok(())
}

fn fmt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4e}")).unwrap_or_else(|| "-".into())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
