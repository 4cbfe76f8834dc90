//! Report files: `raw.csv`, `summary.csv`, `summary.json` and plot-ready
//! tables under `plotdata/`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use persistent_sampling::samplers::Method;
use serde::{Deserialize, Serialize};

use crate::calibrate::Calibration;
use crate::error::{io_err, HarnessError, Result};
use crate::experiment::{ExperimentReport, ReplicateRow, SummaryRow};
use crate::reference::ReferenceValues;

const RAW_FIXED: [&str; 13] = [
    "method",
    "n",
    "k",
    "replicate",
    "alpha",
    "calibrated",
    "error",
    "completed",
    "log_z",
    "evals",
    "iterations",
    "acceptance",
    "dim",
];

pub const SUMMARY_COLUMNS: [&str; 18] = [
    "method",
    "n",
    "k",
    "alpha",
    "calibrated",
    "successes",
    "failures",
    "mean_log_z",
    "var_log_z",
    "mse_log_z",
    "b1_sq",
    "b2_sq",
    "mean_evals",
    "mean_iterations",
    "mean_acceptance",
    "baseline_evals",
    "parity_error",
    "parity_ok",
];

/// Metrics written to `plotdata/`.
pub const PLOT_METRICS: [&str; 5] = ["mse_log_z", "var_log_z", "b1_sq", "b2_sq", "mean_evals"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub target: String,
    pub data_source: String,
    pub parity_tolerance: f64,
    pub reference: ReferenceValues,
    pub calibrations: Vec<Calibration>,
    pub rows: Vec<SummaryRow>,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn summary_record(r: &SummaryRow) -> Vec<String> {
    vec![
        r.method.to_string(),
        r.n_particles.to_string(),
        r.mcmc_steps.to_string(),
        r.alpha.to_string(),
        r.calibrated.to_string(),
        r.successes.to_string(),
        r.failures.to_string(),
        opt(r.mean_log_z),
        opt(r.var_log_z),
        opt(r.mse_log_z),
        opt(r.b1_sq),
        opt(r.b2_sq),
        opt(r.mean_evals),
        opt(r.mean_iterations),
        opt(r.mean_acceptance),
        opt(r.baseline_evals),
        opt(r.parity_error),
        opt(r.parity_ok),
    ]
}

fn raw_dim(rows: &[ReplicateRow]) -> usize {
    rows.iter().map(|r| r.first.len()).max().unwrap_or(0)
}

pub fn write_raw_csv(rows: &[ReplicateRow], path: &Path) -> Result<()> {
    let dim = raw_dim(rows);
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = RAW_FIXED.iter().map(|s| s.to_string()).collect();
    header.extend((0..dim).map(|d| format!("first_{d}")));
    header.extend((0..dim).map(|d| format!("second_{d}")));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.method.to_string(),
            r.n_particles.to_string(),
            r.mcmc_steps.to_string(),
            r.replicate.to_string(),
            r.alpha.to_string(),
            r.calibrated.to_string(),
            r.error.clone(),
            r.completed.to_string(),
            r.log_z.to_string(),
            r.likelihood_evals.to_string(),
            r.iterations.to_string(),
            r.acceptance.to_string(),
            r.first.len().to_string(),
        ];
        for v in [&r.first, &r.second] {
            rec.extend((0..dim).map(|d| v.get(d).map(f64::to_string).unwrap_or_default()));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize, row: usize) -> Result<T> {
    let s = rec.get(i).unwrap_or("");
    s.parse()
        .map_err(|_| HarnessError::Config(format!("raw.csv row {row}: cannot parse column {i} value {s:?}")))
}

/// Reads `raw.csv` back.
pub fn read_raw_csv(path: &Path) -> Result<Vec<ReplicateRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let width = rdr.headers()?.len();
    let dim = (width - RAW_FIXED.len()) / 2;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let method: Method = rec[0].parse()?;
        let own_dim: usize = field(&rec, 12, i)?;
        let vector = |offset: usize| -> Result<Vec<f64>> {
            (0..own_dim).map(|d| field(&rec, RAW_FIXED.len() + offset + d, i)).collect()
        };
        rows.push(ReplicateRow {
            method,
            n_particles: field(&rec, 1, i)?,
            mcmc_steps: field(&rec, 2, i)?,
            replicate: field(&rec, 3, i)?,
            alpha: field(&rec, 4, i)?,
            calibrated: field(&rec, 5, i)?,
            error: rec[6].to_string(),
            completed: field(&rec, 7, i)?,
            log_z: field(&rec, 8, i)?,
            likelihood_evals: field(&rec, 9, i)?,
            iterations: field(&rec, 10, i)?,
            acceptance: field(&rec, 11, i)?,
            first: vector(0)?,
            second: vector(dim)?,
        });
    }
    Ok(rows)
}

pub fn write_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_COLUMNS)?;
    for r in rows {
        w.write_record(summary_record(r))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Reads `summary.csv` back into rows.
pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let o = |c: usize| -> Result<Option<f64>> {
            if rec[c].is_empty() {
                Ok(None)
            } else {
                field(&rec, c, i).map(Some)
            }
        };
        out.push(SummaryRow {
            method: rec[0].parse()?,
            n_particles: field(&rec, 1, i)?,
            mcmc_steps: field(&rec, 2, i)?,
            alpha: field(&rec, 3, i)?,
            calibrated: field(&rec, 4, i)?,
            successes: field(&rec, 5, i)?,
            failures: field(&rec, 6, i)?,
            mean_log_z: o(7)?,
            var_log_z: o(8)?,
            mse_log_z: o(9)?,
            b1_sq: o(10)?,
            b2_sq: o(11)?,
            mean_evals: o(12)?,
            mean_iterations: o(13)?,
            mean_acceptance: o(14)?,
            baseline_evals: o(15)?,
            parity_error: o(16)?,
            parity_ok: if rec[17].is_empty() { None } else { Some(field(&rec, 17, i)?) },
        });
    }
    Ok(out)
}

fn metric(row: &SummaryRow, name: &str) -> Option<f64> {
    match name {
        "mse_log_z" => row.mse_log_z,
        "var_log_z" => row.var_log_z,
        "b1_sq" => row.b1_sq,
        "b2_sq" => row.b2_sq,
        "mean_evals" => row.mean_evals,
        _ => None,
    }
}

/// One table per metric: a `k` column, then one column per method and `N`.
pub fn write_plot_data(target: &str, rows: &[SummaryRow], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let series: BTreeSet<(Method, usize)> = rows.iter().map(|r| (r.method, r.n_particles)).collect();
    let ks: BTreeSet<usize> = rows.iter().map(|r| r.mcmc_steps).collect();
    let cells: BTreeMap<(Method, usize, usize), &SummaryRow> =
        rows.iter().map(|r| ((r.method, r.n_particles, r.mcmc_steps), r)).collect();
    for name in PLOT_METRICS {
        let path = dir.join(format!("{target}_{name}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        let mut header = vec!["k".to_string()];
        header.extend(series.iter().map(|(m, n)| format!("{m}_n{n}")));
        w.write_record(&header)?;
        for &k in &ks {
            let mut rec = vec![k.to_string()];
            rec.extend(
                series
                    .iter()
                    .map(|&(m, n)| opt(cells.get(&(m, n, k)).and_then(|r| metric(r, name)))),
            );
            w.write_record(&rec)?;
        }
        w.flush().map_err(io_err(&path))?;
    }
    Ok(())
}

pub fn summary_document(report: &ExperimentReport) -> SummaryDocument {
    SummaryDocument {
        target: report.target.clone(),
        data_source: report.data_source.clone(),
        parity_tolerance: report.parity_tolerance,
        reference: report.reference.clone(),
        calibrations: report.calibrations.clone(),
        rows: report.summary.clone(),
    }
}

/// Writes every report file into `dir`, creating it if needed.
pub fn emit_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_raw_csv(&report.raw, &dir.join("raw.csv"))?;
    write_summary_csv(&report.summary, &dir.join("summary.csv"))?;
    let json = serde_json::to_string_pretty(&summary_document(report))?;
    let path = dir.join("summary.json");
    std::fs::write(&path, json).map_err(io_err(&path))?;
    write_plot_data(&report.target, &report.summary, &dir.join("plotdata"))
}
