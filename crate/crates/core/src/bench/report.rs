//! CSV and JSON output. Files are written in a fixed order with fixed
//! number formatting, so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{median_run_index, BenchError, RunRecord, Summary};
use crate::diagnostics::{per_generation_median, TraceRow};

pub const RUNS_HEADER: &str =
    "variant,problem,dim,rotated,seed,run_index,stream_seed,budget,evaluations,success,best_f,final_sigma,failure";
pub const SUMMARY_HEADER: &str = "variant,problem,dim,rotated,runs,successes,success_rate,median_fe,median_censored,mean_fe_success,sp,fe,beta,p_value";
pub const TRACE_HEADER: &str = "gen,evals,best_f,sigma,alpha,b_gap,z_dot,conj";

/// Formats a real for CSV: plain decimals, scientific below `1e-3` (and
/// for very large magnitudes).
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if x == 0.0 {
        "0".into()
    } else if x.abs() < 1e-3 || x.abs() >= 1e15 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn opt_real(x: Option<f64>) -> String {
    x.map(format_real).unwrap_or_default()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), BenchError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, contents).map_err(io_err(path))
}

pub fn runs_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(RUNS_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.variant,
            r.problem,
            r.dim,
            r.rotated,
            r.seed,
            r.run_index,
            r.stream_seed,
            r.budget,
            r.evaluations,
            r.success,
            format_real(r.best_f),
            format_real(r.final_sigma),
            r.failure.map(|f| f.to_string()).unwrap_or_default(),
        );
    }
    out
}

pub fn summary_csv(summaries: &[Summary]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for s in summaries {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.variant,
            s.problem,
            s.dim,
            s.rotated,
            s.runs,
            s.successes,
            format_real(s.success_rate),
            format_real(s.median_fe),
            s.median_censored,
            opt_real(s.mean_fe_success),
            opt_real(s.sp),
            opt_real(s.fe),
            opt_real(s.beta),
            opt_real(s.p_value),
        );
    }
    out
}

/// Trace CSV; `eigen_dim` adds `d1..dn` columns.
pub fn trace_csv(rows: &[TraceRow], eigen_dim: Option<usize>) -> String {
    let mut out = String::from(TRACE_HEADER);
    if let Some(n) = eigen_dim {
        for i in 1..=n {
            let _ = write!(out, ",d{i}");
        }
    }
    out.push('\n');
    for row in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.generation,
            row.evaluations,
            format_real(row.best_f),
            format_real(row.sigma),
            opt_real(row.alpha),
            opt_real(row.b_gap),
            opt_real(row.z_dot),
            opt_real(row.conj),
        );
        if let Some(n) = eigen_dim {
            for i in 0..n {
                out.push(',');
                if let Some(d) = row.eigen.as_ref().and_then(|e| e.get(i)) {
                    out.push_str(&format_real(*d));
                }
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_trace(path: &Path, rows: &[TraceRow], eigen_dim: Option<usize>) -> Result<(), BenchError> {
    write_file(path, &trace_csv(rows, eigen_dim))
}

/// Reproducibility metadata written next to the CSVs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub invocation: Vec<String>,
    pub config: serde_json::Value,
    pub records: usize,
}

impl Manifest {
    pub fn new(invocation: Vec<String>, config: impl Serialize) -> Result<Self, BenchError> {
        Ok(Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            invocation,
            config: serde_json::to_value(config)?,
            records: 0,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ReportPaths {
    pub runs: PathBuf,
    pub summary: PathBuf,
    pub manifest: PathBuf,
    pub traces: Vec<PathBuf>,
}

/// Writes `runs.csv`, `summary.csv`, `manifest.json` and one
/// `traces/<tag>.csv` per traced run.
pub fn emit_reports(
    records: &[RunRecord],
    summaries: &[Summary],
    out_dir: &Path,
    manifest: &Manifest,
) -> Result<ReportPaths, BenchError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let runs = out_dir.join("runs.csv");
    write_file(&runs, &runs_csv(records))?;
    let summary = out_dir.join("summary.csv");
    write_file(&summary, &summary_csv(summaries))?;

    let mut traces = Vec::new();
    for r in records {
        if let Some(rows) = &r.trace {
            let path = out_dir.join("traces").join(format!("{}.csv", r.tag()));
            let eigen = rows.iter().any(|row| row.eigen.is_some()).then_some(r.dim);
            write_trace(&path, rows, eigen)?;
            traces.push(path);
        }
    }

    let mut timings = String::from("variant,problem,dim,rotated,run_index,wall_time_s\n");
    for r in records {
        let _ = writeln!(
            timings,
            "{},{},{},{},{},{}",
            r.variant,
            r.problem,
            r.dim,
            r.rotated,
            r.run_index,
            format_real(r.wall_time.as_secs_f64())
        );
    }
    write_file(&out_dir.join("timings.csv"), &timings)?;

    let manifest_path = out_dir.join("manifest.json");
    let mut m = manifest.clone();
    m.records = records.len();
    let json = serde_json::to_string_pretty(&m)?;
    write_file(&manifest_path, &(json + "\n"))?;

    Ok(ReportPaths {
        runs,
        summary,
        manifest: manifest_path,
        traces,
    })
}

/// Extra outputs of a diagnostics study: the median run's trace and the
/// per-generation medians across all runs.
pub fn emit_diagnostic_medians(records: &[RunRecord], out_dir: &Path) -> Result<(), BenchError> {
    let traced: Vec<&RunRecord> = records.iter().filter(|r| r.trace.is_some()).collect();
    let Some(mid) = median_run_index(&traced) else {
        return Ok(());
    };
    let median = traced[mid];
    let rows = median.trace.as_deref().unwrap_or_default();
    let eigen = rows.iter().any(|row| row.eigen.is_some()).then_some(median.dim);
    write_trace(&out_dir.join("median_run.csv"), rows, eigen)?;

    let traces: Vec<&[TraceRow]> = traced.iter().filter_map(|r| r.trace.as_deref()).collect();
    type Column = fn(&TraceRow) -> Option<f64>;
    let columns: [(&str, Column); 6] = [
        ("best_f", |r| Some(r.best_f)),
        ("sigma", |r| Some(r.sigma)),
        ("alpha", |r| r.alpha),
        ("b_gap", |r| r.b_gap),
        ("z_dot", |r| r.z_dot),
        ("conj", |r| r.conj),
    ];
    let medians: Vec<Vec<(u64, f64)>> = columns.iter().map(|(_, f)| per_generation_median(&traces, f)).collect();
    let longest = traces.iter().map(|t| t.len()).max().unwrap_or(0);
    let mut out = String::from("gen,best_f,sigma,alpha,b_gap,z_dot,conj\n");
    for i in 0..longest {
        let Some(generation) = traces.iter().find_map(|t| t.get(i)).map(|r| r.generation) else {
            continue;
        };
        out.push_str(&generation.to_string());
        for col in &medians {
            out.push(',');
            if let Some((_, m)) = col.iter().find(|(g, _)| *g == generation) {
                out.push_str(&format_real(*m));
            }
        }
        out.push('\n');
    }
    write_file(&out_dir.join("median_by_generation.csv"), &out)
}
