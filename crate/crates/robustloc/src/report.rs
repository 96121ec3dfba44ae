//! CSV report files and the run manifest.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::Config;
use crate::error::{AppError, AppResult};
use crate::experiments::{EpsilonPoint, GridPoint, Method, MetricsReport};

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> AppResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| AppError::format(path, e))?;
    w.write_record(header).map_err(|e| AppError::format(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| AppError::format(path, e))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// `method,node,rank,error,fraction`: the empirical CDF of every method and unknown node.
pub fn write_cdf(path: &Path, report: &MetricsReport) -> AppResult<()> {
    let mut rows = Vec::new();
    for &m in &report.methods {
        for node in 0..report.num_unknowns {
            let mut errors = report.errors(m, node);
            errors.sort_by(f64::total_cmp);
            let n = errors.len();
            for (k, e) in errors.iter().enumerate() {
                let fraction = (k + 1) as f64 / n as f64;
                rows.push(vec![m.name().into(), node.to_string(), (k + 1).to_string(), e.to_string(), fraction.to_string()]);
            }
        }
    }
    write_rows(path, &strings(&["method", "node", "rank", "error", "fraction"]), &rows)
}

/// `epsilon,method,node,rmse,runs_ok,failures`.
pub fn write_rmse_vs_eps(path: &Path, points: &[EpsilonPoint]) -> AppResult<()> {
    let mut rows = Vec::new();
    for p in points {
        let r = &p.report;
        for &m in &r.methods {
            for node in 0..r.num_unknowns {
                rows.push(vec![
                    p.epsilon.to_string(),
                    m.name().into(),
                    node.to_string(),
                    opt(r.rmse(m, node)),
                    r.errors(m, node).len().to_string(),
                    r.failures(m).to_string(),
                ]);
            }
        }
    }
    write_rows(path, &strings(&["epsilon", "method", "node", "rmse", "runs_ok", "failures"]), &rows)
}

/// `x,y,rmse_<method>...` for the receiver error at each grid point.
pub fn write_spatial(path: &Path, points: &[GridPoint]) -> AppResult<()> {
    let methods: Vec<Method> = points.first().map(|p| p.report.methods.clone()).unwrap_or_default();
    let mut header = strings(&["x", "y"]);
    header.extend(methods.iter().map(|m| format!("rmse_{}", m.name())));
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            let mut row = vec![p.x.to_string(), p.y.to_string()];
            row.extend(methods.iter().map(|&m| opt(p.report.rmse(m, 0))));
            row
        })
        .collect();
    write_rows(path, &header, &rows)
}

/// `epsilon,p_d,p_fa,corrupted,detected,clean,false_alarms,runs_ok`, pooled over runs.
pub fn write_detection(path: &Path, points: &[EpsilonPoint]) -> AppResult<()> {
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            let d = p.report.detection().unwrap_or_default();
            vec![
                p.epsilon.to_string(),
                opt(d.p_d()),
                opt(d.p_fa()),
                d.corrupted.to_string(),
                d.detected.to_string(),
                d.clean.to_string(),
                d.false_alarms.to_string(),
                p.report.runs.iter().filter(|r| r.detection.is_some()).count().to_string(),
            ]
        })
        .collect();
    let header = strings(&["epsilon", "p_d", "p_fa", "corrupted", "detected", "clean", "false_alarms", "runs_ok"]);
    write_rows(path, &header, &rows)
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub kind: &'a str,
    pub version: &'a str,
    pub rng: &'a str,
    pub created_unix: u64,
    pub files: Vec<String>,
    pub attempted_runs: usize,
    pub failed_runs: usize,
    pub failures_by_method: Vec<(Method, usize)>,
    pub config: &'a Config,
}

/// Writes `manifest.json`; the creation time appears only here.
pub fn write_manifest(dir: &Path, kind: &str, files: &[&str], reports: &[&MetricsReport], config: &Config) -> AppResult<()> {
    let mut by_method: Vec<(Method, usize)> = Vec::new();
    for r in reports {
        for &m in &r.methods {
            match by_method.iter_mut().find(|(k, _)| *k == m) {
                Some((_, c)) => *c += r.failures(m),
                None => by_method.push((m, r.failures(m))),
            }
        }
    }
    let manifest = Manifest {
        kind,
        version: env!("CARGO_PKG_VERSION"),
        rng: robustloc_core::sim::RNG_ALGORITHM,
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        files: files.iter().map(|s| s.to_string()).collect(),
        attempted_runs: reports.iter().map(|r| r.attempts()).sum(),
        failed_runs: reports.iter().map(|r| r.total_failures()).sum(),
        failures_by_method: by_method,
        config,
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(|e| AppError::io(&path, e))
}
