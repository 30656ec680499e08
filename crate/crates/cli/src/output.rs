//! Solve records, the JSON summary and the long-format curve CSV.

use std::fs;
use std::path::Path;
use std::time::Duration;

use geodesic_core::solver::FailureReason;
use geodesic_core::SolveReport;
use nalgebra::DVector;
use serde::Serialize;

use crate::error::CliError;

/// One boundary value solve as it appears in every summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveRecord {
    pub from: Vec<f64>,
    pub to: Vec<f64>,
    pub mesh_size: usize,
    /// Curve length, reported even when the solve failed.
    pub length: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Largest squared defect of the knot parameters.
    pub max_residual: Option<f64>,
    /// Largest squared defect of the posterior acceleration.
    pub max_ode_residual: Option<f64>,
    pub failure: Option<String>,
    pub wall_time_ms: f64,
}

impl SolveRecord {
    pub fn failed(
        from: &DVector<f64>,
        to: &DVector<f64>,
        mesh_size: usize,
        message: String,
        elapsed: Duration,
    ) -> Self {
        Self {
            from: from.iter().copied().collect(),
            to: to.iter().copied().collect(),
            mesh_size,
            length: None,
            converged: false,
            iterations: 0,
            max_residual: None,
            max_ode_residual: None,
            failure: Some(message),
            wall_time_ms: millis(elapsed),
        }
    }
}

pub fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn millis(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn describe_failure(report: &SolveReport) -> Option<String> {
    report.failure_reason.as_ref().map(|r| match r {
        FailureReason::MaxIterations => "max_iterations".to_string(),
        FailureReason::Stagnation => "stagnation".to_string(),
        FailureReason::MetricFailure { knot, t, message } => {
            format!("metric failure at knot {knot} (t = {t}): {message}")
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSample {
    pub t: f64,
    pub point: Vec<f64>,
    pub speed: f64,
}

/// Samples of one curve, keyed by a label such as `"0->17"` or `"N=25"`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub label: String,
    pub samples: Vec<CurveSample>,
}

/// Writes `curve,t,x0,…,x{D-1},speed`, one row per sample.
pub fn write_curves(path: &Path, curves: &[CurveTable]) -> Result<(), CliError> {
    ensure_parent(path)?;
    let dim = curves.iter().flat_map(|c| c.samples.first()).map(|s| s.point.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["curve".to_string(), "t".to_string()];
    header.extend((0..dim).map(|j| format!("x{j}")));
    header.push("speed".to_string());
    w.write_record(&header)?;
    for c in curves {
        for s in &c.samples {
            let mut row = vec![c.label.clone(), format!("{:e}", s.t)];
            row.extend(s.point.iter().map(|v| format!("{v:e}")));
            row.resize(dim + 2, String::new());
            row.push(format!("{:e}", s.speed));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary(path: &Path, summary: &serde_json::Value) -> Result<(), CliError> {
    ensure_parent(path)?;
    fs::write(path, serde_json::to_string_pretty(summary)? + "\n")?;
    Ok(())
}

pub fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(())
}
