//! Curve length, speed profiles, distances and the exponential/logarithm maps.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::ivp::{integrate_geodesic, IvpTrajectory};
use crate::kernel::GeodesicModel;
use crate::ode::MetricField;
use crate::solver::{solve_bvp, SolveReport, SolverConfig};

pub const DEFAULT_QUAD_POINTS: usize = 32;
pub const DEFAULT_IVP_TOL: f64 = 1e-8;

const GL5_NODES: [f64; 5] =
    [-0.906_179_845_938_664, -0.538_469_310_105_683_1, 0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

fn speed_at<M: MetricField + ?Sized, C: Curve + ?Sized>(metric: &M, curve: &C, t: f64) -> Result<f64> {
    let c = curve.position(t);
    let v = curve.velocity(t);
    let m = metric.metric_at(&c);
    let q = v.dot(&(&m * &v));
    if !q.is_finite() {
        return Err(Error::CurveEvaluation { t, message: "non-finite metric along curve".into() });
    }
    if q < -1e-12 * (1.0 + v.norm_squared()) {
        return Err(Error::CurveEvaluation { t, message: format!("negative squared speed {q}") });
    }
    Ok(q.max(0.0).sqrt())
}

/// `∫₀¹ √(ċᵀ M(c) ċ) dt` by composite five-point Gauss–Legendre on
/// `quad_points` equal subintervals.
pub fn curve_length<M: MetricField + ?Sized, C: Curve + ?Sized>(
    metric: &M,
    curve: &C,
    quad_points: usize,
) -> Result<f64> {
    if quad_points < 2 {
        return Err(Error::InvalidArgument(format!("quad_points must be at least 2, got {quad_points}")));
    }
    let h = 1.0 / quad_points as f64;
    let mut total = 0.0;
    for i in 0..quad_points {
        let mid = (i as f64 + 0.5) * h;
        for (node, w) in GL5_NODES.iter().zip(GL5_WEIGHTS) {
            total += w * speed_at(metric, curve, mid + 0.5 * h * node)?;
        }
    }
    Ok(0.5 * h * total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedProfile {
    pub t: Vec<f64>,
    pub speeds: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (divisor `n − 1`).
    pub std: f64,
}

impl SpeedProfile {
    pub fn coefficient_of_variation(&self) -> f64 {
        if self.mean > 0.0 {
            self.std / self.mean
        } else {
            0.0
        }
    }
}

/// `√(ċᵀ M ċ)` at `samples` uniform parameter values including both ends.
pub fn speed_profile<M: MetricField + ?Sized, C: Curve + ?Sized>(
    metric: &M,
    curve: &C,
    samples: usize,
) -> Result<SpeedProfile> {
    if samples < 2 {
        return Err(Error::InvalidArgument(format!("samples must be at least 2, got {samples}")));
    }
    let t: Vec<f64> = (0..samples).map(|i| i as f64 / (samples - 1) as f64).collect();
    let speeds = t.iter().map(|&ti| speed_at(metric, curve, ti)).collect::<Result<Vec<_>>>()?;
    let n = samples as f64;
    let mean = speeds.iter().sum::<f64>() / n;
    let var = speeds.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(SpeedProfile { t, speeds, mean, std: var.sqrt() })
}

/// Geodesic from `x` with initial velocity `v`, integrated to `t = 1`.
pub fn expmap<M: MetricField + ?Sized>(
    metric: &M,
    x: &DVector<f64>,
    v: &DVector<f64>,
    tol: f64,
) -> Result<IvpTrajectory> {
    integrate_geodesic(metric, x, v, tol)
}

#[derive(Debug, Clone)]
pub struct LogMap {
    pub velocity: DVector<f64>,
    pub model: GeodesicModel,
    pub report: SolveReport,
}

/// Initial velocity `μ̇(0)` of the solved geodesic from `x` to `y`. The
/// report's `converged` flag must be checked by the caller.
pub fn logmap<M: MetricField + ?Sized>(
    metric: &M,
    x: &DVector<f64>,
    y: &DVector<f64>,
    config: &SolverConfig,
) -> Result<LogMap> {
    let (model, report) = solve_bvp(metric, x, y, config)?;
    let velocity = model.eval(0.0, 1)?;
    Ok(LogMap { velocity, model, report })
}

#[derive(Debug, Clone)]
pub struct Distance {
    pub length: f64,
    pub model: GeodesicModel,
    pub report: SolveReport,
}

/// Length of the solved geodesic, reported even when the solve did not
/// converge.
pub fn distance<M: MetricField + ?Sized>(
    metric: &M,
    x: &DVector<f64>,
    y: &DVector<f64>,
    config: &SolverConfig,
) -> Result<Distance> {
    let (model, report) = solve_bvp(metric, x, y, config)?;
    let length = curve_length(metric, &model, DEFAULT_QUAD_POINTS)?;
    Ok(Distance { length, model, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{FnCurve, StraightLine};
    use crate::metrics::ConstantMetric;
    use std::f64::consts::PI;

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        assert!((GL5_WEIGHTS.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn half_circle_length() {
        let m = ConstantMetric::identity(2);
        let c = FnCurve::new(
            2,
            |t: f64| DVector::from_vec(vec![(PI * t).cos(), (PI * t).sin()]),
            |t: f64| DVector::from_vec(vec![-PI * (PI * t).sin(), PI * (PI * t).cos()]),
        );
        assert!((curve_length(&m, &c, 32).unwrap() - PI).abs() < 1e-8);
    }

    #[test]
    fn straight_line_profile_is_flat() {
        let m = ConstantMetric::identity(3);
        let line = StraightLine::new(DVector::zeros(3), DVector::from_vec(vec![1.0, 2.0, 2.0]));
        let p = speed_profile(&m, &line, 11).unwrap();
        assert!((p.mean - 3.0).abs() < 1e-12);
        assert!(p.std < 1e-12);
        assert!(speed_profile(&m, &line, 1).is_err());
        assert!(curve_length(&m, &line, 1).is_err());
    }
}
