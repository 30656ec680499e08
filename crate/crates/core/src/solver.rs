//! Mann fixed-point iteration with backtracking for the geodesic BVP.
//!
//! The unknowns are the knot accelerations `z̈_Δ` of the GP curve model.
//! Each iteration evaluates the geodesic right-hand side on the current
//! posterior mean and velocity at every knot, then moves the accelerations
//! toward those values with the largest step `α ∈ {1, 1/3, 1/9, 1/27}` that
//! does not increase the summed squared defect.

use std::sync::Arc;

use log::debug;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{GeodesicModel, KernelParams, Mesh, ModelBasis, DEFAULT_EPSILON};
use crate::ode::{geodesic_acceleration, MetricField};

/// Step sizes tried, in order, by the backtracking search.
pub const BACKTRACK_RATIOS: [f64; 4] = [1.0, 1.0 / 3.0, 1.0 / 9.0, 1.0 / 27.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// `α_j = 3^{-j}`, first non-increasing candidate wins.
    Backtracking,
    /// The classical `α_i = 1 / (i + 1)` schedule, no line search.
    Mann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub mesh_size: usize,
    pub epsilon: f64,
    /// Threshold on the squared per-knot defect.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Consecutive iterations in which no step decreased the error before
    /// the solve is abandoned.
    pub stagnation_limit: usize,
    pub step_rule: StepRule,
    /// Overrides the default `λ² = spacing / 2`.
    pub lambda_sq: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mesh_size: 10,
            epsilon: DEFAULT_EPSILON,
            tolerance: 0.1,
            max_iterations: 1000,
            stagnation_limit: 25,
            step_rule: StepRule::Backtracking,
            lambda_sq: None,
        }
    }
}

impl SolverConfig {
    pub fn with_mesh_size(mut self, n: usize) -> Self {
        self.mesh_size = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.mesh_size < 3 {
            return Err(Error::InvalidArgument(format!("mesh_size must be at least 3, got {}", self.mesh_size)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        if self.stagnation_limit < 1 {
            return Err(Error::InvalidArgument("stagnation_limit must be at least 1".into()));
        }
        if let Some(l) = self.lambda_sq {
            if !(l > 0.0) {
                return Err(Error::InvalidArgument(format!("lambda_sq must be positive, got {l}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FailureReason {
    MaxIterations,
    Stagnation,
    MetricFailure { knot: usize, t: f64, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    /// Number of iterates at which the fixed-point map was evaluated,
    /// counting the initial one. A solve that is already converged at the
    /// initial guess reports 1.
    pub iterations: usize,
    /// Squared defect `e_n` at each knot for the returned model.
    pub final_residuals: Vec<f64>,
    /// Step size used by each accepted update.
    pub alpha_history: Vec<f64>,
    /// `Σ_n e_n` for the initial iterate and after every update.
    pub error_history: Vec<f64>,
    /// Updates (0-based) where no candidate decreased the error.
    pub stagnation_iterations: Vec<usize>,
    pub failure_reason: Option<FailureReason>,
}

impl SolveReport {
    pub fn max_residual(&self) -> f64 {
        self.final_residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Starting point for the knot accelerations.
#[derive(Debug, Clone)]
pub enum InitialGuess {
    /// `z̈_Δ = 0`: the straight line.
    Straight,
    Accelerations(DMatrix<f64>),
    /// Waypoints at uniform parameter values from `x` to `y`; accelerations
    /// come from second differences interpolated onto the knots.
    Polyline(Vec<DVector<f64>>),
}

/// Builds the mesh, kernel and factorised Gram for a solve between `x` and `y`.
pub fn model_basis<M: MetricField + ?Sized>(
    metric: &M,
    x: &DVector<f64>,
    y: &DVector<f64>,
    config: &SolverConfig,
) -> Result<ModelBasis> {
    config.validate()?;
    let mesh = Mesh::uniform(config.mesh_size)?;
    let lambda_sq = config.lambda_sq.unwrap_or_else(|| mesh.default_lambda_sq());
    let amplitude = match metric.data_covariance() {
        Some(cov) => KernelParams::data_amplitude(&cov, x, y),
        None => DMatrix::identity(x.len(), x.len()),
    };
    let kernel = KernelParams::new(lambda_sq, amplitude)?;
    ModelBasis::new(mesh, kernel, config.epsilon)
}

/// Geodesic right-hand side at every knot of the current model, `N × D`.
pub fn fixed_point_step<M: MetricField + ?Sized>(model: &GeodesicModel, metric: &M) -> Result<DMatrix<f64>> {
    let pos = model.at_knots(0);
    let vel = model.at_knots(1);
    let knots = model.mesh().knots();
    let mut out = DMatrix::zeros(pos.nrows(), pos.ncols());
    for n in 0..pos.nrows() {
        let c = pos.row(n).transpose();
        let v = vel.row(n).transpose();
        let f = geodesic_acceleration(metric, &c, &v).map_err(|e| Error::MetricFailure {
            knot: n,
            t: knots[n],
            message: e.to_string(),
        })?;
        out.set_row(n, &f.transpose());
    }
    Ok(out)
}

fn row_sq_norms(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    (0..a.nrows()).map(|n| (a.row(n) - b.row(n)).norm_squared()).collect()
}

/// `e_n = ‖z̈_n − f(μ(t_n), μ̇(t_n))‖²` using the acceleration parameters.
pub fn residuals<M: MetricField + ?Sized>(model: &GeodesicModel, metric: &M) -> Result<Vec<f64>> {
    let f = fixed_point_step(model, metric)?;
    Ok(row_sq_norms(model.accelerations(), &f))
}

/// `‖μ̈(t_n) − f(μ(t_n), μ̇(t_n))‖²` using the posterior acceleration itself.
pub fn ode_residuals<M: MetricField + ?Sized>(model: &GeodesicModel, metric: &M) -> Result<Vec<f64>> {
    let f = fixed_point_step(model, metric)?;
    Ok(row_sq_norms(&model.at_knots(2), &f))
}

fn polyline_accelerations(points: &[DVector<f64>], mesh: &Mesh, dim: usize) -> Result<DMatrix<f64>> {
    let p = points.len();
    if p < 3 {
        return Err(Error::InvalidArgument("initial polyline needs at least 3 points".into()));
    }
    if let Some(bad) = points.iter().find(|q| q.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
    }
    let h = 1.0 / (p - 1) as f64;
    let mut acc: Vec<DVector<f64>> = Vec::with_capacity(p);
    for k in 1..p - 1 {
        acc.push((&points[k + 1] - &points[k] * 2.0 + &points[k - 1]) / (h * h));
    }
    // One-sided copies at the ends.
    acc.insert(0, acc[0].clone());
    acc.push(acc[acc.len() - 1].clone());

    let mut out = DMatrix::zeros(mesh.len(), dim);
    for (n, &t) in mesh.knots().iter().enumerate() {
        let s = t * (p - 1) as f64;
        let i = (s.floor() as usize).min(p - 2);
        let u = s - i as f64;
        let a = &acc[i] * (1.0 - u) + &acc[i + 1] * u;
        out.set_row(n, &a.transpose());
    }
    Ok(out)
}

pub fn solve_bvp<M: MetricField + ?Sized>(
    metric: &M,
    x: &DVector<f64>,
    y: &DVector<f64>,
    config: &SolverConfig,
) -> Result<(GeodesicModel, SolveReport)> {
    solve_bvp_from(metric, x, y, config, &InitialGuess::Straight)
}

pub fn solve_bvp_from<M: MetricField + ?Sized>(
    metric: &M,
    x: &DVector<f64>,
    y: &DVector<f64>,
    config: &SolverConfig,
    init: &InitialGuess,
) -> Result<(GeodesicModel, SolveReport)> {
    let d = metric.dim();
    for v in [x, y] {
        if v.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: v.len() });
        }
    }
    let basis = Arc::new(model_basis(metric, x, y, config)?);
    let initial = match init {
        InitialGuess::Straight => DMatrix::zeros(basis.mesh.len(), d),
        InitialGuess::Accelerations(a) => a.clone(),
        InitialGuess::Polyline(points) => polyline_accelerations(points, &basis.mesh, d)?,
    };
    let model = GeodesicModel::new(basis, x.clone(), y.clone(), initial)?;
    Ok(iterate(metric, model, config))
}

fn metric_failure(err: Error) -> FailureReason {
    match err {
        Error::MetricFailure { knot, t, message } => FailureReason::MetricFailure { knot, t, message },
        other => FailureReason::MetricFailure { knot: 0, t: f64::NAN, message: other.to_string() },
    }
}

fn iterate<M: MetricField + ?Sized>(
    metric: &M,
    mut model: GeodesicModel,
    config: &SolverConfig,
) -> (GeodesicModel, SolveReport) {
    let mut report = SolveReport {
        converged: false,
        iterations: 1,
        final_residuals: Vec::new(),
        alpha_history: Vec::new(),
        error_history: Vec::new(),
        stagnation_iterations: Vec::new(),
        failure_reason: None,
    };

    let mut target = match fixed_point_step(&model, metric) {
        Ok(f) => f,
        Err(e) => {
            report.failure_reason = Some(metric_failure(e));
            report.final_residuals = vec![f64::NAN; model.mesh().len()];
            return (model, report);
        }
    };
    let mut errors = row_sq_norms(model.accelerations(), &target);
    report.error_history.push(errors.iter().sum());

    let mut updates = 0usize;
    let mut stagnation = 0usize;
    loop {
        if errors.iter().all(|&e| e <= config.tolerance) {
            report.converged = true;
            break;
        }
        if updates >= config.max_iterations {
            report.failure_reason = Some(FailureReason::MaxIterations);
            break;
        }
        let current_sum: f64 = errors.iter().sum();
        let ratios: &[f64] = match config.step_rule {
            StepRule::Backtracking => &BACKTRACK_RATIOS,
            StepRule::Mann => &[],
        };
        let mann_alpha = [1.0 / (updates as f64 + 1.0)];
        let candidates = if ratios.is_empty() { &mann_alpha[..] } else { ratios };

        let mut accepted = None;
        let mut fallback = None;
        for (j, &alpha) in candidates.iter().enumerate() {
            let z = &target * alpha + model.accelerations() * (1.0 - alpha);
            let cand = model.with_accelerations(z);
            let is_last = j + 1 == candidates.len();
            match fixed_point_step(&cand, metric) {
                Ok(f) => {
                    let e = row_sq_norms(cand.accelerations(), &f);
                    let sum: f64 = e.iter().sum();
                    if config.step_rule == StepRule::Mann || sum <= current_sum {
                        accepted = Some((alpha, cand, f, e));
                        break;
                    }
                    if is_last {
                        fallback = Some(Ok((alpha, cand, f, e)));
                    }
                }
                Err(err) if is_last => fallback = Some(Err(err)),
                Err(_) => {}
            }
        }

        let (alpha, cand, f, e) = match (accepted, fallback) {
            (Some(step), _) => {
                stagnation = 0;
                step
            }
            (None, Some(Ok(step))) => {
                stagnation += 1;
                report.stagnation_iterations.push(updates);
                step
            }
            (None, Some(Err(err))) => {
                report.failure_reason = Some(metric_failure(err));
                break;
            }
            (None, None) => unreachable!("the last candidate always yields a fallback"),
        };
        model = cand;
        target = f;
        errors = e;
        updates += 1;
        report.iterations = updates + 1;
        report.alpha_history.push(alpha);
        report.error_history.push(errors.iter().sum());

        if stagnation >= config.stagnation_limit && !errors.iter().all(|&e| e <= config.tolerance) {
            report.failure_reason = Some(FailureReason::Stagnation);
            break;
        }
    }
    report.final_residuals = errors;
    debug!(
        "solve finished: converged={} iterations={} max_residual={:.3e}",
        report.converged,
        report.iterations,
        report.max_residual()
    );
    (model, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ConstantMetric;

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig { mesh_size: 2, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { tolerance: 0.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { max_iterations: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn config_rejects_unknown_fields() {
        assert!(serde_json::from_str::<SolverConfig>(r#"{"mesh_size": 12, "bogus": 1}"#).is_err());
        let c: SolverConfig = serde_json::from_str(r#"{"mesh_size": 12}"#).unwrap();
        assert_eq!(c.mesh_size, 12);
        assert_eq!(c.tolerance, 0.1);
    }

    #[test]
    fn flat_residuals() {
        let metric = ConstantMetric::identity(2);
        let x = DVector::from_vec(vec![0.0, 0.0]);
        let y = DVector::from_vec(vec![1.0, 2.0]);
        let basis = Arc::new(model_basis(&metric, &x, &y, &SolverConfig::default()).unwrap());
        let model = GeodesicModel::straight(basis, x, y).unwrap();
        assert!(residuals(&model, &metric).unwrap().iter().all(|&e| e == 0.0));
        let v = [0.3, -0.4];
        let z = DMatrix::from_fn(10, 2, |_, j| v[j]);
        let moved = model.with_accelerations(z);
        for e in residuals(&moved, &metric).unwrap() {
            assert!((e - 0.25).abs() < 1e-15);
        }
        assert_eq!(fixed_point_step(&moved, &metric).unwrap(), DMatrix::zeros(10, 2));
    }

    #[test]
    fn polyline_guess_recovers_parabola_accelerations() {
        let mesh = Mesh::uniform(6).unwrap();
        let pts: Vec<DVector<f64>> = (0..41)
            .map(|k| {
                let s = k as f64 / 40.0;
                DVector::from_vec(vec![s, s * s])
            })
            .collect();
        let acc = polyline_accelerations(&pts, &mesh, 2).unwrap();
        for n in 0..6 {
            assert!(acc[(n, 0)].abs() < 1e-9);
            assert!((acc[(n, 1)] - 2.0).abs() < 1e-9);
        }
    }
}
