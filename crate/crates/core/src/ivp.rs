//! Adaptive Dormand–Prince 5(4) integration of the geodesic equation.

use nalgebra::DVector;

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::ode::{geodesic_acceleration, MetricField};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights (equal to the last row of `A`, FSAL).
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

const MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct IvpSample {
    pub t: f64,
    pub position: DVector<f64>,
    pub velocity: DVector<f64>,
    pub acceleration: DVector<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct IntegratorStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Largest scaled error estimate among accepted steps (≤ 1 by construction).
    pub max_error_estimate: f64,
}

/// Dense geodesic trajectory over `[0, 1]`, cubic Hermite between samples.
#[derive(Debug, Clone)]
pub struct IvpTrajectory {
    samples: Vec<IvpSample>,
    stats: IntegratorStats,
}

impl IvpTrajectory {
    pub fn samples(&self) -> &[IvpSample] {
        &self.samples
    }

    pub fn stats(&self) -> &IntegratorStats {
        &self.stats
    }

    pub fn endpoint(&self) -> &DVector<f64> {
        &self.samples.last().expect("trajectory has samples").position
    }

    pub fn end_velocity(&self) -> &DVector<f64> {
        &self.samples.last().expect("trajectory has samples").velocity
    }

    fn locate(&self, t: f64) -> (usize, f64, f64) {
        let t = t.clamp(0.0, 1.0);
        let idx = self.samples.partition_point(|s| s.t <= t);
        let i = idx.saturating_sub(1).min(self.samples.len().saturating_sub(2));
        let h = self.samples[i + 1].t - self.samples[i].t;
        (i, h, (t - self.samples[i].t) / h)
    }
}

fn hermite(p0: &DVector<f64>, d0: &DVector<f64>, p1: &DVector<f64>, d1: &DVector<f64>, h: f64, u: f64) -> DVector<f64> {
    let u2 = u * u;
    let u3 = u2 * u;
    let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    let h10 = u3 - 2.0 * u2 + u;
    let h01 = -2.0 * u3 + 3.0 * u2;
    let h11 = u3 - u2;
    p0 * h00 + d0 * (h10 * h) + p1 * h01 + d1 * (h11 * h)
}

impl Curve for IvpTrajectory {
    fn dim(&self) -> usize {
        self.samples[0].position.len()
    }

    fn position(&self, t: f64) -> DVector<f64> {
        if self.samples.len() == 1 {
            return self.samples[0].position.clone();
        }
        let (i, h, u) = self.locate(t);
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        hermite(&a.position, &a.velocity, &b.position, &b.velocity, h, u)
    }

    fn velocity(&self, t: f64) -> DVector<f64> {
        if self.samples.len() == 1 {
            return self.samples[0].velocity.clone();
        }
        let (i, h, u) = self.locate(t);
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        hermite(&a.velocity, &a.acceleration, &b.velocity, &b.acceleration, h, u)
    }
}

/// State is `[position; velocity]`.
fn rhs<M: MetricField + ?Sized>(metric: &M, t: f64, state: &DVector<f64>) -> Result<DVector<f64>> {
    let d = state.len() / 2;
    let c = state.rows(0, d).into_owned();
    let v = state.rows(d, d).into_owned();
    let a = geodesic_acceleration(metric, &c, &v).map_err(|e| Error::CurveEvaluation { t, message: e.to_string() })?;
    let mut out = DVector::zeros(2 * d);
    out.rows_mut(0, d).copy_from(&v);
    out.rows_mut(d, d).copy_from(&a);
    Ok(out)
}

/// Integrates `c̈ = f(c, ċ)` from `(x, v)` over `t ∈ [0, 1]` with absolute
/// and relative tolerance `tol`.
pub fn integrate_geodesic<M: MetricField + ?Sized>(
    metric: &M,
    x: &DVector<f64>,
    v: &DVector<f64>,
    tol: f64,
) -> Result<IvpTrajectory> {
    let d = metric.dim();
    if x.len() != d || v.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len().min(v.len()) });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let mut state = DVector::zeros(2 * d);
    state.rows_mut(0, d).copy_from(x);
    state.rows_mut(d, d).copy_from(v);

    let mut t = 0.0f64;
    let mut k0 = rhs(metric, t, &state)?;
    let mut samples =
        vec![IvpSample { t, position: x.clone(), velocity: v.clone(), acceleration: k0.rows(d, d).into_owned() }];
    let mut stats = IntegratorStats::default();

    // Initial step from the size of the derivative.
    let scale0 = state.iter().map(|s| tol + tol * s.abs()).collect::<Vec<_>>();
    let dnorm = (k0.iter().zip(&scale0).map(|(k, s)| (k / s).powi(2)).sum::<f64>() / (2 * d) as f64).sqrt();
    let mut h = if dnorm > 1e-5 { (0.01 / dnorm).min(0.1) } else { 0.1 };

    let mut k = vec![DVector::zeros(2 * d); 7];
    while t < 1.0 {
        if stats.accepted_steps + stats.rejected_steps > MAX_STEPS {
            return Err(Error::StepUnderflow { t });
        }
        if h < 1e-14 {
            return Err(Error::StepUnderflow { t });
        }
        let last = t + h >= 1.0;
        if last {
            h = 1.0 - t;
        }
        k[0] = k0.clone();
        let mut stage_failed = None;
        for s in 1..7 {
            let mut y = state.clone();
            for (j, a) in A[s].iter().enumerate().take(s) {
                if *a != 0.0 {
                    y.axpy(h * a, &k[j], 1.0);
                }
            }
            match rhs(metric, t + C[s] * h, &y) {
                Ok(v) => k[s] = v,
                Err(e) => {
                    stage_failed = Some(e);
                    break;
                }
            }
        }
        if stage_failed.is_some() {
            // Shrink and retry; persistent failure ends in underflow.
            stats.rejected_steps += 1;
            h *= 0.25;
            continue;
        }
        let mut y5 = state.clone();
        let mut err = DVector::zeros(2 * d);
        for s in 0..7 {
            if B5[s] != 0.0 {
                y5.axpy(h * B5[s], &k[s], 1.0);
            }
            err.axpy(h * (B5[s] - B4[s]), &k[s], 1.0);
        }
        let err_norm = (err
            .iter()
            .zip(state.iter().zip(y5.iter()))
            .map(|(e, (a, b))| {
                let sc = tol + tol * a.abs().max(b.abs());
                (e / sc).powi(2)
            })
            .sum::<f64>()
            / (2 * d) as f64)
            .sqrt();

        if err_norm <= 1.0 {
            t = if last { 1.0 } else { t + h };
            state = y5;
            k0 = k[6].clone();
            stats.accepted_steps += 1;
            stats.max_error_estimate = stats.max_error_estimate.max(err_norm);
            samples.push(IvpSample {
                t,
                position: state.rows(0, d).into_owned(),
                velocity: state.rows(d, d).into_owned(),
                acceleration: k0.rows(d, d).into_owned(),
            });
            let factor = if err_norm == 0.0 { 5.0 } else { (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        } else {
            stats.rejected_steps += 1;
            h *= (0.9 * err_norm.powf(-0.2)).clamp(0.1, 1.0);
        }
    }
    Ok(IvpTrajectory { samples, stats })
}
