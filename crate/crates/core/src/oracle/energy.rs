use nalgebra::DVector;

use crate::curve::{Curve, Polyline};
use crate::error::{Error, Result};
use crate::ode::MetricField;

const GL5_NODES: [f64; 5] =
    [-0.906_179_845_938_664, -0.538_469_310_105_683_1, 0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Length of the straight segment `a → b` by five-point Gauss–Legendre.
pub fn segment_length<M: MetricField + ?Sized>(metric: &M, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let delta = b - a;
    let mut total = 0.0;
    for (node, w) in GL5_NODES.iter().zip(GL5_WEIGHTS) {
        let s = 0.5 * (1.0 + node);
        let p = a + &delta * s;
        let m = metric.metric_at(&p);
        total += w * delta.dot(&(&m * &delta)).max(0.0).sqrt();
    }
    0.5 * total
}

/// Waypoints at uniform parameter values with fixed endpoints.
#[derive(Debug, Clone)]
pub struct DiscreteCurve {
    points: Vec<DVector<f64>>,
}

impl DiscreteCurve {
    pub fn new(points: Vec<DVector<f64>>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidArgument("a discrete curve needs at least 3 waypoints".into()));
        }
        Ok(Self { points })
    }

    pub fn straight(x: &DVector<f64>, y: &DVector<f64>, waypoints: usize) -> Result<Self> {
        let p = waypoints.max(1);
        Self::new((0..p).map(|i| x + (y - x) * (i as f64 / (p - 1).max(1) as f64)).collect())
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn into_points(self) -> Vec<DVector<f64>> {
        self.points
    }

    fn dt(&self) -> f64 {
        1.0 / (self.points.len() - 1) as f64
    }

    /// `Σ_p Δc_pᵀ M(midpoint_p) Δc_p / Δt`.
    pub fn energy<M: MetricField + ?Sized>(&self, metric: &M) -> f64 {
        let dt = self.dt();
        self.points.windows(2).map(|w| segment_energy(metric, &w[0], &w[1], dt)).sum()
    }

    pub fn length<M: MetricField + ?Sized>(&self, metric: &M) -> f64 {
        self.points.windows(2).map(|w| segment_length(metric, &w[0], &w[1])).sum()
    }

    fn resample(&self, waypoints: usize) -> Self {
        let line = Polyline::new(self.points.clone());
        let points = (0..waypoints).map(|i| line.position(i as f64 / (waypoints - 1) as f64)).collect();
        Self { points }
    }
}

fn segment_energy<M: MetricField + ?Sized>(metric: &M, a: &DVector<f64>, b: &DVector<f64>, dt: f64) -> f64 {
    let delta = b - a;
    let mid = (a + b) * 0.5;
    delta.dot(&(metric.metric_at(&mid) * &delta)) / dt
}

#[derive(Debug, Clone)]
pub struct EnergyResult {
    pub curve: DiscreteCurve,
    pub length: f64,
    pub energy: f64,
    /// Accepted descent steps summed over all resolution levels.
    pub steps: usize,
}

/// Solves `tridiag(−1, 2, −1) u = g` in place (Thomas algorithm).
fn solve_laplacian(g: &mut [f64]) {
    let n = g.len();
    if n == 0 {
        return;
    }
    let mut c = vec![0.0; n];
    let mut denom = 2.0;
    c[0] = -1.0 / denom;
    g[0] /= denom;
    for i in 1..n {
        denom = 2.0 + c[i - 1];
        c[i] = -1.0 / denom;
        g[i] = (g[i] + g[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        g[i] -= c[i] * g[i + 1];
    }
}

/// Finite-difference gradient of the energy with respect to the interior
/// waypoints. Only the two segments touching a waypoint are re-evaluated.
fn energy_gradient<M: MetricField + ?Sized>(metric: &M, pts: &[DVector<f64>], dt: f64) -> Vec<DVector<f64>> {
    let d = pts[0].len();
    let mut grad = vec![DVector::zeros(d); pts.len()];
    let mut probe = pts[0].clone();
    for p in 1..pts.len() - 1 {
        for e in 0..d {
            let h = 1e-6 * (1.0 + pts[p][e].abs());
            let mut local = |v: f64| {
                probe.copy_from(&pts[p]);
                probe[e] = v;
                segment_energy(metric, &pts[p - 1], &probe, dt) + segment_energy(metric, &probe, &pts[p + 1], dt)
            };
            let plus = local(pts[p][e] + h);
            let minus = local(pts[p][e] - h);
            grad[p][e] = (plus - minus) / (2.0 * h);
        }
    }
    grad
}

fn descend<M: MetricField + ?Sized>(metric: &M, curve: &mut DiscreteCurve, iters: usize) -> usize {
    let dt = curve.dt();
    let n = curve.points.len();
    let d = curve.points[0].len();
    let mut energy = curve.energy(metric);
    let mut alpha: f64 = 1.0;
    let mut steps = 0;
    for _ in 0..iters {
        let grad = energy_gradient(metric, &curve.points, dt);
        // Sobolev-preconditioned direction: −(L/Δt)⁻¹ g per coordinate.
        let mut dir = vec![DVector::zeros(d); n];
        for e in 0..d {
            let mut col: Vec<f64> = (1..n - 1).map(|p| grad[p][e] * dt).collect();
            solve_laplacian(&mut col);
            for (p, v) in col.into_iter().enumerate() {
                dir[p + 1][e] = -v;
            }
        }
        let slope: f64 = grad.iter().zip(&dir).map(|(g, s)| g.dot(s)).sum();
        if !(slope < 0.0) {
            break;
        }
        alpha = (alpha * 2.0).min(1.0);
        let mut accepted = false;
        while alpha > 1e-12 {
            let trial: Vec<DVector<f64>> = curve.points.iter().zip(&dir).map(|(p, s)| p + s * alpha).collect();
            let e_trial = DiscreteCurve { points: trial.clone() }.energy(metric);
            if e_trial.is_finite() && e_trial <= energy + 1e-4 * alpha * slope {
                let decrease = energy - e_trial;
                curve.points = trial;
                energy = e_trial;
                accepted = true;
                steps += 1;
                if decrease <= 1e-13 * energy.abs().max(1e-300) {
                    return steps;
                }
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    steps
}

/// Minimizes the discrete energy over the interior waypoints, starting from
/// the straight line and refining from a coarse polyline to `waypoints`
/// points. `iters` bounds the descent steps at each resolution level.
pub fn oracle_energy_minimize<M: MetricField + ?Sized>(
    metric: &M,
    x: &DVector<f64>,
    y: &DVector<f64>,
    waypoints: usize,
    iters: usize,
) -> Result<EnergyResult> {
    if waypoints < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 waypoints, got {waypoints}")));
    }
    for v in [x, y] {
        if v.len() != metric.dim() {
            return Err(Error::DimensionMismatch { expected: metric.dim(), got: v.len() });
        }
    }
    let mut sizes = vec![waypoints];
    while *sizes.last().unwrap() > 8 {
        let next = sizes.last().unwrap().div_ceil(2);
        sizes.push(next);
    }
    sizes.reverse();

    let mut curve = DiscreteCurve::straight(x, y, sizes[0])?;
    let mut steps = 0;
    for (i, &size) in sizes.iter().enumerate() {
        if i > 0 {
            curve = curve.resample(size);
        }
        steps += descend(metric, &mut curve, iters);
    }
    let length = curve.length(metric);
    let energy = curve.energy(metric);
    Ok(EnergyResult { curve, length, energy, steps })
}
