#![allow(dead_code)]

use geodesic_core::datasets::{gen_semicircle, rng, Dataset};
use geodesic_core::{LocalDiagMetric, MetricField};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// `M(x) = e^{2x}` on the real line. Geodesics satisfy `e^{c(t)}` affine in `t`.
pub struct ExpMetric;

impl MetricField for ExpMetric {
    fn dim(&self) -> usize {
        1
    }
    fn metric_at(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, (2.0 * x[0]).exp())
    }
    fn dvec_metric_at(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, 2.0 * (2.0 * x[0]).exp())
    }
}

/// Closed-form geodesic of [`ExpMetric`] from `a` to `b`.
pub fn exp_metric_geodesic(a: f64, b: f64, t: f64) -> f64 {
    ((1.0 - t) * a.exp() + t * b.exp()).ln()
}

/// Conformal metric `(1 + x₀²) I` in the plane, with analytic derivative.
pub struct Conformal;

impl MetricField for Conformal {
    fn dim(&self) -> usize {
        2
    }
    fn metric_at(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(2, 2) * (1.0 + x[0] * x[0])
    }
    fn dvec_metric_at(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(4, 2);
        j[(0, 0)] = 2.0 * x[0];
        j[(3, 0)] = 2.0 * x[0];
        j
    }
}

/// Dense, non-diagonal metric `A(x)ᵀA(x) + I` with `A = [[1, x₀x₁], [sin x₀, 1 + x₁²]]`.
pub struct Tilted;

impl Tilted {
    fn a(x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, x[0] * x[1], x[0].sin(), 1.0 + x[1] * x[1]])
    }
}

impl MetricField for Tilted {
    fn dim(&self) -> usize {
        2
    }
    fn metric_at(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let a = Self::a(x);
        a.transpose() * a + DMatrix::identity(2, 2)
    }
    fn dvec_metric_at(&self, x: &DVector<f64>) -> DMatrix<f64> {
        geodesic_core::metrics::finite_difference_dvec(|p| self.metric_at(p), x, 1e-5)
    }
}

/// Geodesic right-hand side with both Kronecker products materialised.
pub fn naive_kronecker_rhs<M: MetricField + ?Sized>(metric: &M, c: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let d = c.len();
    let m = metric.metric_at(c);
    let j = metric.dvec_metric_at(c);
    let i_kron_vt = DMatrix::identity(d, d).kronecker(&v.transpose());
    let v_kron_v = v.kronecker(v);
    let bracket = &i_kron_vt * &j * v * 2.0 - j.transpose() * v_kron_v;
    m.lu().solve(&bracket).unwrap() * -0.5
}

pub fn semicircle() -> Dataset {
    gen_semicircle(200, 0.01, 42).unwrap()
}

pub fn semicircle_metric(sigma: f64) -> LocalDiagMetric {
    LocalDiagMetric::new(semicircle().points, sigma, 0.01).unwrap()
}

/// Data point closest to `p`.
pub fn nearest(data: &Dataset, p: &[f64]) -> DVector<f64> {
    let q = DVector::from_column_slice(p);
    (0..data.len()).map(|i| data.point(i)).min_by(|a, b| (a - &q).norm().total_cmp(&(b - &q).norm())).unwrap()
}

pub fn test_rng(seed: u64) -> ChaCha8Rng {
    rng(seed, 100)
}

pub fn random_vector(r: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(d, |_, _| r.random_range(lo..hi))
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
