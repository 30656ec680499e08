//! Concrete metric fields.

mod local_diag;
mod pullback;

pub use local_diag::{LocalDiagMetric, DEFAULT_RHO, DEFAULT_SIGMA};
pub use pullback::{
    Activation, DerivativeMode, GeneratorMap, Layer, MlpGenerator, PullbackMetric, DEFAULT_FD_STEP, DEFAULT_JITTER,
};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, CholeskyFactor};
use crate::ode::MetricField;

/// A position-independent metric. `ConstantMetric::identity(d)` is flat space.
#[derive(Debug, Clone)]
pub struct ConstantMetric {
    matrix: DMatrix<f64>,
    diagonal: bool,
}

impl ConstantMetric {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !linalg::is_symmetric(&matrix, 1e-12) {
            return Err(Error::InvalidArgument("constant metric must be symmetric".into()));
        }
        CholeskyFactor::new(&matrix).map_err(|_| Error::MetricNotPositiveDefinite {
            smallest_eigenvalue: linalg::smallest_eigenvalue(&matrix),
        })?;
        let n = matrix.nrows();
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || matrix[(i, j)] == 0.0));
        Ok(Self { matrix, diagonal })
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: DMatrix::identity(dim, dim), diagonal: true }
    }
}

impl MetricField for ConstantMetric {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn metric_at(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.matrix.clone()
    }

    fn dvec_metric_at(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::zeros(d * d, d)
    }

    fn diagonal_at(&self, _x: &DVector<f64>) -> Option<(DVector<f64>, DMatrix<f64>)> {
        if !self.diagonal {
            return None;
        }
        let d = self.dim();
        Some((self.matrix.diagonal(), DMatrix::zeros(d, d)))
    }

    fn is_diagonal(&self) -> bool {
        self.diagonal
    }
}

/// Scatters diagonal partials `P[d, e]` into the `D² × D` layout.
pub(crate) fn diagonal_partials_to_dvec(partials: &DMatrix<f64>) -> DMatrix<f64> {
    let d = partials.nrows();
    let mut out = DMatrix::zeros(d * d, d);
    for k in 0..d {
        for e in 0..d {
            out[(k + k * d, e)] = partials[(k, e)];
        }
    }
    out
}

/// Central finite differences of `M` in each coordinate, step `h·(1 + |x_e|)`.
pub fn finite_difference_dvec<F>(metric_at: F, x: &DVector<f64>, h: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    let d = x.len();
    let mut out = DMatrix::zeros(d * d, d);
    let mut xp = x.clone();
    for e in 0..d {
        let step = h * (1.0 + x[e].abs());
        xp[e] = x[e] + step;
        let plus = metric_at(&xp);
        xp[e] = x[e] - step;
        let minus = metric_at(&xp);
        xp[e] = x[e];
        let diff = (plus - minus) / (2.0 * step);
        // Column-major storage of `diff` is exactly vec(diff).
        out.column_mut(e).copy_from_slice(diff.as_slice());
    }
    out
}
