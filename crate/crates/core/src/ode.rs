//! Right-hand side of the geodesic equation
//!
//! ```text
//! c̈ = -½ M(c)⁻¹ [ 2 (I ⊗ ċᵀ) ∂vec M/∂c ċ − (∂vec M/∂c)ᵀ (ċ ⊗ ċ) ]
//! ```
//!
//! `vec` stacks columns, so row `i + j·D` of the `D² × D` derivative holds
//! `∂M_ij/∂c`. Neither Kronecker product is formed.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, CholeskyFactor};

/// Products of the diagonal partials `P[d, e] = ∂M_dd/∂x_e` with a velocity.
#[derive(Debug, Clone)]
pub struct DiagonalContractions {
    pub diag: DVector<f64>,
    pub p_v: DVector<f64>,
    pub pt_sq: DVector<f64>,
}

/// A Riemannian metric on `R^D`.
pub trait MetricField: Send + Sync {
    fn dim(&self) -> usize;

    /// `M(x)`, symmetric positive definite.
    fn metric_at(&self, x: &DVector<f64>) -> DMatrix<f64>;

    /// `∂vec(M(x))/∂x`, a `D² × D` matrix whose column `e` is `vec(∂M/∂x_e)`.
    fn dvec_metric_at(&self, x: &DVector<f64>) -> DMatrix<f64>;

    /// For diagonal metrics: the diagonal entries and their partials
    /// `P[d, e] = ∂M_dd/∂x_e`.
    fn diagonal_at(&self, _x: &DVector<f64>) -> Option<(DVector<f64>, DMatrix<f64>)> {
        None
    }

    fn is_diagonal(&self) -> bool {
        false
    }

    /// For diagonal metrics: the diagonal `m`, `P ċ` and `Pᵀ (ċ ⊙ ċ)`, which
    /// is all the diagonal geodesic equation needs. The default forms `P`
    /// through [`MetricField::diagonal_at`].
    fn diagonal_contractions(&self, x: &DVector<f64>, c_dot: &DVector<f64>) -> Option<DiagonalContractions> {
        let (diag, partials) = self.diagonal_at(x)?;
        let p_v = &partials * c_dot;
        let pt_sq = partials.tr_mul(&c_dot.component_mul(c_dot));
        Some(DiagonalContractions { diag, p_v, pt_sq })
    }

    /// Sample covariance of the data the metric was learned from, if any.
    fn data_covariance(&self) -> Option<DMatrix<f64>> {
        None
    }
}

impl<T: MetricField + ?Sized> MetricField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn metric_at(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (**self).metric_at(x)
    }
    fn dvec_metric_at(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (**self).dvec_metric_at(x)
    }
    fn diagonal_at(&self, x: &DVector<f64>) -> Option<(DVector<f64>, DMatrix<f64>)> {
        (**self).diagonal_at(x)
    }
    fn is_diagonal(&self) -> bool {
        (**self).is_diagonal()
    }
    fn diagonal_contractions(&self, x: &DVector<f64>, c_dot: &DVector<f64>) -> Option<DiagonalContractions> {
        (**self).diagonal_contractions(x, c_dot)
    }
    fn data_covariance(&self) -> Option<DMatrix<f64>> {
        (**self).data_covariance()
    }
}

impl<T: MetricField + ?Sized> MetricField for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn metric_at(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (**self).metric_at(x)
    }
    fn dvec_metric_at(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (**self).dvec_metric_at(x)
    }
    fn diagonal_at(&self, x: &DVector<f64>) -> Option<(DVector<f64>, DMatrix<f64>)> {
        (**self).diagonal_at(x)
    }
    fn is_diagonal(&self) -> bool {
        (**self).is_diagonal()
    }
    fn diagonal_contractions(&self, x: &DVector<f64>, c_dot: &DVector<f64>) -> Option<DiagonalContractions> {
        (**self).diagonal_contractions(x, c_dot)
    }
    fn data_covariance(&self) -> Option<DMatrix<f64>> {
        (**self).data_covariance()
    }
}

/// General-path evaluation of the geodesic right-hand side.
pub fn geodesic_rhs<M: MetricField + ?Sized>(
    metric: &M,
    c: &DVector<f64>,
    c_dot: &DVector<f64>,
) -> Result<DVector<f64>> {
    let d = metric.dim();
    if c.len() != d || c_dot.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: c.len().min(c_dot.len()) });
    }
    let m = metric.metric_at(c);
    let jac = metric.dvec_metric_at(c);
    if m.iter().chain(jac.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteMetric);
    }

    // u = (∂vec M/∂c) ċ, a D²-vector: u[i + j·D] = Σ_e ∂M_ij/∂c_e ċ_e.
    let u = &jac * c_dot;
    let mut bracket = DVector::zeros(d);
    for row in 0..d {
        // [(I ⊗ ċᵀ) u]_row = Σ_k ċ_k u[k + row·D]
        let a: f64 = (0..d).map(|k| c_dot[k] * u[k + row * d]).sum();
        bracket[row] = 2.0 * a;
    }
    for e in 0..d {
        // [(∂vec M/∂c)ᵀ (ċ ⊗ ċ)]_e = ċᵀ (∂M/∂c_e) ċ
        let col = jac.column(e);
        let mut b = 0.0;
        for j in 0..d {
            let mut inner = 0.0;
            for i in 0..d {
                inner += col[i + j * d] * c_dot[i];
            }
            b += inner * c_dot[j];
        }
        bracket[e] -= b;
    }
    solve_metric(&m, &bracket).map(|v| v * -0.5)
}

fn solve_metric(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    match CholeskyFactor::new(m) {
        Ok(chol) => Ok(chol.solve(rhs)),
        Err(_) => Err(Error::MetricNotPositiveDefinite { smallest_eigenvalue: linalg::smallest_eigenvalue(m) }),
    }
}

/// `O(D²)` evaluation for diagonal metrics. Falls back to an error if the
/// metric does not expose its diagonal.
pub fn geodesic_rhs_diagonal<M: MetricField + ?Sized>(
    metric: &M,
    c: &DVector<f64>,
    c_dot: &DVector<f64>,
) -> Result<DVector<f64>> {
    let d = metric.dim();
    if c.len() != d || c_dot.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: c.len().min(c_dot.len()) });
    }
    let (diag, partials) =
        metric.diagonal_at(c).ok_or_else(|| Error::InvalidArgument("metric is not diagonal".into()))?;
    diagonal_rhs(&diag, &partials, c_dot)
}

pub(crate) fn diagonal_rhs(diag: &DVector<f64>, partials: &DMatrix<f64>, c_dot: &DVector<f64>) -> Result<DVector<f64>> {
    let p_v = partials * c_dot;
    let pt_sq = partials.tr_mul(&c_dot.component_mul(c_dot));
    contracted_rhs(&DiagonalContractions { diag: diag.clone(), p_v, pt_sq }, c_dot)
}

fn contracted_rhs(c: &DiagonalContractions, c_dot: &DVector<f64>) -> Result<DVector<f64>> {
    if c.diag.iter().chain(c.p_v.iter()).chain(c.pt_sq.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteMetric);
    }
    if let Some(min) = c.diag.iter().copied().reduce(f64::min) {
        if min <= 0.0 {
            return Err(Error::MetricNotPositiveDefinite { smallest_eigenvalue: min });
        }
    }
    Ok(DVector::from_fn(c.diag.len(), |k, _| -0.5 * (2.0 * c_dot[k] * c.p_v[k] - c.pt_sq[k]) / c.diag[k]))
}

/// Dispatches to the diagonal fast path when the metric supports it.
pub fn geodesic_acceleration<M: MetricField + ?Sized>(
    metric: &M,
    c: &DVector<f64>,
    c_dot: &DVector<f64>,
) -> Result<DVector<f64>> {
    if metric.is_diagonal() {
        let d = metric.dim();
        if c.len() != d || c_dot.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: c.len().min(c_dot.len()) });
        }
        if let Some(contractions) = metric.diagonal_contractions(c, c_dot) {
            return contracted_rhs(&contractions, c_dot);
        }
    }
    geodesic_rhs(metric, c, c_dot)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `M(x) = e^{2x}` on the real line.
    struct ExpMetric;

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

    #[test]
    fn one_dimensional_exponential_metric() {
        let f = geodesic_rhs(&ExpMetric, &DVector::from_element(1, 0.0), &DVector::from_element(1, 1.0)).unwrap();
        assert!((f[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_indefinite_metric() {
        struct Bad;
        impl MetricField for Bad {
            fn dim(&self) -> usize {
                2
            }
            fn metric_at(&self, _x: &DVector<f64>) -> DMatrix<f64> {
                DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5])
            }
            fn dvec_metric_at(&self, _x: &DVector<f64>) -> DMatrix<f64> {
                DMatrix::zeros(4, 2)
            }
        }
        let z = DVector::zeros(2);
        match geodesic_rhs(&Bad, &z, &z) {
            Err(Error::MetricNotPositiveDefinite { smallest_eigenvalue }) => {
                assert!((smallest_eigenvalue + 0.5).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
