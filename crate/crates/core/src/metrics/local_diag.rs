//! Locally weighted diagonal inverse-covariance metric.
//!
//! `M_dd(x) = (Σ_n w_n(x) (x_nd − x_d)² + ρ)⁻¹` with Gaussian weights
//! `w_n(x) = exp(−‖x_n − x‖² / 2σ²)`. The weights are not normalised.

use nalgebra::{DMatrix, DVector};

use super::diagonal_partials_to_dvec;
use crate::error::{Error, Result};
use crate::linalg;
use crate::ode::{DiagonalContractions, MetricField};

pub const DEFAULT_SIGMA: f64 = 0.15;
pub const DEFAULT_RHO: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct LocalDiagMetric {
    data: DMatrix<f64>,
    /// `data` in row-major order for the per-point loops.
    rows: Vec<f64>,
    sigma: f64,
    rho: f64,
    covariance: DMatrix<f64>,
}

impl LocalDiagMetric {
    /// `data` holds one point per row.
    pub fn new(data: DMatrix<f64>, sigma: f64, rho: f64) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidArgument("metric data must be nonempty".into()));
        }
        if !(sigma > 0.0) || !(rho > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma and rho must be positive, got sigma={sigma}, rho={rho}"
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("metric data contains non-finite values".into()));
        }
        let covariance = linalg::sample_covariance(&data);
        let rows = data.transpose().as_slice().to_vec();
        Ok(Self { data, rows, sigma, rho, covariance })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Diagonal entries `M_dd(x)`.
    pub fn diagonal(&self, x: &DVector<f64>) -> DVector<f64> {
        let d = self.data.ncols();
        let inv_two_sigma_sq = 0.5 / (self.sigma * self.sigma);
        let mut s = vec![self.rho; d];
        let mut diff = vec![0.0; d];
        for row in self.rows.chunks_exact(d) {
            let mut dist2 = 0.0;
            for k in 0..d {
                diff[k] = row[k] - x[k];
                dist2 += diff[k] * diff[k];
            }
            let w = (-dist2 * inv_two_sigma_sq).exp();
            if w == 0.0 {
                continue;
            }
            for k in 0..d {
                s[k] += w * diff[k] * diff[k];
            }
        }
        DVector::from_iterator(d, s.into_iter().map(|v| 1.0 / v))
    }

    /// Diagonal entries and the partials `P[d, e] = ∂M_dd/∂x_e`.
    pub fn diagonal_with_partials(&self, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.data.ncols();
        let sigma_sq = self.sigma * self.sigma;
        let inv_two_sigma_sq = 0.5 / sigma_sq;
        let mut s = vec![self.rho; d];
        // Row-major: ds[k * d + e] = ∂S_k/∂x_e.
        let mut ds = vec![0.0; d * d];
        let mut diff = vec![0.0; d];
        for row in self.rows.chunks_exact(d) {
            let mut dist2 = 0.0;
            for k in 0..d {
                diff[k] = row[k] - x[k];
                dist2 += diff[k] * diff[k];
            }
            let w = (-dist2 * inv_two_sigma_sq).exp();
            if w == 0.0 {
                continue;
            }
            // ∂w/∂x_e = w (x_ne − x_e) / σ²
            for k in 0..d {
                let sq = diff[k] * diff[k];
                s[k] += w * sq;
                let wsq = w * sq / sigma_sq;
                let out = &mut ds[k * d..(k + 1) * d];
                for (o, de) in out.iter_mut().zip(&diff) {
                    *o += wsq * de;
                }
                out[k] -= 2.0 * w * diff[k];
            }
        }
        let m = DVector::from_iterator(d, s.iter().map(|v| 1.0 / v));
        let partials = DMatrix::from_fn(d, d, |k, e| -m[k] * m[k] * ds[k * d + e]);
        (m, partials)
    }

    /// `M(x)`, `P v` and `Pᵀ (v ⊙ v)` in two passes over the data without
    /// forming the `D × D` partials.
    pub fn contractions(&self, x: &DVector<f64>, v: &DVector<f64>) -> DiagonalContractions {
        let d = self.data.ncols();
        let sigma_sq = self.sigma * self.sigma;
        let inv_two_sigma_sq = 0.5 / sigma_sq;
        let mut s = vec![self.rho; d];
        // a_k = Σ w diff_k² (diff·v),  b_k = Σ w diff_k
        let mut a = vec![0.0; d];
        let mut b = vec![0.0; d];
        let mut weights = Vec::with_capacity(self.data.nrows());
        let mut diff = vec![0.0; d];
        for row in self.rows.chunks_exact(d) {
            let mut dist2 = 0.0;
            let mut dv = 0.0;
            for k in 0..d {
                diff[k] = row[k] - x[k];
                dist2 += diff[k] * diff[k];
                dv += diff[k] * v[k];
            }
            let w = (-dist2 * inv_two_sigma_sq).exp();
            weights.push(w);
            if w == 0.0 {
                continue;
            }
            for k in 0..d {
                let wd = w * diff[k];
                let wsq = wd * diff[k];
                s[k] += wsq;
                a[k] += wsq * dv;
                b[k] += wd;
            }
        }
        let m: Vec<f64> = s.iter().map(|v| 1.0 / v).collect();
        // Second pass: c_e = Σ w diff_e Σ_k m_k² v_k² diff_k²
        let coef: Vec<f64> = (0..d).map(|k| m[k] * m[k] * v[k] * v[k]).collect();
        let mut c = vec![0.0; d];
        for (row, &w) in self.rows.chunks_exact(d).zip(&weights) {
            if w == 0.0 {
                continue;
            }
            let mut g = 0.0;
            for k in 0..d {
                diff[k] = row[k] - x[k];
                g += coef[k] * diff[k] * diff[k];
            }
            let wg = w * g;
            for k in 0..d {
                c[k] += wg * diff[k];
            }
        }
        let p_v = DVector::from_fn(d, |k, _| -m[k] * m[k] * (a[k] / sigma_sq - 2.0 * b[k] * v[k]));
        let pt_sq = DVector::from_fn(d, |e, _| -(c[e] / sigma_sq - 2.0 * coef[e] * b[e]));
        DiagonalContractions { diag: DVector::from_vec(m), p_v, pt_sq }
    }

    /// `∂vec(M)/∂x` in the dense `D² × D` layout.
    pub fn derivative(&self, x: &DVector<f64>) -> DMatrix<f64> {
        diagonal_partials_to_dvec(&self.diagonal_with_partials(x).1)
    }
}

impl MetricField for LocalDiagMetric {
    fn dim(&self) -> usize {
        self.data.ncols()
    }

    fn metric_at(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.diagonal(x))
    }

    fn dvec_metric_at(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.derivative(x)
    }

    fn diagonal_at(&self, x: &DVector<f64>) -> Option<(DVector<f64>, DMatrix<f64>)> {
        Some(self.diagonal_with_partials(x))
    }

    fn is_diagonal(&self) -> bool {
        true
    }

    fn diagonal_contractions(&self, x: &DVector<f64>, c_dot: &DVector<f64>) -> Option<DiagonalContractions> {
        Some(self.contractions(x, c_dot))
    }

    fn data_covariance(&self) -> Option<DMatrix<f64>> {
        Some(self.covariance.clone())
    }
}
