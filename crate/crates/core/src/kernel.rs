//! Squared-exponential kernel with derivative cross-covariances and the
//! Gaussian-process curve model built on it.
//!
//! The curve prior is `GP(m(t), V ⊗ k(t, s))`. Observations are the two
//! boundary values `c(0) = x`, `c(1) = y` plus second derivatives `z̈_n` at
//! the mesh knots. Because the multi-output Gram matrix is `V ⊗ K` and every
//! cross-covariance row carries the same `V`, the amplitude cancels from the
//! posterior mean: only the `(N + 2) × (N + 2)` time Gram `K` is ever solved.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, CholeskyFactor};

/// Default jitter on the knot (acceleration) block of the time Gram.
pub const DEFAULT_EPSILON: f64 = 1e-7;

/// `∂^{m+n} k(t, s) / ∂t^m ∂s^n` for `k(t, s) = exp(-(t - s)² / (2λ²))`.
///
/// Accepts derivative orders up to 2 in each argument.
pub fn se_kernel_deriv(t: f64, s: f64, lambda_sq: f64, m: usize, n: usize) -> Result<f64> {
    if m > 2 || n > 2 {
        return Err(Error::InvalidArgument(format!("kernel derivative orders must be in 0..=2, got ({m}, {n})")));
    }
    if !(lambda_sq > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda_sq must be positive, got {lambda_sq}")));
    }
    Ok(se_deriv(t, s, lambda_sq, m, n))
}

/// Unchecked kernel derivative. With `r = t - s`, `∂_t = d/dr` and `∂_s = -d/dr`,
/// so the result is `(-1)^n g^{(m+n)}(r)` where `g(r) = exp(-r²/2ℓ)`.
#[inline]
pub(crate) fn se_deriv(t: f64, s: f64, l: f64, m: usize, n: usize) -> f64 {
    let r = t - s;
    let r2 = r * r;
    let g = (-0.5 * r2 / l).exp();
    let poly = match m + n {
        0 => 1.0,
        1 => -r / l,
        2 => (r2 - l) / (l * l),
        3 => (3.0 * r * l - r * r2) / (l * l * l),
        4 => (r2 * r2 - 6.0 * r2 * l + 3.0 * l * l) / (l * l * l * l),
        _ => unreachable!("derivative order above 4"),
    };
    if n % 2 == 1 {
        -poly * g
    } else {
        poly * g
    }
}

/// Evaluation knots `0 = t_0 < t_1 < … < t_{N-1} = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    knots: Vec<f64>,
}

impl Mesh {
    pub fn uniform(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidMesh(format!("need at least 3 knots, got {n}")));
        }
        let step = 1.0 / (n - 1) as f64;
        let mut knots: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
        knots[n - 1] = 1.0;
        Ok(Self { knots })
    }

    pub fn from_knots(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 3 {
            return Err(Error::InvalidMesh(format!("need at least 3 knots, got {}", knots.len())));
        }
        if knots[0] != 0.0 || knots[knots.len() - 1] != 1.0 {
            return Err(Error::InvalidMesh("first knot must be 0 and last knot 1".into()));
        }
        for (i, w) in knots.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidMesh(format!(
                    "knots must be strictly increasing (knot {} = {} follows {})",
                    i + 1,
                    w[1],
                    w[0]
                )));
            }
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    /// Smallest gap between neighbouring knots.
    pub fn min_spacing(&self) -> f64 {
        self.knots.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// Default squared length-scale: half the knot spacing.
    pub fn default_lambda_sq(&self) -> f64 {
        0.5 * self.min_spacing()
    }
}

/// Kernel hyper-parameters: squared length-scale and output amplitude `V`.
#[derive(Debug, Clone)]
pub struct KernelParams {
    lambda_sq: f64,
    amplitude: DMatrix<f64>,
}

impl KernelParams {
    pub fn new(lambda_sq: f64, amplitude: DMatrix<f64>) -> Result<Self> {
        if !(lambda_sq > 0.0) || !lambda_sq.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda_sq must be positive, got {lambda_sq}")));
        }
        if !linalg::is_symmetric(&amplitude, 1e-12) {
            return Err(Error::InvalidArgument("amplitude V must be symmetric".into()));
        }
        CholeskyFactor::new(&amplitude).map_err(|_| {
            Error::InvalidArgument(format!(
                "amplitude V must be positive definite (smallest eigenvalue {:e})",
                linalg::smallest_eigenvalue(&amplitude)
            ))
        })?;
        Ok(Self { lambda_sq, amplitude })
    }

    pub fn isotropic(lambda_sq: f64, dim: usize) -> Result<Self> {
        Self::new(lambda_sq, DMatrix::identity(dim, dim))
    }

    /// `V = [(a - b)ᵀ S (a - b)] · S` with `S` the sample covariance of the
    /// data behind the metric. Falls back to the identity when the rule does
    /// not produce a positive-definite matrix (e.g. `a = b`).
    pub fn data_amplitude(covariance: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> DMatrix<f64> {
        let d = a - b;
        let scale = (d.transpose() * covariance * &d)[(0, 0)];
        let v = covariance * scale;
        if scale > 0.0 && scale.is_finite() && CholeskyFactor::new(&v).is_ok() {
            v
        } else {
            DMatrix::identity(a.len(), a.len())
        }
    }

    pub fn lambda_sq(&self) -> f64 {
        self.lambda_sq
    }

    pub fn amplitude(&self) -> &DMatrix<f64> {
        &self.amplitude
    }

    pub fn dim(&self) -> usize {
        self.amplitude.nrows()
    }
}

/// The regularised time Gram and its factors.
#[derive(Debug, Clone)]
pub struct GramFactorization {
    time_gram: DMatrix<f64>,
    time_gram_factor: CholeskyFactor,
    v_factor: CholeskyFactor,
    epsilon: f64,
}

impl GramFactorization {
    /// Rows/cols ordered `[t = 0, t = 1, t_0, …, t_{N-1}]`.
    pub fn time_gram(&self) -> &DMatrix<f64> {
        &self.time_gram
    }

    pub fn time_gram_factor(&self) -> &CholeskyFactor {
        &self.time_gram_factor
    }

    pub fn v_factor(&self) -> &CholeskyFactor {
        &self.v_factor
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.time_gram_factor.solve(rhs)
    }
}

const BOUNDARY: [f64; 2] = [0.0, 1.0];

/// Unregularised time Gram over boundary values and knot accelerations.
pub fn time_gram(mesh: &Mesh, lambda_sq: f64) -> DMatrix<f64> {
    let n = mesh.len();
    let knots = mesh.knots();
    // (location, derivative order) per observation row.
    let obs: Vec<(f64, usize)> = BOUNDARY.iter().map(|&b| (b, 0)).chain(knots.iter().map(|&t| (t, 2))).collect();
    DMatrix::from_fn(n + 2, n + 2, |i, j| {
        let (ti, oi) = obs[i];
        let (tj, oj) = obs[j];
        se_deriv(ti, tj, lambda_sq, oi, oj)
    })
}

pub fn build_gram(mesh: &Mesh, kernel: &KernelParams, epsilon: f64) -> Result<GramFactorization> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let mut gram = time_gram(mesh, kernel.lambda_sq());
    for i in 2..gram.nrows() {
        gram[(i, i)] += epsilon;
    }
    let time_gram_factor = CholeskyFactor::new(&gram)?;
    let v_factor = CholeskyFactor::new(kernel.amplitude())?;
    Ok(GramFactorization { time_gram: gram, time_gram_factor, v_factor, epsilon })
}

/// Cross-covariance row between `d^order c / dt^order` at `t` and the observations.
pub fn cross_covariance(t: f64, mesh: &Mesh, lambda_sq: f64, order: usize) -> DVector<f64> {
    let n = mesh.len();
    let mut row = DVector::zeros(n + 2);
    for (j, &b) in BOUNDARY.iter().enumerate() {
        row[j] = se_deriv(t, b, lambda_sq, order, 0);
    }
    for (j, &tn) in mesh.knots().iter().enumerate() {
        row[j + 2] = se_deriv(t, tn, lambda_sq, order, 2);
    }
    row
}

/// Time-domain regression weights `w(t) = K⁻¹ k_order(t, ·)`.
pub fn posterior_weights(
    t: f64,
    mesh: &Mesh,
    kernel: &KernelParams,
    gram: &GramFactorization,
    order: usize,
) -> Result<DVector<f64>> {
    if order > 2 {
        return Err(Error::InvalidArgument(format!("posterior order must be 0..=2, got {order}")));
    }
    Ok(gram.solve(&cross_covariance(t, mesh, kernel.lambda_sq(), order)))
}

/// Weight rows at every knot for orders 0, 1, 2; each table is `N × (N + 2)`.
#[derive(Debug, Clone)]
pub struct WeightTable {
    tables: [DMatrix<f64>; 3],
}

impl WeightTable {
    pub fn build(mesh: &Mesh, kernel: &KernelParams, gram: &GramFactorization) -> Self {
        let n = mesh.len();
        let lambda_sq = kernel.lambda_sq();
        let tables = [0, 1, 2].map(|order| {
            let mut rhs = DMatrix::zeros(n + 2, n);
            for (col, &t) in mesh.knots().iter().enumerate() {
                rhs.set_column(col, &cross_covariance(t, mesh, lambda_sq, order));
            }
            gram.time_gram_factor().solve_matrix(&rhs).transpose()
        });
        Self { tables }
    }

    pub fn order(&self, order: usize) -> &DMatrix<f64> {
        &self.tables[order]
    }
}

/// Everything about the curve model that is fixed for one solve.
#[derive(Debug, Clone)]
pub struct ModelBasis {
    pub mesh: Mesh,
    pub kernel: KernelParams,
    pub gram: GramFactorization,
    pub weights: WeightTable,
}

impl ModelBasis {
    pub fn new(mesh: Mesh, kernel: KernelParams, epsilon: f64) -> Result<Self> {
        let gram = build_gram(&mesh, &kernel, epsilon)?;
        let weights = WeightTable::build(&mesh, &kernel, &gram);
        Ok(Self { mesh, kernel, gram, weights })
    }
}

/// Posterior-mean curve `μ(t)` of the GP conditioned on boundary values and
/// knot accelerations.
#[derive(Debug, Clone)]
pub struct GeodesicModel {
    basis: Arc<ModelBasis>,
    start: DVector<f64>,
    end: DVector<f64>,
    accelerations: DMatrix<f64>,
}

impl GeodesicModel {
    pub fn new(
        basis: Arc<ModelBasis>,
        start: DVector<f64>,
        end: DVector<f64>,
        accelerations: DMatrix<f64>,
    ) -> Result<Self> {
        let d = start.len();
        if end.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: end.len() });
        }
        if basis.kernel.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: basis.kernel.dim() });
        }
        if accelerations.nrows() != basis.mesh.len() || accelerations.ncols() != d {
            return Err(Error::InvalidArgument(format!(
                "accelerations must be {}×{}, got {}×{}",
                basis.mesh.len(),
                d,
                accelerations.nrows(),
                accelerations.ncols()
            )));
        }
        Ok(Self { basis, start, end, accelerations })
    }

    /// Model with zero accelerations, i.e. the straight-line prior mean.
    pub fn straight(basis: Arc<ModelBasis>, start: DVector<f64>, end: DVector<f64>) -> Result<Self> {
        let acc = DMatrix::zeros(basis.mesh.len(), start.len());
        Self::new(basis, start, end, acc)
    }

    pub fn with_accelerations(&self, accelerations: DMatrix<f64>) -> Self {
        debug_assert_eq!(accelerations.shape(), self.accelerations.shape());
        Self { accelerations, ..self.clone() }
    }

    pub fn basis(&self) -> &Arc<ModelBasis> {
        &self.basis
    }

    pub fn mesh(&self) -> &Mesh {
        &self.basis.mesh
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.basis.kernel
    }

    pub fn gram(&self) -> &GramFactorization {
        &self.basis.gram
    }

    pub fn start(&self) -> &DVector<f64> {
        &self.start
    }

    pub fn end(&self) -> &DVector<f64> {
        &self.end
    }

    pub fn dim(&self) -> usize {
        self.start.len()
    }

    /// Knot accelerations `z̈_Δ`, one row per knot.
    pub fn accelerations(&self) -> &DMatrix<f64> {
        &self.accelerations
    }

    fn prior_mean(&self, t: f64, order: usize) -> DVector<f64> {
        match order {
            0 => &self.start + (&self.end - &self.start) * t,
            1 => &self.end - &self.start,
            _ => DVector::zeros(self.dim()),
        }
    }

    /// Observation residuals `[x - m(0); y - m(1); z̈_Δ - m̈(Δ)]`, `(N + 2) × D`.
    fn residual_stack(&self) -> DMatrix<f64> {
        let n = self.mesh().len();
        let d = self.dim();
        let mut stack = DMatrix::zeros(n + 2, d);
        let r0 = &self.start - self.prior_mean(0.0, 0);
        let r1 = &self.end - self.prior_mean(1.0, 0);
        stack.set_row(0, &r0.transpose());
        stack.set_row(1, &r1.transpose());
        stack.rows_mut(2, n).copy_from(&self.accelerations);
        stack
    }

    /// `μ(t)`, `μ̇(t)` or `μ̈(t)` for `order` 0, 1, 2.
    pub fn eval(&self, t: f64, order: usize) -> Result<DVector<f64>> {
        let w = posterior_weights(t, self.mesh(), self.kernel(), self.gram(), order)?;
        Ok(self.prior_mean(t, order) + self.residual_stack().transpose() * w)
    }

    /// Posterior quantity of the given order at every knot (`N × D`), using
    /// the cached weight table.
    pub fn at_knots(&self, order: usize) -> DMatrix<f64> {
        let stack = self.residual_stack();
        let mut out = self.basis.weights.order(order) * stack;
        for (i, &t) in self.mesh().knots().iter().enumerate() {
            let m = self.prior_mean(t, order);
            for j in 0..self.dim() {
                out[(i, j)] += m[j];
            }
        }
        out
    }
}
