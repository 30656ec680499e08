//! Pullback metrics `M(x) = J_μ(x)ᵀ J_μ(x) + J_σ(x)ᵀ J_σ(x)` of generator maps.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::finite_difference_dvec;
use crate::error::{Error, Result};
use crate::ode::MetricField;

pub const DEFAULT_FD_STEP: f64 = 1e-4;
pub const DEFAULT_JITTER: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Softplus,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            // log(1 + e^z) without overflow
            Activation::Softplus => z.max(0.0) + (-z.abs()).exp().ln_1p(),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Softplus => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Dense layer `act(W x + b)` with `W` stored as `out × in`.
#[derive(Debug, Clone)]
pub struct Layer {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(weights: DMatrix<f64>, bias: DVector<f64>, activation: Activation) -> Result<Self> {
        if weights.nrows() != bias.len() {
            return Err(Error::Generator(format!(
                "layer has {} output rows but bias of length {}",
                weights.nrows(),
                bias.len()
            )));
        }
        Ok(Self { weights, bias, activation })
    }
}

#[derive(Debug, Clone)]
pub struct MlpGenerator {
    mu: Vec<Layer>,
    sigma: Option<Vec<Layer>>,
    input_dim: usize,
    output_dim: usize,
}

fn check_stack(layers: &[Layer], input_dim: usize, output_dim: usize, name: &str) -> Result<()> {
    if layers.is_empty() {
        return Err(Error::Generator(format!("{name} network has no layers")));
    }
    let mut width = input_dim;
    for (i, layer) in layers.iter().enumerate() {
        if layer.weights.ncols() != width {
            return Err(Error::Generator(format!(
                "{name} layer {i} expects input width {} but previous width is {width}",
                layer.weights.ncols()
            )));
        }
        width = layer.weights.nrows();
    }
    if width != output_dim {
        return Err(Error::Generator(format!("{name} network outputs {width} values, expected {output_dim}")));
    }
    Ok(())
}

fn forward_with_jacobian(layers: &[Layer], x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let mut a = x.clone();
    let mut jac = DMatrix::identity(x.len(), x.len());
    for layer in layers {
        let z = &layer.weights * &a + &layer.bias;
        let mut local = layer.weights.clone();
        for (r, mut row) in local.row_iter_mut().enumerate() {
            row *= layer.activation.derivative(z[r]);
        }
        jac = local * jac;
        a = z.map(|v| layer.activation.apply(v));
    }
    (a, jac)
}

impl MlpGenerator {
    pub fn new(mu: Vec<Layer>, sigma: Option<Vec<Layer>>, input_dim: usize, output_dim: usize) -> Result<Self> {
        check_stack(&mu, input_dim, output_dim, "mu")?;
        if let Some(s) = &sigma {
            check_stack(s, input_dim, output_dim, "sigma")?;
        }
        Ok(Self { mu, sigma, input_dim, output_dim })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: GeneratorFile = serde_json::from_str(text)?;
        file.into_generator()
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let to_specs = |layers: &[Layer]| -> Vec<LayerSpec> {
            layers
                .iter()
                .map(|l| LayerSpec {
                    w: l.weights.row_iter().map(|r| r.iter().copied().collect()).collect(),
                    b: l.bias.iter().copied().collect(),
                    act: l.activation,
                })
                .collect()
        };
        let file = GeneratorFile {
            mu: to_specs(&self.mu),
            sigma: self.sigma.as_deref().map(to_specs),
            input_dim: self.input_dim,
            output_dim: self.output_dim,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn has_sigma(&self) -> bool {
        self.sigma.is_some()
    }

    pub fn mu(&self, x: &DVector<f64>) -> DVector<f64> {
        forward_with_jacobian(&self.mu, x).0
    }

    pub fn mu_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        forward_with_jacobian(&self.mu, x).1
    }

    pub fn sigma_jacobian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.sigma.as_ref().map(|s| forward_with_jacobian(s, x).1)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerSpec {
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
    act: Activation,
}

/// On-disk generator description.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorFile {
    mu: Vec<LayerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma: Option<Vec<LayerSpec>>,
    input_dim: usize,
    output_dim: usize,
}

impl GeneratorFile {
    fn into_generator(self) -> Result<MlpGenerator> {
        let convert = |specs: Vec<LayerSpec>| -> Result<Vec<Layer>> {
            specs
                .into_iter()
                .enumerate()
                .map(|(i, s)| {
                    let rows = s.w.len();
                    let cols = s.w.first().map_or(0, Vec::len);
                    if rows == 0 || cols == 0 || s.w.iter().any(|r| r.len() != cols) {
                        return Err(Error::Generator(format!("layer {i}: ragged or empty weight matrix")));
                    }
                    let flat: Vec<f64> = s.w.into_iter().flatten().collect();
                    Layer::new(DMatrix::from_row_slice(rows, cols, &flat), DVector::from_vec(s.b), s.act)
                })
                .collect()
        };
        let mu = convert(self.mu)?;
        let sigma = self.sigma.map(convert).transpose()?;
        MlpGenerator::new(mu, sigma, self.input_dim, self.output_dim)
    }
}

/// Generator maps from a latent space `R^d` into `R^{D_out}`.
#[derive(Debug, Clone)]
pub enum GeneratorMap {
    /// `f(x) = [x_1, …, x_d, Σ x_i²]`; for `d = 2` this is `[x, y, x² + y²]`.
    AnalyticQuadratic {
        input_dim: usize,
    },
    Mlp(MlpGenerator),
}

impl GeneratorMap {
    pub fn quadratic() -> Self {
        GeneratorMap::AnalyticQuadratic { input_dim: 2 }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            GeneratorMap::AnalyticQuadratic { input_dim } => *input_dim,
            GeneratorMap::Mlp(g) => g.input_dim,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            GeneratorMap::AnalyticQuadratic { input_dim } => input_dim + 1,
            GeneratorMap::Mlp(g) => g.output_dim,
        }
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            GeneratorMap::AnalyticQuadratic { input_dim } => {
                let mut out = DVector::zeros(input_dim + 1);
                out.rows_mut(0, *input_dim).copy_from(x);
                out[*input_dim] = x.norm_squared();
                out
            }
            GeneratorMap::Mlp(g) => g.mu(x),
        }
    }

    /// Jacobian of the mean map, `D_out × d`.
    pub fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match self {
            GeneratorMap::AnalyticQuadratic { input_dim } => {
                let d = *input_dim;
                let mut j = DMatrix::zeros(d + 1, d);
                for i in 0..d {
                    j[(i, i)] = 1.0;
                    j[(d, i)] = 2.0 * x[i];
                }
                j
            }
            GeneratorMap::Mlp(g) => g.mu_jacobian(x),
        }
    }

    pub fn sigma_jacobian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        match self {
            GeneratorMap::AnalyticQuadratic { .. } => None,
            GeneratorMap::Mlp(g) => g.sigma_jacobian(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    /// Exact derivative; only available for the analytic quadratic generator.
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone)]
pub struct PullbackMetric {
    generator: GeneratorMap,
    fd_step: f64,
    jitter: f64,
    mode: DerivativeMode,
}

impl PullbackMetric {
    pub fn new(generator: GeneratorMap) -> Self {
        let mode = match generator {
            GeneratorMap::AnalyticQuadratic { .. } => DerivativeMode::Analytic,
            GeneratorMap::Mlp(_) => DerivativeMode::FiniteDifference,
        };
        Self { generator, fd_step: DEFAULT_FD_STEP, jitter: DEFAULT_JITTER, mode }
    }

    pub fn with_fd_step(mut self, fd_step: f64) -> Result<Self> {
        if !(fd_step > 0.0) {
            return Err(Error::InvalidArgument(format!("fd_step must be positive, got {fd_step}")));
        }
        self.fd_step = fd_step;
        Ok(self)
    }

    /// Multiple of the identity added to `M` before it is inverted.
    pub fn with_jitter(mut self, jitter: f64) -> Result<Self> {
        if !(jitter >= 0.0) {
            return Err(Error::InvalidArgument(format!("jitter must be non-negative, got {jitter}")));
        }
        self.jitter = jitter;
        Ok(self)
    }

    pub fn with_derivative_mode(mut self, mode: DerivativeMode) -> Result<Self> {
        if mode == DerivativeMode::Analytic && !matches!(self.generator, GeneratorMap::AnalyticQuadratic { .. }) {
            return Err(Error::InvalidArgument(
                "analytic metric derivatives are only available for the quadratic generator".into(),
            ));
        }
        self.mode = mode;
        Ok(self)
    }

    pub fn generator(&self) -> &GeneratorMap {
        &self.generator
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    /// `J_μᵀ J_μ + J_σᵀ J_σ` without jitter.
    pub fn pullback_metric(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let j = self.generator.jacobian(x);
        let mut m = j.tr_mul(&j);
        if let Some(js) = self.generator.sigma_jacobian(x) {
            m += js.tr_mul(&js);
        }
        m
    }

    pub fn derivative_finite_difference(&self, x: &DVector<f64>, step: f64) -> DMatrix<f64> {
        finite_difference_dvec(|p| self.pullback_metric(p), x, step)
    }

    /// Exact `∂vec(M)/∂x` for the quadratic generator: `M = I + 4 x xᵀ`.
    pub fn derivative_analytic(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let GeneratorMap::AnalyticQuadratic { input_dim: d } = self.generator else {
            return None;
        };
        let mut out = DMatrix::zeros(d * d, d);
        for e in 0..d {
            for j in 0..d {
                for i in 0..d {
                    let mut v = 0.0;
                    if i == e {
                        v += x[j];
                    }
                    if j == e {
                        v += x[i];
                    }
                    out[(i + j * d, e)] = 4.0 * v;
                }
            }
        }
        Some(out)
    }

    pub fn pullback_metric_derivative(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match self.mode {
            DerivativeMode::Analytic => {
                self.derivative_analytic(x).expect("analytic mode is only constructible for the quadratic generator")
            }
            DerivativeMode::FiniteDifference => self.derivative_finite_difference(x, self.fd_step),
        }
    }
}

impl MetricField for PullbackMetric {
    fn dim(&self) -> usize {
        self.generator.input_dim()
    }

    fn metric_at(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut m = self.pullback_metric(x);
        for i in 0..m.nrows() {
            m[(i, i)] += self.jitter;
        }
        m
    }

    fn dvec_metric_at(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.pullback_metric_derivative(x)
    }
}
