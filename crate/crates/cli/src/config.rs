//! Experiment configuration, one JSON document per run.

use std::path::{Path, PathBuf};

use geodesic_core::oracle::GridSpec;
use geodesic_core::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Dataset seed; `--seed` on the command line overrides it.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub dataset: Option<DatasetSpec>,
    #[serde(default)]
    pub metric: Option<MetricSpec>,
    #[serde(default)]
    pub solver: SolverConfig,
    pub experiment: Experiment,
    pub output: OutputSpec,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    Semicircle {
        n: usize,
        #[serde(default)]
        noise_var: f64,
        #[serde(default)]
        standardize: bool,
    },
    Curly {
        n: usize,
        #[serde(default)]
        noise_var: f64,
    },
    TwoMoons {
        n: usize,
        #[serde(default)]
        noise_var: f64,
    },
    Sphere {
        n: usize,
        #[serde(default)]
        noise_var: f64,
    },
    Hemisphere {
        n: usize,
        #[serde(default)]
        noise_var: f64,
    },
    /// CSV file, one point per row. Relative paths resolve against the
    /// config file's directory.
    File {
        path: PathBuf,
        #[serde(default)]
        header: bool,
    },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    /// `M = I` in the dataset's (or the points') dimension.
    Euclidean,
    /// Locally weighted diagonal metric fitted to the dataset.
    LocalDiagonal {
        #[serde(default = "default_sigma")]
        sigma: f64,
        #[serde(default = "default_rho")]
        rho: f64,
    },
    /// Pullback of `f(x, y) = [x, y, x² + y²]`.
    Quadratic,
    /// Pullback of an MLP generator loaded from JSON.
    Mlp {
        path: PathBuf,
        #[serde(default)]
        fd_step: Option<f64>,
        #[serde(default)]
        jitter: Option<f64>,
    },
}

fn default_sigma() -> f64 {
    geodesic_core::metrics::DEFAULT_SIGMA
}

fn default_rho() -> f64 {
    geodesic_core::metrics::DEFAULT_RHO
}

/// A point given by dataset row or by coordinates.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum PointSpec {
    Index { index: usize },
    Coords(Vec<f64>),
}

/// Dataset rows chosen explicitly or drawn at random.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum IndexSelection {
    Explicit(Vec<usize>),
    Random { random: usize },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    /// Geodesics from one point to each target.
    Geodesic {
        from: PointSpec,
        to: Vec<PointSpec>,
        #[serde(default = "default_curve_samples")]
        curve_samples: usize,
    },
    Pairwise {
        indices: IndexSelection,
    },
    Expmap {
        from: PointSpec,
        velocity: Vec<f64>,
        #[serde(default = "default_ivp_tol")]
        tol: f64,
        #[serde(default = "default_curve_samples")]
        curve_samples: usize,
    },
    Logmap {
        from: PointSpec,
        to: PointSpec,
        /// Integrate the returned velocity and report the endpoint error.
        #[serde(default)]
        round_trip: bool,
        #[serde(default = "default_ivp_tol")]
        tol: f64,
    },
    ConstantSpeed {
        from: PointSpec,
        to: PointSpec,
        #[serde(default = "default_mesh_sizes")]
        mesh_sizes: Vec<usize>,
        #[serde(default = "default_speed_samples")]
        speed_samples: usize,
    },
    MeshScaling {
        from: PointSpec,
        to: Vec<PointSpec>,
        #[serde(default = "default_mesh_sizes")]
        mesh_sizes: Vec<usize>,
        #[serde(default = "default_repeats")]
        repeats: usize,
    },
    /// Embeds the dataset in each dimension and refits the metric there.
    DimScaling {
        dims: Vec<usize>,
        #[serde(default)]
        embed_noise_var: f64,
        from: usize,
        to: IndexSelection,
    },
    /// Solver lengths against the energy and graph oracles.
    Verify {
        from: PointSpec,
        to: Vec<PointSpec>,
        #[serde(default = "default_waypoints")]
        waypoints: usize,
        #[serde(default = "default_oracle_iters")]
        iters: usize,
        #[serde(default)]
        grid: Option<GridSpec>,
    },
    /// Writes the configured dataset to `output.dataset`.
    Dataset {
        #[serde(default)]
        header: bool,
    },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Geodesic { .. } => "geodesic",
            Experiment::Pairwise { .. } => "pairwise",
            Experiment::Expmap { .. } => "expmap",
            Experiment::Logmap { .. } => "logmap",
            Experiment::ConstantSpeed { .. } => "constant_speed",
            Experiment::MeshScaling { .. } => "mesh_scaling",
            Experiment::DimScaling { .. } => "dim_scaling",
            Experiment::Verify { .. } => "verify",
            Experiment::Dataset { .. } => "dataset",
        }
    }
}

fn default_curve_samples() -> usize {
    101
}

fn default_speed_samples() -> usize {
    101
}

fn default_ivp_tol() -> f64 {
    geodesic_core::maps::DEFAULT_IVP_TOL
}

fn default_mesh_sizes() -> Vec<usize> {
    vec![5, 10, 25, 50, 100]
}

fn default_repeats() -> usize {
    1
}

fn default_waypoints() -> usize {
    65
}

fn default_oracle_iters() -> usize {
    2000
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// JSON summary of the run.
    pub summary: PathBuf,
    /// Long-format CSV of curve samples, if wanted.
    #[serde(default)]
    pub curves: Option<PathBuf>,
    /// Destination of the `dataset` experiment.
    #[serde(default)]
    pub dataset: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Parses a config, reporting the field path, line and column of errors.
    pub fn from_json_str(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::Config(format!("at `{path}` (line {}, column {}): {inner}", inner.line(), inner.column()))
        })
    }

    /// Reads a config and resolves its relative paths against the file's directory.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_json_str(&text)?;
        if let Some(dir) = path.parent() {
            config.resolve_paths(dir);
        }
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(DatasetSpec::File { path, .. }) = &mut self.dataset {
            fix(path);
        }
        if let Some(MetricSpec::Mlp { path, .. }) = &mut self.metric {
            fix(path);
        }
        fix(&mut self.output.summary);
        if let Some(p) = &mut self.output.curves {
            fix(p);
        }
        if let Some(p) = &mut self.output.dataset {
            fix(p);
        }
    }
}
