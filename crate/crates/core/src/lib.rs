//! Geodesics on Riemannian manifolds with learned metrics.
//!
//! The boundary value problem is solved by fixed-point iteration on the knot
//! accelerations of a Gaussian-process curve model; see [`solver`].

pub mod curve;
pub mod datasets;
pub mod error;
pub mod ivp;
pub mod kernel;
pub mod linalg;
pub mod maps;
pub mod metrics;
pub mod ode;
pub mod oracle;
pub mod solver;

pub use curve::{Curve, FnCurve, Polyline, StraightLine};
pub use datasets::Dataset;
pub use error::{Error, Result};
pub use ivp::IvpTrajectory;
pub use kernel::{GeodesicModel, KernelParams, Mesh};
pub use maps::{curve_length, distance, expmap, logmap, speed_profile, SpeedProfile};
pub use metrics::{ConstantMetric, GeneratorMap, LocalDiagMetric, PullbackMetric};
pub use ode::{geodesic_rhs, MetricField};
pub use solver::{solve_bvp, solve_bvp_from, InitialGuess, SolveReport, SolverConfig};
