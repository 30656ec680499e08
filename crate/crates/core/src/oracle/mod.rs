//! Brute-force geodesic references used for verification only.

mod energy;
mod graph;

pub use energy::{oracle_energy_minimize, segment_length, DiscreteCurve, EnergyResult};
pub use graph::{oracle_graph_distance, GraphOracle, GridSpec};
