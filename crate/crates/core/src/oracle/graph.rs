use std::collections::HashMap;

use nalgebra::DVector;
use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::MetricField;

/// Regular grid over an axis-aligned box.
///
/// Level 0 has `per_dim` nodes per axis; level `l` halves the spacing, so
/// every coarser node is also a finer node. The graph is the union of the
/// k-nearest-neighbour graphs of levels `0..levels`, which means adding a
/// level only adds nodes and edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub per_dim: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_levels")]
    pub levels: usize,
}

fn default_k() -> usize {
    32
}

fn default_levels() -> usize {
    1
}

impl GridSpec {
    /// Bounding box of `points` padded by `margin` on every side.
    pub fn around(points: &[DVector<f64>], margin: f64, per_dim: usize) -> Result<Self> {
        let first = points.first().ok_or_else(|| Error::InvalidArgument("no points to bound".into()))?;
        let mut lo: Vec<f64> = first.iter().copied().collect();
        let mut hi = lo.clone();
        for p in points {
            for (j, v) in p.iter().enumerate() {
                lo[j] = lo[j].min(*v);
                hi[j] = hi[j].max(*v);
            }
        }
        for j in 0..lo.len() {
            lo[j] -= margin;
            hi[j] += margin;
        }
        Ok(Self { lo, hi, per_dim, k: default_k(), levels: default_levels() })
    }

    pub fn refined(&self) -> Self {
        Self { levels: self.levels + 1, ..self.clone() }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.lo.len() != dim || self.hi.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: self.lo.len().min(self.hi.len()) });
        }
        if self.lo.iter().zip(&self.hi).any(|(l, h)| !(h > l)) {
            return Err(Error::InvalidArgument("grid box must have hi > lo in every dimension".into()));
        }
        if self.per_dim < 2 || self.k == 0 || self.levels == 0 {
            return Err(Error::InvalidArgument("grid needs per_dim ≥ 2, k ≥ 1 and levels ≥ 1".into()));
        }
        Ok(())
    }

    fn contains(&self, p: &DVector<f64>) -> bool {
        p.iter().enumerate().all(|(j, v)| *v >= self.lo[j] && *v <= self.hi[j])
    }
}

/// Shortest-path graph over grid samples plus extra query points.
pub struct GraphOracle {
    graph: UnGraph<(), f64>,
    extra: Vec<NodeIndex>,
}

fn edge_length<M: MetricField + ?Sized>(metric: &M, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let delta = b - a;
    let mid = (a + b) * 0.5;
    delta.dot(&(metric.metric_at(&mid) * &delta)).max(0.0).sqrt()
}

impl GraphOracle {
    /// Extra points must lie inside the grid box.
    pub fn build<M: MetricField + ?Sized>(metric: &M, grid: &GridSpec, extra: &[DVector<f64>]) -> Result<Self> {
        let dim = metric.dim();
        grid.validate(dim)?;
        for p in extra {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            if !grid.contains(p) {
                return Err(Error::InvalidArgument("query point lies outside the grid box".into()));
            }
        }

        let finest = grid.levels - 1;
        let finest_per_dim = (grid.per_dim - 1) * (1usize << finest) + 1;
        let mut graph = UnGraph::<(), f64>::default();
        let mut positions: Vec<DVector<f64>> = Vec::new();
        let mut lattice: HashMap<Vec<usize>, NodeIndex> = HashMap::new();
        let extra_nodes: Vec<NodeIndex> = extra
            .iter()
            .map(|p| {
                positions.push(p.clone());
                graph.add_node(())
            })
            .collect();
        let mut edges: HashMap<(usize, usize), ()> = HashMap::new();

        for level in 0..grid.levels {
            let per = (grid.per_dim - 1) * (1usize << level) + 1;
            let stride = 1usize << (finest - level);
            let total = per.checked_pow(dim as u32).ok_or_else(|| Error::InvalidArgument("grid too large".into()))?;
            let mut members: Vec<NodeIndex> = extra_nodes.clone();
            for flat in 0..total {
                let mut key = Vec::with_capacity(dim);
                let mut rem = flat;
                for _ in 0..dim {
                    key.push((rem % per) * stride);
                    rem /= per;
                }
                let node = *lattice.entry(key.clone()).or_insert_with(|| {
                    let pos = DVector::from_fn(dim, |j, _| {
                        grid.lo[j] + (grid.hi[j] - grid.lo[j]) * key[j] as f64 / (finest_per_dim - 1) as f64
                    });
                    positions.push(pos);
                    graph.add_node(())
                });
                members.push(node);
            }
            let k = grid.k.min(members.len() - 1);
            let mut dists: Vec<(f64, NodeIndex)> = Vec::with_capacity(members.len());
            for &a in &members {
                dists.clear();
                let pa = &positions[a.index()];
                for &b in &members {
                    if a != b {
                        dists.push(((&positions[b.index()] - pa).norm_squared(), b));
                    }
                }
                if k < dists.len() {
                    dists.select_nth_unstable_by(k - 1, |u, v| u.0.total_cmp(&v.0));
                }
                for &(_, b) in dists.iter().take(k) {
                    let key = (a.index().min(b.index()), a.index().max(b.index()));
                    if edges.insert(key, ()).is_none() {
                        let w = edge_length(metric, pa, &positions[b.index()]);
                        if !w.is_finite() {
                            return Err(Error::NonFiniteMetric);
                        }
                        graph.add_edge(a, b, w);
                    }
                }
            }
        }
        Ok(Self { graph, extra: extra_nodes })
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    /// Shortest-path lengths from extra point `source` to every extra point;
    /// `None` where unreachable.
    pub fn distances_from(&self, source: usize) -> Vec<Option<f64>> {
        let costs = dijkstra(&self.graph, self.extra[source], None, |e| *e.weight());
        self.extra.iter().map(|n| costs.get(n).copied()).collect()
    }

    pub fn distance(&self, source: usize, target: usize) -> Result<f64> {
        let goal = self.extra[target];
        let costs = dijkstra(&self.graph, self.extra[source], Some(goal), |e| *e.weight());
        costs.get(&goal).copied().ok_or_else(|| Error::DisconnectedGraph {
            node: format!("query point {target} is not reachable from query point {source}"),
        })
    }
}

/// Graph shortest-path length between `x` and `y`.
pub fn oracle_graph_distance<M: MetricField + ?Sized>(
    metric: &M,
    x: &DVector<f64>,
    y: &DVector<f64>,
    grid: &GridSpec,
) -> Result<f64> {
    let oracle = GraphOracle::build(metric, grid, &[x.clone(), y.clone()])?;
    oracle.distance(0, 1)
}
