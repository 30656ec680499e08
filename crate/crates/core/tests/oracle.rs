mod common;

use common::{exp_metric_geodesic, semicircle, semicircle_metric, ExpMetric};
use geodesic_core::metrics::ConstantMetric;
use geodesic_core::oracle::{
    oracle_energy_minimize, oracle_graph_distance, segment_length, DiscreteCurve, GraphOracle, GridSpec,
};
use geodesic_core::{Error, MetricField};
use nalgebra::{DMatrix, DVector};

fn v2(a: f64, b: f64) -> DVector<f64> {
    DVector::from_vec(vec![a, b])
}

#[test]
fn flat_energy_oracle_returns_the_chord() {
    let m = ConstantMetric::identity(2);
    let (x, y) = (v2(-1.0, 0.5), v2(2.0, -0.5));
    let r = oracle_energy_minimize(&m, &x, &y, 33, 200).unwrap();
    assert!((r.length - (&y - &x).norm()).abs() < 1e-4);
    assert_eq!(r.curve.points().first().unwrap(), &x);
    assert_eq!(r.curve.points().last().unwrap(), &y);
}

#[test]
fn energy_oracle_recovers_exponential_geodesic() {
    let (a, b) = (0.0, 1.5);
    let r = oracle_energy_minimize(&ExpMetric, &DVector::from_element(1, a), &DVector::from_element(1, b), 65, 2000)
        .unwrap();
    let pts = r.curve.points();
    let p = pts.len() - 1;
    for (i, c) in pts.iter().enumerate() {
        let t = i as f64 / p as f64;
        assert!((c[0] - exp_metric_geodesic(a, b, t)).abs() < 1e-3, "t={t}");
    }
    assert!((r.length - (b.exp() - a.exp())).abs() < 1e-3);
}

#[test]
fn energy_never_exceeds_the_straight_start() {
    let metric = semicircle_metric(0.15);
    let data = semicircle();
    let (x, y) = (data.point(0), data.point(90));
    let start = DiscreteCurve::straight(&x, &y, 33).unwrap().energy(&metric);
    let r = oracle_energy_minimize(&metric, &x, &y, 33, 300).unwrap();
    assert!(r.energy <= start);
}

#[test]
fn energy_oracle_validates_input() {
    let m = ConstantMetric::identity(2);
    assert!(oracle_energy_minimize(&m, &v2(0.0, 0.0), &v2(1.0, 1.0), 2, 10).is_err());
    assert!(oracle_energy_minimize(&m, &DVector::zeros(3), &v2(1.0, 1.0), 10, 10).is_err());
    assert!(DiscreteCurve::new(vec![v2(0.0, 0.0), v2(1.0, 1.0)]).is_err());
}

#[test]
fn segment_length_is_exact_for_flat_metric() {
    let m = ConstantMetric::new(DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0])).unwrap();
    assert!((segment_length(&m, &v2(0.0, 0.0), &v2(1.0, 2.0)) - 8f64.sqrt()).abs() < 1e-14);
}

#[test]
fn flat_graph_distance_within_grid_slack() {
    let m = ConstantMetric::identity(2);
    let (x, y) = (v2(0.1, 0.2), v2(0.9, 0.7));
    let grid = GridSpec { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0], per_dim: 21, k: 24, levels: 1 };
    let d = oracle_graph_distance(&m, &x, &y, &grid).unwrap();
    let exact = (&y - &x).norm();
    assert!(d >= exact - 1e-12);
    assert!(d <= exact * 1.03, "{d} vs {exact}");
}

#[test]
fn refinement_never_lengthens_paths() {
    let metric = semicircle_metric(0.15);
    let data = semicircle();
    let pts = vec![data.point(0), data.point(60), data.point(120)];
    let grid = GridSpec { lo: vec![-1.6, -0.6], hi: vec![1.6, 1.6], per_dim: 17, k: 16, levels: 1 };
    let coarse = GraphOracle::build(&metric, &grid, &pts).unwrap();
    let fine = GraphOracle::build(&metric, &grid.refined(), &pts).unwrap();
    assert!(fine.node_count() > coarse.node_count());
    for s in 0..pts.len() {
        let a = coarse.distances_from(s);
        let b = fine.distances_from(s);
        for (da, db) in a.iter().zip(&b) {
            assert!(db.unwrap() <= da.unwrap() + 1e-9);
        }
    }
}

#[test]
fn graph_distances_are_symmetric() {
    let metric = semicircle_metric(0.15);
    let data = semicircle();
    let pts = vec![data.point(0), data.point(45)];
    let grid = GridSpec::around(&pts, 0.3, 15).unwrap();
    let g = GraphOracle::build(&metric, &grid, &pts).unwrap();
    assert!((g.distance(0, 1).unwrap() - g.distance(1, 0).unwrap()).abs() < 1e-12);
}

struct Wall;

impl MetricField for Wall {
    fn dim(&self) -> usize {
        1
    }
    fn metric_at(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(1, 1)
    }
    fn dvec_metric_at(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(1, 1)
    }
}

#[test]
fn disconnected_graph_is_an_error() {
    // With k = 1 the two clusters near 0 and 10 never link up.
    let grid = GridSpec { lo: vec![0.0], hi: vec![10.0], per_dim: 2, k: 1, levels: 1 };
    let extra = vec![DVector::from_element(1, 0.1), DVector::from_element(1, 0.2), DVector::from_element(1, 9.9)];
    let g = GraphOracle::build(&Wall, &grid, &extra).unwrap();
    let err = g.distance(0, 2).unwrap_err();
    assert!(matches!(err, Error::DisconnectedGraph { .. }), "{err}");
    assert!(g.distances_from(0)[2].is_none());
}

#[test]
fn graph_rejects_points_outside_the_box() {
    let m = ConstantMetric::identity(2);
    let grid = GridSpec { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0], per_dim: 5, k: 8, levels: 1 };
    assert!(oracle_graph_distance(&m, &v2(0.5, 0.5), &v2(2.0, 0.5), &grid).is_err());
}

#[test]
fn grid_spec_json_rejects_unknown_fields() {
    assert!(serde_json::from_str::<GridSpec>(r#"{"lo":[0],"hi":[1],"per_dim":3,"oops":1}"#).is_err());
    let g: GridSpec = serde_json::from_str(r#"{"lo":[0],"hi":[1],"per_dim":3}"#).unwrap();
    assert_eq!((g.k, g.levels), (32, 1));
}
