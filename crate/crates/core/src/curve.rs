//! Parametric curves `t ∈ [0, 1] → R^D`.

use nalgebra::DVector;

use crate::kernel::GeodesicModel;

pub trait Curve {
    fn dim(&self) -> usize;
    fn position(&self, t: f64) -> DVector<f64>;
    fn velocity(&self, t: f64) -> DVector<f64>;
}

impl<C: Curve + ?Sized> Curve for &C {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn position(&self, t: f64) -> DVector<f64> {
        (**self).position(t)
    }
    fn velocity(&self, t: f64) -> DVector<f64> {
        (**self).velocity(t)
    }
}

impl Curve for GeodesicModel {
    fn dim(&self) -> usize {
        GeodesicModel::dim(self)
    }
    fn position(&self, t: f64) -> DVector<f64> {
        self.eval(t, 0).expect("order 0 is valid")
    }
    fn velocity(&self, t: f64) -> DVector<f64> {
        self.eval(t, 1).expect("order 1 is valid")
    }
}

#[derive(Debug, Clone)]
pub struct StraightLine {
    pub start: DVector<f64>,
    pub end: DVector<f64>,
}

impl StraightLine {
    pub fn new(start: DVector<f64>, end: DVector<f64>) -> Self {
        Self { start, end }
    }
}

impl Curve for StraightLine {
    fn dim(&self) -> usize {
        self.start.len()
    }
    fn position(&self, t: f64) -> DVector<f64> {
        &self.start + (&self.end - &self.start) * t
    }
    fn velocity(&self, _t: f64) -> DVector<f64> {
        &self.end - &self.start
    }
}

/// Piecewise-linear curve through waypoints at uniform parameter values.
#[derive(Debug, Clone)]
pub struct Polyline {
    points: Vec<DVector<f64>>,
}

impl Polyline {
    /// Panics on fewer than two points.
    pub fn new(points: Vec<DVector<f64>>) -> Self {
        assert!(points.len() >= 2, "a polyline needs at least two points");
        Self { points }
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    fn segment(&self, t: f64) -> (usize, f64) {
        let segs = self.points.len() - 1;
        let s = t.clamp(0.0, 1.0) * segs as f64;
        let i = (s.floor() as usize).min(segs - 1);
        (i, s - i as f64)
    }
}

impl Curve for Polyline {
    fn dim(&self) -> usize {
        self.points[0].len()
    }
    fn position(&self, t: f64) -> DVector<f64> {
        let (i, u) = self.segment(t);
        &self.points[i] * (1.0 - u) + &self.points[i + 1] * u
    }
    fn velocity(&self, t: f64) -> DVector<f64> {
        let (i, _) = self.segment(t);
        (&self.points[i + 1] - &self.points[i]) * (self.points.len() - 1) as f64
    }
}

/// Curve given by closures, mostly for tests and analytic examples.
pub struct FnCurve<P, V> {
    dim: usize,
    position: P,
    velocity: V,
}

impl<P, V> FnCurve<P, V>
where
    P: Fn(f64) -> DVector<f64>,
    V: Fn(f64) -> DVector<f64>,
{
    pub fn new(dim: usize, position: P, velocity: V) -> Self {
        Self { dim, position, velocity }
    }
}

impl<P, V> Curve for FnCurve<P, V>
where
    P: Fn(f64) -> DVector<f64>,
    V: Fn(f64) -> DVector<f64>,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn position(&self, t: f64) -> DVector<f64> {
        (self.position)(t)
    }
    fn velocity(&self, t: f64) -> DVector<f64> {
        (self.velocity)(t)
    }
}
