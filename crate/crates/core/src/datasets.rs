//! Seeded toy datasets, standardization and orthogonal embedding.
//!
//! Randomness comes from ChaCha8 seeded with the caller's seed; each
//! independent draw uses its own stream so adding noise never shifts the
//! underlying samples.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const STREAM_SAMPLES: u64 = 0;
const STREAM_NOISE: u64 = 1;
const STREAM_BASIS: u64 = 2;
const STREAM_EMBED_NOISE: u64 = 3;

/// The lower half of the curly circle is mirrored across the vertical line
/// `x = CURLY_MIRROR_X`.
pub const CURLY_MIRROR_X: f64 = 1.0;
/// Offset applied to the lower half of the circle for two moons.
pub const TWO_MOONS_OFFSET: [f64; 2] = [1.0, 0.5];

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: DVector<f64>,
    pub scale: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub points: DMatrix<f64>,
    pub seed: u64,
    /// Present when `points` were standardized: `raw = points ⊙ scale + mean`.
    pub standardization: Option<Standardization>,
}

impl Dataset {
    pub fn new(points: DMatrix<f64>, seed: u64) -> Result<Self> {
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("dataset contains non-finite entries".into()));
        }
        Ok(Self { points, seed, standardization: None })
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn point(&self, i: usize) -> DVector<f64> {
        self.points.row(i).transpose()
    }

    /// Zero mean and unit (population) variance per column. Constant columns
    /// are only centred.
    pub fn standardize(&self) -> Self {
        let n = self.points.nrows().max(1) as f64;
        let d = self.points.ncols();
        let mean = self.points.row_mean().transpose();
        let mut scale = DVector::from_element(d, 1.0);
        for j in 0..d {
            let var = self.points.column(j).iter().map(|v| (v - mean[j]).powi(2)).sum::<f64>() / n;
            if var > 0.0 {
                scale[j] = var.sqrt();
            }
        }
        let points = DMatrix::from_fn(self.points.nrows(), d, |i, j| (self.points[(i, j)] - mean[j]) / scale[j]);
        let standardization = match &self.standardization {
            None => Standardization { mean, scale },
            Some(prev) => Standardization {
                mean: &prev.mean + prev.scale.component_mul(&mean),
                scale: prev.scale.component_mul(&scale),
            },
        };
        Self { points, seed: self.seed, standardization: Some(standardization) }
    }

    /// Points before any standardization.
    pub fn raw_points(&self) -> DMatrix<f64> {
        match &self.standardization {
            None => self.points.clone(),
            Some(s) => DMatrix::from_fn(self.points.nrows(), self.points.ncols(), |i, j| {
                self.points[(i, j)] * s.scale[j] + s.mean[j]
            }),
        }
    }

    pub fn write_csv(&self, path: impl AsRef<Path>, header: bool) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
        if header {
            w.write_record((0..self.dim()).map(|j| format!("x{j}")))?;
        }
        for row in self.points.row_iter() {
            w.write_record(row.iter().map(|v| format!("{v:e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>, header: bool, seed: u64) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(header).trim(csv::Trim::All).from_path(path)?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| Error::InvalidArgument(format!("row {}: cannot parse {s:?}: {e}", line + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(Error::DimensionMismatch { expected: first.len(), got: row.len() });
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::InvalidArgument("dataset file has no rows".into()));
        }
        let d = rows[0].len();
        let points = DMatrix::from_row_iterator(rows.len(), d, rows.into_iter().flatten());
        Dataset::new(points, seed)
    }
}

fn add_noise(points: &mut DMatrix<f64>, noise_var: f64, rng: &mut ChaCha8Rng) -> Result<()> {
    if !(noise_var >= 0.0) || !noise_var.is_finite() {
        return Err(Error::InvalidArgument(format!("noise variance must be non-negative, got {noise_var}")));
    }
    if noise_var == 0.0 {
        return Ok(());
    }
    let std = noise_var.sqrt();
    for v in points.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v += std * z;
    }
    Ok(())
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("dataset size must be at least 1".into()));
    }
    Ok(())
}

fn circle_angles(n: usize, hi: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed, STREAM_SAMPLES);
    (0..n).map(|_| r.random_range(0.0..=hi)).collect()
}

/// Upper unit semicircle with Gaussian noise of variance `noise_var`. Not
/// standardized.
pub fn gen_semicircle(n: usize, noise_var: f64, seed: u64) -> Result<Dataset> {
    check_n(n)?;
    let angles = circle_angles(n, PI, seed);
    let mut points = DMatrix::from_fn(n, 2, |i, j| if j == 0 { angles[i].cos() } else { angles[i].sin() });
    add_noise(&mut points, noise_var, &mut rng(seed, STREAM_NOISE))?;
    Dataset::new(points, seed)
}

/// Unit circle with its lower half mirrored across `x = CURLY_MIRROR_X`,
/// giving an S-shaped curve. Noisy, then standardized.
pub fn gen_curly(n: usize, noise_var: f64, seed: u64) -> Result<Dataset> {
    check_n(n)?;
    let angles = circle_angles(n, 2.0 * PI, seed);
    let mut points = DMatrix::zeros(n, 2);
    for (i, a) in angles.iter().enumerate() {
        let (x, y) = (a.cos(), a.sin());
        points[(i, 0)] = if y < 0.0 { 2.0 * CURLY_MIRROR_X - x } else { x };
        points[(i, 1)] = y;
    }
    add_noise(&mut points, noise_var, &mut rng(seed, STREAM_NOISE))?;
    Ok(Dataset::new(points, seed)?.standardize())
}

/// Unit circle with its lower half shifted by `TWO_MOONS_OFFSET`. Noisy,
/// then standardized.
pub fn gen_two_moons(n: usize, noise_var: f64, seed: u64) -> Result<Dataset> {
    check_n(n)?;
    let angles = circle_angles(n, 2.0 * PI, seed);
    let mut points = DMatrix::zeros(n, 2);
    for (i, a) in angles.iter().enumerate() {
        let (x, y) = (a.cos(), a.sin());
        let shift = if y < 0.0 { TWO_MOONS_OFFSET } else { [0.0, 0.0] };
        points[(i, 0)] = x + shift[0];
        points[(i, 1)] = y + shift[1];
    }
    add_noise(&mut points, noise_var, &mut rng(seed, STREAM_NOISE))?;
    Ok(Dataset::new(points, seed)?.standardize())
}

fn sphere_points(n: usize, seed: u64, upper: bool) -> DMatrix<f64> {
    let mut r = rng(seed, STREAM_SAMPLES);
    let mut points = DMatrix::zeros(n, 3);
    for i in 0..n {
        let mut v = loop {
            let v = DVector::from_fn(3, |_, _| r.sample::<f64, _>(StandardNormal));
            let norm = v.norm();
            if norm > 1e-12 {
                break v / norm;
            }
        };
        if upper {
            v[2] = v[2].abs();
        }
        points.set_row(i, &v.transpose());
    }
    points
}

/// Unit 2-sphere in `R³`. Noisy, then standardized.
pub fn gen_sphere(n: usize, noise_var: f64, seed: u64) -> Result<Dataset> {
    check_n(n)?;
    let mut points = sphere_points(n, seed, false);
    add_noise(&mut points, noise_var, &mut rng(seed, STREAM_NOISE))?;
    Ok(Dataset::new(points, seed)?.standardize())
}

/// Upper half (`z ≥ 0`) of the unit 2-sphere. Noisy, then standardized.
pub fn gen_hemisphere(n: usize, noise_var: f64, seed: u64) -> Result<Dataset> {
    check_n(n)?;
    let mut points = sphere_points(n, seed, true);
    add_noise(&mut points, noise_var, &mut rng(seed, STREAM_NOISE))?;
    Ok(Dataset::new(points, seed)?.standardize())
}

/// `target_dim × source_dim` matrix with orthonormal columns, the Q factor of
/// a seeded Gaussian matrix.
pub fn orthogonal_map(source_dim: usize, target_dim: usize, seed: u64) -> Result<DMatrix<f64>> {
    if target_dim < source_dim {
        return Err(Error::InvalidArgument(format!(
            "target dimension {target_dim} is smaller than source dimension {source_dim}"
        )));
    }
    let mut r = rng(seed, STREAM_BASIS);
    let g = DMatrix::from_fn(target_dim, source_dim, |_, _| r.sample::<f64, _>(StandardNormal));
    Ok(g.qr().q())
}

/// Maps the points through `orthogonal_map`, standardizes and adds noise.
pub fn embed_orthogonal(data: &Dataset, target_dim: usize, noise_var: f64, seed: u64) -> Result<Dataset> {
    let q = orthogonal_map(data.dim(), target_dim, seed)?;
    let embedded = &data.points * q.transpose();
    let mut out = Dataset::new(embedded, seed)?.standardize();
    add_noise(&mut out.points, noise_var, &mut rng(seed, STREAM_EMBED_NOISE))?;
    Ok(out)
}
