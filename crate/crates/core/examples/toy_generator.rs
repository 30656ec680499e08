//! Regenerates `fixtures/toy_generator.json`: a one-hidden-layer tanh network
//! whose mean approximates `(x, y) ↦ (x, y, x² + y²)` on `[-1.5, 1.5]²`, with
//! a small softplus uncertainty head.
//!
//! ```text
//! cargo run -p geodesic-core --example toy_generator > crates/core/fixtures/toy_generator.json
//! ```

use geodesic_core::datasets::rng;
use geodesic_core::metrics::{Activation, Layer, MlpGenerator};
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};

const HIDDEN: usize = 32;
const SIGMA_HIDDEN: usize = 8;
const GRID: usize = 31;

fn random_layer(rows: usize, cols: usize, scale: f64, seed: u64, act: Activation) -> Layer {
    let mut r = rng(seed, 0);
    let normal = Normal::new(0.0, scale).unwrap();
    let w = DMatrix::from_fn(rows, cols, |_, _| normal.sample(&mut r));
    let b = DVector::from_fn(rows, |_, _| normal.sample(&mut r));
    Layer::new(w, b, act).unwrap()
}

fn main() {
    let hidden = random_layer(HIDDEN, 2, 1.0, 7, Activation::Tanh);

    // Least-squares output layer on a grid, bias as an extra feature.
    let mut features = DMatrix::zeros(GRID * GRID, HIDDEN + 1);
    let mut targets = DMatrix::zeros(GRID * GRID, 3);
    for i in 0..GRID {
        for j in 0..GRID {
            let x = -1.5 + 3.0 * i as f64 / (GRID - 1) as f64;
            let y = -1.5 + 3.0 * j as f64 / (GRID - 1) as f64;
            let row = i * GRID + j;
            let h = (&hidden.weights * DVector::from_vec(vec![x, y]) + &hidden.bias).map(f64::tanh);
            for k in 0..HIDDEN {
                features[(row, k)] = h[k];
            }
            features[(row, HIDDEN)] = 1.0;
            targets[(row, 0)] = x;
            targets[(row, 1)] = y;
            targets[(row, 2)] = x * x + y * y;
        }
    }
    let svd = features.clone().svd(true, true);
    let coef = svd.solve(&targets, 1e-10).unwrap();
    let rms = ((&features * &coef - &targets).norm_squared() / targets.len() as f64).sqrt();
    eprintln!("fit rms {rms:.2e}");
    let out_w = coef.rows(0, HIDDEN).transpose();
    let out_b = coef.row(HIDDEN).transpose();
    let output = Layer::new(out_w, out_b, Activation::Identity).unwrap();

    let sigma_hidden = random_layer(SIGMA_HIDDEN, 2, 1.0, 11, Activation::Tanh);
    let mut sigma_out = random_layer(3, SIGMA_HIDDEN, 0.3, 13, Activation::Softplus);
    sigma_out.bias.fill(-3.0);

    let generator = MlpGenerator::new(vec![hidden, output], Some(vec![sigma_hidden, sigma_out]), 2, 3).unwrap();
    println!("{}", generator.to_json_string().unwrap());
}
